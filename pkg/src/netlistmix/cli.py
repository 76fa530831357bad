"""Command-line interface.

Exit codes: 0 success, 2 synthesis (or check) failure, 1 any other error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .config import load_config, task_config
from .engine import run_synthesis
from .errors import ConfigError, EvaluatorUnavailable, NetlistError
from .experiment import emit_logs, load_matrix, run_experiment
from .netlist import NetClass, Netlist, PortDecl, net_class, net_number, parse_netlist, serialize_netlist
from .normalize import normalize
from .registry import default_registry
from .sampler import CheckKind, check_netlist

EXIT_OK, EXIT_ERROR, EXIT_FAILED = 0, 1, 2


def infer_ports(n: Netlist) -> PortDecl:
    """Smallest port declaration covering every port net the netlist uses."""
    top = {NetClass.INPUT: 0, NetClass.OUTPUT: 0, NetClass.SUPPLY: 0}
    for line in n.lines:
        for net in line.terminals:
            cls = net_class(net)
            if cls in top:
                top[cls] = max(top[cls], net_number(net) + 1)
    return PortDecl(top[NetClass.INPUT], top[NetClass.OUTPUT], top[NetClass.SUPPLY], ground=True)


def _read_netlist(path: str, task: str | None) -> Netlist:
    registry = task_config(task).registry if task else default_registry()
    n = parse_netlist(Path(path).read_text(), registry)
    ports = task_config(task).sampler.ports if task else infer_ports(n)
    return replace(n, ports=ports)


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = cfg.with_(seed=args.seed)
    if args.budget is not None:
        cfg = cfg.with_(budget=args.budget)
    report = run_synthesis(cfg)
    out = Path(args.out or f"runs/{cfg.name}-seed{cfg.seed}")
    emit_logs(report, out)
    status = "success" if report.success else "failure"
    print(f"{cfg.name} seed={cfg.seed} {status} evaluations={report.evaluations} "
          f"best_reward={report.best_reward:.4f} logs={out}")
    return EXIT_OK if report.success else EXIT_FAILED


def cmd_sweep(args) -> int:
    configs = load_matrix(args.matrix)
    table = run_experiment(configs, args.repeats, args.out)
    print(f"{'config':<32} {'runs':>5} {'fail%':>6} {'med(ok)':>9} {'med(all)':>9}")
    for s in table.summaries:
        med_ok = "-" if s.median_success is None else f"{s.median_success:.0f}"
        med_all = "-" if s.median_all is None else f"{s.median_all:.0f}"
        print(f"{s.config_id:<32} {s.runs:>5} {s.failure_rate_pct:>6.1f} {med_ok:>9} {med_all:>9}")
    for row in table.rows:
        if row.error:
            print(f"error in {row.config_id} seed {row.seed}: {row.error}", file=sys.stderr)
    if any(row.error for row in table.rows):
        return EXIT_ERROR
    return EXIT_OK if all(row.success for row in table.rows) else EXIT_FAILED


def cmd_normalize(args) -> int:
    n = _read_netlist(args.netlist, args.task)
    registry = task_config(args.task).registry if args.task else default_registry()
    print(serialize_netlist(normalize(n, registry)))
    return EXIT_OK


def cmd_check(args) -> int:
    n = _read_netlist(args.netlist, args.task)
    kinds = [CheckKind.parse(c) for c in args.checks] if args.checks else list(CheckKind)
    ok = True
    for kind in kinds:
        passed = check_netlist(kind, n)
        ok &= passed
        print(f"{kind.value:<24} {'PASS' if passed else 'FAIL'}")
    return EXIT_OK if ok else EXIT_FAILED


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="netlistmix", description="Genetic synthesis of transistor netlists.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="verb", required=True)

    run = sub.add_parser("run", help="run one synthesis from a config file")
    run.add_argument("config")
    run.add_argument("--seed", type=int)
    run.add_argument("--budget", type=int)
    run.add_argument("--out", help="log directory (default runs/<name>-seed<seed>)")
    run.set_defaults(func=cmd_run)

    sweep = sub.add_parser("sweep", help="run a config matrix over several seeds")
    sweep.add_argument("matrix")
    sweep.add_argument("--repeats", type=int, default=10)
    sweep.add_argument("--out", help="directory for per-run logs and runs.csv")
    sweep.set_defaults(func=cmd_sweep)

    norm = sub.add_parser("normalize", help="print the canonical form of a netlist file")
    norm.add_argument("netlist")
    norm.add_argument("--task", help="take ports and models from a library task")
    norm.set_defaults(func=cmd_normalize)

    chk = sub.add_parser("check", help="run structural checks on a netlist file")
    chk.add_argument("netlist")
    chk.add_argument("--checks", nargs="+", metavar="CHECK",
                     help=f"subset of {', '.join(k.value for k in CheckKind)} (default all)")
    chk.add_argument("--task", help="take ports and models from a library task")
    chk.set_defaults(func=cmd_check)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, NetlistError, EvaluatorUnavailable, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
