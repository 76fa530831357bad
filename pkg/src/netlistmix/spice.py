"""External simulator adapter: deck rendering, subprocess execution, output scraping."""

from __future__ import annotations

import os
import re
import shlex
import subprocess
import tempfile
from dataclasses import dataclass
from decimal import Decimal
from typing import Sequence

from .errors import MalformedPattern, MissingPlaceholder, MultiplePlaceholders, SpawnFailure
from .netlist import Netlist, serialize_netlist

NETLIST_PLACEHOLDER = "{{NETLIST}}"
DECK_PLACEHOLDER = "{{DECK_PATH}}"

# suffix to decimal exponent, longest suffix first so "meg" wins over "m"
_SUFFIXES = (("meg", 6), ("f", -15), ("p", -12), ("n", -9), ("u", -6),
             ("m", -3), ("k", 3), ("g", 9), ("t", 12))
_NUMBER = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*([a-zA-Z]*)")


@dataclass(frozen=True)
class SimOutput:
    stdout: str
    stderr: str
    returncode: int | None
    failure: bool
    cause: str = ""


def _check_template(template: str) -> None:
    count = template.count(NETLIST_PLACEHOLDER)
    if count == 0:
        raise MissingPlaceholder(f"template lacks {NETLIST_PLACEHOLDER}")
    if count > 1:
        raise MultiplePlaceholders(f"template has {count} copies of {NETLIST_PLACEHOLDER}")


def render_deck(n: Netlist, template: str) -> str:
    _check_template(template)
    return template.replace(NETLIST_PLACEHOLDER, serialize_netlist(n))


def run_simulation(deck: str, cmd_template: str, timeout_s: float) -> SimOutput:
    """Write ``deck`` to a temp file and run ``cmd_template`` on it.

    Non-zero exit or timeout gives ``failure=True``. A missing executable raises
    :class:`SpawnFailure` instead, since retrying other candidates won't help.
    """
    if DECK_PLACEHOLDER not in cmd_template:
        raise ValueError(f"command template lacks {DECK_PLACEHOLDER}")
    if timeout_s <= 0:
        raise ValueError("timeout must be positive")
    fd, path = tempfile.mkstemp(suffix=".cir", prefix="deck_")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(deck)
        argv = [tok.replace(DECK_PLACEHOLDER, path) for tok in shlex.split(cmd_template)]
        try:
            proc = subprocess.run(argv, capture_output=True, text=True, timeout=timeout_s)
        except FileNotFoundError as exc:
            raise SpawnFailure(f"cannot start {argv[0]!r}: {exc}") from exc
        except PermissionError as exc:
            raise SpawnFailure(f"cannot start {argv[0]!r}: {exc}") from exc
        except subprocess.TimeoutExpired as exc:
            return SimOutput(_text(exc.stdout), _text(exc.stderr), None, True, "timeout")
        failed = proc.returncode != 0
        return SimOutput(proc.stdout, proc.stderr, proc.returncode, failed,
                         f"exit code {proc.returncode}" if failed else "")
    finally:
        os.unlink(path)


def _text(data) -> str:
    if data is None:
        return ""
    return data.decode(errors="replace") if isinstance(data, bytes) else data


def parse_value(text: str) -> float:
    """Parse a SPICE number such as ``9.45p`` or ``2meg`` to SI units."""
    m = _NUMBER.match(text)
    if not m:
        raise ValueError(f"not a number: {text!r}")
    # scale in decimal so "9.45p" rounds once, to the same float as 9.45e-12
    value = Decimal(m.group(1))
    unit = m.group(2).lower()
    for suffix, exponent in _SUFFIXES:
        if unit.startswith(suffix):
            return float(value.scaleb(exponent))
    return float(value)


def compile_patterns(patterns: Sequence[tuple[str, str]]) -> list[tuple[str, re.Pattern]]:
    if not patterns:
        raise ValueError("no measurement patterns given")
    compiled = []
    for name, regex in patterns:
        try:
            pat = re.compile(regex, re.MULTILINE)
        except re.error as exc:
            raise MalformedPattern(f"{name}: {exc}") from None
        if pat.groups != 1:
            raise MalformedPattern(f"{name}: pattern needs exactly one capture group, has {pat.groups}")
        compiled.append((name, pat))
    return compiled


def parse_measurements(out: SimOutput, patterns: Sequence[tuple[str, str]]) -> dict[str, float | None]:
    """Bind each metric to its first match; unmatched or failed runs give ``None``."""
    compiled = compile_patterns(patterns)
    result: dict[str, float | None] = {}
    for name, pat in compiled:
        value = None
        if not out.failure:
            m = pat.search(out.stdout)
            if m:
                try:
                    value = parse_value(m.group(1))
                except ValueError:
                    value = None
        result[name] = value
    return result


@dataclass(frozen=True)
class SpiceEvaluator:
    """Callable evaluator: netlist -> measurements via an external simulator."""

    template: str
    command: str
    patterns: tuple[tuple[str, str], ...]
    timeout_s: float = 60.0

    def __post_init__(self):
        compile_patterns(self.patterns)
        _check_template(self.template)

    def __call__(self, n: Netlist) -> dict[str, float | None]:
        out = run_simulation(render_deck(n, self.template), self.command, self.timeout_s)
        return parse_measurements(out, self.patterns)
