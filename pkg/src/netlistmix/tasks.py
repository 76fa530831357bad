"""Shipped task library.

Each task is a base configuration in the same schema a user config file
uses; user keys are merged on top of it. Digital tasks also carry the
stimulus the built-in evaluator runs.
"""

from __future__ import annotations

import copy

from .registry import INV, NFET, PFET, TRIINV
from .switchsim import DigitalTask, Mode, Step, combinational_task

FIXED_MOS_SIZE = {"w": [1.0, 1.0], "l": [0.15, 0.15]}

# (data, clk, expected q); clock high is transparent, low holds
LATCH_STEPS = (
    (0, 1, 0), (0, 0, 0), (1, 0, 0), (1, 1, 1),
    (1, 0, 1), (0, 0, 1), (0, 1, 0), (1, 1, 1),
    (1, 0, 1), (0, 0, 1), (0, 1, 0), (0, 0, 0),
    (1, 0, 0), (1, 1, 1), (1, 0, 1), (0, 0, 1),
)
# (data, clk, expected q, leak): hold steps long enough for stored charge to decay
LATCH_LONG_STEPS = (
    (1, 1, 1, False), (1, 0, 1, True), (0, 0, 1, True),
    (0, 1, 0, False), (0, 0, 0, True), (1, 0, 0, True),
)


def latch_task() -> DigitalTask:
    return DigitalTask(
        "latch",
        Mode.SEQUENTIAL,
        inputs=2,
        outputs=1,
        steps=tuple(Step((d, c), (q,)) for d, c, q in LATCH_STEPS),
        long_steps=tuple(Step((d, c), (q,), leak) for d, c, q, leak in LATCH_LONG_STEPS),
    )


DIGITAL_TASKS = {
    "inv": combinational_task("inv", 1, lambda a: 1 - a),
    "nand2": combinational_task("nand2", 2, lambda a, b: 1 - (a & b)),
    "nor2": combinational_task("nor2", 2, lambda a, b: 1 - (a | b)),
    "and2": combinational_task("and2", 2, lambda a, b: a & b),
    "or2": combinational_task("or2", 2, lambda a, b: a | b),
    "latch": latch_task(),
}


def _cell(digital: str, inputs: int, components: tuple[int, int], internals: tuple[int, int],
          depth: int, sizing=None) -> dict:
    sizing = sizing or FIXED_MOS_SIZE
    return {
        "evaluator": "builtin",
        "digital_task": digital,
        "depth_target": depth,
        "sampler": {
            "components": {NFET: 1.0, PFET: 1.0},
            "inputs": inputs,
            "outputs": 1,
            "supplies": 1,
            "ground": True,
            "min_components": components[0],
            "max_components": components[1],
            "min_internal": internals[0],
            "max_internal": internals[1],
            "force_bulk": True,
            "no_gate_to_rail": True,
            "sizing": {NFET: dict(sizing), PFET: dict(sizing)},
            "checks_during": ["CONNECTED_IO"],
            "checks_after": ["CONNECTED_IO", "NO_FLOATING_NETS"],
        },
    }


TASKS: dict[str, dict] = {
    "inv_fixed": _cell("inv", 1, (2, 4), (0, 1), depth=1),
    "nand2_fixed": _cell("nand2", 2, (4, 8), (1, 2), depth=2),
    "nor2_fixed": _cell("nor2", 2, (4, 8), (1, 2), depth=2),
    "and2_fixed": _cell("and2", 2, (4, 8), (1, 2), depth=2),
    "or2_fixed": _cell("or2", 2, (4, 8), (1, 2), depth=2),
    # sizes are drawn and mixed but do not affect the switch-level result
    "nand2_sized": _cell("nand2", 2, (4, 8), (1, 2), depth=2,
                         sizing={"w": [0.42, 10.0], "l": [0.15, 1.0]}),
    "latch_gate": {
        "evaluator": "builtin",
        "digital_task": "latch",
        "sampler": {
            "components": {INV: 1.0, TRIINV: 1.0},
            "inputs": 2,
            "outputs": 1,
            "supplies": 0,
            "ground": False,
            "min_components": 2,
            "max_components": 6,
            "min_internal": 0,
            "max_internal": 3,
            "checks_during": ["CONNECTED_IO"],
            "checks_after": ["CONNECTED_IO"],
        },
    },
    # needs a user-supplied simulator command and testbench template
    "opamp_external": {
        "evaluator": "spice",
        "sampler": {
            "components": {
                NFET: 1.0, PFET: 1.0,
                "sky130_fd_pr__ndip_01v8": 1.0, "sky130_fd_pr__pdip_01v8": 1.0,
                "sky130_fd_pr__ncum_01v8": 1.0, "sky130_fd_pr__pcum_01v8": 1.0,
            },
            "inputs": 2,
            "outputs": 1,
            "supplies": 1,
            "ground": True,
            "min_components": 2,
            "max_components": 10,
            "min_internal": 0,
            "max_internal": 4,
            "checks_during": ["CONNECTED_IO"],
            "checks_after": ["CONNECTED_IO", "NO_FLOATING_NETS"],
        },
        "metrics": [
            {"name": "gain", "direction": "AT_LEAST", "target": 40.0, "scale": 40.0},
            {"name": "ugbw", "direction": "AT_LEAST", "target": 1e7, "scale": 1e7},
            {"name": "phase_margin", "direction": "AT_LEAST", "target": 60.0, "scale": 60.0},
            {"name": "power", "direction": "AT_MOST", "target": 1e-3, "scale": 1e-3},
        ],
        "simulator": {
            "timeout_s": 60.0,
            "patterns": {
                "gain": r"gain\s*=\s*(\S+)",
                "ugbw": r"ugbw\s*=\s*(\S+)",
                "phase_margin": r"pm\s*=\s*(\S+)",
                "power": r"power\s*=\s*(\S+)",
            },
        },
    },
}


def task_base(name: str) -> dict:
    return copy.deepcopy(TASKS[name])
