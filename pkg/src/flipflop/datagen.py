"""The four deterministic two-expert experiments, and loss-stream CSV I/O.

Each experiment starts from a hand-crafted first loss vector and then, round
by round, appends whichever of (1, 0) and (0, 1) brings the cumulative loss
difference L1 - L2 closer to a target curve f(t).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Callable, Dict, List, Tuple

import numpy as np

from .core import InputError, ParameterError, as_loss_stream

TARGETS: Dict[int, Callable[[int], float]] = {
    1: lambda t: 0.0,
    2: lambda t: 1.5,
    3: lambda t: t ** 0.4,
    4: lambda t: t ** 0.6,
}

FIRST_ROUND: Dict[int, Tuple[float, float]] = {
    1: (0.5, 0.0),
    2: (1.0, 0.0),
    3: (1.0, 0.0),
    4: (1.0, 0.0),
}

EXPERIMENTS = tuple(sorted(TARGETS))


@dataclass(frozen=True)
class ExperimentSpec:
    xi: int
    T: int = 1000

    def __post_init__(self):
        if self.xi not in TARGETS:
            raise ParameterError(f"experiment must be one of {EXPERIMENTS}, got {self.xi}")
        if int(self.T) != self.T or self.T < 1:
            raise ParameterError(f"horizon must be a positive integer, got {self.T}")


def generate(spec: ExperimentSpec) -> np.ndarray:
    """Loss stream of shape (T, 2) for one experiment."""
    f = TARGETS[spec.xi]
    out = np.empty((spec.T, 2))
    out[0] = FIRST_ROUND[spec.xi]
    d = out[0, 0] - out[0, 1]
    for t in range(2, spec.T + 1):
        target = f(t)
        # d is a half-integer, so both distances are exact; ties go to (1, 0).
        if abs(d + 1 - target) <= abs(d - 1 - target):
            out[t - 1] = (1.0, 0.0)
            d += 1
        else:
            out[t - 1] = (0.0, 1.0)
            d -= 1
    return out


def target(xi: int, t: int) -> float:
    return TARGETS[xi](t)


def load_csv(path) -> np.ndarray:
    """Read a headerless CSV of losses, one row per round."""
    rows: List[List[float]] = []
    width = None
    with open(path, newline="", encoding="utf-8") as fh:
        for i, row in enumerate(csv.reader(fh), start=1):
            if len(row) < 2:
                raise InputError(f"row {i}: need at least 2 columns, got {len(row)}")
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise InputError(f"row {i}: ragged row with {len(row)} columns, expected {width}")
            try:
                values = [float(x) for x in row]
            except ValueError:
                raise InputError(f"row {i}: non-numeric field in {row!r}") from None
            if not all(math.isfinite(x) for x in values):
                raise InputError(f"row {i}: non-finite value in {row!r}")
            rows.append(values)
    if not rows:
        raise InputError(f"{path}: empty loss file")
    return as_loss_stream(np.array(rows))


def format_float(x: float) -> str:
    """Shortest decimal string that parses back to exactly ``x``."""
    x = float(x)
    if x == 0:
        return "-0" if math.copysign(1.0, x) < 0 else "0"
    if x.is_integer() and abs(x) < 1e16:
        return str(int(x))
    return repr(x)


def write_csv(stream, path) -> None:
    arr = as_loss_stream(stream)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for row in arr:
            fh.write(",".join(format_float(x) for x in row) + "\n")
