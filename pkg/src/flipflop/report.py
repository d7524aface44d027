"""Trace CSV and JSON summary serialization, and offline trace verification."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from typing import Dict, List, Optional

from .core import REGIMES, InputError, Trace
from .datagen import format_float

TRACE_HEADER = ["t", "eta", "h", "m", "delta", "v", "regret", "leader_change", "regime"]


def _fmt(x: float) -> str:
    return "inf" if x == math.inf else format_float(x)


def write_trace(trace: Trace, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(TRACE_HEADER) + "\n")
        for rec, regret in zip(trace.records, trace.regret_path):
            row = [str(rec.t), _fmt(rec.eta), _fmt(rec.h), _fmt(rec.m), _fmt(rec.delta),
                   _fmt(rec.v), _fmt(regret), str(int(rec.leader_change)), rec.regime]
            fh.write(",".join(row) + "\n")


@dataclass
class TraceRow:
    t: int
    eta: float
    h: float
    m: float
    delta: float
    v: float
    regret: float
    leader_change: bool
    regime: str


def read_trace(path) -> List[TraceRow]:
    rows: List[TraceRow] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != TRACE_HEADER:
            raise InputError(f"{path}: expected header {','.join(TRACE_HEADER)}")
        for i, row in enumerate(reader, start=2):
            if len(row) != len(TRACE_HEADER):
                raise InputError(f"line {i}: expected {len(TRACE_HEADER)} fields, got {len(row)}")
            try:
                rows.append(TraceRow(
                    t=int(row[0]), eta=float(row[1]), h=float(row[2]), m=float(row[3]),
                    delta=float(row[4]), v=float(row[5]), regret=float(row[6]),
                    leader_change=bool(int(row[7])), regime=row[8],
                ))
            except ValueError as exc:
                raise InputError(f"line {i}: {exc}") from None
    if not rows:
        raise InputError(f"{path}: trace has no rounds")
    return rows


def summarize_rows(rows: List[TraceRow]) -> Dict[str, float]:
    """Recompute the summary aggregates from trace rows.

    Sums are taken in round order starting from 0.0, the same order the
    learner used, so they agree bit for bit with a freshly run trace.
    """
    H = M = D = V = 0.0
    C = 0
    for r in rows:
        H += r.h
        M += r.m
        D += r.delta
        V += r.v
        C += int(r.leader_change)
    regret = rows[-1].regret
    return {"T": len(rows), "H": H, "M": M, "Delta": D, "V": V, "C": C,
            "regret": regret, "Lstar": H - regret}


def jsonable(obj):
    """Replace infinities by the string ``inf`` so the output is plain JSON."""
    if isinstance(obj, float):
        if math.isinf(obj):
            return "inf" if obj > 0 else "-inf"
        return obj
    if isinstance(obj, dict):
        return {k: jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    return obj


def dump_json(obj, fh) -> None:
    json.dump(jsonable(obj), fh, indent=2, allow_nan=False)
    fh.write("\n")


def _close(a: float, b: float, rtol: float = 1e-9) -> bool:
    return abs(a - b) <= rtol * max(1.0, abs(a), abs(b))


def verify_trace(rows: List[TraceRow], algo: Optional[str] = None, K: Optional[int] = None,
                 scale: float = 1.0, summary: Optional[dict] = None,
                 phi: float = 2.37, alpha: float = 1.243) -> List[str]:
    """Check a trace file against the per-round and cumulative inequalities.

    Returns human-readable violation messages; an empty list means the trace
    is consistent. ``scale`` is the within-round loss range (1 for losses in
    [0, 1]).
    """
    bad: List[str] = []
    D = 0.0
    C = 0
    d_flip = d_flop = 0.0
    prev_eta = math.inf
    log_k = math.log(K) if K else None
    for i, r in enumerate(rows, start=1):
        where = f"t={r.t}"
        if r.t != i:
            bad.append(f"round index: expected t={i}, found {r.t}")
        if not r.eta > 0:
            bad.append(f"eta > 0 violated at {where}: eta={r.eta}")
        if r.delta < 0:
            bad.append(f"delta >= 0 violated at {where}: delta={r.delta}")
        if r.v < 0:
            bad.append(f"v >= 0 violated at {where}: v={r.v}")
        if not _close(r.delta, max(0.0, r.h - r.m), 1e-12):
            bad.append(f"delta = max(0, h - m) violated at {where}: "
                       f"delta={r.delta}, h-m={r.h - r.m}")
        if r.regime not in REGIMES:
            bad.append(f"unknown regime {r.regime!r} at {where}")
        if r.delta > scale * (1 + 1e-9):
            bad.append(f"delta <= loss range violated at {where}: delta={r.delta}")
        if r.v > scale**2 / 4 * (1 + 1e-9):
            bad.append(f"v <= range^2/4 violated at {where}: v={r.v}")

        if algo == "adahedge":
            if log_k is not None:
                expect = math.inf if D == 0 else log_k / D
                if not (expect == r.eta or _close(expect, r.eta)):
                    bad.append(f"eta = ln K / Delta violated at {where}: eta={r.eta}, "
                               f"ln K / Delta={expect}")
            if r.eta > prev_eta:
                bad.append(f"eta nonincreasing violated at {where}: {r.eta} > {prev_eta}")
            prev_eta = r.eta
        D += r.delta
        C += int(r.leader_change)
        if r.regime == "flip":
            d_flip += r.delta
        elif r.regime == "flop":
            d_flop += r.delta

        slack = 1e-9 * max(1.0, abs(r.regret))
        if algo == "adahedge" and r.regret > 2 * D + slack:
            bad.append(f"regret <= 2 Delta violated at {where}: regret={r.regret}, 2 Delta={2 * D}")
        if algo == "ftl":
            if not _close(r.regret, D):
                bad.append(f"regret = Delta violated at {where}: regret={r.regret}, Delta={D}")
            if r.regret > scale * C + slack:
                bad.append(f"regret <= C violated at {where}: regret={r.regret}, C={C}")
        if algo == "flipflop":
            if not d_flop <= alpha * d_flip + alpha * scale + slack:
                bad.append(f"flop gap < alpha flip gap + alpha violated at {where}")
            if not d_flip <= (phi / alpha) * (d_flop + scale) + slack:
                bad.append(f"flip gap < (phi/alpha)(flop gap + 1) violated at {where}")
            c1 = phi / (phi - 1) + phi / alpha + 2
            lucky = (phi * alpha / (phi - 1) + 2 * alpha + 1) * d_flip \
                + scale * (alpha * phi / (phi - 1) + 2 * alpha)
            if r.regret > lucky + slack:
                bad.append(f"regret <= FTL-side FlipFlop bound violated at {where}: "
                           f"regret={r.regret}, bound={lucky}")
            if r.regret > c1 * d_flop + scale * phi / alpha + slack:
                bad.append(f"regret <= flop-side FlipFlop bound violated at {where}")

    if summary is not None:
        got = summarize_rows(rows)
        for key in ("H", "M", "Delta", "V", "C", "regret"):
            if key in summary and summary[key] != got[key]:
                bad.append(f"summary {key} mismatch: summary={summary[key]}, trace={got[key]}")
        if "Lstar" in summary and not _close(summary["Lstar"], got["Lstar"]):
            bad.append(f"summary Lstar mismatch: summary={summary['Lstar']}, trace={got['Lstar']}")
    return bad
