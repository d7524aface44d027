"""Closed-form regret guarantees and trace checking.

The ``*_bound`` functions assume losses in [0, 1]. :func:`unnormalized_bounds`
gives the translation- and scale-aware forms, which hold for arbitrary real
losses and reduce to the [0, 1] forms when every round has minimum 0 and the
largest within-round range is 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, NamedTuple, Optional, Tuple

import numpy as np
from scipy.optimize import minimize_scalar

from .core import InputError, ParameterError, Trace
from .learners import FTL, AdaHedge, FixedHedge, FlipFlop, LearnerKind, SafeHedge, run


def _check_k(K: int) -> float:
    if K < 2:
        raise ParameterError(f"need at least 2 experts, got {K}")
    return math.log(K)


def hoeffding_bound(eta: float, T: int, K: int) -> float:
    """Regret bound for Hedge at a fixed finite rate: ln K / eta + eta T / 8."""
    log_k = _check_k(K)
    if not (0 < eta < math.inf):
        raise ParameterError(f"rate must be finite and positive, got {eta}")
    if T < 1:
        raise ParameterError(f"horizon must be at least 1, got {T}")
    return log_k / eta + eta * T / 8


def safe_rate(T: int, K: int) -> float:
    """The fixed rate that equalises the two terms of :func:`hoeffding_bound`."""
    return math.sqrt(8 * _check_k(K) / T)


def adahedge_variance_bound(V: float, K: int) -> float:
    log_k = _check_k(K)
    if V < 0:
        raise InputError(f"cumulative variance must be nonnegative, got {V}")
    return 2 * math.sqrt(V * log_k) + 4 / 3 * log_k + 2


def _loss_rate_term(Lstar: float, T: float) -> float:
    if T <= 0:
        raise ParameterError(f"horizon must be positive, got {T}")
    if not (0 <= Lstar <= T):
        raise InputError(f"best expert loss {Lstar} outside [0, {T}]")
    return Lstar * (T - Lstar) / T


def adahedge_regret_bound(Lstar: float, T: int, K: int) -> float:
    log_k = _check_k(K)
    return 2 * math.sqrt(_loss_rate_term(Lstar, T) * log_k) + 16 / 3 * log_k + 2


def _check_ff(phi: float, alpha: float) -> None:
    if not phi > 1:
        raise ParameterError(f"phi must exceed 1, got {phi}")
    if not alpha > 0:
        raise ParameterError(f"alpha must be positive, got {alpha}")


def ftl_factor(phi: float, alpha: float) -> float:
    """Multiplier on the FTL regret in the first FlipFlop bound."""
    return phi * alpha / (phi - 1) + 2 * alpha + 1


def ftl_offset(phi: float, alpha: float) -> float:
    return alpha * phi / (phi - 1) + 2 * alpha


def flipflop_constants(phi: float, alpha: float) -> Tuple[float, float]:
    """The pair (c1, c2) of the worst-case FlipFlop bound."""
    _check_ff(phi, alpha)
    return phi / (phi - 1) + phi / alpha + 2, phi / alpha


def flipflop_bounds(R_ftl: float, Lstar: float, T: int, K: int,
                    phi: float, alpha: float) -> Tuple[float, float]:
    """Both FlipFlop regret bounds: relative to FTL, and worst case."""
    log_k = _check_k(K)
    c1, c2 = flipflop_constants(phi, alpha)
    first = ftl_factor(phi, alpha) * R_ftl + ftl_offset(phi, alpha)
    second = (c1 * math.sqrt(_loss_rate_term(Lstar, T) * log_k)
              + c1 * (c1 + 2 / 3) * log_k + c1 * math.sqrt(c2 * log_k) + c1 + c2)
    return first, second


def equalizing_alpha(phi: float) -> float:
    """The alpha at which both FlipFlop leading factors coincide."""
    return (2 * phi - 1 + math.sqrt(12 * phi**3 - 16 * phi**2 + 4 * phi + 1)) / (6 * phi - 4)


def optimal_flipflop_params(upper: float = 10.0, xatol: float = 1e-9) -> Tuple[float, float]:
    """Numerically minimise the (equalised) leading factor over phi in (1, upper]."""
    res = minimize_scalar(lambda p: ftl_factor(p, equalizing_alpha(p)),
                          bounds=(1 + 1e-9, upper), method="bounded",
                          options={"xatol": xatol})
    phi = float(res.x)
    return phi, equalizing_alpha(phi)


@dataclass
class BoundReport:
    name: str
    value: float
    inputs: Dict[str, float] = field(default_factory=dict)
    degenerate: bool = False


def loss_scale(losses) -> Tuple[np.ndarray, float]:
    """Per-round minima and the largest within-round loss range."""
    arr = np.asarray(losses, dtype=np.float64)
    mu = arr.min(axis=1)
    sigma = float((arr - mu[:, None]).max())
    return mu, sigma


def _translated_rate_term(Nstar: float, sigma: float, T: int) -> float:
    # Rounding can push N* a hair outside [0, sigma T].
    return max(0.0, Nstar * (sigma * T - Nstar) / T)


def unnormalized_bounds(trace: Trace, per_round_minima=None, phi: float = 2.37,
                        alpha: float = 1.243, R_ftl: Optional[float] = None) -> List[BoundReport]:
    """AdaHedge and FlipFlop bounds for losses of arbitrary range and offset.

    ``R_ftl`` is the regret FTL would have had on the same stream; it is
    computed by rerunning FTL when not supplied.
    """
    losses = trace.loss_matrix()
    mu, sigma = loss_scale(losses)
    if per_round_minima is not None:
        mu = np.asarray(per_round_minima, dtype=np.float64)
        if mu.shape != (trace.T,):
            raise InputError(f"expected {trace.T} per-round minima, got shape {mu.shape}")
    T, K = trace.T, trace.K
    log_k = _check_k(K)
    Nstar = trace.Lstar - float(mu.sum())
    core = _translated_rate_term(Nstar, sigma, T)
    if R_ftl is None:
        R_ftl = run(FTL(), losses).regret
    c1, c2 = flipflop_constants(phi, alpha)
    inputs = {"Lstar": trace.Lstar, "T": T, "K": K, "sigma": sigma, "Nstar": Nstar,
              "phi": phi, "alpha": alpha, "R_ftl": R_ftl}
    degenerate = sigma == 0
    return [
        BoundReport("adahedge_unnormalized",
                    2 * math.sqrt(core * log_k) + sigma * (16 / 3 * log_k + 2),
                    dict(inputs), degenerate),
        BoundReport("flipflop_ftl_unnormalized",
                    ftl_factor(phi, alpha) * R_ftl + sigma * ftl_offset(phi, alpha),
                    dict(inputs), degenerate),
        BoundReport("flipflop_worstcase_unnormalized",
                    c1 * math.sqrt(core * log_k)
                    + sigma * (c1 * (c1 + 2 / 3) * log_k + c1 * math.sqrt(c2 * log_k) + c1 + c2),
                    dict(inputs), degenerate),
    ]


class BoundCheck(NamedTuple):
    name: str
    bound: float
    quantity: float
    satisfied: bool


def _leq(name: str, quantity: float, bound: float, rtol: float = 1e-9) -> BoundCheck:
    slack = rtol * max(1.0, abs(bound), abs(quantity))
    return BoundCheck(name, float(bound), float(quantity), bool(quantity <= bound + slack))


def is_normalized(losses) -> bool:
    arr = np.asarray(losses)
    return bool(arr.size and arr.min() >= 0 and arr.max() <= 1)


def check_trace(trace: Trace, kind: LearnerKind, K: Optional[int] = None) -> List[BoundCheck]:
    """Evaluate every guarantee that applies to ``kind`` against its trace.

    Streams inside [0, 1] are checked with the plain bounds; anything else
    gets the scale-aware versions, with the within-round range playing the
    role of the unit loss range. Violations are reported, not raised.
    """
    K = trace.K if K is None else K
    if K != trace.K:
        raise InputError(f"trace has {trace.K} experts, expected {K}")
    log_k = _check_k(K)
    losses = trace.loss_matrix()
    T = trace.T
    normalized = is_normalized(losses)
    _, sigma = loss_scale(losses)
    scale = 1.0 if normalized else sigma
    R = trace.regret
    out: List[BoundCheck] = []

    if isinstance(kind, FTL):
        out.append(BoundCheck("ftl_regret_equals_gap", 0.0, abs(R - trace.Delta),
                              abs(R - trace.Delta) <= 1e-9 * max(1.0, abs(R))))
        out.append(_leq("ftl_regret_le_leader_changes", R, scale * trace.C))

    elif isinstance(kind, (FixedHedge, SafeHedge)):
        eta = kind.eta if isinstance(kind, FixedHedge) else safe_rate(kind.horizon, K)
        # Hoeffding scales with the square of the loss range.
        out.append(_leq("hoeffding", R, log_k / eta + eta * scale**2 * T / 8))

    elif isinstance(kind, AdaHedge):
        D, V = trace.Delta, trace.V
        out.append(_leq("regret_le_2delta", R, 2 * D))
        out.append(_leq("delta_square", D * D, V * log_k + scale * (1 + 2 / 3 * log_k) * D))
        out.append(_leq("adahedge_variance", R,
                        2 * math.sqrt(V * log_k) + scale * (4 / 3 * log_k + 2)))
        if normalized:
            out.append(_leq("adahedge_loss_rate", R, adahedge_regret_bound(trace.Lstar, T, K)))
        else:
            rep = unnormalized_bounds(trace)[0]
            out.append(_leq("adahedge_unnormalized", R, rep.value))

    elif isinstance(kind, FlipFlop):
        phi, alpha = kind.phi, kind.alpha
        d_flip, _ = trace.regime_sums("flip")
        d_flop, v_flop = trace.regime_sums("flop")
        c1, c2 = flipflop_constants(phi, alpha)
        out.append(_leq("flipflop_flip_gap", R, ftl_factor(phi, alpha) * d_flip
                        + scale * ftl_offset(phi, alpha)))
        out.append(_leq("flipflop_flop_gap", R, c1 * d_flop + scale * c2))
        out.append(_leq("sandwich_flop", d_flop, alpha * d_flip + alpha * scale))
        out.append(_leq("sandwich_flip", d_flip, (phi / alpha) * d_flop + scale * phi / alpha))
        out.append(_leq("flop_delta_square", d_flop * d_flop,
                        v_flop * log_k + scale * (1 + 2 / 3 * log_k) * d_flop))
        R_ftl = run(FTL(), losses).regret
        if normalized:
            first, second = flipflop_bounds(R_ftl, trace.Lstar, T, K, phi, alpha)
            out.append(_leq("flipflop_ftl", R, first))
            out.append(_leq("flipflop_worstcase", R, second))
        else:
            reps = unnormalized_bounds(trace, phi=phi, alpha=alpha, R_ftl=R_ftl)
            out.append(_leq("flipflop_ftl_unnormalized", R, reps[1].value))
            out.append(_leq("flipflop_worstcase_unnormalized", R, reps[2].value))
    else:
        raise TypeError(f"unknown learner kind {kind!r}")
    return out
