"""Hedge-family strategies as sequential state machines.

Each round a :class:`Learner` commits to a weight vector, then sees the loss
vector and updates. Every strategy here is Hedge with some learning-rate
schedule; they differ only in :meth:`Learner.rate` and in what they do with
the mixability gap afterwards.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .core import INF, ParameterError, Trace, account_round, as_loss_stream, mix

# Parameters that approximately minimise the worse of the two leading
# factors in the FlipFlop regret bounds (see bounds.optimal_flipflop_params).
DEFAULT_PHI = 2.37
DEFAULT_ALPHA = 1.243


@dataclass(frozen=True)
class FTL:
    name = "ftl"


@dataclass(frozen=True)
class FixedHedge:
    eta: float
    name = "hedge"

    def __post_init__(self):
        if not (0 < self.eta < INF):
            raise ParameterError(f"fixed learning rate must be in (0, inf), got {self.eta}")


@dataclass(frozen=True)
class SafeHedge:
    """Hedge tuned for the worst case with a known horizon."""

    horizon: int
    name = "safe"

    def __post_init__(self):
        if int(self.horizon) != self.horizon or self.horizon < 1:
            raise ParameterError(f"horizon must be a positive integer, got {self.horizon}")


@dataclass(frozen=True)
class AdaHedge:
    name = "adahedge"


@dataclass(frozen=True)
class FlipFlop:
    phi: float = DEFAULT_PHI
    alpha: float = DEFAULT_ALPHA
    name = "flipflop"

    def __post_init__(self):
        if not self.phi > 1:
            raise ParameterError(f"phi must exceed 1, got {self.phi}")
        if not self.alpha > 0:
            raise ParameterError(f"alpha must be positive, got {self.alpha}")


LearnerKind = Union[FTL, FixedHedge, SafeHedge, AdaHedge, FlipFlop]


def _ratio(log_k: float, gap: float) -> float:
    # A zero accumulated gap means no evidence against the leader yet.
    return INF if gap == 0 else log_k / gap


class Learner:
    """Mutable per-run state for one strategy over ``K`` experts.

    ``delta_flip`` and ``delta_flop`` are only used by FlipFlop; AdaHedge
    keeps its gap in ``delta``.
    """

    def __init__(self, kind: LearnerKind, K: int):
        if K < 2:
            raise ParameterError(f"need at least 2 experts, got {K}")
        self.kind = kind
        self.K = int(K)
        self.log_k = math.log(self.K)
        self.L = np.zeros(self.K)
        self.t = 0
        self.delta = 0.0
        self.delta_flip = 0.0
        self.delta_flop = 0.0
        self.regime = "flip" if isinstance(kind, FlipFlop) else "n/a"

    def rate(self) -> float:
        kind = self.kind
        if isinstance(kind, FTL):
            return INF
        if isinstance(kind, FixedHedge):
            return float(kind.eta)
        if isinstance(kind, SafeHedge):
            return math.sqrt(8 * self.log_k / kind.horizon)
        if isinstance(kind, AdaHedge):
            return _ratio(self.log_k, self.delta)
        if isinstance(kind, FlipFlop):
            if self.regime == "flip":
                return INF
            return _ratio(self.log_k, self.delta_flop)
        raise TypeError(f"unknown learner kind {kind!r}")

    def weights(self) -> np.ndarray:
        """Weights for the upcoming round, computed before its loss is seen."""
        return mix(self.rate(), self.L).weights

    def step(self, loss):
        """Play one round; returns ``(weights, record)`` and updates in place."""
        eta = self.rate()
        self.t += 1
        rec, self.L, w = account_round(eta, self.L, loss, t=self.t, regime=self.regime)
        if isinstance(self.kind, FlipFlop):
            self._flipflop_update(rec.delta)
        else:
            self.delta += rec.delta
        return w, rec

    def _flipflop_update(self, delta: float) -> None:
        if self.regime == "flip":
            self.delta_flip += delta
        else:
            self.delta_flop += delta
        self.regime = flipflop_switch(self.regime, self.delta_flip, self.delta_flop,
                                      self.kind.phi, self.kind.alpha)


def flipflop_switch(regime: str, delta_flip: float, delta_flop: float,
                    phi: float, alpha: float) -> str:
    """Regime for the next round, checked once after the gap is accumulated."""
    if regime == "flip" and delta_flip > (phi / alpha) * delta_flop:
        return "flop"
    if regime == "flop" and delta_flop > alpha * delta_flip:
        return "flip"
    return regime


def run(kind: LearnerKind, stream) -> Trace:
    """Run ``kind`` over a whole loss stream and collect its trace."""
    arr = as_loss_stream(stream)
    learner = Learner(kind, arr.shape[1])
    trace = Trace(K=learner.K)
    for loss in arr:
        w, rec = learner.step(loss)
        trace.append(rec, w, loss)
    return trace


def parse_kind(algo: str, eta=None, horizon=None, phi=None, alpha=None) -> LearnerKind:
    """Build a learner kind from a CLI-style name and optional parameters."""
    algo = algo.lower()
    if algo == "ftl":
        return FTL()
    if algo in ("hedge", "fixed"):
        if eta is None:
            raise ParameterError("fixed-rate Hedge needs a learning rate")
        if eta == INF:
            return FTL()
        return FixedHedge(float(eta))
    if algo == "safe":
        if horizon is None:
            raise ParameterError("safe Hedge needs the horizon")
        return SafeHedge(int(horizon))
    if algo == "adahedge":
        return AdaHedge()
    if algo == "flipflop":
        return FlipFlop(DEFAULT_PHI if phi is None else float(phi),
                        DEFAULT_ALPHA if alpha is None else float(alpha))
    raise ParameterError(f"unknown algorithm {algo!r}")
