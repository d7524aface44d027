"""Exponential weights, mix loss and per-round loss accounting.

Everything in here is a pure function of its inputs. Cumulative losses are
plain float64 numpy arrays accumulated in expert-index order, so that ties
between experts are decided by exact equality.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, NamedTuple, Optional

import numpy as np

INF = math.inf

REGIMES = ("flip", "flop", "n/a")


class InputError(ValueError):
    """Malformed loss data: wrong shape, non-finite values, ragged rows."""


class ParameterError(ValueError):
    """An algorithm or bound parameter outside its admissible range."""


def as_loss_vector(losses, k: Optional[int] = None) -> np.ndarray:
    """Validate one round of expert losses and return it as a float64 array."""
    arr = np.asarray(losses, dtype=np.float64)
    if arr.ndim != 1:
        raise InputError(f"loss vector must be one-dimensional, got shape {arr.shape}")
    if arr.size < 2:
        raise InputError(f"need at least 2 experts, got {arr.size}")
    if k is not None and arr.size != k:
        raise InputError(f"expected {k} experts, got {arr.size}")
    if not np.all(np.isfinite(arr)):
        raise InputError("loss vector contains non-finite entries")
    return arr


def as_loss_stream(stream) -> np.ndarray:
    """Validate a whole stream and return a (T, K) float64 array."""
    if isinstance(stream, np.ndarray):
        arr = np.asarray(stream, dtype=np.float64)
        if arr.ndim != 2:
            raise InputError(f"loss stream must be two-dimensional, got shape {arr.shape}")
        rows = list(arr)
    else:
        rows = list(stream)
    if not rows:
        raise InputError("loss stream is empty")
    first = as_loss_vector(rows[0])
    out = np.empty((len(rows), first.size), dtype=np.float64)
    out[0] = first
    for t, row in enumerate(rows[1:], start=2):
        try:
            out[t - 1] = as_loss_vector(row, first.size)
        except InputError as exc:
            raise InputError(f"round {t}: {exc}") from None
    return out


def _check_rate(eta: float) -> float:
    eta = float(eta)
    if math.isnan(eta) or eta <= 0:
        raise ParameterError(f"learning rate must be in (0, inf], got {eta}")
    return eta


class MixOutcome(NamedTuple):
    weights: np.ndarray
    mixloss: float


def mix(eta: float, L) -> MixOutcome:
    """Posterior weights and cumulative mix loss for rate ``eta``.

    Losses are shifted by their minimum before exponentiation, so the
    largest unnormalized weight is exactly 1 and nothing underflows to an
    all-zero vector. ``eta = inf`` gives Follow-the-Leader: uniform weight
    on every expert whose cumulative loss equals the minimum.
    """
    eta = _check_rate(eta)
    L = np.asarray(L, dtype=np.float64)
    if L.ndim != 1 or L.size < 2:
        raise InputError(f"need a vector of at least 2 cumulative losses, got shape {L.shape}")
    if not np.all(np.isfinite(L)):
        raise InputError("cumulative losses contain non-finite entries")
    return _mix(eta, L)


def _mix(eta: float, L: np.ndarray) -> MixOutcome:
    mn = L.min()
    if eta == INF:
        u = (L == mn).astype(np.float64)
        return MixOutcome(u / u.sum(), float(mn))
    # expm1/log1p keep the mix loss accurate when eta * (L - mn) is tiny.
    x = -eta * (L - mn)
    u = np.exp(x)
    return MixOutcome(u / u.sum(), float(mn - math.log1p(np.expm1(x).sum() / L.size) / eta))


def leaders(L) -> np.ndarray:
    """Boolean mask of the experts attaining the minimal cumulative loss."""
    L = np.asarray(L)
    return L == L.min()


def is_leader_change(L_prev, L_new, first_round: bool = False) -> bool:
    # Some expert that led before the round no longer leads after it.
    if first_round:
        return True
    return bool(np.any(leaders(L_prev) & ~leaders(L_new)))


@dataclass(frozen=True)
class RoundRecord:
    t: int
    eta: float
    h: float
    m: float
    delta: float
    v: float
    leader_change: bool
    regime: str = "n/a"


def account_round(eta: float, L_prev, loss, t: int = 1, regime: str = "n/a"):
    """Play one round at rate ``eta``.

    Returns ``(record, L_new, weights)``. The mixability gap is clipped at
    zero to absorb floating-point violations of Jensen's inequality.
    """
    eta = _check_rate(eta)
    L_prev = np.asarray(L_prev, dtype=np.float64)
    loss = as_loss_vector(loss, L_prev.size)
    w, m_prev = mix(eta, L_prev)
    h = float(w @ loss)
    L_new = L_prev + loss
    _, m_cur = _mix(eta, L_new)
    m = m_cur - m_prev
    delta = max(0.0, h - m)
    v = float(w @ (loss - h) ** 2)
    change = is_leader_change(L_prev, L_new, first_round=(t == 1))
    rec = RoundRecord(t=t, eta=float(eta), h=h, m=m, delta=delta, v=v,
                      leader_change=change, regime=regime)
    return rec, L_new, w


def leader_changes(stream) -> int:
    """Number of rounds in which some leading expert lost the lead."""
    arr = as_loss_stream(stream)
    L = np.zeros(arr.shape[1])
    count = 0
    for t, loss in enumerate(arr, start=1):
        L_new = L + loss
        count += is_leader_change(L, L_new, first_round=(t == 1))
        L = L_new
    return count


@dataclass
class Trace:
    """Round records of one run, plus the running aggregates.

    ``weights`` holds the weight vector played in each round and ``losses``
    the stream that produced it, row for row.
    """

    K: int
    records: List[RoundRecord] = field(default_factory=list)
    weights: List[np.ndarray] = field(default_factory=list)
    losses: List[np.ndarray] = field(default_factory=list)
    H: float = 0.0
    M: float = 0.0
    Delta: float = 0.0
    V: float = 0.0
    C: int = 0
    L: Optional[np.ndarray] = None
    regret_path: List[float] = field(default_factory=list)

    def __post_init__(self):
        if self.L is None:
            self.L = np.zeros(self.K)

    def append(self, record: RoundRecord, weights, loss) -> None:
        self.records.append(record)
        self.weights.append(np.asarray(weights, dtype=np.float64))
        loss = np.asarray(loss, dtype=np.float64)
        self.losses.append(loss)
        self.H += record.h
        self.M += record.m
        self.Delta += record.delta
        self.V += record.v
        self.C += int(record.leader_change)
        self.L = self.L + loss
        self.regret_path.append(self.H - float(self.L.min()))

    @property
    def T(self) -> int:
        return len(self.records)

    @property
    def Lstar(self) -> float:
        return float(self.L.min())

    @property
    def regret(self) -> float:
        return self.H - self.Lstar

    def loss_matrix(self) -> np.ndarray:
        return np.vstack(self.losses) if self.losses else np.zeros((0, self.K))

    def weight_matrix(self) -> np.ndarray:
        return np.vstack(self.weights) if self.weights else np.zeros((0, self.K))

    def regimes(self) -> List[str]:
        return [r.regime for r in self.records]

    def regime_sums(self, regime: str):
        """Cumulative (delta, v) restricted to rounds played in ``regime``."""
        d = sum(r.delta for r in self.records if r.regime == regime)
        v = sum(r.v for r in self.records if r.regime == regime)
        return d, v

    def summary(self) -> dict:
        return {
            "K": self.K,
            "T": self.T,
            "H": self.H,
            "M": self.M,
            "Delta": self.Delta,
            "V": self.V,
            "Lstar": self.Lstar,
            "C": self.C,
            "regret": self.regret,
        }
