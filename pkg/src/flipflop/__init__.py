"""Hedge, AdaHedge and FlipFlop for prediction with expert advice."""

from .core import InputError, ParameterError, RoundRecord, Trace, account_round, leader_changes, mix
from .learners import FTL, AdaHedge, FixedHedge, FlipFlop, Learner, SafeHedge, run

__all__ = [
    "AdaHedge",
    "FTL",
    "FixedHedge",
    "FlipFlop",
    "InputError",
    "Learner",
    "ParameterError",
    "RoundRecord",
    "SafeHedge",
    "Trace",
    "account_round",
    "leader_changes",
    "mix",
    "run",
]
