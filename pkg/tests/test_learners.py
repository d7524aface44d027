import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from flipflop.core import ParameterError, mix
from flipflop.datagen import ExperimentSpec, generate
from flipflop.learners import (FTL, AdaHedge, FixedHedge, FlipFlop, Learner, SafeHedge,
                               flipflop_switch, parse_kind, run)

INF = math.inf
DELTA_2LN2 = 0.1390359525563188704737612702615665290128


def test_rates():
    assert Learner(FTL(), 2).rate() == INF
    assert Learner(FixedHedge(0.3), 2).rate() == 0.3
    assert Learner(SafeHedge(1000), 2).rate() == pytest.approx(0.0745, abs=1e-4)
    ah = Learner(AdaHedge(), 2)
    assert ah.rate() == INF
    ah.delta = 0.5
    assert ah.rate() == pytest.approx(2 * math.log(2), rel=1e-15)


def test_flipflop_rate_follows_regime():
    ff = Learner(FlipFlop(), 3)
    assert ff.rate() == INF
    ff.regime, ff.delta_flop = "flop", 0.0
    assert ff.rate() == INF
    ff.delta_flop = 2.0
    assert ff.rate() == pytest.approx(math.log(3) / 2)


@pytest.mark.parametrize("kind", [
    lambda: FixedHedge(0.0), lambda: FixedHedge(INF), lambda: SafeHedge(0),
    lambda: FlipFlop(1.0, 1.0), lambda: FlipFlop(2.0, 0.0),
])
def test_invalid_parameters(kind):
    with pytest.raises(ParameterError):
        kind()


def test_single_expert_rejected():
    with pytest.raises(ParameterError):
        Learner(AdaHedge(), 1)


def test_adahedge_two_rounds():
    ah = Learner(AdaHedge(), 2)
    w1, r1 = ah.step([1.0, 0.0])
    np.testing.assert_array_equal(w1, [0.5, 0.5])
    assert r1.eta == INF and r1.delta == 0.5
    w2, r2 = ah.step([0.0, 1.0])
    assert r2.eta == pytest.approx(2 * math.log(2), rel=1e-15)
    np.testing.assert_allclose(w2, [0.2, 0.8], rtol=1e-15)
    assert r2.delta == pytest.approx(DELTA_2LN2, rel=1e-13)
    assert ah.delta == pytest.approx(0.5 + DELTA_2LN2, rel=1e-14)


def test_weights_emitted_before_loss():
    ah = Learner(AdaHedge(), 3)
    ah.step([0.2, 0.5, 0.9])
    before = ah.weights()
    w, _ = ah.step([1.0, 0.0, 0.0])
    np.testing.assert_array_equal(before, w)


def test_equal_losses_keep_uniform_weights():
    trace = run(FixedHedge(0.7), [[0.3, 0.3, 0.3]] * 20)
    np.testing.assert_allclose(trace.weight_matrix(), 1 / 3, rtol=1e-15)
    assert trace.regret == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("T", [1, 2, 17, 1000])
def test_ftl_experiment_2_regret_half(T):
    assert run(FTL(), generate(ExperimentSpec(2, T))).regret == 0.5


def test_switch_rule():
    assert flipflop_switch("flip", 0.1, 0.0, 2.37, 1.243) == "flop"
    assert flipflop_switch("flop", 0.5, 0.6215, 2.37, 1.243) == "flop"
    assert flipflop_switch("flop", 0.5, 0.6216, 2.37, 1.243) == "flip"
    # zero-gap rounds never trigger a switch on their own
    assert flipflop_switch("flip", 0.0, 0.0, 2.37, 1.243) == "flip"
    assert flipflop_switch("flop", 1.0, 0.0, 2.37, 1.243) == "flop"


def test_flipflop_first_positive_gap_switches_to_flop():
    ff = Learner(FlipFlop(), 2)
    _, rec = ff.step([1.0, 0.0])
    assert rec.regime == "flip" and rec.delta > 0
    assert ff.regime == "flop"
    _, rec = ff.step([0.0, 1.0])
    assert rec.regime == "flop"


def test_flipflop_one_accumulator_per_round():
    ff = Learner(FlipFlop(), 3)
    rng = np.random.default_rng(3)
    for loss in rng.random((200, 3)):
        before = (ff.delta_flip, ff.delta_flop, ff.regime)
        _, rec = ff.step(loss)
        assert rec.regime == before[2]
        if rec.regime == "flip":
            assert ff.delta_flop == before[1] and ff.delta_flip >= before[0]
        else:
            assert ff.delta_flip == before[0] and ff.delta_flop >= before[1]


def test_run_reports_round_of_mismatch():
    with pytest.raises(ValueError, match="round 3"):
        run(AdaHedge(), [[0, 1], [1, 0], [1, 0, 0]])


def test_parse_kind():
    assert parse_kind("hedge", eta=INF) == FTL()
    assert parse_kind("flipflop") == FlipFlop(2.37, 1.243)
    assert parse_kind("safe", horizon=10) == SafeHedge(10)
    with pytest.raises(ParameterError):
        parse_kind("normalhedge")


streams = st.integers(2, 4).flatmap(lambda K: st.lists(
    st.lists(st.floats(0, 1), min_size=K, max_size=K), min_size=1, max_size=40))


@settings(max_examples=150, deadline=None)
@given(streams)
def test_adahedge_gap_inequalities(stream):
    trace = run(AdaHedge(), stream)
    K = trace.K
    etas = [r.eta for r in trace.records]
    assert all(a >= b for a, b in zip(etas, etas[1:]))
    assert trace.regret <= 2 * trace.Delta + 1e-9
    lk = math.log(K)
    assert trace.Delta**2 <= trace.V * lk + (1 + 2 / 3 * lk) * trace.Delta + 1e-9
    assert trace.M <= mix(etas[-1], trace.L).mixloss + 1e-9


@settings(max_examples=150, deadline=None)
@given(streams)
def test_ftl_regret_is_its_gap(stream):
    trace = run(FTL(), stream)
    assert trace.regret == pytest.approx(trace.Delta, abs=1e-9)
    assert trace.regret <= trace.C + 1e-9


@settings(max_examples=150, deadline=None)
@given(streams)
def test_flipflop_regime_sandwich(stream):
    phi, alpha = 2.37, 1.243
    ff = Learner(FlipFlop(phi, alpha), len(stream[0]))
    for loss in stream:
        ff.step(loss)
        assert ff.delta_flop < alpha * ff.delta_flip + alpha
        assert ff.delta_flip < (phi / alpha) * ff.delta_flop + phi / alpha


@pytest.mark.parametrize("kind", [AdaHedge(), FlipFlop(), FlipFlop(3.0, 0.5)])
def test_scale_translation_invariance(kind, rng):
    for _ in range(20):
        T, K = int(rng.integers(1, 80)), int(rng.integers(2, 6))
        losses = rng.random((T, K))
        sigma = float(rng.uniform(0.01, 10))
        tau = rng.uniform(-5, 5, size=T)
        a, b = Learner(kind, K), Learner(kind, K)
        for loss, shift in zip(losses, tau):
            wa, ra = a.step(loss)
            wb, rb = b.step(sigma * loss + shift)
            assert np.max(np.abs(wa - wb)) <= 1e-9
            assert ra.regime == rb.regime
        for attr in ("delta", "delta_flip", "delta_flop"):
            assert getattr(b, attr) == pytest.approx(sigma * getattr(a, attr), rel=1e-9, abs=1e-12)
