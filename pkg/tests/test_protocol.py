import math

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from _oracles import binomial_se
from ftqkd import load_config
from ftqkd.analytics import jitter_from_delta, qber_bound, qber_exact
from ftqkd.model import Basis, DetectionEvents, Party
from ftqkd.protocol import (
    ProtocolStats,
    SiftedPairs,
    choose_basis,
    estimate_stats,
    gp_decode,
    gp_encode,
    rescale,
    run_session,
    sift,
    simulate_block,
)
from ftqkd.rng import PairStreams

SQRT_PI = math.sqrt(math.pi)


def test_choose_basis_is_fair_and_independent():
    n = 100_000
    rng = PairStreams.for_range(0, 0, n)
    a = choose_basis(rng, Party.ALICE)
    b = choose_basis(rng, Party.BOB)
    assert abs((a == Basis.TIME).mean() - 0.5) <= 0.005
    assert abs((a == b).mean() - 0.5) <= 0.005
    np.testing.assert_array_equal(a, choose_basis(PairStreams.for_range(0, 0, n), "alice"))


def test_rescale():
    assert rescale(236.8, 236.8) == 1.0
    assert rescale(0.0, 5.0) == 0.0
    assert math.sqrt(56097) == pytest.approx(236.85, rel=5e-3)
    with pytest.raises(ValueError):
        rescale(1.0, 0.0)


def _events(party, basis, stamps):
    stamps = np.asarray(stamps, dtype=float)
    return DetectionEvents(party, np.asarray(basis, dtype=np.int8), stamps, ~np.isnan(stamps))


def test_sift_keeps_matched_detected_pairs():
    T, F = Basis.TIME, Basis.FREQUENCY
    a = _events(Party.ALICE, [T, T, F, T, F], [1.0, 2.0, 3.0, np.nan, 5.0])
    b = _events(Party.BOB, [T, F, F, T, F], [1.5, 2.5, 3.5, 4.0, np.nan])
    s = sift(a, b, tau=0.5)
    np.testing.assert_array_equal(s.basis, [T, F])
    np.testing.assert_array_equal(s.u_a, [2.0, 6.0])
    np.testing.assert_array_equal(s.u_b, [3.0, 7.0])
    with pytest.raises(ValueError):
        sift(a, _events(Party.BOB, [T], [1.0]), tau=1.0)


def test_sift_count_lossless(ideal_config):
    s = simulate_block(ideal_config, 8, 0, 100_000)
    assert abs(len(s) - 50_000) <= 470


def test_gp_encode_examples():
    assert gp_encode(3.9)[0] == 0 and gp_encode(3.9)[1] == pytest.approx(0.3551, abs=1e-4)
    assert gp_encode(0.0) == (0, 0.0)
    bit, offset = gp_encode(-0.1)
    assert bit == 1 and offset == pytest.approx(1.6725, abs=1e-4)


def test_gp_decode_examples():
    _, offset = gp_encode(3.9)
    assert gp_decode(4.0, offset) == 0
    assert gp_decode(4.9, offset) == 1
    u = np.linspace(-50, 50, 10_001)
    bits, offsets = gp_encode(u)
    np.testing.assert_array_equal(gp_decode(u, offsets), bits)


def test_gp_decode_rounds_half_away_from_zero():
    assert gp_decode(0.5 * SQRT_PI, 0.0) == 1
    assert gp_decode(-0.5 * SQRT_PI, 0.0) == 1
    assert gp_decode(1.5 * SQRT_PI, 0.0) == 0


@given(u=st.floats(-200, 200), n=st.floats(-12, 12))
def test_binning_consistency(u, n):
    x = n / SQRT_PI
    assume(abs(abs(x - math.floor(x)) - 0.5) > 1e-6)
    bit, offset = gp_encode(u)
    agree = gp_decode(u + n, offset) == bit
    assert agree == (round(x) % 2 == 0)
    if abs(n) < SQRT_PI / 2:
        assert agree


def test_estimate_stats_noiseless():
    u = np.linspace(-20, 20, 101)
    basis = np.tile(np.array([0, 1], dtype=np.int8), 51)[:101]
    stats = estimate_stats(SiftedPairs(basis, u, u.copy()), pairs_emitted=400, f=1.16)
    assert stats.qber_overall == 0 and stats.cond_variance == 0
    assert stats.key_rate == pytest.approx(stats.gain / 2)
    assert stats.gain == pytest.approx(101 / 400)
    with pytest.raises(ValueError):
        estimate_stats(SiftedPairs(np.zeros(0, np.int8), np.zeros(0), np.zeros(0)), 10, 1.16)


def test_estimate_stats_counts_errors_per_basis():
    u_a = np.zeros(4)
    u_b = np.array([0.0, SQRT_PI, SQRT_PI, 0.1])
    basis = np.array([0, 0, 1, 1], dtype=np.int8)
    stats = estimate_stats(SiftedPairs(basis, u_a, u_b), 8, 1.0)
    assert stats.qber_time == 0.5 and stats.qber_freq == 0.5 and stats.qber_overall == 0.5
    assert stats.delta_estimate == pytest.approx(math.sqrt(2 * np.var(u_b)))


def test_session_gain_with_half_efficiencies():
    config = load_config(overrides={
        "detectors.alice.efficiency": 0.5, "detectors.bob.efficiency": 0.5,
        "paths.alice.insertion_loss_db": 0.0, "paths.bob.insertion_loss_db": 0.0,
        "pairs": 200_000,
    })
    stats = run_session(config)
    assert abs(stats.gain - 0.125) <= 3 * binomial_se(0.125, config.pairs)


def test_session_is_deterministic_across_workers():
    config = load_config(overrides={"pairs": 300_000, "seed": 99})
    first = run_session(config, workers=1)
    assert run_session(config, workers=1) == first
    assert run_session(config, workers=3) == first
    assert run_session(config, seed=100) != first


def test_ideal_session_cancels_exactly(ideal_config):
    s = simulate_block(ideal_config, ideal_config.seed, 0, ideal_config.pairs)
    np.testing.assert_allclose(s.u_b, s.u_a, rtol=1e-9)
    stats = run_session(ideal_config)
    assert stats.qber_overall == 0.0


def test_attack_raises_qber_on_same_seed():
    base = load_config(overrides={"pairs": 100_000})
    attacked = load_config(overrides={"pairs": 100_000, "eve.mode": "intercept-resend"})
    assert run_session(attacked).qber_overall > run_session(base).qber_overall


@pytest.mark.slow
@pytest.mark.parametrize("delta", [0.3, 0.45, 0.6])
def test_monte_carlo_matches_exact_oracle(delta):
    d_tilde = load_config().d_tilde
    jitter = jitter_from_delta(delta, d_tilde)
    config = load_config(overrides={"detectors.alice.jitter_sigma": jitter,
                                    "detectors.bob.jitter_sigma": jitter, "seed": 17})
    stats = run_session(config)
    expected = qber_exact(delta)
    se = binomial_se(expected, stats.pairs_sifted)
    assert abs(stats.qber_overall - expected) <= 3 * max(se, 1 / stats.pairs_sifted)
    assert stats.qber_overall <= qber_bound(stats.delta_estimate) + 3 * se + 1 / stats.pairs_sifted
    assert stats.delta_estimate == pytest.approx(delta, rel=0.03)


@pytest.mark.slow
def test_time_and_frequency_qber_agree():
    config = load_config(overrides={"seed": 5})
    s = simulate_block(config, config.seed, 0, config.pairs)
    bit_a, offset = gp_encode(s.u_a)
    err = gp_decode(s.u_b, offset) != bit_a
    is_time = s.basis == Basis.TIME
    n_t, n_f = is_time.sum(), (~is_time).sum()
    p_t, p_f, p = err[is_time].mean(), err[~is_time].mean(), err.mean()
    z = (p_t - p_f) / math.sqrt(p * (1 - p) * (1 / n_t + 1 / n_f))
    assert abs(z) < 4
    stats = run_session(config)
    assert (stats.qber_time, stats.qber_freq) == pytest.approx((p_t, p_f))
