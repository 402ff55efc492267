import math
from dataclasses import replace

import numpy as np
import pytest

from cellfree_ee import mc, model
from cellfree_ee.mc import NetworkRealization


def small_torus_params(**kw):
    """Reference radio settings on a tiny torus so every path-loss saturates at 1."""
    base = model.reference_params(area=0.25, ap_density=40.0)
    return replace(base, **kw)


def moderate_params(**kw):
    """Torus of 16 m^2 so path-losses spread over a few orders of magnitude."""
    base = model.reference_params(area=16.0, ap_density=1.0, rho_tr=10.0, rho_d=20.0)
    return replace(base, **kw)


def test_poisson_count_statistics():
    draws = np.array([mc.sample_ap_count(100.0, mc.substream(2024, i)) for i in range(100_000)])
    assert abs(draws.mean() - 100.0) <= 0.5
    assert draws.var(ddof=1) == pytest.approx(100.0, rel=0.05)


def test_realization_is_deterministic(params):
    a = mc.sample_realization(params, 99, index=5)
    b = mc.sample_realization(params, 99, index=5)
    assert a.ap_positions.tobytes() == b.ap_positions.tobytes()
    assert a.user_positions.tobytes() == b.user_positions.tobytes()
    c = mc.sample_realization(params, 99, index=6)
    assert a.ap_positions.shape != c.ap_positions.shape or not np.array_equal(a.ap_positions, c.ap_positions)


def test_realization_invariants(params):
    r = mc.sample_realization(params, 1)
    assert r.m_count == r.ap_positions.shape[0] >= 1
    assert np.all((r.ap_positions >= 0) & (r.ap_positions < r.torus_side))
    assert np.all(r.user_positions[0] == 0)
    assert r.user_positions.shape == (10, 2)


def test_zero_ap_draws_are_resampled():
    p = model.reference_params(ap_density=1e-9)  # mean count 1e-3
    r = mc.sample_realization(p, 3)
    assert r.m_count >= 1 and r.attempts > 1


def test_seed_range_checked(params):
    with pytest.raises(model.DomainError):
        mc.sample_realization(params, -1)


def test_torus_distance_symmetry_and_maximum():
    side = 10.0
    rng = np.random.default_rng(0)
    a, b = rng.uniform(0, side, (20, 2)), rng.uniform(0, side, (30, 2))
    d = mc.torus_distance(a, b, side)
    assert np.allclose(d, mc.torus_distance(b, a, side).T)
    assert d.max() <= math.sqrt(2) * side / 2 + 1e-12
    assert mc.torus_distance([0, 0], [5, 5], side)[0, 0] == pytest.approx(math.sqrt(2) * side / 2)
    assert mc.torus_distance([0.5, 0], [9.5, 0], side)[0, 0] == pytest.approx(1.0)


def test_pathloss_bounded(params):
    r = mc.sample_realization(params, 4)
    l = mc.pathloss(r, params.pathloss_exp)
    assert np.all(l > 0) and np.all(l <= 1)
    d = mc.estimate_variance(l, mc.pilots_for(params), params)
    assert np.all(d >= 1 / (params.tau_tr * params.rho_tr))


def test_round_robin_pilots():
    full = mc.assign_pilots(10, 10)
    assert len(set(full.pilot_index)) == 10
    assert np.array_equal(full.same_pilot(), np.eye(10))
    half = mc.assign_pilots(10, 5)
    assert np.all(np.bincount(half.pilot_index) == 2)


def test_random_pilots_deterministic():
    a = mc.assign_pilots(10, 4, "random", seed=8)
    b = mc.assign_pilots(10, 4, "random", seed=8)
    assert np.array_equal(a.pilot_index, b.pilot_index)
    assert a.max_sharing() <= math.ceil(10 / 4)
    with pytest.raises(model.DomainError):
        mc.assign_pilots(10, 4, "greedy")


def test_pilot_sharing_bounded_by_reuse(params):
    pilots = mc.pilots_for(params)
    assert pilots.n_pilots == 3
    assert pilots.max_sharing() <= math.ceil(params.pilot_reuse)


def test_single_ap_single_user_by_hand():
    p = small_torus_params(n_users=1, pilot_reuse=1.0)
    real = NetworkRealization(np.array([[0.1, 0.1]]), np.zeros((1, 2)), 0.5)
    pilots = mc.assign_pilots(1, 1)
    d = 1.0 + 1.0 / (p.tau_tr * p.rho_tr)
    expected = p.n_antennas / (d / p.rho_d + 1.0)
    assert mc.conditional_sinr(real, pilots, p) == pytest.approx(expected, rel=1e-12)


def test_perfect_csi_single_user_limit():
    p = small_torus_params(n_users=1, pilot_reuse=1.0, rho_tr=1e300)
    real = NetworkRealization(np.array([[0.1, 0.1], [0.2, 0.3]]), np.zeros((1, 2)), 0.5)
    pilots = mc.assign_pilots(1, 1)
    M, N = 2, p.n_antennas
    # d -> l = 1, so the denominator is M / rho_d + M
    assert mc.conditional_sinr(real, pilots, p) == pytest.approx(M * M * N / (M / p.rho_d + M), rel=1e-12)


def test_homogeneous_pathloss_collapse():
    p = small_torus_params()
    real = mc.sample_realization(p, 12)
    assert np.all(mc.pathloss(real, p.pathloss_exp) == 1.0)
    pilots = mc.pilots_for(p)
    M, N, K = real.m_count, p.n_antennas, p.n_users
    share = np.bincount(pilots.pilot_index)[pilots.pilot_index[0]]
    d = share + 1.0 / (p.tau_tr * p.rho_tr)
    den = K * M * d * (N + 1 / (K * p.rho_d)) + N * (K - 1) * M * M - N * M * d + M
    assert mc.conditional_sinr(real, pilots, p) == pytest.approx(M * M * N / den, rel=1e-12)


def test_simplified_denominator_matches_literal():
    p = moderate_params()
    for seed in range(20):
        real = mc.sample_realization(p, seed)
        pilots = mc.pilots_for(p)
        l = mc.pathloss(real, p.pathloss_exp)
        d = mc.estimate_variance(l, pilots, p)
        for k in range(p.n_users):
            a = mc._sinr_denominator(l, d, p, k, p.n_antennas)
            b = mc.sinr_denominator_literal(l, d, p, k, p.n_antennas)
            assert a == pytest.approx(b, rel=1e-9)


def test_translation_invariance():
    p = moderate_params()
    pilots = mc.pilots_for(p)
    for seed in range(10):
        real = mc.sample_realization(p, seed)
        shift = np.array([1.25, 2.5])
        moved = NetworkRealization((real.ap_positions + shift) % real.torus_side,
                                   (real.user_positions + shift) % real.torus_side, real.torus_side)
        for k in (0, 3):
            a = mc.conditional_sinr(real, pilots, p, k)
            b = mc.conditional_sinr(moved, pilots, p, k)
            assert b == pytest.approx(a, rel=1e-12)


def test_permutation_invariance():
    p = moderate_params()
    rng = np.random.default_rng(1)
    for seed in range(10):
        real = mc.sample_realization(p, seed)
        pilots = mc.pilots_for(p, "random", rng)
        ap_perm = rng.permutation(real.m_count)
        user_perm = np.concatenate([[0], 1 + rng.permutation(p.n_users - 1)])
        shuffled = NetworkRealization(real.ap_positions[ap_perm], real.user_positions[user_perm], real.torus_side)
        shuffled_pilots = mc.PilotAssignment(pilots.pilot_index[user_perm], pilots.n_pilots)
        a = mc.conditional_sinr(real, pilots, p)
        b = mc.conditional_sinr(shuffled, shuffled_pilots, p)
        assert b == pytest.approx(a, rel=1e-12)


def test_degenerate_denominator_flagged(monkeypatch, params):
    real = mc.sample_realization(params, 0)
    monkeypatch.setattr(mc, "_sinr_denominator", lambda *a: -1.0)
    with pytest.raises(mc.DegenerateRealizationError) as err:
        mc.conditional_sinr(real, mc.pilots_for(params), params)
    assert err.value.diagnostics["m_count"] == real.m_count
    with pytest.raises(mc.SimulationError):
        mc.mc_average_se(params, 5, 1)


def test_occasional_degenerate_realization_aborts(monkeypatch, params):
    original = mc._sinr_denominator
    calls = {"n": 0}

    def flaky(*a):
        calls["n"] += 1
        return -1.0 if calls["n"] == 2 else original(*a)

    monkeypatch.setattr(mc, "_sinr_denominator", flaky)
    with pytest.raises(mc.SimulationError):
        mc.mc_average_se(params, 100, 1)  # 1 % > 0.1 %


def test_mc_average_shape_and_reproducibility(params):
    a = mc.mc_average_se(params, 50, 17)
    b = mc.mc_average_se(params, 50, 17)
    assert a.summary() == b.summary()
    assert a.n_used == 50 and a.n_degenerate == 0
    assert a.bound_gap == pytest.approx(a.mean_se - model.se_per_user(params))
    one = mc.mc_average_se(params, 1, 17)
    assert one.stderr == 0.0 and one.mean_se == mc.mc_average_se(params, 1, 17).mean_se


def test_worker_count_does_not_change_results(params):
    a = mc.mc_average_se(params, 200, 5, workers=1, keep_records=True)
    b = mc.mc_average_se(params, 200, 5, workers=8, keep_records=True)
    assert a.summary() == b.summary()
    assert a.records == b.records


def test_all_users_option(params):
    r = mc.mc_average_se(params, 20, 2, typical_only=False, policy="random")
    assert r.n_used == 20 and r.mean_se > 0


def test_invalid_run_sizes(params):
    with pytest.raises(model.DomainError):
        mc.mc_average_se(params, 0, 1)
    with pytest.raises(model.DomainError):
        mc.mc_average_se(params, 1, 1, workers=0)
