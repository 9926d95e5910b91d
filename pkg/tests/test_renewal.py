import math

import numpy as np
import pytest

from gsrw.errors import DomainError, ResourceCapError
from gsrw.gsd import GsdSampler, gsd_pmf_via_gf, gsd_survival_array
from gsrw.renewal import (
    RenewalPath,
    aged_counts_mc,
    aged_estimate_mc,
    aged_state_probs_exact,
    backward_recurrence_exact,
    backward_recurrence_mc,
    counting_paths,
    geometric_pmf_series,
    hazard_from_pmf,
    simulate_counting,
    state_polynomial_exact,
    state_probs_exact,
)
from gsrw.series import SeriesU


def unit_clock(order):
    return SeriesU(np.eye(1, order + 1, 1)[0])


def gsd_hazard_table(lam, horizon):
    return hazard_from_pmf(gsd_pmf_via_gf(lam, horizon + 1))


def within_3se(p_hat, p, n):
    se = np.sqrt(p * (1 - p) / n)
    return np.abs(p_hat - p) <= 3 * se + 1e-12


def test_deterministic_path_arrives_every_step():
    path = simulate_counting(lambda rng: 1, 10, np.random.default_rng(0))
    assert np.array_equal(path.arrivals, np.arange(1, 11))
    assert path.count(0) == 0 and path.count(10) == 10


def test_path_counts_are_nondecreasing():
    rng = np.random.default_rng(1)
    path = simulate_counting(GsdSampler(1.5), 500, rng)
    n = path.counts()
    assert n[0] == 0 and np.all(np.diff(n) >= 0)
    assert np.all(np.diff(path.arrivals) >= 1)
    assert isinstance(path, RenewalPath)


def test_mc_survival_matches_closed_form():
    T, n = 32, 10**5
    paths = counting_paths(gsd_hazard_table(1.5, T), T, n, np.random.default_rng(2))
    p0 = np.mean(paths == 0, axis=0)
    assert np.all(within_3se(p0, gsd_survival_array(1.5, T), n))


def test_bernoulli_law_of_large_numbers():
    p, T = 0.3, 10**4
    path = simulate_counting(lambda rng: int(rng.geometric(p)), T, np.random.default_rng(3))
    assert abs(path.count(T) - p * T) <= 3 * math.sqrt(T * p * (1 - p))


def test_counting_paths_checks_hazard_length():
    with pytest.raises(DomainError):
        counting_paths(np.zeros(3), 5, 10, np.random.default_rng(0))


def test_hazard_from_pmf_recovers_gsd_hazard():
    haz = gsd_hazard_table(2.5, 50)
    k = np.arange(1, 52)
    assert np.allclose(haz[1:], 2.5 / (3 + k - 1), rtol=1e-12)
    assert haz[0] == 0.0


def test_state_table_rows_and_completeness():
    T = 200
    psi = gsd_pmf_via_gf(1.5, T)
    tab = state_probs_exact(psi, T, T)
    assert np.allclose(tab.probs[0], gsd_survival_array(1.5, T), atol=1e-15)
    assert np.abs(tab.remainder).max() <= 1e-10
    n, t = np.indices(tab.shape)
    assert np.all(tab.probs[n > t] == 0)


def test_state_table_deterministic():
    tab = state_probs_exact(unit_clock(8), 8, 8)
    assert np.array_equal(tab.probs, np.eye(9))


def test_state_table_truncation_remainder_reported():
    tab = state_probs_exact(gsd_pmf_via_gf(0.5, 20), 3, 20)
    assert np.allclose(tab.probs.sum(axis=0) + tab.remainder, 1.0)
    assert tab.remainder[-1] > 0


def test_state_polynomial_special_values():
    T = 100
    psi = gsd_pmf_via_gf(1.5, T)
    assert np.allclose(state_polynomial_exact(psi, 1.0, T), 1.0, atol=1e-14)
    assert np.allclose(state_polynomial_exact(psi, 0.0, T), gsd_survival_array(1.5, T), atol=1e-15)
    tab = state_probs_exact(psi, T, T)
    alt = ((-1.0) ** np.arange(T + 1)) @ tab.probs
    assert np.abs(state_polynomial_exact(psi, -1.0, T) - alt).max() <= 1e-10
    with pytest.raises(DomainError):
        state_polynomial_exact(psi, 1.5, T)


def test_aged_tau_zero_is_the_original_process():
    psi = gsd_pmf_via_gf(1.5, 128)
    aged = aged_state_probs_exact(psi, 64, 64, 64)
    plain = state_probs_exact(psi, 64, 64)
    assert np.abs(aged.probs[:, 0, :] - plain.probs).max() <= 1e-10


def test_aged_geometric_law_is_tau_invariant():
    aged = aged_state_probs_exact(geometric_pmf_series(0.3, 128), 64, 64, 64)
    assert np.abs(aged.probs - aged.probs[:, :1, :]).max() <= 1e-10


@pytest.mark.parametrize("lam", [0.5, 1.5, 2.5])
def test_aged_completeness_and_mean_monotone(lam):
    aged = aged_state_probs_exact(gsd_pmf_via_gf(lam, 128), 64, 64, 64)
    assert np.abs(aged.remainder).max() <= 1e-8
    mean = np.einsum("m,mat->at", np.arange(65.0), aged.probs)
    assert np.all(np.diff(mean, axis=1) >= -1e-12)


def test_aged_deterministic_law_is_point_mass():
    aged = aged_state_probs_exact(unit_clock(20), 10, 10, 10)
    for tau in range(11):
        assert np.allclose(aged.probs[:, tau, :], np.eye(11), atol=1e-15)


def test_aged_requires_enough_order():
    with pytest.raises(DomainError):
        aged_state_probs_exact(gsd_pmf_via_gf(1.5, 10), 4, 8, 8)


def test_aged_mc_point_estimate():
    lam, tau, t, n = 1.5, 8, 8, 10**5
    exact = aged_state_probs_exact(gsd_pmf_via_gf(lam, tau + t), t, tau, t).probs[:, tau, t]
    p_hat, se = aged_estimate_mc(gsd_hazard_table(lam, tau + t), tau, t, n, seed=4)
    assert np.all(within_3se(p_hat, exact, n))
    p0, _ = aged_estimate_mc(gsd_hazard_table(lam, t), 0, t, n, seed=5)
    plain = state_probs_exact(gsd_pmf_via_gf(lam, t), t, t).probs[:, t]
    assert np.all(within_3se(p0, plain, n))
    det, _ = aged_estimate_mc(hazard_from_pmf(unit_clock(20)), 3, 5, 100, seed=6)
    assert det[5] == 1.0


@pytest.mark.parametrize("lam", [0.5, 1.5, 2.5])
def test_aged_mc_grid_agreement(lam):
    tau_max = T = 32
    n = 20000
    exact = aged_state_probs_exact(gsd_pmf_via_gf(lam, tau_max + T), T, tau_max, T).probs
    counts = aged_counts_mc(gsd_hazard_table(lam, tau_max + T), tau_max, T, n, seed=7)
    assert np.array_equal(counts.sum(axis=0), np.full((tau_max + 1, T + 1), n))
    occupied = (exact > 0) | (counts > 0)
    ok = within_3se(counts / n, exact, n)
    assert np.mean(ok[occupied]) >= 0.99


def test_aged_mc_is_thread_independent():
    haz = gsd_hazard_table(1.5, 20)
    a = aged_counts_mc(haz, 10, 10, 3000, seed=9, threads=1, block=512)
    b = aged_counts_mc(haz, 10, 10, 3000, seed=9, threads=3, block=512)
    assert np.array_equal(a, b)


def test_backward_recurrence_marginal_and_n0():
    T = 40
    psi = gsd_pmf_via_gf(1.5, T)
    states = state_probs_exact(psi, 5, T).probs
    for n in range(4):
        grid = backward_recurrence_exact(psi, n, T, T)
        assert np.abs(grid.sum(axis=0) - states[n]).max() <= 1e-10
    f0 = backward_recurrence_exact(psi, 0, T, T)
    assert np.allclose(f0, np.diag(gsd_survival_array(1.5, T)), atol=1e-15)


def test_backward_recurrence_mc():
    lam, t, n = 1.5, 32, 10**5
    psi = gsd_pmf_via_gf(lam, t)
    counts = backward_recurrence_mc(gsd_hazard_table(lam, t), t, n, seed=8)
    exact = np.stack([backward_recurrence_exact(psi, k, t, t)[:, t] for k in range(t + 1)])
    occupied = (exact > 0) | (counts > 0)
    ok = within_3se(counts / n, exact, n)
    assert np.mean(ok[occupied]) >= 0.99


def test_dense_window_cap():
    psi = gsd_pmf_via_gf(1.5, 600)
    with pytest.raises(ResourceCapError):
        aged_state_probs_exact(psi, 4, 257, 8)
    with pytest.raises(ResourceCapError):
        backward_recurrence_exact(psi, 1, 8, 300)
    with pytest.raises(ResourceCapError):
        aged_counts_mc(np.zeros(600), 4, 257, 10, seed=0)
    assert aged_state_probs_exact(psi, 2, 300, 4, cap=300).probs.shape == (3, 301, 5)
