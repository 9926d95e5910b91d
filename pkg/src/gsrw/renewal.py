"""Discrete-time renewal processes over an arbitrary waiting-time pmf.

Exact quantities are read off generating functions with the series engine;
Monte Carlo counterparts simulate the sequential trial scheme, where a
renewal happens at elapsed time k with the hazard psi_k / P(T >= k).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import toeplitz

from .errors import DomainError, ResourceCapError
from .series import SeriesU, SeriesUW, divided_difference
from .streams import DEFAULT_BLOCK, map_blocks

__all__ = [
    "RenewalPath",
    "StateProbTable",
    "AgedStateProbTable",
    "hazard_from_pmf",
    "geometric_pmf_series",
    "simulate_counting",
    "counting_paths",
    "state_probs_exact",
    "state_polynomial_exact",
    "aged_state_probs_exact",
    "aged_estimate_mc",
    "aged_counts_mc",
    "backward_recurrence_exact",
    "backward_recurrence_mc",
]


@dataclass
class RenewalPath:
    arrivals: np.ndarray
    horizon: int

    def count(self, t):
        """N(t), the number of arrivals up to and including t."""
        return int(np.searchsorted(self.arrivals, t, side="right"))

    def counts(self):
        return np.searchsorted(self.arrivals, np.arange(self.horizon + 1), side="right")


@dataclass
class StateProbTable:
    probs: np.ndarray       # (n_max+1, T+1)
    remainder: np.ndarray   # (T+1,) mass in states above n_max

    @property
    def shape(self):
        return self.probs.shape


@dataclass
class AgedStateProbTable:
    probs: np.ndarray       # (m_max+1, tau_max+1, T+1)
    remainder: np.ndarray   # (tau_max+1, T+1)


def _coeffs(psi):
    c = psi.coeffs if isinstance(psi, SeriesU) else np.asarray(psi, dtype=float)
    if c[0] != 0:
        raise DomainError("waiting-time pmf must vanish at t = 0")
    return c


def hazard_from_pmf(pmf):
    """alpha_k = psi_k / sum_{r>=k} psi_r, index k; alpha_k = 1 once the survival is exhausted."""
    pmf = _coeffs(pmf)
    surv_before = 1.0 - np.concatenate(([0.0], np.cumsum(pmf)[:-1]))
    haz = np.ones_like(pmf)
    ok = surv_before > 1e-300
    haz[ok] = pmf[ok] / surv_before[ok]
    haz[0] = 0.0
    return np.clip(haz, 0.0, 1.0)


def geometric_pmf_series(p, order):
    """Bernoulli-process waiting times: psi_k = p (1-p)**(k-1)."""
    c = np.zeros(order + 1)
    c[1:] = p * (1.0 - p) ** np.arange(order)
    return SeriesU(c)


def simulate_counting(psi_sampler, horizon, rng):
    """One renewal path on [0, horizon] from IID waiting-time draws."""
    arrivals = []
    j = 0
    while True:
        j += psi_sampler(rng)
        if j > horizon:
            break
        arrivals.append(j)
    return RenewalPath(np.asarray(arrivals, dtype=np.int64), int(horizon))


def counting_paths(hazard, horizon, n, rng):
    """N(s) for s = 0..horizon on ``n`` independent paths, shape (n, horizon+1)."""
    hazard = np.asarray(hazard, dtype=float)
    if hazard.size < horizon + 1:
        raise DomainError("hazard table shorter than horizon + 1")
    out = np.zeros((n, horizon + 1), dtype=np.int32)
    age = np.zeros(n, dtype=np.int64)
    count = np.zeros(n, dtype=np.int32)
    for s in range(1, horizon + 1):
        ev = rng.random(n) < hazard[age + 1]
        count += ev
        age = np.where(ev, 0, age + 1)
        out[:, s] = count
    return out


def state_probs_exact(psi, n_max, T):
    c = _coeffs(psi)
    if c.size < T + 1:
        raise DomainError("psi series order must be >= T")
    psi = SeriesU(c[:T + 1])
    probs = np.zeros((n_max + 1, T + 1))
    row = (1.0 - psi).cumsum()
    for n in range(n_max + 1):
        probs[n] = row.coeffs
        if n < n_max:
            row = row * psi
    return StateProbTable(probs, 1.0 - probs.sum(axis=0))


def state_polynomial_exact(psi, v, T):
    """E[v**N(t)] for t = 0..T."""
    if abs(v) > 1:
        raise DomainError("|v| must be <= 1")
    c = _coeffs(psi)
    psi = SeriesU(c[:T + 1])
    return ((1.0 - psi).cumsum() / (1.0 - v * psi)).coeffs


GRID_CAP = 256


def _check_grid(tau_max, T, cap):
    if max(tau_max, T) > cap:
        raise ResourceCapError(f"dense window {tau_max}x{T} exceeds the {cap}x{cap} cap")


def _toeplitz_upper(s, n):
    """Matrix M with (x @ M)[t] = sum_k x[k] s[t-k] on n coefficients."""
    col = np.zeros(n)
    col[0] = s[0]
    return toeplitz(col, s[:n])


def aged_state_probs_exact(psi, m_max, tau_max, T, cap=GRID_CAP):
    """P[N(tau+t) - N(tau) = m] on the (m, tau, t) window."""
    _check_grid(tau_max, T, cap)
    c = _coeffs(psi)
    if c.size < tau_max + T + 1:
        raise DomainError(f"psi series order must be >= tau_max + T = {tau_max + T}")
    psi_w = SeriesU(c[:tau_max + 1])
    psi_u = SeriesU(c[:T + 1])
    renew_w = (1.0 - psi_w).recip()

    # u [psi(u) - psi(w)] / (u - w) / [1 - psi(w)]
    if T > 0:
        dd = divided_difference(c, order_w=tau_max, order_u=T - 1)
        base = SeriesUW(np.pad(dd.coeffs, ((0, 0), (0, 1)))).shift_u(1).mul_w(renew_w)
    else:
        base = SeriesUW(np.zeros((tau_max + 1, 1)))
    base = base.coeffs

    probs = np.zeros((m_max + 1, tau_max + 1, T + 1))
    # m = 0: [1/(1-w) - base] / (1-u)
    head = -base.copy()
    head[:, 0] += 1.0
    probs[0] = np.cumsum(head, axis=1)
    if m_max:
        surv_u = (1.0 - psi_u).cumsum().coeffs
        grid = base @ _toeplitz_upper(surv_u, T + 1)
        step = _toeplitz_upper(psi_u.coeffs, T + 1)
        for m in range(1, m_max + 1):
            probs[m] = grid
            if m < m_max:
                grid = grid @ step
    return AgedStateProbTable(probs, 1.0 - probs.sum(axis=0))


def aged_counts_mc(hazard, tau_max, T, paths, seed, threads=1, block=DEFAULT_BLOCK,
                   cap=GRID_CAP):
    """Counts of N(tau+t) - N(tau) = m over simulated paths.

    Returns an integer array of shape (T+1, tau_max+1, T+1) indexed (m, tau, t);
    increments above T cannot occur within t <= T.
    """
    _check_grid(tau_max, T, cap)
    horizon = tau_max + T

    def run(n, rng):
        N = counting_paths(hazard, horizon, n, rng)
        out = np.zeros((T + 1, tau_max + 1, T + 1), dtype=np.int64)
        tidx = np.arange(T + 1)
        for tau in range(tau_max + 1):
            inc = N[:, tau:tau + T + 1] - N[:, tau:tau + 1]
            flat = np.bincount((inc * (T + 1) + tidx).ravel(), minlength=(T + 1) ** 2)
            out[:, tau, :] = flat.reshape(T + 1, T + 1)
        return out

    parts = map_blocks(run, seed, paths, threads=threads, block=block)
    return sum(parts[1:], parts[0])


def aged_estimate_mc(hazard, tau, t, paths, seed, threads=1):
    """Empirical law of N(tau+t) - N(tau) with binomial standard errors."""
    if paths < 1:
        raise DomainError("paths must be >= 1")
    counts = aged_counts_mc(hazard, tau, t, paths, seed, threads=threads)[:, tau, t]
    p = counts / paths
    return p, np.sqrt(p * (1.0 - p) / paths)


def backward_recurrence_exact(psi, n, tau_max, T, cap=GRID_CAP):
    """f_B(tau, t, n): joint weight of t - J_n = tau and N(t) = n, from
    psi(u)**n (1 - psi(uw)) / (1 - uw)."""
    _check_grid(tau_max, T, cap)
    c = _coeffs(psi)
    if c.size < T + 1:
        raise DomainError("psi series order must be >= T")
    psi_u = SeriesU(c[:T + 1])
    surv = (1.0 - psi_u).cumsum().coeffs
    diag = np.zeros((tau_max + 1, T + 1))
    k = np.arange(min(tau_max, T) + 1)
    diag[k, k] = surv[k]
    return SeriesUW(diag).mul_u(psi_u.pow(n)).coeffs


def backward_recurrence_mc(hazard, t, paths, seed, n_max=None, threads=1):
    """Counts over (n, tau) of (N(t), t - J_{N(t)}) on simulated paths."""
    n_max = t if n_max is None else n_max

    def run(size, rng):
        haz = np.asarray(hazard, dtype=float)
        age = np.zeros(size, dtype=np.int64)
        count = np.zeros(size, dtype=np.int64)
        for _ in range(t):
            ev = rng.random(size) < haz[age + 1]
            count += ev
            age = np.where(ev, 0, age + 1)
        keep = count <= n_max
        flat = np.bincount(count[keep] * (t + 1) + age[keep], minlength=(n_max + 1) * (t + 1))
        return flat.reshape(n_max + 1, t + 1)

    parts = map_blocks(run, seed, paths, threads=threads)
    return sum(parts[1:], parts[0])
