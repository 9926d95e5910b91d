"""The squirrel random walk: unit steps whose direction flips at renewals.

Rules: no step at t = 0; at t >= 1 the step repeats the previous direction
unless a renewal happens at t, in which case it reverses.  The direction
"before" t = 1 is sigma0, so a renewal at t = 1 makes the first step -sigma0.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ResourceCapError
from .gsd import GsdParams, gsd_pmf_via_gf
from .renewal import state_polynomial_exact
from .series import div_coeffs, mul_coeffs
from .streams import DEFAULT_BLOCK, map_blocks

__all__ = [
    "WalkConfig",
    "EnsembleStats",
    "PropagatorTable",
    "PROPAGATOR_CAP",
    "simulate_walk",
    "expected_position_exact",
    "mean_step_exact",
    "msd_exact",
    "propagator_dp",
    "propagator_cf",
    "characteristic_series",
]

PROPAGATOR_CAP = 1024


@dataclass(frozen=True)
class WalkConfig:
    horizon: int
    sigma0: int | str = 1
    walkers: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.sigma0 not in (1, -1, "random"):
            raise DomainError("sigma0 must be +1, -1 or 'random'")
        if self.horizon < 1:
            raise DomainError("horizon must be >= 1")
        if self.walkers < 1:
            raise DomainError("walkers must be >= 1")


@dataclass
class EnsembleStats:
    count: int
    sum_x: np.ndarray    # int64, per t
    sum_x2: np.ndarray   # int64, per t
    sum_x4: np.ndarray   # float64, per t
    histogram: np.ndarray | None = None   # (2T+1, T+1) counts, row X+T

    @property
    def mean(self):
        return self.sum_x / self.count

    @property
    def meansq(self):
        return self.sum_x2 / self.count

    @property
    def se_mean(self):
        var = np.maximum(self.meansq - self.mean ** 2, 0.0)
        return np.sqrt(var / self.count)

    @property
    def se_meansq(self):
        var = np.maximum(self.sum_x4 / self.count - self.meansq ** 2, 0.0)
        return np.sqrt(var / self.count)

    def __add__(self, other):
        hist = None
        if self.histogram is not None:
            hist = self.histogram + other.histogram
        return EnsembleStats(
            self.count + other.count,
            self.sum_x + other.sum_x,
            self.sum_x2 + other.sum_x2,
            self.sum_x4 + other.sum_x4,
            hist,
        )


@dataclass
class PropagatorTable:
    probs: np.ndarray   # (2T+1, T+1), row index X + T
    horizon: int
    imag_max: float = 0.0

    @property
    def positions(self):
        return np.arange(-self.horizon, self.horizon + 1)

    def at(self, x, t):
        return self.probs[x + self.horizon, t]

    def moment(self, k):
        return (self.positions[:, None].astype(float) ** k * self.probs).sum(axis=0)


def _params(p):
    return p if isinstance(p, GsdParams) else GsdParams(p)


def _hazard_table(p, n):
    k = np.arange(n + 1, dtype=float)
    h = np.empty(n + 1)
    h[0] = 0.0
    h[1:] = p.lam / (p.m + k[1:] - 1.0)
    return np.minimum(h, 1.0)


def simulate_walk(p, cfg, histogram=False, threads=1, block=DEFAULT_BLOCK):
    """Monte Carlo ensemble of walkers following the reversal rules.

    Each block of walkers owns an independent counter-based stream, and block
    results are summed in block order, so the output depends only on the seed.
    """
    p = _params(p)
    T = cfg.horizon
    haz = _hazard_table(p, T + 1)

    def run(n, rng):
        if cfg.sigma0 == "random":
            sigma = 2 * rng.integers(0, 2, size=n, dtype=np.int64) - 1
        else:
            sigma = np.full(n, cfg.sigma0, dtype=np.int64)
        age = np.zeros(n, dtype=np.int64)
        x = np.zeros(n, dtype=np.int64)
        s1 = np.zeros(T + 1, dtype=np.int64)
        s2 = np.zeros(T + 1, dtype=np.int64)
        s4 = np.zeros(T + 1)
        hist = None
        if histogram:
            hist = np.zeros((2 * T + 1, T + 1), dtype=np.int64)
            hist[T, 0] = n
        for t in range(1, T + 1):
            ev = rng.random(n) < haz[age + 1]
            sigma = np.where(ev, -sigma, sigma)
            age = np.where(ev, 0, age + 1)
            x += sigma
            x2 = x * x
            s1[t] = x.sum()
            s2[t] = x2.sum()
            s4[t] = np.dot(x2.astype(float), x2.astype(float))
            if histogram:
                hist[:, t] = np.bincount(x + T, minlength=2 * T + 1)
        return EnsembleStats(n, s1, s2, s4, hist)

    parts = map_blocks(run, cfg.seed, cfg.walkers, threads=threads, block=block)
    return sum(parts[1:], parts[0])


def _psi(p, T):
    return gsd_pmf_via_gf(p, max(T, 1)).truncate(T)


def _sign(sigma0):
    if sigma0 == "random":
        return 0.0
    return float(sigma0)


def expected_position_exact(p, T, sigma0=1):
    """<X_t>, t = 0..T, from sigma0 [(1-psi)/((1-u)^2 (1+psi)) - 1/(1-u)]."""
    p = _params(p)
    psi = _psi(p, T)
    ratio = (1.0 - psi) / (1.0 + psi)
    return _sign(sigma0) * (ratio.cumsum().cumsum().coeffs - 1.0)


def mean_step_exact(p, T, sigma0=1):
    """<sigma_t> = sigma0 [P(-1, t) - delta_{t0}]."""
    p = _params(p)
    out = state_polynomial_exact(_psi(p, T), -1.0, T)
    out[0] -= 1.0
    return _sign(sigma0) * out


def msd_exact(p, T):
    """<X_t^2>, t = 0..T, from 2K(u) - u/(1-u)^2."""
    p = _params(p)
    psi = gsd_pmf_via_gf(p, T + 1)
    dpsi = psi.derivative()          # order T, exact termwise
    psi = psi.truncate(T)
    num = 2.0 * dpsi.shift(1) + (1.0 - psi) * (1.0 - psi)
    den = 1.0 - psi * psi
    t = np.arange(T + 1, dtype=float)
    cube = (t + 1.0) * (t + 2.0) / 2.0
    k = cube - (num / den).cumsum().cumsum().coeffs
    return 2.0 * k - t


def _check_cap(T, cap):
    if T > cap:
        raise ResourceCapError(f"horizon {T} exceeds the exact-propagator cap {cap}")


def propagator_dp(p, cfg, cap=PROPAGATOR_CAP):
    """Exact P(X, t) by a forward recursion over (direction, age, position).

    Age is the time since the last reversal (or since t = 0); from age a the
    next step reverses with hazard alpha_{a+1}.
    """
    p = _params(p)
    T = cfg.horizon
    _check_cap(T, cap)
    if cfg.sigma0 == "random":
        a = propagator_dp(p, WalkConfig(T, 1), cap)
        b = propagator_dp(p, WalkConfig(T, -1), cap)
        return PropagatorTable(0.5 * (a.probs + b.probs), T)
    haz = _hazard_table(p, T + 1)
    W = 2 * T + 1
    # index 0: direction +sigma0, index 1: -sigma0
    state = np.zeros((2, T + 1, W))
    state[0, 0, T] = 1.0
    out = np.zeros((W, T + 1))
    out[T, 0] = 1.0
    s = cfg.sigma0
    for t in range(1, T + 1):
        h = haz[1:t + 1, None]           # ages 0..t-1
        cur = state[:, :t, :]
        new = np.zeros_like(state)
        flips = (cur * h).sum(axis=1)   # (2, W)
        keep = cur * (1.0 - h)
        for d, step in ((0, s), (1, -s)):
            # keep direction d and step by its sign
            if step > 0:
                new[d, 1:t + 1, 1:] = keep[d, :, :-1]
            else:
                new[d, 1:t + 1, :-1] = keep[d, :, 1:]
        # reversal: direction d -> 1-d, step with the new sign
        for d, step in ((1, -s), (0, s)):
            src = flips[1 - d]
            if step > 0:
                new[d, 0, 1:] += src[:-1]
            else:
                new[d, 0, :-1] += src[1:]
        state = new
        out[:, t] = state.sum(axis=(0, 1))
    return PropagatorTable(out, T)


def _phi_grid(T):
    n = 2 * T + 1
    return -np.pi + 2.0 * np.pi * np.arange(n) / n


def characteristic_series(p, T, sigma0, phi):
    """P_phi(t) = <exp(-i phi X_t)> for t = 0..T, one row per angle in ``phi``.

    The generating function
        [(1-psi(u z1))/(1-u z1) + z2/z1 psi(u z1)(1-psi(u z2))/(1-u z2)] / (1 - psi(u z1) psi(u z2))
    with z1 = exp(-i phi sigma0), z2 = exp(i phi sigma0) is expanded in u.
    """
    p = _params(p)
    c = _psi(p, T).coeffs
    phi = np.atleast_1d(np.asarray(phi, dtype=float))[:, None]
    tt = np.arange(T + 1)[None, :]
    z1 = np.exp(-1j * phi * sigma0)
    z2 = np.exp(1j * phi * sigma0)
    geo1 = z1 ** tt
    geo2 = z2 ** tt
    a1 = c[None, :] * geo1
    a2 = c[None, :] * geo2
    g1 = mul_coeffs(_one_minus(a1), geo1)
    g2 = mul_coeffs(_one_minus(a2), geo2)
    num = g1 + (z2 / z1) * mul_coeffs(a1, g2)
    den = _one_minus(mul_coeffs(a1, a2))
    return div_coeffs(num, den)


def propagator_cf(p, cfg, cap=PROPAGATOR_CAP):
    """Exact P(X, t) by inverting the characteristic function on 2T+1 angles.

    With 2T+1 equispaced angles the inverse transform is exact, since X_t
    ranges over at most 2T+1 consecutive integers.
    """
    p = _params(p)
    T = cfg.horizon
    _check_cap(T, cap)
    if cfg.sigma0 == "random":
        a = propagator_cf(p, WalkConfig(T, 1), cap)
        b = propagator_cf(p, WalkConfig(T, -1), cap)
        return PropagatorTable(0.5 * (a.probs + b.probs), T, max(a.imag_max, b.imag_max))
    phi = _phi_grid(T)
    pphi = characteristic_series(p, T, cfg.sigma0, phi)     # (2T+1, T+1)
    xs = np.arange(-T, T + 1)
    kernel = np.exp(1j * np.outer(xs, phi)) / phi.size
    full = kernel @ pphi
    return PropagatorTable(full.real.copy(), T, float(np.abs(full.imag).max()))


def _one_minus(a):
    out = -a
    out[..., 0] += 1.0
    return out
