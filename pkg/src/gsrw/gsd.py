"""Generalized Sibuya waiting-time law.

With m = ceil(lam), the law has hazard lam/(m+k-1) at trial k, finite moments
below order m and a t**(-lam-1) tail.  Integer lam is accepted and means the
deterministic clock psi(t) = delta_{t,1}.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln, zeta

from .errors import DomainError
from .series import SeriesU, binomial_series, eval_series

__all__ = [
    "GsdParams",
    "GsdMoments",
    "GsdSampler",
    "gsd_pmf",
    "gsd_pmf_array",
    "gsd_survival",
    "gsd_survival_array",
    "gsd_hazard",
    "gsd_moments",
    "gsd_tail_asymptote",
    "gsd_pmf_via_gf",
    "gsd_sample",
    "gsd_sample_many",
    "hypergeo_survival_gf",
    "bernoulli_gsp_gf",
    "scaling_limit_residual",
    "tail_corrected_moment",
    "divergent_moment_amplitude",
]

_CHUNK = 1 << 20


@dataclass(frozen=True)
class GsdParams:
    lam: float
    m: int = field(init=False)
    mu: float = field(init=False)

    def __post_init__(self):
        lam = float(self.lam)
        if not (lam > 0 and math.isfinite(lam)):
            raise DomainError(f"lambda must be a positive finite number, got {self.lam!r}")
        m = math.ceil(lam)
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "mu", lam - m + 1)

    @property
    def is_integer(self):
        return self.lam == self.m

    @property
    def tail_constant(self):
        """lam*Gamma(m)/Gamma(m-lam), the amplitude of the t**(-lam-1) tail."""
        if self.is_integer:
            return 0.0
        return self.lam * math.exp(gammaln(self.m) - gammaln(self.m - self.lam))


@dataclass(frozen=True)
class GsdMoments:
    mean: float
    second_moment: float
    variance: float
    b2: float


def _as_params(p):
    return p if isinstance(p, GsdParams) else GsdParams(p)


def gsd_survival_array(p, tmax):
    """Phi0(t) for t = 0..tmax."""
    p = _as_params(p)
    out = np.empty(tmax + 1)
    out[0] = 1.0
    if tmax:
        r = np.arange(tmax, dtype=float)
        out[1:] = np.cumprod(1.0 - p.lam / (p.m + r))
    return out


def gsd_pmf_array(p, tmax):
    """psi(t) for t = 0..tmax, entry 0 being 0."""
    p = _as_params(p)
    surv = gsd_survival_array(p, tmax)
    out = np.zeros(tmax + 1)
    k = np.arange(1, tmax + 1, dtype=float)
    out[1:] = p.lam / (p.m + k - 1.0) * surv[:-1]
    return out


def gsd_pmf(p, t):
    p = _as_params(p)
    if t < 1 or int(t) != t:
        raise DomainError(f"waiting times are positive integers, got {t!r}")
    t = int(t)
    return float(gsd_pmf_array(p, t)[t])


def gsd_survival(p, t):
    p = _as_params(p)
    if t < 0 or int(t) != t:
        raise DomainError(f"t must be a nonnegative integer, got {t!r}")
    return float(gsd_survival_array(p, int(t))[-1])


def gsd_hazard(p, k):
    p = _as_params(p)
    if k < 1:
        raise DomainError("hazard index starts at 1")
    return p.lam / (p.m + k - 1)


def _log_survival(p, k):
    """log Phi0(k) for large integer k, without forming huge gamma values."""
    a = p.m - p.lam
    if k < 10**6:
        return float(gammaln(p.m) - gammaln(a) + gammaln(k + a) - gammaln(k + p.m))
    x = float(k)
    d = a - p.m
    # log Gamma(x+a)/Gamma(x+b) = d log x + d(a+b-1)/(2x) + O(x^-2)
    ratio = d * math.log(x) + d * (a + p.m - 1) / (2 * x)
    return float(gammaln(p.m) - gammaln(a)) + ratio


def gsd_moments(p):
    p = _as_params(p)
    lam, m = p.lam, p.m
    inf = math.inf
    if p.is_integer:
        return GsdMoments(mean=1.0, second_moment=1.0, variance=0.0, b2=0.0)
    mean = (m - 1) / (lam - 1) if lam > 1 else inf
    if lam > 2:
        b2 = (m - 1) * (m - lam) / ((lam - 1) * (lam - 2))
        var = lam * (m - 1) * (m - lam) / ((lam - 1) ** 2 * (lam - 2))
        second = 2 * b2 + mean
    else:
        b2 = second = var = inf
    return GsdMoments(mean=mean, second_moment=second, variance=var, b2=b2)


def gsd_tail_asymptote(p, t):
    p = _as_params(p)
    if p.is_integer:
        raise DomainError("integer lambda has no power-law tail")
    if np.any(np.asarray(t) < 1):
        raise DomainError("t must be >= 1")
    return p.tail_constant * np.asarray(t, dtype=float) ** (-p.lam - 1)


def gsd_pmf_via_gf(p, order):
    """psi_lam(u) = u**(1-m) [H(u) - (1-u)**lam] / H(1) as a series."""
    p = _as_params(p)
    if order < 1:
        raise DomainError("order must be >= 1")
    m = p.m
    c = binomial_series(p.lam, order + m - 1).coeffs
    h1 = c[:m].sum()
    g = np.zeros_like(c)
    # H cancels the first m terms of (1-u)**lam exactly
    g[m:] = -c[m:] / h1
    out = np.zeros(order + 1)
    out[1:] = g[m:]
    return SeriesU(out)


def hypergeo_survival_gf(p, u, rtol=1e-15, max_terms=10**8):
    """2F1(1, m-lam; m; u), the generating function of Phi0 at a real point."""
    p = _as_params(p)
    a, c = p.m - p.lam, p.m
    if u > 1 or u < 0:
        raise DomainError("u must lie in [0, 1]")
    if u == 1:
        if p.m == 1:
            raise DomainError("2F1(1, 1-lam; 1; 1) diverges for the standard Sibuya law")
        # Gauss summation
        return math.exp(gammaln(c) + gammaln(c - 1 - a) - gammaln(c - 1) - gammaln(c - a))
    total = 0.0
    term = 1.0
    r0 = 0
    while r0 < max_terms:
        r = np.arange(r0, r0 + 4096, dtype=float)
        ratios = (a + r) / (c + r) * u
        terms = term * np.concatenate(([1.0], np.cumprod(ratios[:-1])))
        total += terms.sum()
        term = terms[-1] * ratios[-1]
        r0 += 4096
        # ratios never exceed u, so the remainder is bounded by a geometric tail
        if term / (1.0 - u) <= rtol * total:
            break
    return total


def bernoulli_gsp_gf(p, xi, order):
    """Waiting-time series of a Bernoulli(xi/(1+xi)) process clocked by the GSP."""
    if xi <= 0:
        raise DomainError("xi must be positive")
    psi = gsd_pmf_via_gf(p, order)
    return (xi * psi) / (xi + 1.0 - psi)


def scaling_limit_residual(p, h, s, order=None):
    """|psi(e^{-hs}) - leading small-h form| from a high-order series.

    1 - psi(x) is evaluated as (1-x) * Phi0(x) so that the normalization at
    x = 1 is exact and no cancellation occurs near x = 1.
    """
    p = _as_params(p)
    if p.is_integer:
        raise DomainError("integer lambda has no scaling limit")
    if not (0 < h < 1):
        raise DomainError("h must lie in (0, 1)")
    if s < 0:
        raise DomainError("s must be nonnegative")
    hs = h * s
    if order is None:
        order = 64 if hs == 0 else int(min(max(60.0 / hs, 64), 5e7))
    psi = gsd_pmf_via_gf(p, order)
    surv = SeriesU(1.0 - np.cumsum(psi.coeffs))
    x = math.exp(-hs)
    one_minus_psi = (1.0 - x) * eval_series(surv, x) if hs else 0.0
    if p.lam < 1:
        lead = hs ** p.lam
    else:
        lead = hs * gsd_moments(p).mean
    return abs(lead - one_minus_psi)


# ---------------------------------------------------------------------------
# numeric moments


def _partial_power_sums(p, k, cutoffs, falling=False):
    """Sum_{t<=N} f(t) psi(t) for each N in ``cutoffs`` (ascending), f = t**k or (t)_k."""
    cutoffs = sorted(int(n) for n in cutoffs)
    out = []
    acc = 0.0
    surv_prev = 1.0
    start = 1
    target = iter(cutoffs)
    n_next = next(target)
    while True:
        stop = min(start + _CHUNK, n_next + 1)
        t = np.arange(start, stop, dtype=float)
        haz = p.lam / (p.m + t - 1.0)
        surv = surv_prev * np.cumprod(1.0 - haz)
        pmf = haz * np.concatenate(([surv_prev], surv[:-1]))
        if falling:
            f = np.ones_like(t)
            for j in range(k):
                f *= t - j
        else:
            f = t ** k
        acc += float(np.dot(f, pmf))
        surv_prev = float(surv[-1])
        start = stop
        if stop == n_next + 1:
            out.append(acc)
            try:
                n_next = next(target)
            except StopIteration:
                return out


def tail_corrected_moment(p, k, cutoff=10**7):
    """E[T**k] as a truncated sum plus the analytic power-law tail beyond ``cutoff``.

    The tail uses Gamma(t+a)/Gamma(t+b) ~ (t+(a+b-1)/2)**(a-b), summed with
    Hurwitz zeta functions after expanding t**k around t + delta.
    """
    p = _as_params(p)
    if p.is_integer:
        return 1.0
    if k >= p.lam:
        return math.inf
    if k == 0:
        return 1.0
    (head,) = _partial_power_sums(p, k, [cutoff])
    delta = (2 * p.m - p.lam - 2) / 2.0
    q = cutoff + 1 + delta
    tail = 0.0
    for j in range(k + 1):
        tail += math.comb(k, j) * (-delta) ** (k - j) * zeta(p.lam + 1 - j, q)
    return head + p.tail_constant * tail


def divergent_moment_amplitude(p, k, cutoffs=(10**5, 10**7), falling=True):
    """Amplitude A of the divergence S(N) ~ A N**eps + B of a truncated moment.

    For k > lam the k-th moment is infinite and its partial sums grow like
    N**(k-lam).  A is read off two cutoffs; as lam -> k- it carries the
    finite weight the vanishing tail leaves behind.
    """
    p = _as_params(p)
    eps = k - p.lam
    if eps <= 0:
        raise DomainError("moment of this order is finite; use tail_corrected_moment")
    n1, n2 = cutoffs
    s1, s2 = _partial_power_sums(p, k, [n1, n2], falling=falling)
    return (s2 - s1) / (n2 ** eps - n1 ** eps)


# ---------------------------------------------------------------------------
# sampling


class GsdSampler:
    """Exact GSD sampler.

    ``method="hazard"`` runs the sequential trial scheme (one Bernoulli per
    trial).  ``method="table"`` inverts a precomputed survival table up to
    ``cutoff`` and continues past it by exact inversion of the closed-form
    survival function, so the cost stays bounded even when the mean is
    infinite.  ``"auto"`` picks the table for lam < 1.
    """

    def __init__(self, p, method="auto", cutoff=1 << 16):
        self.p = _as_params(p)
        if method == "auto":
            method = "table" if self.p.lam < 1 else "hazard"
        if method not in ("hazard", "table"):
            raise ValueError(f"unknown sampling method {method!r}")
        self.method = method
        self.cutoff = int(cutoff)
        self._neg_surv = None
        if method == "table":
            self._neg_surv = -gsd_survival_array(self.p, self.cutoff)

    def __call__(self, rng):
        return int(self.sample(rng, 1)[0])

    def sample(self, rng, size):
        if self.p.is_integer:
            return np.ones(size, dtype=np.int64)
        if self.method == "hazard":
            return self._hazard_chain(rng, size)
        return self._table(rng, size)

    def _hazard_chain(self, rng, size):
        out = np.zeros(size, dtype=np.int64)
        alive = np.arange(size)
        k = 1
        while alive.size:
            hit = rng.random(alive.size) < self.p.lam / (self.p.m + k - 1)
            out[alive[hit]] = k
            alive = alive[~hit]
            k += 1
        return out

    def _table(self, rng, size):
        u = rng.random(size)
        # smallest k with Phi0(k) <= u, i.e. P(T > k) = Phi0(k)
        k = np.searchsorted(self._neg_surv, -u, side="left")
        out = k.astype(np.int64)
        far = np.flatnonzero(k > self.cutoff)
        for i in far:
            out[i] = min(self._invert_far(u[i]), np.iinfo(np.int64).max)
        return out

    def _invert_far(self, u):
        if u <= 0.0:
            return np.iinfo(np.int64).max
        logu = math.log(u)
        lo = self.cutoff
        hi = 2 * lo
        while _log_survival(self.p, hi) > logu:
            lo, hi = hi, 2 * hi
            if hi > 1 << 80:
                return hi
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if _log_survival(self.p, mid) > logu:
                lo = mid
            else:
                hi = mid
        return hi


def gsd_sample(p, rng, method="auto"):
    """One waiting time drawn from the GSD."""
    return GsdSampler(p, method=method)(rng)


def gsd_sample_many(p, size, rng, method="auto", cutoff=1 << 16):
    return GsdSampler(p, method=method, cutoff=cutoff).sample(rng, size)
