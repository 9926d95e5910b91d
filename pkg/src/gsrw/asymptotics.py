"""Large-time predictors for the walk, regime classification and log-log fits.

The predictors keep only the leading terms of the small-(1-u) expansions;
they are meant to be compared with exact curves at large t only.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gamma

from .errors import DomainError
from .gsd import GsdParams, divergent_moment_amplitude, gsd_moments, tail_corrected_moment

__all__ = [
    "RegimeReport",
    "LimitReport",
    "predict_position",
    "predict_msd",
    "classify_regime",
    "limit_diagnostics",
    "fit_power_law",
]

BALLISTIC = "ballistic_superdiffusive"
SUPERDIFFUSIVE = "superdiffusive"
NORMAL = "normal"


@dataclass(frozen=True)
class RegimeReport:
    regime: str
    msd_exponent: float
    msd_prefactor: float
    position_plateau: float | None
    position_relaxation_exponent: float | None


@dataclass(frozen=True)
class LimitReport:
    n: int
    eps: float
    variance_plus_ratio: float     # eps * V_{2+eps} / (2 <T>_{2+eps}), -> 1
    variance_minus: float          # V_{2-eps}, -> 2
    moment_minus: float            # <T^n>_{n-eps}, -> n!
    moment_minus_ratio: float      # moment_minus / n!
    moment_plus_ratio: float       # eps * <T^n>_{n+eps} / (n n!), -> 1


def _params(p):
    p = p if isinstance(p, GsdParams) else GsdParams(p)
    if p.is_integer:
        raise DomainError("asymptotic predictors are undefined for integer lambda")
    return p


def predict_position(p, sigma0, t):
    """Leading large-t form of <X_t>.

    lam < 1: sigma0 t**(1-lam) / (2 Gamma(2-lam)).
    lam > 1: plateau plus the t**-(lam-1) relaxation,
        -sigma0 / (2(lam-1)) [m - 3 + 2 mu + Gamma(m) t**-(lam-1) / Gamma(1-mu)].
    """
    p = _params(p)
    if t < 1:
        raise DomainError("t must be >= 1")
    lam, m, mu = p.lam, p.m, p.mu
    if lam < 1:
        return sigma0 * t ** (1.0 - lam) / (2.0 * gamma(2.0 - lam))
    a = lam - 1.0
    return -sigma0 / (2.0 * a) * (m - 3 + 2.0 * mu + gamma(m) * t ** (-a) / gamma(1.0 - mu))


def _msd_law(p):
    lam, m = p.lam, p.m
    if lam < 1:
        return BALLISTIC, 2.0, 1.0 - lam
    if lam < 2:
        return SUPERDIFFUSIVE, 3.0 - lam, 2.0 * (lam - 1.0) / gamma(4.0 - lam)
    return NORMAL, 1.0, lam * (m - lam) / ((lam - 1.0) * (lam - 2.0))


def predict_msd(p, t):
    p = _params(p)
    if np.any(np.asarray(t) < 1):
        raise DomainError("t must be >= 1")
    _, expo, pref = _msd_law(p)
    return pref * np.asarray(t, dtype=float) ** expo


def classify_regime(p, sigma0=1):
    p = _params(p)
    regime, expo, pref = _msd_law(p)
    plateau = relax = None
    if p.lam > 1:
        plateau = -sigma0 * (p.m - 3 + 2.0 * p.mu) / (2.0 * (p.lam - 1.0)) + 0.0
        relax = -(p.lam - 1.0)
    return RegimeReport(regime, expo, pref, plateau, relax)


def limit_diagnostics(n, eps, cutoff=10**7):
    """Near-integer behaviour of the moments as lam approaches n from either side.

    Divergent moments (lam just below n) are reported through the amplitude of
    their truncated-sum growth, which is the finite weight the tail keeps.
    """
    if not 0 < eps < 0.1:
        raise DomainError("eps must lie in (0, 0.1)")
    if n < 2:
        raise DomainError("n must be >= 2")
    above = gsd_moments(2.0 + eps)
    var_plus = eps * above.variance / (2.0 * above.mean)

    below = GsdParams(2.0 - eps)
    mean = gsd_moments(below).mean
    falling2 = divergent_moment_amplitude(below, 2, cutoffs=(cutoff // 100, cutoff))
    var_minus = falling2 + mean - mean * mean

    fact = math.factorial(n)
    mom_minus = divergent_moment_amplitude(n - eps, n, cutoffs=(cutoff // 100, cutoff), falling=False)
    mom_plus = tail_corrected_moment(n + eps, n, cutoff=cutoff)
    return LimitReport(
        n=n,
        eps=eps,
        variance_plus_ratio=var_plus,
        variance_minus=var_minus,
        moment_minus=mom_minus,
        moment_minus_ratio=mom_minus / fact,
        moment_plus_ratio=eps * mom_plus / (n * fact),
    )


def fit_power_law(values, t_lo, t_hi):
    """Least-squares line through (log t, log values[t]) for t_lo <= t <= t_hi.

    Returns (exponent, prefactor, rms log residual).
    """
    values = np.asarray(values, dtype=float)
    if not (1 <= t_lo < t_hi < values.size):
        raise DomainError("need 1 <= t_lo < t_hi < len(values)")
    t = np.arange(t_lo, t_hi + 1, dtype=float)
    y = values[t_lo:t_hi + 1]
    if np.any(y <= 0):
        raise DomainError("values in the fit window must be positive")
    lt, ly = np.log(t), np.log(y)
    slope, icpt = np.polyfit(lt, ly, 1)
    resid = ly - (slope * lt + icpt)
    return float(slope), float(math.exp(icpt)), float(np.sqrt(np.mean(resid ** 2)))
