"""Truncated formal power series in one and two variables.

Coefficients live on the last axis of a numpy array, so every kernel here
also works on a stack of series (shape ``(..., N+1)``).  ``SeriesU`` and
``SeriesUW`` are thin value wrappers around those kernels.
"""
from __future__ import annotations

import numpy as np

from .errors import DomainError

__all__ = [
    "SeriesU",
    "SeriesUW",
    "ps_arith",
    "binomial_series",
    "divided_difference",
    "eval_series",
    "geometric",
    "mul_coeffs",
    "div_coeffs",
    "recip_coeffs",
]


def _common(a, b):
    n = min(a.shape[-1], b.shape[-1])
    return a[..., :n], b[..., :n], n


def mul_coeffs(a, b):
    """Cauchy product truncated at the shorter of the two inputs."""
    a = np.asarray(a)
    b = np.asarray(b)
    a, b, n = _common(a, b)
    if a.ndim == 1 and b.ndim == 1:
        return np.convolve(a, b)[:n]
    shape = np.broadcast_shapes(a.shape[:-1], b.shape[:-1]) + (n,)
    out = np.zeros(shape, dtype=np.result_type(a, b))
    # loop over the shorter support of a to keep the work O(N^2)
    nz = np.flatnonzero(np.any(a.reshape(-1, n) != 0, axis=0))
    for j in nz:
        out[..., j:] += a[..., j:j + 1] * b[..., :n - j]
    return out


def div_coeffs(a, b):
    """Coefficients of a/b by forward substitution; requires b[0] != 0."""
    a = np.asarray(a)
    b = np.asarray(b)
    a, b, n = _common(a, b)
    b0 = b[..., 0]
    if np.any(b0 == 0):
        raise DomainError("division by a series with zero constant term")
    shape = np.broadcast_shapes(a.shape[:-1], b.shape[:-1]) + (n,)
    q = np.zeros(shape, dtype=np.result_type(a, b, float))
    q[...] = a
    q[..., 0] = q[..., 0] / b0
    if a.ndim == 1 and b.ndim == 1:
        # reversed copy of b lets each step be a contiguous dot product
        brev = b[::-1].copy()
        for k in range(1, n):
            q[k] = (q[k] - np.dot(brev[n - k - 1:n - 1], q[:k])) / b0
        return q
    brev = b[..., ::-1].copy()
    for k in range(1, n):
        acc = np.einsum("...i,...i->...", brev[..., n - k - 1:n - 1], q[..., :k])
        q[..., k] = (q[..., k] - acc) / b0
    return q


def recip_coeffs(a):
    a = np.asarray(a)
    one = np.zeros(a.shape[-1], dtype=a.dtype if np.iscomplexobj(a) else float)
    one[0] = 1.0
    return div_coeffs(one, a)


def geometric(order, ratio=1.0):
    """Coefficients of 1/(1 - ratio*u) up to ``order``."""
    return SeriesU(np.asarray(ratio) ** np.arange(order + 1))


class SeriesU:
    """Univariate power series truncated at ``order``."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs):
        c = np.array(coeffs, copy=True)
        if c.ndim != 1 or c.size == 0:
            raise ValueError("SeriesU needs a non-empty 1-D coefficient vector")
        if not np.iscomplexobj(c):
            c = c.astype(float)
        self.coeffs = c

    @classmethod
    def zeros(cls, order, dtype=float):
        return cls(np.zeros(order + 1, dtype=dtype))

    @classmethod
    def monomial(cls, power, order, value=1.0):
        c = np.zeros(order + 1)
        if power <= order:
            c[power] = value
        return cls(c)

    @property
    def order(self):
        return self.coeffs.size - 1

    def __len__(self):
        return self.coeffs.size

    def __getitem__(self, k):
        return self.coeffs[k]

    def __repr__(self):
        head = np.array2string(self.coeffs[:6], precision=6)
        return f"SeriesU(order={self.order}, coeffs={head}{'...' if self.order > 5 else ''})"

    def _coerce(self, other):
        if isinstance(other, SeriesU):
            return other.coeffs
        c = np.zeros_like(self.coeffs, dtype=np.result_type(self.coeffs, other))
        c[0] = other
        return c

    def __add__(self, other):
        a, b, _ = _common(self.coeffs, self._coerce(other))
        return SeriesU(a + b)

    __radd__ = __add__

    def __sub__(self, other):
        a, b, _ = _common(self.coeffs, self._coerce(other))
        return SeriesU(a - b)

    def __rsub__(self, other):
        a, b, _ = _common(self._coerce(other), self.coeffs)
        return SeriesU(a - b)

    def __neg__(self):
        return SeriesU(-self.coeffs)

    def __mul__(self, other):
        if isinstance(other, SeriesU):
            return SeriesU(mul_coeffs(self.coeffs, other.coeffs))
        return SeriesU(self.coeffs * other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, SeriesU):
            return SeriesU(div_coeffs(self.coeffs, other.coeffs))
        return SeriesU(self.coeffs / other)

    def __rtruediv__(self, other):
        return SeriesU(div_coeffs(self._coerce(other), self.coeffs))

    def recip(self):
        return SeriesU(recip_coeffs(self.coeffs))

    def truncate(self, order):
        return SeriesU(self.coeffs[:order + 1])

    def shift(self, k):
        """Multiply by u**k (k > 0) or drop the first -k coefficients (k < 0)."""
        c = np.zeros_like(self.coeffs)
        if k >= 0:
            c[k:] = self.coeffs[:c.size - k]
        else:
            c[:c.size + k] = self.coeffs[-k:]
        return SeriesU(c)

    def cumsum(self):
        """Multiply by 1/(1-u)."""
        return SeriesU(np.cumsum(self.coeffs))

    def derivative(self):
        """Termwise d/du; the top coefficient is lost, so order drops by one."""
        return SeriesU(self.coeffs[1:] * np.arange(1, self.coeffs.size))

    def scale_argument(self, zeta):
        """Series of f(zeta*u): coefficient t multiplied by zeta**t."""
        return SeriesU(self.coeffs * np.asarray(zeta) ** np.arange(self.coeffs.size))

    def pow(self, n):
        out = SeriesU.monomial(0, self.order)
        base = self
        while n:
            if n & 1:
                out = out * base
            n >>= 1
            if n:
                base = base * base
        return out

    def __call__(self, x):
        return eval_series(self, x)


def ps_arith(a, b=None, kind="add"):
    """Dispatch table form of the series arithmetic."""
    if kind == "add":
        return a + b
    if kind == "sub":
        return a - b
    if kind == "mul":
        return a * b
    if kind == "recip":
        return a.recip()
    if kind == "scale":
        return a * b
    raise ValueError(f"unknown kind {kind!r}")


def binomial_series(lam, order):
    """Coefficients of (1-u)**lam, c_t = (-1)**t * binom(lam, t)."""
    if order < 0:
        raise DomainError("order must be >= 0")
    t = np.arange(order, dtype=float)
    c = np.empty(order + 1)
    c[0] = 1.0
    c[1:] = np.cumprod((t - lam) / (t + 1.0))
    return SeriesU(c)


def eval_series(a, x):
    """Sum_t a_t x**t for a scalar or an array of points."""
    c = a.coeffs if isinstance(a, SeriesU) else np.asarray(a)
    if np.ndim(x) == 0:
        if x == 0:
            return c[0]
        return np.dot(c, np.asarray(x) ** np.arange(c.size))
    return np.polynomial.polynomial.polyval(np.asarray(x), c)


class SeriesUW:
    """Bivariate series; ``coeffs[j, i]`` multiplies w**j u**i."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs):
        c = np.array(coeffs, dtype=float, copy=True)
        if c.ndim != 2:
            raise ValueError("SeriesUW needs a 2-D coefficient grid")
        self.coeffs = c

    @property
    def shape(self):
        return self.coeffs.shape

    def __getitem__(self, idx):
        return self.coeffs[idx]

    def __add__(self, other):
        nw = min(self.shape[0], other.shape[0])
        nu = min(self.shape[1], other.shape[1])
        return SeriesUW(self.coeffs[:nw, :nu] + other.coeffs[:nw, :nu])

    def __sub__(self, other):
        nw = min(self.shape[0], other.shape[0])
        nu = min(self.shape[1], other.shape[1])
        return SeriesUW(self.coeffs[:nw, :nu] - other.coeffs[:nw, :nu])

    def mul_u(self, s):
        """Multiply by a series in u alone."""
        c = s.coeffs if isinstance(s, SeriesU) else np.asarray(s)
        return SeriesUW(mul_coeffs(self.coeffs, c[None, :]))

    def mul_w(self, s):
        """Multiply by a series in w alone."""
        c = s.coeffs if isinstance(s, SeriesU) else np.asarray(s)
        return SeriesUW(mul_coeffs(self.coeffs.T, c[None, :]).T)

    def shift_u(self, k=1):
        c = np.zeros_like(self.coeffs)
        c[:, k:] = self.coeffs[:, :self.shape[1] - k]
        return SeriesUW(c)

    def truncate(self, nw, nu):
        return SeriesUW(self.coeffs[:nw + 1, :nu + 1])


def divided_difference(psi, order_w=None, order_u=None):
    """Bivariate series of [psi(u) - psi(w)] / (u - w).

    The coefficient of u**i w**j is psi_{i+j+1}; the grid is cut so that
    every entry is backed by a known coefficient of ``psi``.
    """
    c = psi.coeffs if isinstance(psi, SeriesU) else np.asarray(psi, dtype=float)
    if c[0] != 0:
        raise DomainError("waiting-time generating function must have zero constant term")
    n = c.size - 1
    if order_w is None and order_u is None:
        order_w = order_u = (n - 1) // 2
    elif order_w is None:
        order_w = n - 1 - order_u
    elif order_u is None:
        order_u = n - 1 - order_w
    if order_w + order_u + 1 > n:
        raise DomainError(
            f"need psi order >= {order_w + order_u + 1} for a ({order_w}, {order_u}) grid"
        )
    j = np.arange(order_w + 1)[:, None]
    i = np.arange(order_u + 1)[None, :]
    return SeriesUW(c[i + j + 1])
