"""Jacobi polynomials and the normalized functions p_n^{(a,b)} on (0, pi).

Everything here is vectorized over the evaluation points.  The ``*_table``
variants return every degree 0..nmax at once (shape ``(nmax + 1, len(x))``),
which is what the kernel and verification code consume.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

__all__ = [
    "DomainError",
    "JacobiParams",
    "Region",
    "EnvelopeBranch",
    "jacobi_poly",
    "jacobi_table",
    "normalization",
    "normalization_table",
    "p_fn",
    "p_table",
    "p_fn_derivative",
    "p_derivative_table",
    "p_second_derivative_table",
    "angular_factor",
    "eigenvalue",
    "envelope",
    "envelope_values",
    "region_of",
]


class DomainError(ValueError):
    """Argument outside the domain of a Jacobi evaluation."""


@dataclass(frozen=True)
class JacobiParams:
    """Parameter pair (a, b) of a Jacobi system, a, b > -1."""

    a: float
    b: float

    def __post_init__(self):
        a, b = float(self.a), float(self.b)
        if not (math.isfinite(a) and math.isfinite(b)) or a <= -1 or b <= -1:
            raise DomainError(f"Jacobi parameters need a, b > -1, got ({a}, {b})")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def in_theorem_range(self) -> bool:
        return self.a >= -0.5 and self.b >= -0.5

    def shifted(self, da: float = 1.0, db: float = 1.0) -> "JacobiParams":
        return JacobiParams(self.a + da, self.b + db)

    def swapped(self) -> "JacobiParams":
        return JacobiParams(self.b, self.a)


def _check_n(n) -> int:
    if int(n) != n or n < 0:
        raise DomainError(f"degree must be a nonnegative integer, got {n}")
    return int(n)


def _check_z(z) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    if np.any(~np.isfinite(z)) or np.any(np.abs(z) > 1.0):
        raise DomainError("Jacobi polynomial argument must lie in [-1, 1]")
    return z


def _check_x(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if np.any(~np.isfinite(x)) or np.any(x <= 0.0) or np.any(x >= math.pi):
        raise DomainError("p-functions are evaluated on the open interval (0, pi) only")
    return x


def _recurrence_table(a: float, b: float, nmax: int, z: np.ndarray) -> np.ndarray:
    out = np.empty((nmax + 1,) + z.shape)
    out[0] = 1.0
    if nmax == 0:
        return out
    ab = a + b
    out[1] = (a + 1.0) + 0.5 * (ab + 2.0) * (z - 1.0)
    for k in range(2, nmax + 1):
        c = 2.0 * k + ab
        denom = 2.0 * k * (k + ab) * (c - 2.0)
        lin = (c - 1.0) * (c * (c - 2.0) * z + a * a - b * b)
        back = 2.0 * (k + a - 1.0) * (k + b - 1.0) * c
        out[k] = (lin * out[k - 1] - back * out[k - 2]) / denom
    return out


def jacobi_table(params: JacobiParams, nmax: int, z) -> np.ndarray:
    """P_0..P_nmax at z, by the three-term recurrence in the degree."""
    nmax = _check_n(nmax)
    z = _check_z(z)
    return _recurrence_table(params.a, params.b, nmax, z)


def jacobi_poly(params: JacobiParams, n: int, z):
    """Classical Jacobi polynomial P_n^{(a,b)}(z) for z in [-1, 1]."""
    n = _check_n(n)
    z = _check_z(z)
    val = _recurrence_table(params.a, params.b, n, z)[n]
    return float(val) if val.ndim == 0 else val


def _log_normalization(a: float, b: float, n: np.ndarray) -> np.ndarray:
    n = np.asarray(n, dtype=float)
    out = np.empty_like(n)
    zero = n == 0
    out[zero] = 0.5 * (gammaln(a + b + 2.0) - gammaln(a + 1.0) - gammaln(b + 1.0))
    k = n[~zero]
    out[~zero] = 0.5 * (
        np.log(2.0 * k + a + b + 1.0)
        + gammaln(k + 1.0)
        + gammaln(k + a + b + 1.0)
        - gammaln(k + a + 1.0)
        - gammaln(k + b + 1.0)
    )
    return out


def normalization_table(params: JacobiParams, nmax: int) -> np.ndarray:
    """w_0..w_nmax, evaluated through log-gamma differences."""
    nmax = _check_n(nmax)
    return np.exp(_log_normalization(params.a, params.b, np.arange(nmax + 1)))


def normalization(params: JacobiParams, n: int) -> float:
    """Normalization factor w_n^{(a,b)} making p_n unit-norm in L^2(0, pi)."""
    n = _check_n(n)
    return float(np.exp(_log_normalization(params.a, params.b, np.array([n]))[0]))


def angular_factor(params: JacobiParams, x) -> np.ndarray:
    """(sin x/2)^{a+1/2} (cos x/2)^{b+1/2}."""
    x = np.asarray(x, dtype=float)
    return np.sin(0.5 * x) ** (params.a + 0.5) * np.cos(0.5 * x) ** (params.b + 0.5)


def _p_table(a: float, b: float, nmax: int, x: np.ndarray) -> np.ndarray:
    # 1 - cos x is formed as 2 sin^2(x/2) to keep precision near x = 0
    s = np.sin(0.5 * x)
    z = 1.0 - 2.0 * s * s
    tab = _recurrence_table(a, b, nmax, z)
    w = np.exp(_log_normalization(a, b, np.arange(nmax + 1)))
    fac = s ** (a + 0.5) * np.cos(0.5 * x) ** (b + 0.5)
    return tab * w.reshape((-1,) + (1,) * x.ndim) * fac


def p_table(params: JacobiParams, nmax: int, x) -> np.ndarray:
    """p_0..p_nmax at points x in (0, pi); shape (nmax + 1,) + x.shape."""
    nmax = _check_n(nmax)
    x = _check_x(x)
    return _p_table(params.a, params.b, nmax, x)


def p_fn(params: JacobiParams, n: int, x):
    """Normalized function w_n (sin x/2)^{a+1/2} (cos x/2)^{b+1/2} P_n(cos x)."""
    n = _check_n(n)
    x = _check_x(x)
    val = _p_table(params.a, params.b, n, x)[n]
    return float(val) if val.ndim == 0 else val


def _log_coefficient(a: float, b: float, x: np.ndarray) -> np.ndarray:
    return (2 * a + 1) / 4 / np.tan(0.5 * x) - (2 * b + 1) / 4 * np.tan(0.5 * x)


def _d_log_coefficient(a: float, b: float, x: np.ndarray) -> np.ndarray:
    return -(2 * a + 1) / 8 / np.sin(0.5 * x) ** 2 - (2 * b + 1) / 8 / np.cos(0.5 * x) ** 2


def _lowering_factors(a: float, b: float, nmax: int) -> np.ndarray:
    n = np.arange(nmax + 1, dtype=float)
    return np.sqrt(n * (n + a + b + 1.0))


def _derivative_from(a, b, x, p, p_low) -> np.ndarray:
    nmax = p.shape[0] - 1
    shape = (-1,) + (1,) * x.ndim
    d = _log_coefficient(a, b, x) * p
    if nmax >= 1:
        d[1:] -= _lowering_factors(a, b, nmax)[1:].reshape(shape) * p_low[:nmax]
    return d


def p_derivative_table(params: JacobiParams, nmax: int, x) -> np.ndarray:
    """d/dx p_n for n = 0..nmax via the lowering identity (no differencing)."""
    nmax = _check_n(nmax)
    x = _check_x(x)
    a, b = params.a, params.b
    p = _p_table(a, b, nmax, x)
    p_low = _p_table(a + 1.0, b + 1.0, max(nmax - 1, 0), x)
    return _derivative_from(a, b, x, p, p_low)


def p_fn_derivative(params: JacobiParams, n: int, x):
    """dp_n/dx = -sqrt(n(n+a+b+1)) p_{n-1}^{(a+1,b+1)} + g(x) p_n with
    g(x) = (2a+1)/4 cot(x/2) - (2b+1)/4 tan(x/2); the first term is absent for n = 0."""
    val = p_derivative_table(params, n, x)[_check_n(n)]
    return float(val) if val.ndim == 0 else val


def p_second_derivative_table(params: JacobiParams, nmax: int, x) -> np.ndarray:
    """d^2/dx^2 p_n for n = 0..nmax, by differentiating the lowering form once more."""
    nmax = _check_n(nmax)
    x = _check_x(x)
    a, b = params.a, params.b
    shape = (-1,) + (1,) * x.ndim
    p = _p_table(a, b, nmax, x)
    low = max(nmax - 1, 0)
    p1 = _p_table(a + 1.0, b + 1.0, low, x)
    p2 = _p_table(a + 2.0, b + 2.0, max(low - 1, 0), x)
    dp = _derivative_from(a, b, x, p, p1)
    dp1 = _derivative_from(a + 1.0, b + 1.0, x, p1, p2)
    d2 = _d_log_coefficient(a, b, x) * p + _log_coefficient(a, b, x) * dp
    if nmax >= 1:
        d2[1:] -= _lowering_factors(a, b, nmax)[1:].reshape(shape) * dp1[:nmax]
    return d2


def eigenvalue(params: JacobiParams, n: int) -> float:
    """lambda_n = (n + (a+b+1)/2)^2."""
    n = _check_n(n)
    return (n + (params.a + params.b + 1.0) / 2.0) ** 2


class Region(enum.IntEnum):
    LEFT_CAP = 0
    BULK = 1
    RIGHT_CAP = 2


@dataclass(frozen=True)
class EnvelopeBranch:
    region: Region
    value: float


def region_of(n, x) -> np.ndarray:
    """Region codes: left cap x < 1/(n+1), right cap x > pi - 1/(n+1), bulk otherwise."""
    n = np.asarray(n, dtype=float)
    x = np.asarray(x, dtype=float)
    cut = 1.0 / (n + 1.0)
    return np.where(x < cut, Region.LEFT_CAP, np.where(x > math.pi - cut, Region.RIGHT_CAP, Region.BULK))


def three_branch(n, x, left, bulk, right) -> np.ndarray:
    """Select among per-region values; ``n`` and ``x`` broadcast together."""
    reg = region_of(n, x)
    return np.where(reg == Region.LEFT_CAP, left, np.where(reg == Region.RIGHT_CAP, right, bulk))


def envelope_values(params: JacobiParams, n, x) -> np.ndarray:
    """Uniform-bound envelope without its constant, broadcast over n and x."""
    n = np.asarray(n, dtype=float)
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        left = ((n + 1.0) * np.sin(0.5 * x)) ** (params.a + 0.5)
        right = ((n + 1.0) * np.cos(0.5 * x)) ** (params.b + 0.5)
    return three_branch(n, x, left, np.ones(np.broadcast(n, x).shape), right)


def envelope(params: JacobiParams, n: int, x: float) -> EnvelopeBranch:
    n = _check_n(n)
    x = float(_check_x(x))
    reg = Region(int(region_of(n, x)))
    return EnvelopeBranch(reg, float(envelope_values(params, n, x)))
