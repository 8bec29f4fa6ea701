"""Transplantation kernel K(n, m) = int_0^pi p_n^{(gamma,delta)} p_m^{(alpha,beta)} dx.

Besides the kernel itself this module carries the pieces of the
eigenfunction argument used to bound it: the connecting potential W, the
Wronskian U, the boundary term S, the interior term J, and the identity
K_2 = (S + J) / (lambda_n - lambda_m) on I_2 = [1/(n+1), pi - 1/(n+1)].
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .jacobi import (
    DomainError,
    JacobiParams,
    eigenvalue,
    p_derivative_table,
    p_table,
)
from .quadrature import (
    ConvergenceError,
    Grade,
    QuadSpec,
    base_panels,
    composite_rule,
    integrate_graded,
)

__all__ = [
    "TransplantPair",
    "KernelTable",
    "Parity",
    "ParityKernel",
    "ResonanceError",
    "kernel_entry",
    "kernel_table",
    "potential_w",
    "wronskian_u",
    "boundary_term_s",
    "interior_term_j",
    "k2_direct",
    "is_resonant",
    "verify_k2_identity",
]

FAILED_FRACTION_LIMIT = 1e-3
_CHUNK = 8192


class ResonanceError(ArithmeticError):
    """lambda_n^{(gamma,delta)} == lambda_m^{(alpha,beta)}: the eigen-identity has no quotient."""


@dataclass(frozen=True)
class TransplantPair:
    """Source system (alpha, beta) and target system (gamma, delta)."""

    source: JacobiParams
    target: JacobiParams

    @classmethod
    def of(cls, alpha, beta, gamma, delta) -> "TransplantPair":
        return cls(JacobiParams(alpha, beta), JacobiParams(gamma, delta))

    @property
    def theorem_range(self) -> bool:
        return self.source.in_theorem_range and self.target.in_theorem_range

    @property
    def nondegenerate(self) -> bool:
        return self.source.a != self.target.a and self.source.b != self.target.b

    @property
    def is_identity(self) -> bool:
        return self.source == self.target

    def swapped(self) -> "TransplantPair":
        return TransplantPair(self.target, self.source)

    def as_dict(self) -> dict:
        return {"alpha": self.source.a, "beta": self.source.b,
                "gamma": self.target.a, "delta": self.target.b}


def _check_index(*idx):
    for k in idx:
        if int(k) != k or k < 0:
            raise DomainError(f"kernel indices must be nonnegative integers, got {k}")


def kernel_entry(pair: TransplantPair, n: int, m: int, rel_tol: float = 1e-12):
    """Single kernel value and its quadrature error estimate.

    A non-converged integral is reported as (nan, err) rather than raised.
    """
    _check_index(n, m)

    def f(x):
        return p_table(pair.target, n, x)[n] * p_table(pair.source, m, x)[m]

    res = integrate_graded(f, QuadSpec(0.0, math.pi, n + m, rel_tol), Grade.BOTH)
    if not res.converged:
        return math.nan, res.err_est
    return res.value, res.err_est


def _gram(left: JacobiParams, right: JacobiParams, N: int, panels: int) -> np.ndarray:
    nodes, weights = composite_rule(0.0, math.pi, panels, Grade.BOTH)
    out = np.zeros((N + 1, N + 1))
    # fixed chunk order keeps the reduction bit-reproducible
    for lo in range(0, nodes.size, _CHUNK):
        x = nodes[lo:lo + _CHUNK]
        A = p_table(left, N, x)
        B = p_table(right, N, x) if right != left else A
        out += (A * weights[lo:lo + _CHUNK]) @ B.T
    return out


class Parity(enum.Enum):
    EE = (0, 0)
    EO = (0, 1)
    OE = (1, 0)
    OO = (1, 1)


@dataclass(frozen=True)
class KernelTable:
    """Kernel values K[n, m] for 0 <= n, m <= N with quadrature error estimates.

    Rows index the target system, columns the source system.  Entries whose
    quadrature did not converge are NaN and listed in ``failures``.
    """

    pair: TransplantPair
    N: int
    entries: np.ndarray
    err: np.ndarray
    meta: dict = field(default_factory=dict)
    failures: tuple = ()

    def __post_init__(self):
        self.entries.setflags(write=False)
        self.err.setflags(write=False)

    def truncated(self, M: int) -> "KernelTable":
        """The same kernel restricted to 0 <= n, m <= M."""
        if not 0 < M <= self.N:
            raise ValueError(f"cannot truncate a table of size {self.N} to {M}")
        fails = tuple(f for f in self.failures if f[0] <= M and f[1] <= M)
        return KernelTable(self.pair, M, self.entries[:M + 1, :M + 1].copy(),
                           self.err[:M + 1, :M + 1].copy(), dict(self.meta), fails)

    def parity(self, kind: Parity) -> "ParityKernel":
        return ParityKernel(kind, self)


@dataclass(frozen=True)
class ParityKernel:
    """One of the four sub-kernels K(2n + i, 2m + j)."""

    parity: Parity
    base: KernelTable

    @property
    def values(self) -> np.ndarray:
        i, j = self.parity.value
        return self.base.entries[i::2, j::2]


def kernel_table(pair: TransplantPair, N: int, rel_tol: float = 1e-10,
                 max_doublings: int = 3) -> KernelTable:
    """All K(n, m), 0 <= n, m <= N, on one shared quadrature grid.

    The grid is the one ``kernel_entry`` would pick for the largest frequency
    2N, so every entry is resolved at least as finely as on its own.  The
    error estimate is the change under one panel doubling.
    """
    if N < 1:
        raise ValueError("kernel tables need N >= 1")
    panels = base_panels(2 * N)
    prev = _gram(pair.target, pair.source, N, panels)
    for _ in range(max_doublings):
        panels *= 2
        cur = _gram(pair.target, pair.source, N, panels)
        err = np.abs(cur - prev)
        ok = err <= rel_tol * (1.0 + np.abs(cur))
        if ok.all():
            break
        prev = cur
    entries = np.where(ok, cur, np.nan)
    bad = np.argwhere(~ok)
    failures = tuple((int(n), int(m)) for n, m in bad)
    if len(failures) > FAILED_FRACTION_LIMIT * entries.size:
        raise ConvergenceError(f"{len(failures)} of {entries.size} kernel entries did not converge")
    if failures:
        warnings.warn(f"{len(failures)} kernel entries did not converge and are stored as NaN")
    meta = {"rel_tol": rel_tol, "panels": panels, "order": 10, "grade": "both"}
    return KernelTable(pair, N, entries, err, meta, failures)


def potential_w(pair: TransplantPair, x, deriv: int = 0):
    """Connecting potential W = L^{gamma,delta} - L^{alpha,beta} and its derivatives.

    W(x) = (gamma^2 - alpha^2) / (4 sin^2(x/2)) + (delta^2 - beta^2) / (4 cos^2(x/2)).
    """
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0) or np.any(x >= math.pi):
        raise DomainError("W is evaluated on (0, pi) only")
    A = (pair.target.a ** 2 - pair.source.a ** 2) / 4.0
    B = (pair.target.b ** 2 - pair.source.b ** 2) / 4.0
    s, c = np.sin(0.5 * x), np.cos(0.5 * x)
    if deriv == 0:
        val = A / s**2 + B / c**2
    elif deriv == 1:
        val = -A * c / s**3 + B * s / c**3
    elif deriv == 2:
        val = A * (0.5 / s**2 + 1.5 * c**2 / s**4) + B * (0.5 / c**2 + 1.5 * s**2 / c**4)
    else:
        raise ValueError("only derivatives up to order 2 are available")
    return float(val) if val.ndim == 0 else val


def _pair_values(pair, n, m, x):
    pn = p_table(pair.target, n, x)[n]
    dpn = p_derivative_table(pair.target, n, x)[n]
    pm = p_table(pair.source, m, x)[m]
    dpm = p_derivative_table(pair.source, m, x)[m]
    return pn, dpn, pm, dpm


def wronskian_u(pair: TransplantPair, n: int, m: int, x):
    """U(p_n^{(gamma,delta)}, p_m^{(alpha,beta)}) = p_n p_m' - p_m p_n'."""
    _check_index(n, m)
    x = np.asarray(x, dtype=float)
    pn, dpn, pm, dpm = _pair_values(pair, n, m, x)
    val = pn * dpm - pm * dpn
    return float(val) if val.ndim == 0 else val


def _inner_interval(n: int):
    r = 1.0 / (n + 1.0)
    return r, math.pi - r


def boundary_term_s(pair: TransplantPair, n: int, m: int) -> float:
    """S(n, m) = U(x = pi - 1/(n+1)) - U(x = 1/(n+1)); the cut uses the target index n."""
    r, s = _inner_interval(n)
    u = wronskian_u(pair, n, m, np.array([r, s]))
    return float(u[1] - u[0])


def _inner_integral(f, n, m, rel_tol):
    r, s = _inner_interval(n)
    res = integrate_graded(f, QuadSpec(r, s, n + m, rel_tol), Grade.BOTH)
    if not res.converged:
        raise ConvergenceError(f"integral over I_2 for (n, m) = ({n}, {m}) did not converge")
    return res.value


def interior_term_j(pair: TransplantPair, n: int, m: int, rel_tol: float = 1e-12) -> float:
    """J(n, m) = int_{I_2} W p_n^{(gamma,delta)} p_m^{(alpha,beta)} dx."""
    _check_index(n, m)

    def f(x):
        return potential_w(pair, x) * p_table(pair.target, n, x)[n] * p_table(pair.source, m, x)[m]

    return _inner_integral(f, n, m, rel_tol)


def k2_direct(pair: TransplantPair, n: int, m: int, rel_tol: float = 1e-12) -> float:
    """K_2(n, m): the kernel integral restricted to I_2."""
    _check_index(n, m)

    def f(x):
        return p_table(pair.target, n, x)[n] * p_table(pair.source, m, x)[m]

    return _inner_integral(f, n, m, rel_tol)


def is_resonant(pair: TransplantPair, n: int, m: int) -> bool:
    ln = eigenvalue(pair.target, n)
    lm = eigenvalue(pair.source, m)
    return abs(ln - lm) < 1e-9 * (1.0 + ln)


def verify_k2_identity(pair: TransplantPair, n: int, m: int, rel_tol: float = 1e-12) -> float:
    """|K_2 - (S + J) / (lambda_n - lambda_m)| with K_2 integrated directly.

    Raises ResonanceError when the eigenvalues coincide; in that case only
    |K_2| <= 1 is available.
    """
    _check_index(n, m)
    if is_resonant(pair, n, m):
        raise ResonanceError(f"lambda_{n}^(target) equals lambda_{m}^(source)")
    if not pair.nondegenerate and not pair.is_identity:
        warnings.warn("pair has alpha == gamma or beta == delta; the bounds are not expected to apply")
    k2 = k2_direct(pair, n, m, rel_tol)
    rhs = (boundary_term_s(pair, n, m) + interior_term_j(pair, n, m, rel_tol)) / (
        eigenvalue(pair.target, n) - eigenvalue(pair.source, m))
    return abs(k2 - rhs)
