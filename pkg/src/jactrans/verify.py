"""Certification checks: each estimate becomes a fitted constant plus a
stability-under-grid-doubling verdict.

A fitted constant is the supremum of |lhs| / rhs over a finite grid.  The
same quantity over the half-size grid (n, m <= N/2) is a subset of the
full one, so the reported constants never decrease with N; ``stability`` is
the relative growth from N/2 to N.
"""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .jacobi import (
    JacobiParams,
    _recurrence_table,
    eigenvalue,
    jacobi_table,
    normalization_table,
    p_derivative_table,
    p_second_derivative_table,
    p_table,
    three_branch,
)
from .kernel import KernelTable, TransplantPair, kernel_table
from .sequences import (
    WeightSeq,
    a1_constant,
    adjacent_ratios,
    ap_constant,
    lemma3_bracket,
    operator_norm_estimate,
)

__all__ = [
    "CheckReport",
    "XGrid",
    "STABILITY_THRESHOLD",
    "verify_size",
    "verify_regularity",
    "verify_lemma_diff",
    "verify_lemma_diff_der",
    "verify_identities",
    "verify_orthonormality",
    "check_weight",
    "check_opnorm",
]

STABILITY_THRESHOLD = 0.05
# constants below this are treated as zero when measuring relative growth
_ZERO_FLOOR = 1e-8


@dataclass
class CheckReport:
    check_id: str
    params: dict
    N: int
    fitted_constant: float
    argmax: tuple
    stability: float
    tolerance: float
    passed: bool
    runtime_ms: float = 0.0
    seed: int | None = None
    grid: str = ""
    details: dict = field(default_factory=dict)

    def record(self) -> dict:
        """Serializable view with the fixed report fields, in fixed order."""
        return {
            "check_id": self.check_id,
            "params": self.params,
            "N": self.N,
            "fitted_constant": _json_float(self.fitted_constant),
            "argmax": [_json_float(v) if isinstance(v, float) else v for v in self.argmax],
            "stability": _json_float(self.stability),
            "tolerance": self.tolerance,
            "pass": bool(self.passed),
            "runtime_ms": round(self.runtime_ms, 3),
            "tool_version": __version__,
            "seed": self.seed,
        }


def _json_float(v):
    v = float(v)
    return v if math.isfinite(v) else repr(v)


def _pair_params(pair: TransplantPair) -> dict:
    return pair.as_dict()


def _single_params(params: JacobiParams) -> dict:
    return {"alpha": params.a, "beta": params.b, "gamma": None, "delta": None}


def growth(small: float, big: float) -> float:
    """Relative increase of a fitted constant from the coarse to the fine grid."""
    if not (math.isfinite(small) and math.isfinite(big)):
        return math.inf
    return (big - small) / max(small, _ZERO_FLOOR)


class _Timer:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.ms = 1e3 * (time.perf_counter() - self.t0)


def _hypothesis_note(pair: TransplantPair) -> str:
    if pair.theorem_range and pair.nondegenerate:
        return "in-hypothesis"
    warnings.warn(f"pair {pair.as_dict()} needs all parameters >= -1/2, alpha != gamma and "
                  "beta != delta for the bounds to apply; reporting anyway")
    return "out-of-hypothesis"


def _table_for(pair, N, table):
    if table is None:
        return kernel_table(pair, N)
    if table.pair != pair or table.N < N:
        raise ValueError("supplied table does not cover the requested pair and size")
    return table if table.N == N else table.truncated(N)


def _masked_max(values, mask):
    v = np.where(mask, values, -np.inf)
    if not np.isfinite(v).any():
        return 0.0, ()
    idx = np.unravel_index(int(np.argmax(v)), v.shape)
    return float(v[idx]), tuple(int(i) for i in idx)


def _size_grid(K, N):
    n = np.arange(N + 1)[:, None]
    m = np.arange(N + 1)[None, :]
    return np.abs(n - m) * np.abs(K[:N + 1, :N + 1]), n != m


def verify_size(pair: TransplantPair, N: int, table: KernelTable | None = None,
                threshold: float = STABILITY_THRESHOLD) -> CheckReport:
    """sup_{n != m <= N} |n - m| |K(n, m)|, compared with the same sup over N/2."""
    with _Timer() as tm:
        note = _hypothesis_note(pair)
        T = _table_for(pair, N, table)
        vals, mask = _size_grid(T.entries, N)
        c, arg = _masked_max(vals, mask)
        h = N // 2
        c_half, _ = _masked_max(vals[:h + 1, :h + 1], mask[:h + 1, :h + 1])
        stab = growth(c_half, c)
    return CheckReport("size", _pair_params(pair), N, c, arg, stab, threshold,
                       bool(math.isfinite(c) and stab < threshold), tm.ms,
                       grid=f"0<=n!=m<={N}; {note}", details={"half": c_half, "hypothesis": note})


def _band(n, m):
    return (n != m) & (2 * n >= m) & (n <= 2 * m)


def regularity_constants(K: np.ndarray, N: int):
    """Both step-2 band constants on 0..N; returns ((c1, argmax1), (c2, argmax2)).

    Differences that reach the diagonal (n + 2 == m, resp. m + 2 == n) are
    left out: there the kernel is not singular-integral-like at all.
    """
    n = np.arange(N - 1)[:, None]
    m = np.arange(N + 1)[None, :]
    d1 = np.abs(K[2:N + 1, :N + 1] - K[:N - 1, :N + 1]) * (n - m) ** 2
    c1 = _masked_max(d1, _band(n, m) & (n + 2 != m))
    n = np.arange(N + 1)[:, None]
    m = np.arange(N - 1)[None, :]
    d2 = np.abs(K[:N + 1, :N - 1] - K[:N + 1, 2:N + 1]) * (n - m) ** 2
    c2 = _masked_max(d2, _band(n, m) & (m + 2 != n))
    return c1, c2


def general_regularity_constants(K: np.ndarray, N: int, steps=(1, 2, 3), widest: bool = True):
    """Sampled standard-kernel constants of the parity sub-kernels.

    Within a parity class the second index moves in steps of 2: l = n + 2d
    for d in +-steps and the widest admissible d.  Admissible means
    |n - m| > 2 |n - l| with n, l, m all in the band.  Returns
    ((row, argmax), (col, argmax)) for sup |K(n,m) - K(l,m)| |n-m|^2 / |n-l|
    and sup |K(m,n) - K(m,l)| |n-m|^2 / |n-l|; argmax is (n, m, l - n).
    """
    n = np.arange(N + 1)[:, None]
    m = np.arange(N + 1)[None, :]
    gap = np.abs(n - m)
    offsets = [np.full_like(gap, 2 * s) for s in steps]
    if widest:
        offsets.append(2 * ((gap - 1) // 4))
    best = [(0.0, ()), (0.0, ())]
    for off in offsets:
        for sign in (1, -1):
            d = sign * off
            l = n + d
            ok = (off > 0) & (gap > 2 * off) & (l >= 0) & (l <= N)
            ok &= _band(n, m) & (2 * l >= m) & (l <= 2 * m)
            lc = np.clip(l, 0, N)
            with np.errstate(divide="ignore", invalid="ignore"):
                row = np.abs(K[n, m] - K[lc, m]) * gap ** 2 / np.abs(d)
                col = np.abs(K[m, n] - K[m, lc]) * gap ** 2 / np.abs(d)
            for k, vals in enumerate((row, col)):
                c, arg = _masked_max(vals, ok)
                if c > best[k][0]:
                    best[k] = (c, arg + (int(d[arg]),))
    return best


def verify_regularity(pair: TransplantPair, N: int, table: KernelTable | None = None,
                      threshold: float = STABILITY_THRESHOLD) -> CheckReport:
    """Band constants sup |n-m|^2 |K(n+2,m) - K(n,m)| and sup |n-m|^2 |K(n,m) - K(n,m+2)|.

    The report carries the larger of the two; both, together with their
    half-grid values and the sampled general-l constants, are in ``details``.
    Stability is the worse of the two growths.
    """
    with _Timer() as tm:
        note = _hypothesis_note(pair)
        T = _table_for(pair, N, table)
        K = T.entries
        (c1, a1), (c2, a2) = regularity_constants(K, N)
        h = N // 2
        (h1, _), (h2, _) = regularity_constants(K, h)
        (g1, ga1), (g2, ga2) = general_regularity_constants(K, N)
        (s1, _), (s2, _) = general_regularity_constants(K, N, steps=(1,), widest=False)
        stab = max(growth(h1, c1), growth(h2, c2))
        if c1 >= c2:
            c, arg = c1, ("row",) + a1
        else:
            c, arg = c2, ("col",) + a2
    details = {"row": c1, "col": c2, "row_half": h1, "col_half": h2,
               "row_general": g1, "col_general": g2, "row_general_argmax": ga1,
               "col_general_argmax": ga2, "row_step2": s1, "col_step2": s2,
               "hypothesis": note}
    return CheckReport("regularity", _pair_params(pair), N, c, arg, stab, threshold,
                       bool(math.isfinite(c) and stab < threshold), tm.ms,
                       grid=f"band m/2<=n<=2m, n!=m, <= {N}; {note}", details=details)


@dataclass(frozen=True)
class XGrid:
    """Evaluation points: a uniform bulk grid of ``density * (N + 3)`` points
    plus ``cap_points`` geometric points from ``cap_floor`` to pi/2 mirrored
    at both ends."""

    density: int = 16
    cap_points: int = 240
    cap_floor: float = 1e-8

    def points(self, N: int) -> np.ndarray:
        bulk = np.linspace(0.0, math.pi, self.density * (N + 3) + 2)[1:-1]
        geo = np.geomspace(self.cap_floor, math.pi / 2, self.cap_points)
        x = np.unique(np.concatenate([bulk, geo, math.pi - geo]))
        return x[(x > 0) & (x < math.pi)]

    def describe(self, N: int) -> str:
        return f"x: {self.density}*(N+3) uniform + 2x{self.cap_points} geometric from {self.cap_floor:g}"


def _lemma_fit(params, N, xgrid, ratio_fn, check_id, threshold):
    xgrid = xgrid or XGrid()
    with _Timer() as tm:
        x = xgrid.points(N)
        R = ratio_fn(params, N, x)
        c, arg = _masked_max(R, np.isfinite(R))
        c_half, _ = _masked_max(R[:N // 2 + 1], np.isfinite(R[:N // 2 + 1]))
        stab = growth(c_half, c)
    argmax = (arg[0], float(x[arg[1]])) if arg else ()
    return CheckReport(check_id, _single_params(params), N, c, argmax, stab, threshold,
                       bool(math.isfinite(c) and stab < threshold), tm.ms,
                       grid=f"0<=n<={N}; " + xgrid.describe(N), details={"half": c_half})


def lemma_diff_ratios(params: JacobiParams, N: int, x: np.ndarray) -> np.ndarray:
    """|p_{n+2} - p_n|(x) over the step-2 difference envelope, rows n = 0..N."""
    p = p_table(params, N + 2, x)
    diff = np.abs(p[2:] - p[:-2])
    n = np.arange(N + 1)[:, None]
    s, c = np.sin(0.5 * x), np.cos(0.5 * x)
    env = three_branch(n, x,
                       (n + 1.0) ** (params.a - 0.5) * s ** (params.a + 0.5),
                       s * c,
                       (n + 1.0) ** (params.b - 0.5) * c ** (params.b + 0.5))
    return diff / env


def lemma_diff_der_ratios(params: JacobiParams, N: int, x: np.ndarray) -> np.ndarray:
    """|(p_{n+2} - p_n)'|(x) over the derivative-difference envelope, rows n = 0..N."""
    dp = p_derivative_table(params, N + 2, x)
    diff = np.abs(dp[2:] - dp[:-2])
    n = np.arange(N + 1)[:, None]
    s, c = np.sin(0.5 * x), np.cos(0.5 * x)
    env = three_branch(n, x,
                       (n + 1.0) ** (params.a - 0.5) * s ** (params.a - 0.5),
                       (n + 1.0) * s * c,
                       (n + 1.0) ** (params.b - 0.5) * c ** (params.b - 0.5))
    return diff / env


def verify_lemma_diff(params: JacobiParams, N: int, xgrid: XGrid | None = None,
                      threshold: float = STABILITY_THRESHOLD) -> CheckReport:
    return _lemma_fit(params, N, xgrid, lemma_diff_ratios, "lemma-diff", threshold)


def verify_lemma_diff_der(params: JacobiParams, N: int, xgrid: XGrid | None = None,
                          threshold: float = STABILITY_THRESHOLD) -> CheckReport:
    return _lemma_fit(params, N, xgrid, lemma_diff_der_ratios, "lemma-diff-der", threshold)


def _poly_derivative_table(a, b, nmax, z):
    """dP_n/dz by differentiating the three-term recurrence term by term."""
    P = _recurrence_table(a, b, nmax, z)
    D = np.zeros_like(P)
    if nmax >= 1:
        D[1] = 0.5 * (a + b + 2.0)
    ab = a + b
    for k in range(2, nmax + 1):
        c = 2.0 * k + ab
        denom = 2.0 * k * (k + ab) * (c - 2.0)
        lin0 = (c - 1.0) * (a * a - b * b)
        lin1 = (c - 1.0) * c * (c - 2.0)
        back = 2.0 * (k + a - 1.0) * (k + b - 1.0) * c
        D[k] = (lin1 * P[k - 1] + (lin1 * z + lin0) * D[k - 1] - back * D[k - 2]) / denom
    return D


def lowering_residual(params: JacobiParams, N: int, x: np.ndarray) -> np.ndarray:
    """Relative gap between Psi p_n and -sqrt(n(n+a+b+1)) p_{n-1}^{(a+1,b+1)}.

    Psi p_n is formed from the chain-rule derivative of the definition with
    dP_n/dz taken from the differentiated recurrence, independently of the
    closed form used by ``p_fn_derivative``.  Row 0 compares Psi p_0 with 0.
    """
    a, b = params.a, params.b
    s = np.sin(0.5 * x)
    z = 1.0 - 2.0 * s * s
    fac = s ** (a + 0.5) * np.cos(0.5 * x) ** (b + 0.5)
    w = normalization_table(params, N)[:, None]
    psi = -w * fac * np.sin(x) * _poly_derivative_table(a, b, N, z)
    n = np.arange(N + 1, dtype=float)[:, None]
    target = np.zeros_like(psi)
    if N >= 1:
        target[1:] = -np.sqrt(n[1:] * (n[1:] + a + b + 1.0)) * p_table(params.shifted(), N - 1, x)
    scale = 1.0 + np.abs(target) + np.abs(psi)
    return np.abs(psi - target) / scale


def eigen_residual(params: JacobiParams, N: int, x: np.ndarray) -> np.ndarray:
    """|L p_n - lambda_n p_n| / (1 + lambda_n) with p'' from the closed form."""
    a, b = params.a, params.b
    p = p_table(params, N, x)
    d2 = p_second_derivative_table(params, N, x)
    pot = (1 - 4 * a * a) / (16 * np.sin(0.5 * x) ** 2) + (1 - 4 * b * b) / (16 * np.cos(0.5 * x) ** 2)
    lam = np.array([eigenvalue(params, k) for k in range(N + 1)])[:, None]
    return np.abs(-d2 - pot * p - lam * p) / (1.0 + lam)


def reflection_residual(params: JacobiParams, N: int, x: np.ndarray) -> np.ndarray:
    left = p_table(params, N, math.pi - x)
    right = p_table(params.swapped(), N, x)
    sign = (-1.0) ** np.arange(N + 1)[:, None]
    return np.abs(left - sign * right) / np.maximum(1.0, np.abs(right))


def nist_residual(params: JacobiParams, N: int, z: np.ndarray) -> np.ndarray:
    """Residual of -((2n+a+b+2)/2)(1-z)P_n^{(a+1,b)} + a P_n = (n+1)(P_{n+1} - P_n), relative."""
    a, b = params.a, params.b
    P = jacobi_table(params, N + 1, z)
    Q = jacobi_table(JacobiParams(a + 1.0, b), N, z)
    n = np.arange(N + 1, dtype=float)[:, None]
    lhs = -(2 * n + a + b + 2) / 2 * (1 - z) * Q + a * P[:-1]
    rhs = (n + 1) * (P[1:] - P[:-1])
    scale = 1.0 + np.abs(lhs) + (n + 1) * (np.abs(P[1:]) + np.abs(P[:-1]))
    return np.abs(lhs - rhs) / scale


def ratio_asymptotics(params: JacobiParams, N: int) -> np.ndarray:
    """(n+1) |w_{n+2}/w_n - 1| for n = 0..N."""
    w = normalization_table(params, N + 2)
    n = np.arange(N + 1, dtype=float)
    return (n + 1.0) * np.abs(w[2:] / w[:-2] - 1.0)


EXACT_TOLERANCE = 1e-8
EIGEN_TOLERANCE = 1e-6


def verify_identities(params: JacobiParams, N: int, threshold: float = STABILITY_THRESHOLD,
                      eigen_nmax: int = 64) -> list:
    """One report per identity: ratio asymptotics (stability class), and the
    exact-identity class: lowering, eigen-equation, reflection, recurrence link."""
    reports = []
    base = _single_params(params)

    with _Timer() as tm:
        r = ratio_asymptotics(params, N)
        k = int(np.argmax(r))
        half = float(r[:N // 2 + 1].max())
        stab = growth(half, float(r[k]))
    reports.append(CheckReport("asym-ratio", base, N, float(r[k]), (k,), stab, threshold,
                               stab < threshold, tm.ms, grid=f"0<=n<={N}", details={"half": half}))

    xg = XGrid(density=4, cap_points=60, cap_floor=1e-6).points(min(N, 256))
    xs_inner = np.linspace(0.1, math.pi - 0.1, 401)
    x_refl = xg[(xg > 1e-3) & (xg < math.pi - 1e-3)]
    z = np.cos(np.linspace(0.0, math.pi, 257))
    exact = [
        ("lowering", lambda: lowering_residual(params, N, xg), xg, EXACT_TOLERANCE, N),
        ("eigen-eq", lambda: eigen_residual(params, min(N, eigen_nmax), xs_inner), xs_inner,
         EIGEN_TOLERANCE, min(N, eigen_nmax)),
        ("reflection", lambda: reflection_residual(params, N, x_refl), x_refl, EXACT_TOLERANCE, N),
        ("recurrence-link", lambda: nist_residual(params, N, z), z, EXACT_TOLERANCE, N),
    ]
    for check_id, fn, pts, tol, nn in exact:
        with _Timer() as tm:
            res = fn()
            idx = np.unravel_index(int(np.argmax(res)), res.shape)
            worst = float(res[idx])
        reports.append(CheckReport(check_id, base, nn, worst, (int(idx[0]), float(pts[idx[1]])),
                                   0.0, tol, worst <= tol, tm.ms,
                                   grid=f"0<=n<={nn}; {pts.size} points"))
    return reports


def verify_orthonormality(params: JacobiParams, N: int, rel_tol: float = 1e-10) -> CheckReport:
    """max_{n,m <= N} |int p_n p_m - delta_nm| from the shared-grid Gram matrix."""
    with _Timer() as tm:
        T = kernel_table(TransplantPair(params, params), N, rel_tol)
        G = T.entries
        dev = np.abs(G - np.eye(N + 1))
        dev = np.where(np.isnan(dev), np.inf, dev)
        idx = np.unravel_index(int(np.argmax(dev)), dev.shape)
        worst = float(dev[idx])
        diag = float(np.abs(np.diag(G) - 1.0).max())
    return CheckReport("orthonormality", _single_params(params), N, worst,
                       tuple(int(i) for i in idx), 0.0, EXACT_TOLERANCE, worst <= EXACT_TOLERANCE,
                       tm.ms, grid=f"0<=n,m<={N}; panels={T.meta['panels']}",
                       details={"diagonal": diag})


def _weight_constant(w: WeightSeq, p: float):
    return a1_constant(w) if p == 1 else ap_constant(w, p)


def check_weight(w: WeightSeq, p: float, threshold: float = STABILITY_THRESHOLD) -> CheckReport:
    """A_p (or A_1) constant of ``w`` with the adjacent-ratio bracket it implies.

    Passes when every ratio w(n+1)/w(n) lies strictly inside the bracket and
    the constant over [0, N] exceeds the one over [0, N/2] by less than
    ``threshold``; a weight outside A_p fails the second test.
    """
    with _Timer() as tm:
        N = w.N
        full = _weight_constant(w, p)
        half = _weight_constant(w.head(N // 2 + 1), p)
        stab = growth(half.value, full.value)
        ratios = adjacent_ratios(w)
        if math.isfinite(full.value):
            lo, hi = lemma3_bracket(full.value, p)
            inside = bool(np.all((ratios > lo) & (ratios < hi)))
        else:
            lo, hi, inside = 0.0, math.inf, False
    details = {"bracket": (lo, hi), "ratio_min": float(ratios.min()),
               "ratio_max": float(ratios.max()), "bracket_ok": inside,
               "half": half.value, "weight": w.family_tag}
    params = {"alpha": None, "beta": None, "gamma": None, "delta": None}
    return CheckReport("ap" if p > 1 else "a1", params, N, full.value, full.interval, stab,
                       threshold, bool(inside and stab < threshold), tm.ms,
                       grid=f"intervals in [0, {N}]; p={p!r}; w={w.family_tag}", details=details)


UNWEIGHTED_L2_SLACK = 1e-4


def check_opnorm(pair: TransplantPair, N: int, weight, p: float, seed: int = 0,
                 table: KernelTable | None = None, trials: int = 32,
                 threshold: float = STABILITY_THRESHOLD) -> CheckReport:
    """Empirical weighted norm of the truncated transplantation at N and N/2.

    ``weight`` maps a size M to a WeightSeq on 0..M.  For p = 1 the fitted
    constant is the weak-type ratio.  An unweighted p = 2 run must also stay
    below 1 + 1e-4, since the full operator is an isometry there.
    """
    with _Timer() as tm:
        T = _table_for(pair, N, table)
        w = weight(N)
        est = operator_norm_estimate(T, w, p, trials=trials, seed=seed)
        est_half = operator_norm_estimate(T.truncated(N // 2), w.head(N // 2 + 1), p,
                                          trials=trials, seed=seed)
        if p == 1:
            c, src, c_half = est.weak_ratio, est.weak_source, est_half.weak_ratio
        else:
            c, src, c_half = est.value, est.source, est_half.value
        stab = growth(c_half, c)
        ok = math.isfinite(c) and stab < threshold
        unweighted = bool(np.all(w.values == w.values[0]))
        if p == 2 and unweighted:
            ok = ok and c <= 1.0 + UNWEIGHTED_L2_SLACK
    details = {"half": c_half, "strong": est.value, "weight": w.family_tag, "support": est.support}
    return CheckReport("opnorm", _pair_params(pair), N, c, (src,), stab, threshold, bool(ok),
                       tm.ms, seed=seed,
                       grid=f"f on [0, {N // 2}], Tf on [0, {N}]; p={p!r}; w={w.family_tag}",
                       details=details)
