"""Weights on N, discrete Muckenhoupt constants, weighted norms, and the
action of a truncated transplantation kernel on finite sequences."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .kernel import KernelTable, Parity

__all__ = [
    "WeightSeq",
    "ApResult",
    "NormEstimate",
    "ap_constant",
    "a1_constant",
    "lp_norm",
    "weak_l1_norm",
    "lemma3_bracket",
    "adjacent_ratios",
    "transplant_apply",
    "parity_recompose",
    "operator_norm_estimate",
]

# beyond this dynamic range (in natural log) sums are accumulated in log space
_LOG_RANGE_LIMIT = 300.0


class WeightSeq:
    """Strictly positive finite weight w(0..N) with cached prefix sums."""

    def __init__(self, values, family_tag: str | None = None):
        v = np.array(values, dtype=float)
        if v.ndim != 1 or v.size == 0:
            raise ValueError("a weight is a nonempty one-dimensional sequence")
        if not np.all(np.isfinite(v)) or np.any(v <= 0):
            raise ValueError("weights must be finite and strictly positive")
        v.setflags(write=False)
        self.values = v
        self.family_tag = family_tag
        self._dual = {}

    def __len__(self):
        return self.values.size

    def __repr__(self):
        return f"WeightSeq(N={self.N}, family_tag={self.family_tag!r})"

    @property
    def N(self) -> int:
        return self.values.size - 1

    @property
    def prefix(self) -> np.ndarray:
        if "w" not in self._dual:
            self._dual["w"] = np.concatenate([[0.0], np.cumsum(self.values)])
        return self._dual["w"]

    def dual_prefix(self, p: float) -> np.ndarray:
        """Prefix sums of w^{-1/(p-1)}."""
        if p not in self._dual:
            self._dual[p] = np.concatenate([[0.0], np.cumsum(self.values ** (-1.0 / (p - 1.0)))])
        return self._dual[p]

    def head(self, n: int) -> "WeightSeq":
        return WeightSeq(self.values[:n], self.family_tag)

    @classmethod
    def constant(cls, N: int) -> "WeightSeq":
        return cls(np.ones(N + 1), "const")

    @classmethod
    def power(cls, N: int, sigma: float) -> "WeightSeq":
        return cls((np.arange(N + 1) + 1.0) ** sigma, f"pow:{sigma!r}")

    @classmethod
    def dyadic_plateau(cls, N: int, sigma: float) -> "WeightSeq":
        """Step version of the power weight: constant 2^{sigma k} on [2^k - 1, 2^{k+1} - 1)."""
        k = np.floor(np.log2(np.arange(N + 1) + 1.0))
        return cls(2.0 ** (sigma * k), f"dyadic:{sigma!r}")

    @classmethod
    def perturbed_power(cls, N: int, sigma: float, eps: float = 0.5) -> "WeightSeq":
        """(n+1)^sigma times the bounded factor 1 + eps sin(n)."""
        n = np.arange(N + 1)
        return cls((n + 1.0) ** sigma * (1.0 + eps * np.sin(n)), f"perturbed:{sigma!r}:{eps!r}")

    @classmethod
    def exponential(cls, N: int, base: float = 2.0) -> "WeightSeq":
        return cls(float(base) ** np.arange(N + 1), f"exp:{base!r}")

    @classmethod
    def from_spec(cls, spec: str, N: int) -> "WeightSeq":
        """Parse "const", "pow:<sigma>", "dyadic:<sigma>", "exp:<base>" or "file:<path>"."""
        kind, _, arg = spec.partition(":")
        try:
            if kind == "const" and not arg:
                return cls.constant(N)
            if kind == "pow":
                return cls.power(N, float(arg))
            if kind == "dyadic":
                return cls.dyadic_plateau(N, float(arg))
            if kind == "exp":
                return cls.exponential(N, float(arg))
            if kind == "file":
                vals = read_sequence(arg)
                if vals.size < N + 1:
                    raise ValueError(f"weight file {arg} has {vals.size} values, need {N + 1}")
                return cls(vals[:N + 1], spec)
        except ValueError as exc:
            raise ValueError(f"bad weight spec {spec!r}: {exc}") from exc
        raise ValueError(f"unknown weight spec {spec!r}")


def read_sequence(path) -> np.ndarray:
    """One value per line; blank lines and '#' comments are skipped."""
    vals = []
    for line in Path(path).read_text().splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            vals.append(float(line))
    return np.array(vals, dtype=float)


@dataclass(frozen=True)
class ApResult:
    """Truncated Muckenhoupt constant and an interval [n, m] attaining it."""

    value: float
    interval: tuple


def _check_ap_input(w: WeightSeq):
    if w.N < 1:
        raise ValueError("Muckenhoupt constants need at least two weight values")


def ap_constant(w: WeightSeq, p: float) -> ApResult:
    """sup over [n, m] in [0, N] of (m-n+1)^{-p} (sum w) (sum w^{-1/(p-1)})^{p-1}.

    Exact O(N^2) scan.  Only intervals inside [0, N] are seen, so this is a
    lower bound for the constant of any extension of w.
    """
    _check_ap_input(w)
    if not p > 1:
        raise ValueError("ap_constant needs p > 1; use a1_constant for p = 1")
    logw = np.log(w.values)
    L = w.values.size
    q = 1.0 / (p - 1.0)
    best, arg = -math.inf, (0, 0)
    if np.ptp(logw) * max(1.0, q) < _LOG_RANGE_LIMIT:
        # the constant is invariant under w -> c w; centre before summing
        if np.ptp(logw) > 0:
            v = np.exp(logw - 0.5 * (logw.max() + logw.min()))
            S = np.concatenate([[0.0], np.cumsum(v)])
            U = np.concatenate([[0.0], np.cumsum(v ** (-q))])
        else:
            S = w.prefix
            U = w.dual_prefix(p)
        for n in range(L):
            length = np.arange(1, L - n + 1, dtype=float)
            vals = (S[n + 1:] - S[n]) / length * ((U[n + 1:] - U[n]) / length) ** (p - 1.0)
            k = int(np.argmax(vals))
            if vals[k] > best:
                best, arg = float(vals[k]), (n, n + k)
    else:
        for n in range(L):
            length = np.log(np.arange(1, L - n + 1, dtype=float))
            ls = np.logaddexp.accumulate(logw[n:])
            lu = np.logaddexp.accumulate(-q * logw[n:])
            vals = ls - length + (p - 1.0) * (lu - length)
            k = int(np.argmax(vals))
            if vals[k] > best:
                best, arg = float(vals[k]), (n, n + k)
        best = math.exp(best) if best < 700 else math.inf
    return ApResult(best, arg)


def a1_constant(w: WeightSeq) -> ApResult:
    """sup over [n, m] of the mean of w on [n, m] divided by its minimum there."""
    _check_ap_input(w)
    v = w.values
    S = w.prefix
    L = v.size
    best, arg = -math.inf, (0, 0)
    for n in range(L):
        length = np.arange(1, L - n + 1, dtype=float)
        with np.errstate(over="ignore"):
            vals = (S[n + 1:] - S[n]) / length / np.minimum.accumulate(v[n:])
        k = int(np.argmax(vals))
        if vals[k] > best:
            best, arg = float(vals[k]), (n, n + k)
    return ApResult(best, arg)


def _weights_for(f: np.ndarray, w: WeightSeq) -> np.ndarray:
    if f.size > w.values.size:
        raise ValueError(f"sequence of length {f.size} is longer than the weight ({w.values.size})")
    return w.values[:f.size]


def lp_norm(f, w: WeightSeq, p: float) -> float:
    """(sum |f(m)|^p w(m))^{1/p}."""
    if p < 1:
        raise ValueError("p must be at least 1")
    f = np.asarray(f, dtype=float)
    return float(np.sum(np.abs(f) ** p * _weights_for(f, w)) ** (1.0 / p))


def weak_l1_norm(f, w: WeightSeq) -> float:
    """sup_{t>0} t * w({|f| > t}), attained in the limit t -> v^- at a value v of |f|."""
    f = np.abs(np.asarray(f, dtype=float))
    wt = _weights_for(f, w)
    order = np.argsort(-f, kind="stable")
    fs, cum = f[order], np.cumsum(wt[order])
    # last position of each run of equal values carries the full level-set weight
    last = np.append(fs[1:] != fs[:-1], True)
    cand = fs[last] * cum[last]
    cand = cand[fs[last] > 0]
    return float(cand.max()) if cand.size else 0.0


def lemma3_bracket(ap: float, p: float) -> tuple:
    """Bounds (lo, hi) with lo < w(n+1)/w(n) < hi for every w whose A_p constant is at most ``ap``."""
    if ap < 1:
        raise ValueError("Muckenhoupt constants are at least 1")
    if p == 1:
        return 1.0 / (2.0 * ap), 2.0 * ap
    if p < 1:
        raise ValueError("p must be at least 1")
    c = min(2.0 ** (p - 2.0), 1.0)
    return c / (2.0 ** p * ap), 2.0 ** p * ap / c


def adjacent_ratios(w: WeightSeq) -> np.ndarray:
    return w.values[1:] / w.values[:-1]


def _as_input(table: KernelTable, f) -> np.ndarray:
    f = np.asarray(f, dtype=float)
    if f.ndim != 1 or f.size > table.N + 1:
        raise ValueError(f"input must be a sequence of length at most {table.N + 1}")
    out = np.zeros(table.N + 1)
    out[:f.size] = f
    return out


def transplant_apply(table: KernelTable, f) -> np.ndarray:
    """(Tf)(n) = sum_m K(n, m) f(m) for 0 <= n <= N.

    Failed (NaN) kernel entries only spoil outputs whose row meets the
    support of f; those outputs are NaN.
    """
    f = _as_input(table, f)
    K = table.entries
    bad = np.isnan(K)
    if not bad.any():
        return K @ f
    out = np.where(bad, 0.0, K) @ f
    poisoned = (bad & (f != 0)).any(axis=1)
    if poisoned.any():
        warnings.warn(f"{int(poisoned.sum())} outputs depend on failed kernel entries")
        out[poisoned] = np.nan
    return out


def parity_recompose(table: KernelTable, f) -> np.ndarray:
    """Tf assembled from the four parity sub-kernels acting on f(2n) and f(2n+1)."""
    f = _as_input(table, f)
    even, odd = f[0::2], f[1::2]
    sub = {kind: table.parity(kind).values for kind in Parity}
    out = np.empty(table.N + 1)
    out[0::2] = sub[Parity.EE] @ even + sub[Parity.EO] @ odd
    out[1::2] = sub[Parity.OE] @ even + sub[Parity.OO] @ odd
    return out


@dataclass(frozen=True)
class NormEstimate:
    """Lower bound for the weighted operator norm of a truncated kernel.

    ``source`` names the winning test vector ("spike:k", "gauss:t", ...);
    random vectors of trial t come from ``np.random.default_rng([seed, t])``.
    """

    value: float
    source: str
    weak_ratio: float | None
    weak_source: str | None
    support: int


def _p_dual(y, p):
    return np.sign(y) * np.abs(y) ** (p - 1.0)


def _ratio(M, x, p):
    nx = np.sum(np.abs(x) ** p) ** (1.0 / p)
    if nx == 0:
        return 0.0
    return float(np.sum(np.abs(M @ x) ** p) ** (1.0 / p) / nx)


def _power_refine(M, x, p, iters):
    """Boyd's nonlinear power iteration for the l^p -> l^p norm; ratios never decrease."""
    q = p / (p - 1.0)
    best = _ratio(M, x, p)
    for _ in range(iters):
        z = M.T @ _p_dual(M @ x, p)
        if not np.any(z):
            break
        x_new = _p_dual(z, q)
        r = _ratio(M, x_new, p)
        if r <= best * (1 + 1e-13):
            if r > best:
                best, x = r, x_new
            break
        best, x = r, x_new
    return best, x


def _candidates(M, seed, trials):
    h = M.shape[1]
    for k in range(h):
        e = np.zeros(h)
        e[k] = 1.0
        yield f"spike:{k}", e
    for t in range(trials):
        rng = np.random.default_rng([seed, t])
        kind = t % 3
        if kind == 0:
            yield f"gauss:{t}", rng.standard_normal(h)
        elif kind == 1:
            x = np.zeros(h)
            idx = rng.choice(h, size=max(1, h // 8), replace=False)
            x[idx] = rng.choice([-1.0, 1.0], size=idx.size)
            yield f"sparse:{t}", x
        else:
            # a spike at k0 plus a tail aligned with the signs of row n0
            k0 = int(rng.integers(h))
            n0 = int(rng.integers(M.shape[0]))
            x = 0.25 * np.sign(M[n0]) / (1.0 + np.abs(np.arange(h) - k0))
            x[k0] = 1.0
            yield f"aligned:{t}", x


def operator_norm_estimate(table: KernelTable, w: WeightSeq, p: float, trials: int = 32,
                           seed: int = 0, refine: int = 4, power_iters: int = 200) -> NormEstimate:
    """Empirical lower bound of ||T||_{l^p(w) -> l^p(w)} for the truncated kernel.

    Test vectors live on [0, N/2] and outputs on [0, N].  Every unit spike
    and ``trials`` seeded random vectors are scored; for p > 1 the ``refine``
    best of them are then pushed uphill by a nonlinear power iteration.  For
    p = 1 the weak-type ratio ||Tf||_{1,inf(w)} / ||f||_{1(w)} is reported too.
    """
    if p < 1:
        raise ValueError("p must be at least 1")
    N = table.N
    if w.values.size < N + 1:
        raise ValueError(f"weight has {w.values.size} values, need {N + 1}")
    h = N // 2
    K = np.nan_to_num(table.entries[:, :h + 1])
    wv = w.values[:N + 1]
    d_out, d_in = wv ** (1.0 / p), wv[:h + 1] ** (1.0 / p)
    # ||Tf||_{p,w} / ||f||_{p,w} = ||M g||_p / ||g||_p with g = d_in f
    M = d_out[:, None] * K / d_in[None, :]
    scored = []
    weak_best, weak_src = -math.inf, None
    for name, x in _candidates(M, seed, trials):
        scored.append((_ratio(M, x, p), name, x))
        if p == 1:
            f = x / d_in
            num = weak_l1_norm(K @ f, w)
            r = num / lp_norm(f, w, 1.0)
            if r > weak_best:
                weak_best, weak_src = r, name
    # stable sort keeps the result independent of float ties
    scored.sort(key=lambda s: -s[0])
    best, src = scored[0][0], scored[0][1]
    if p > 1:
        for r0, name, x in scored[:refine]:
            r, _ = _power_refine(M, x, p, power_iters)
            if r > best:
                best, src = r, f"{name}+power"
    return NormEstimate(best, src, weak_best if p == 1 else None, weak_src, h)
