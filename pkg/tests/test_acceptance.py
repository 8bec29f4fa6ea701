"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v``; the verdicts are repeated in
the "acceptance criteria" section of the terminal summary.
"""

import json
import math
import os
import subprocess
import sys
import time
import warnings

import numpy as np
import pytest

from jactrans.jacobi import JacobiParams
from jactrans.kernel import (
    ResonanceError,
    TransplantPair,
    is_resonant,
    k2_direct,
    kernel_table,
    verify_k2_identity,
)
from jactrans.sequences import (
    WeightSeq,
    a1_constant,
    adjacent_ratios,
    ap_constant,
    lemma3_bracket,
    transplant_apply,
)
from jactrans.verify import (
    check_opnorm,
    eigen_residual,
    verify_lemma_diff,
    verify_lemma_diff_der,
    verify_orthonormality,
    verify_regularity,
    verify_size,
)

BOUND_PAIRS = [(0, 0, 1, 1), (-0.5, 0, 0.5, 1), (0.3, 0.7, 1.3, 1.7)]


def _pair_label(pr):
    return "({},{})->({},{})".format(*pr)


@pytest.fixture(scope="module")
def tables():
    """Kernel tables at N = 256 for the three bounded-kernel pairs."""
    return {pr: kernel_table(TransplantPair.of(*pr), 256) for pr in BOUND_PAIRS}


def chebyshev_kernel(N):
    n = np.arange(N + 1)[:, None].astype(float)
    m = np.arange(N + 1)[None, :].astype(float)
    even = (n + m) % 2 == 0
    with np.errstate(divide="ignore", invalid="ignore"):
        K = np.where(even, 4 / math.pi * (n + 1) / ((n + 1) ** 2 - m ** 2), 0.0)
    K[:, 0] = np.where(even[:, 0], 2 * math.sqrt(2) / (math.pi * (n[:, 0] + 1)), 0.0)
    return K


def test_criterion_01_orthonormality(criterion):
    t0 = time.perf_counter()
    worst = {}
    for ab in [(-0.5, -0.5), (0, 0), (0.5, 0.5), (0.3, 1.7), (2.5, 0.1)]:
        worst[ab] = verify_orthonormality(JacobiParams(*ab), 32).fitted_constant
    elapsed = time.perf_counter() - t0
    ok = max(worst.values()) <= 1e-8 and elapsed < 60
    criterion(1, ok, f"max |<p_n,p_m> - delta| = {max(worst.values()):.2e} (<= 1e-8), {elapsed:.1f}s (< 60s)")
    assert ok


def test_criterion_02_closed_form(criterion):
    pair, N = TransplantPair.of(-0.5, -0.5, 0.5, 0.5), 64
    K = chebyshev_kernel(N)
    table_err = np.abs(kernel_table(pair, N).entries - K).max()

    n, m = np.indices(K.shape)
    size_exact = np.where(n != m, np.abs(n - m) * np.abs(K), 0).max()
    row = col = 0.0
    for i in range(N + 1):
        for j in range(N + 1):
            if i == j or not (2 * i >= j and i <= 2 * j):
                continue
            if i + 2 <= N and i + 2 != j:
                row = max(row, (i - j) ** 2 * abs(K[i + 2, j] - K[i, j]))
            if j + 2 <= N and j + 2 != i:
                col = max(col, (i - j) ** 2 * abs(K[i, j] - K[i, j + 2]))
    size = verify_size(pair, N)
    reg = verify_regularity(pair, N)
    dev = max(abs(size.fitted_constant - size_exact), abs(reg.details["row"] - row),
              abs(reg.details["col"] - col))
    ok = table_err <= 1e-9 and dev <= 1e-6
    criterion(2, ok, f"table error {table_err:.1e} (<= 1e-9), constant error {dev:.1e} (<= 1e-6)")
    assert ok


def test_criterion_03_identity_operator(criterion):
    worst = 0.0
    for ab in [(0.3, 1.7), (2.5, 0.1), (-0.5, -0.5)]:
        P = JacobiParams(*ab)
        T = kernel_table(TransplantPair(P, P), 64)
        for seed in range(100):
            f = np.random.default_rng(seed).standard_normal(65)
            worst = max(worst, np.abs(transplant_apply(T, f) - f).max())
    ok = worst <= 1e-8
    criterion(3, ok, f"max ||Tf - f||_inf over 3 systems x 100 f = {worst:.1e} (<= 1e-8)")
    assert ok


def _round_trip_error(pr, N):
    pair = TransplantPair.of(*pr)
    A = kernel_table(pair, N).entries
    B = kernel_table(pair.swapped(), N).entries
    h = N // 2
    return np.abs((A @ B)[:h + 1, :h + 1] - np.eye(h + 1)).max()


def test_criterion_04_round_trip(criterion):
    parts, ok = [], True
    for pr in BOUND_PAIRS:
        e128, e256 = _round_trip_error(pr, 128), _round_trip_error(pr, 256)
        good = e128 <= 1e-4 and e256 < e128
        ok &= good
        parts.append(f"{_pair_label(pr)} {e128:.1e}->{e256:.1e}{'' if good else ' !'}")
    criterion(4, ok, "round-trip max error N=128->256 (<= 1e-4, decreasing): " + "; ".join(parts))
    assert ok


def test_criterion_05_size(criterion, tables):
    parts, ok = [], True
    for pr in BOUND_PAIRS:
        r = verify_size(TransplantPair.of(*pr), 256, tables[pr])
        ok &= r.stability < 0.05 and math.isfinite(r.fitted_constant)
        parts.append(f"{_pair_label(pr)} C={r.fitted_constant:.4f} growth={100 * r.stability:.2f}%")
    criterion(5, ok, "size constant growth N=128->256 (< 5%): " + "; ".join(parts))
    assert ok


def test_criterion_06_regularity(criterion, tables):
    parts, ok = [], True
    for pr in BOUND_PAIRS:
        r = verify_regularity(TransplantPair.of(*pr), 256, tables[pr])
        d = r.details
        g1 = (d["row"] - d["row_half"]) / d["row_half"]
        g2 = (d["col"] - d["col_half"]) / d["col_half"]
        ok &= g1 < 0.05 and g2 < 0.05
        parts.append(f"{_pair_label(pr)} {100 * g1:.2f}%/{100 * g2:.2f}%")
    criterion(6, ok, "band constant growth N=128->256 (< 5% each): " + "; ".join(parts))
    assert ok


def test_criterion_07_lemma_envelopes(criterion):
    params = [(-0.5, -0.5), (0.3, 1.2), (2.5, 0.1), (-0.8, -0.7)]
    worst, ok = 0.0, True
    for ab in params:
        for fn in (verify_lemma_diff, verify_lemma_diff_der):
            for N in (128, 256):
                r = fn(JacobiParams(*ab), N)
                ok &= r.passed
                worst = max(worst, r.stability)
    criterion(7, ok, f"4 parameter pairs incl. (-0.8,-0.7), both envelopes, 64->128->256: "
                     f"worst growth {100 * worst:.3f}% (< 5%)")
    assert ok


def test_criterion_08_eigen_identity(criterion):
    worst_res, worst_k2, count = 0.0, 0.0, 0
    for pr in [(0, 0, 1, 1), (-0.5, 0, 0.5, 1)]:
        pair = TransplantPair.of(*pr)
        rng = np.random.default_rng(8)
        sample = []
        while len(sample) < 50:
            n, m = (int(v) for v in rng.integers(0, 65, size=2))
            if not is_resonant(pair, n, m) and (n, m) not in sample:
                sample.append((n, m))
        for n, m in sample:
            worst_res = max(worst_res, verify_k2_identity(pair, n, m))
        for n in (0, 3, 10, 31, 63):
            assert is_resonant(pair, n, n + 1)
            with pytest.raises(ResonanceError):
                verify_k2_identity(pair, n, n + 1)
            worst_k2 = max(worst_k2, abs(k2_direct(pair, n, n + 1)))
            count += 1
    ok = worst_res <= 1e-6 and worst_k2 <= 1 + 1e-9
    criterion(8, ok, f"2 pairs x 50 non-resonant: max residual {worst_res:.1e} (<= 1e-6); "
                     f"{count} resonant: max |K2| {worst_k2:.4f} (<= 1)")
    assert ok


def test_criterion_09_eigen_equation(criterion):
    x = np.linspace(0.1, math.pi - 0.1, 2001)
    worst = max(eigen_residual(JacobiParams(*ab), 64, x).max()
                for ab in [(0, 0), (0.3, 1.7), (-0.8, 2.5)])
    ok = worst <= 1e-6
    criterion(9, ok, f"max residual / (1 + lambda_n) = {worst:.1e} (<= 1e-6)")
    assert ok


def test_criterion_10_muckenhoupt(criterion):
    N = 256
    one = [ap_constant(WeightSeq.constant(N), p).value for p in (1.5, 2.0, 3.0)]
    one.append(a1_constant(WeightSeq.constant(N)).value)
    exact = all(v == 1.0 for v in one)

    families = []
    for p in (1.5, 2.0, 3.0):
        for s in (-0.9, -0.5, 0.0, 0.5, p - 1.1):
            families.append((WeightSeq.power(N, s), p))
        families.append((WeightSeq.dyadic_plateau(N, 0.5 * (p - 1)), p))
        families.append((WeightSeq.perturbed_power(N, 0.25 * (p - 1)), p))
    for s in (-0.9, -0.5, -0.1, 0.0):
        families.append((WeightSeq.power(N, s), 1.0))
    inside = True
    for w, p in families:
        ap = a1_constant(w).value if p == 1 else ap_constant(w, p).value
        lo, hi = lemma3_bracket(ap, p)
        r = adjacent_ratios(w)
        inside &= bool(np.all((r > lo) & (r < hi)))

    grow_p = [ap_constant(WeightSeq.power(M, 1.5), 2.0).value for M in (64, 128, 256)]
    grow_1 = [a1_constant(WeightSeq.exponential(M)).value for M in (64, 128, 256)]
    monotone = grow_p[0] < grow_p[1] < grow_p[2] and grow_1[0] < grow_1[1] < grow_1[2]
    ok = exact and inside and monotone
    criterion(10, ok, f"[1]_Ap == 1 exactly: {exact}; brackets hold for {len(families)} weights: {inside}; "
                      f"(n+1)^1.5 in A_2: {grow_p[0]:.2f} < {grow_p[1]:.2f} < {grow_p[2]:.2f}")
    assert ok


def test_criterion_11_operator_norm(criterion, tables):
    cases = [(p, s) for p in (1.5, 2.0, 3.0) for s in (0.0, (p - 1) / 2)] + [(1.0, 0.0), (1.0, -0.5)]
    bad, worst, l2 = [], 0.0, 0.0
    for pr in BOUND_PAIRS:
        pair = TransplantPair.of(*pr)
        for p, s in cases:
            r = check_opnorm(pair, 256, lambda M, s=s: WeightSeq.power(M, s), p, seed=11, table=tables[pr])
            worst = max(worst, r.stability)
            if p == 2 and s == 0:
                l2 = max(l2, r.fitted_constant, r.details["half"])
            if not r.passed:
                bad.append(f"{_pair_label(pr)} p={p} s={s}: {100 * r.stability:.1f}%")
    ok = not bad
    criterion(11, ok, f"{len(cases) * 3} cases, worst growth N=128->256 {100 * worst:.1f}% (< 5%), "
                      f"unweighted l2 {l2:.8f} (<= 1+1e-4)" + ("; failing: " + ", ".join(bad) if bad else ""))
    assert ok


def test_criterion_12_determinism(criterion, tmp_path):
    outs = []
    for k, threads in enumerate(("1", "8")):
        path = tmp_path / f"run{k}.json"
        env = dict(os.environ, JACTRANS_THREADS=threads)
        subprocess.run([sys.executable, "-m", "jactrans", "all", "--seed", "12", "--out", str(path)],
                       env=env, capture_output=True, check=False)
        text = path.read_bytes()
        outs.append(b"\n".join(line for line in text.split(b"\n") if b'"runtime_ms"' not in line))
    n_reports = len(json.loads(path.read_text()))
    ok = outs[0] == outs[1] and n_reports > 0
    criterion(12, ok, f"`all` twice (1 and 8 threads), {n_reports} reports byte-identical modulo runtime_ms")
    assert ok


if __name__ == "__main__":
    warnings.simplefilter("ignore")
    sys.exit(pytest.main([__file__, "-v", "-s"]))
