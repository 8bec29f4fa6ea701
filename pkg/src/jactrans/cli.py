"""Command-line frontend.

Exit status: 0 when every requested check passes, 1 when one fails (named
on stderr), 2 on a bad configuration, 3 on an I/O error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import re
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .jacobi import DomainError, JacobiParams
from .kernel import KernelTable, TransplantPair, kernel_table
from .sequences import WeightSeq, read_sequence, transplant_apply
from .verify import (
    check_opnorm,
    check_weight,
    verify_identities,
    verify_lemma_diff,
    verify_lemma_diff_der,
    verify_orthonormality,
    verify_regularity,
    verify_size,
)

THREADS_ENV = "JACTRANS_THREADS"
REPORT_FIELDS = ("check_id", "params", "N", "fitted_constant", "argmax", "stability",
                 "tolerance", "pass", "runtime_ms", "tool_version", "seed")
COMMANDS = ("ortho", "kernel", "transplant", "ap", "verify-size", "verify-reg",
            "verify-lemma-diff", "verify-lemma-diff-der", "verify-identities", "opnorm", "all")

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_IO = 0, 1, 2, 3


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    command: str
    alpha: float = 0.0
    beta: float = 0.0
    gamma: float = 1.0
    delta: float = 1.0
    N: int = 128
    p: float = 2.0
    weight_spec: str = "const"
    rel_tol: float = 1e-10
    seed: int = 0
    out_path: str | None = None
    format: str = "json"
    input_path: str | None = None

    def validate(self) -> "RunConfig":
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        if self.N < 2:
            raise ConfigError("N must be at least 2")
        if not self.p >= 1:
            raise ConfigError("p must be at least 1")
        if not self.rel_tol > 0:
            raise ConfigError("rel-tol must be positive")
        if self.format not in ("json", "csv"):
            raise ConfigError("format must be json or csv")
        try:
            self.pair
            self.weight(self.N)
        except (DomainError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc
        if self.command == "transplant" and not self.input_path:
            raise ConfigError("transplant needs --input")
        return self

    @property
    def source(self) -> JacobiParams:
        return JacobiParams(self.alpha, self.beta)

    @property
    def target(self) -> JacobiParams:
        return JacobiParams(self.gamma, self.delta)

    @property
    def pair(self) -> TransplantPair:
        return TransplantPair(self.source, self.target)

    def weight(self, M: int) -> WeightSeq:
        return WeightSeq.from_spec(self.weight_spec, M)


# --- file formats -------------------------------------------------------------

_HEADER_KEYS = ("alpha", "beta", "gamma", "delta", "N", "rel_tol")
_HEADER_RE = re.compile(r"^# jacobi-kernel v1((?: \w+=\S+)+)\s*$")


def _num(v) -> str:
    return repr(float(v)) if not isinstance(v, int) else str(v)


def format_kernel(table: KernelTable) -> str:
    vals = dict(table.pair.as_dict(), N=table.N, rel_tol=table.meta.get("rel_tol", math.nan))
    head = "# jacobi-kernel v1 " + " ".join(f"{k}={_num(vals[k])}" for k in _HEADER_KEYS)
    rows = (" ".join(f"{v:.17g}" for v in row) for row in table.entries)
    return head + "\n" + "\n".join(rows) + "\n"


def parse_kernel(text: str) -> KernelTable:
    """Inverse of ``format_kernel``; entries round-trip bit-exactly."""
    first, _, body = text.partition("\n")
    m = _HEADER_RE.match(first)
    if not m:
        raise ValueError("not a jacobi-kernel v1 file")
    fields = dict(kv.split("=", 1) for kv in m.group(1).split())
    missing = set(_HEADER_KEYS) - fields.keys()
    if missing:
        raise ValueError(f"kernel header lacks {sorted(missing)}")
    N = int(fields["N"])
    rows = [[float(tok) for tok in line.split()] for line in body.splitlines() if line.strip()]
    entries = np.array(rows, dtype=float)
    if entries.shape != (N + 1, N + 1):
        raise ValueError(f"kernel body has shape {entries.shape}, header says N={N}")
    pair = TransplantPair.of(*(float(fields[k]) for k in ("alpha", "beta", "gamma", "delta")))
    failures = tuple((int(i), int(j)) for i, j in np.argwhere(np.isnan(entries)))
    return KernelTable(pair, N, entries, np.zeros_like(entries),
                       {"rel_tol": float(fields["rel_tol"])}, failures)


def write_kernel(table: KernelTable, path) -> None:
    Path(path).write_text(format_kernel(table))


def read_kernel(path) -> KernelTable:
    return parse_kernel(Path(path).read_text())


def format_sequence(values) -> str:
    return "".join(f"{v:.17g}\n" for v in values)


def format_reports(reports, fmt: str = "json") -> str:
    records = [r.record() for r in reports]
    if fmt == "json":
        return json.dumps(records, indent=2) + "\n"
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(REPORT_FIELDS)
    for rec in records:
        # strings verbatim, everything else as its JSON literal
        writer.writerow([rec[k] if isinstance(rec[k], str) else json.dumps(rec[k], separators=(",", ":"))
                         for k in REPORT_FIELDS])
    return buf.getvalue()


def report_write(reports, fmt: str = "json", path=None) -> None:
    """Serialize reports to ``path`` (stdout when None)."""
    text = format_reports(reports, fmt)
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


# --- dispatch ------------------------------------------------------------------

def _threads() -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw is None:
        return min(8, os.cpu_count() or 1)
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
    if n < 1:
        raise ConfigError(f"{THREADS_ENV} must be positive")
    return n


def _run_jobs(jobs) -> list:
    """Run zero-argument callables, each returning a report or a list of them,
    and flatten the results in submission order."""
    with ThreadPoolExecutor(max_workers=_threads()) as pool:
        results = [f.result() for f in [pool.submit(job) for job in jobs]]
    out = []
    for r in results:
        out.extend(r if isinstance(r, list) else [r])
    return out


def _with_seed(reports, seed):
    for r in reports:
        if r.seed is None:
            r.seed = seed
    return reports


def _suite(cfg: RunConfig) -> list:
    pair, N = cfg.pair, cfg.N
    table = kernel_table(pair, N, cfg.rel_tol)
    jobs = [lambda: verify_orthonormality(cfg.source, N, cfg.rel_tol)]
    if cfg.target != cfg.source:
        jobs.append(lambda: verify_orthonormality(cfg.target, N, cfg.rel_tol))
    jobs += [
        lambda: verify_size(pair, N, table),
        lambda: verify_regularity(pair, N, table),
    ]
    for params in dict.fromkeys((cfg.source, cfg.target)):
        jobs += [
            lambda params=params: verify_lemma_diff(params, N),
            lambda params=params: verify_lemma_diff_der(params, N),
            lambda params=params: verify_identities(params, N),
        ]
    jobs += [
        lambda: check_weight(cfg.weight(N), cfg.p),
        lambda: check_opnorm(pair, N, cfg.weight, cfg.p, cfg.seed, table),
    ]
    return _run_jobs(jobs)


def run(cfg: RunConfig) -> int:
    cfg.validate()
    cmd, pair, N = cfg.command, cfg.pair, cfg.N

    if cmd == "kernel":
        table = kernel_table(pair, N, cfg.rel_tol)
        text = format_kernel(table)
        if cfg.out_path:
            Path(cfg.out_path).write_text(text)
        else:
            sys.stdout.write(text)
        return EXIT_OK
    if cmd == "transplant":
        f = read_sequence(cfg.input_path)
        if f.size > N + 1:
            raise ConfigError(f"input has {f.size} values; raise -N to at least {f.size - 1}")
        out = transplant_apply(kernel_table(pair, N, cfg.rel_tol), f)[:f.size]
        text = format_sequence(out)
        if cfg.out_path:
            Path(cfg.out_path).write_text(text)
        else:
            sys.stdout.write(text)
        if np.isnan(out).any():
            print("FAIL: transplant (output depends on unconverged kernel entries)", file=sys.stderr)
            return EXIT_FAIL
        return EXIT_OK

    single = {
        "ortho": lambda: [verify_orthonormality(cfg.source, N, cfg.rel_tol)],
        "ap": lambda: [check_weight(cfg.weight(N), cfg.p)],
        "verify-size": lambda: [verify_size(pair, N, kernel_table(pair, N, cfg.rel_tol))],
        "verify-reg": lambda: [verify_regularity(pair, N, kernel_table(pair, N, cfg.rel_tol))],
        "verify-lemma-diff": lambda: [verify_lemma_diff(cfg.source, N)],
        "verify-lemma-diff-der": lambda: [verify_lemma_diff_der(cfg.source, N)],
        "verify-identities": lambda: verify_identities(cfg.source, N),
        "opnorm": lambda: [check_opnorm(pair, N, cfg.weight, cfg.p, cfg.seed,
                                        kernel_table(pair, N, cfg.rel_tol))],
        "all": lambda: _suite(cfg),
    }
    reports = _with_seed(single[cmd](), cfg.seed)
    report_write(reports, cfg.format, cfg.out_path)
    failed = [r for r in reports if not r.passed]
    for r in failed:
        print(f"FAIL: {r.check_id} {json.dumps(r.params)} N={r.N} "
              f"fitted_constant={r.fitted_constant!r} stability={r.stability!r}", file=sys.stderr)
    return EXIT_FAIL if failed else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--alpha", type=float, default=0.0, help="source parameter alpha")
    common.add_argument("--beta", type=float, default=0.0, help="source parameter beta")
    common.add_argument("--gamma", type=float, default=1.0, help="target parameter gamma")
    common.add_argument("--delta", type=float, default=1.0, help="target parameter delta")
    common.add_argument("-N", type=int, default=128, help="largest index (default 128)")
    common.add_argument("--p", type=float, default=2.0, help="exponent p >= 1")
    common.add_argument("--weight", default="const",
                        help='weight: "const", "pow:<s>", "dyadic:<s>", "exp:<b>" or "file:<path>"')
    common.add_argument("--rel-tol", type=float, default=1e-10, help="quadrature tolerance")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", help="output path (stdout when omitted)")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--input", help="input sequence file, one value per line")

    parser = argparse.ArgumentParser(prog="jactrans", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "ortho": "orthonormality of the (alpha, beta) system",
        "kernel": "build and save the kernel table",
        "transplant": "apply the transplantation to --input",
        "ap": "A_p / A_1 constant of --weight and the adjacent-ratio bracket",
        "verify-size": "size constant sup |n-m| |K(n,m)|",
        "verify-reg": "step-2 regularity constants",
        "verify-lemma-diff": "difference envelope for p_{n+2} - p_n",
        "verify-lemma-diff-der": "difference envelope for the derivatives",
        "verify-identities": "exact and asymptotic identities for (alpha, beta)",
        "opnorm": "empirical weighted operator norm",
        "all": "the full certification suite",
    }
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=helps[name])
    return parser


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    return RunConfig(command=ns.command, alpha=ns.alpha, beta=ns.beta, gamma=ns.gamma,
                     delta=ns.delta, N=ns.N, p=ns.p, weight_spec=ns.weight, rel_tol=ns.rel_tol,
                     seed=ns.seed, out_path=ns.out, format=ns.format, input_path=ns.input)


def main(argv=None) -> int:
    ns = build_parser().parse_args(argv)
    warnings.simplefilter("default")
    try:
        return run(config_from_args(ns))
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
