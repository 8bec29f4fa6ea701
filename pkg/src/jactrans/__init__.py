"""Numerical toolkit for Jacobi coefficient transplantation on (0, pi)."""

__version__ = "0.1.0"

from .jacobi import DomainError, JacobiParams, p_fn, p_fn_derivative, p_table  # noqa: E402
from .kernel import KernelTable, TransplantPair, kernel_entry, kernel_table  # noqa: E402
from .sequences import WeightSeq, ap_constant, operator_norm_estimate, transplant_apply  # noqa: E402

__all__ = [
    "DomainError",
    "JacobiParams",
    "KernelTable",
    "TransplantPair",
    "WeightSeq",
    "ap_constant",
    "kernel_entry",
    "kernel_table",
    "operator_norm_estimate",
    "p_fn",
    "p_fn_derivative",
    "p_table",
    "transplant_apply",
]
