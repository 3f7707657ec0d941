from .algebra import FormalSum, Term, make_term
from .builder import (
    IdentityBuilder,
    build_lhs_canonical,
    build_lhs_direct,
    build_rhs,
    build_simp_forms,
)
from .config import CONFIG
from .data import Verdict, VerdictKind
from .verifier import verify_by_cancellation, verify_by_valuations
from .zero_oracle import ZeroCache, is_zero

__all__ = [
    "CONFIG",
    "FormalSum",
    "IdentityBuilder",
    "Term",
    "Verdict",
    "VerdictKind",
    "ZeroCache",
    "build_lhs_canonical",
    "build_lhs_direct",
    "build_rhs",
    "build_simp_forms",
    "is_zero",
    "make_term",
    "verify_by_cancellation",
    "verify_by_valuations",
]
