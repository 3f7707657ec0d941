"""Numerical check of the identity in its integral form.

For triangular test functions f̂_i(u) = max(0, 1 - |u| / δ_i) both sides,
Σ_F C(F) and E(O), are computed by tensor trapezoid quadrature on a grid
with spacing h = 1 / grid. Since grid is a power of two and the supports are
dyadic, u = 1 lies on the grid; there χ̃ takes the midpoint value 1/2.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from itertools import permutations
from math import ceil
from typing import Sequence

import numpy as np
from scipy.integrate import trapezoid

from chi_verify.config import CONFIG
from chi_verify.exceptions import CapabilityError, ContractViolation
from chi_verify.partitions import SetPartition, enumerate_partitions, mobius
from chi_verify.subsets import Subset
from chi_verify.utils import fmt_fraction, popcount, sign

log = logging.getLogger("chi_verify")

MAX_NUMERIC_N = 3


@dataclass(frozen=True)
class TestFunctionSpec:
    """Supports δ_1, ..., δ_n of the triangles and the quadrature grid."""

    # not a pytest test class
    __test__ = False

    supports: tuple[Fraction, ...]
    grid: int = CONFIG.grid

    def __post_init__(self):
        if not 1 <= len(self.supports) <= MAX_NUMERIC_N:
            raise CapabilityError(f"Quadrature is done for 1 <= n <= {MAX_NUMERIC_N}")
        if any(d <= 0 for d in self.supports) or sum(self.supports) >= 2:
            raise ContractViolation(
                f"Supports must be positive with sum below 2, got {self.describe_supports()}"
            )
        if self.grid < 1 or self.grid & (self.grid - 1):
            raise ContractViolation(f"grid must be a power of two, got {self.grid}")

    @property
    def n(self) -> int:
        """Return the number of test functions."""
        return len(self.supports)

    @property
    def h(self) -> float:
        """Return the grid spacing."""
        return 1.0 / self.grid

    def refined(self) -> TestFunctionSpec:
        """Return the same supports on a grid of half the spacing."""
        return TestFunctionSpec(self.supports, 2 * self.grid)

    def describe_supports(self) -> str:
        """Return the supports as a comma separated list."""
        return ",".join(fmt_fraction(d) for d in self.supports)


def parse_supports(text: str) -> tuple[Fraction, ...]:
    """Parse ``"3/8,1/4"`` into fractions."""
    try:
        return tuple(Fraction(s.strip()) for s in text.split(",") if s.strip())
    except (ValueError, ZeroDivisionError) as e:
        raise ContractViolation(f"Cannot parse supports {text!r}") from e


def sampled_hat(i: int, spec: TestFunctionSpec) -> np.ndarray:
    """Return f̂_i sampled at u = k h for k = -m..m, m = ceil(δ_i / h).

    The end points lie on or beyond the support, so they are 0.
    """
    if not 1 <= i <= spec.n:
        raise ContractViolation(f"Index {i} outside 1..{spec.n}")
    delta = float(spec.supports[i - 1])
    m = ceil(spec.supports[i - 1] * spec.grid)
    u = np.arange(-m, m + 1) * spec.h
    return np.maximum(0.0, 1.0 - np.abs(u) / delta)


def block_hat(block: Subset, spec: TestFunctionSpec) -> np.ndarray:
    """Return the transform of ∏_{i ∈ block} f_i, a convolution of the f̂_i.

    Samples are centered like :func:`sampled_hat`; since all samples vanish
    at the ends, h times the discrete convolution is the trapezoid rule.
    """
    if block.n != spec.n or not block.bits:
        raise ContractViolation(f"{block} is not a nonempty block of {{1..{spec.n}}}")
    hats = [sampled_hat(i, spec) for i in block.members]
    return reduce(lambda a, b: spec.h * np.convolve(a, b), hats)


def _chi(k: np.ndarray, grid: int) -> np.ndarray:
    # indicator of [-1, 1] with 1/2 at the end points; k in grid units
    a = np.abs(k)
    return np.where(a < grid, 1.0, np.where(a == grid, 0.5, 0.0))


def _chi_tilde(k: np.ndarray, grid: int) -> np.ndarray:
    # indicator of (1, ∞) with 1/2 at 1
    return np.where(k > grid, 1.0, np.where(k == grid, 0.5, 0.0))


def _integrate(values: np.ndarray, h: float) -> float:
    for _ in range(values.ndim):
        values = trapezoid(values, dx=h, axis=0)
    return float(values)


def _chi_star_grid(idx: Sequence[np.ndarray], grid: int) -> np.ndarray:
    total = sum(idx)
    out = np.zeros(idx[0].shape)
    for rest in permutations(range(1, len(idx))):
        term = np.ones(idx[0].shape)
        prefix = np.zeros(idx[0].shape, dtype=idx[0].dtype)
        for pos in (0, *rest):
            prefix = prefix + idx[pos]
            # u_π(1) + ... + u_π(i) - u_π(i+1) - ... - u_π(k)
            term *= _chi(2 * prefix - total, grid)
        out += term
    return out


def integral_C(f: SetPartition, spec: TestFunctionSpec) -> float:
    """Return C(F) = ½ ∫ (μ(F, N) + (-1)^ν χ*_ν(u)) ∏_l Ĥ_l(u_l) du.

    Ĥ_l is the block transform of the l-th block and ν = ν(F) <= 3.
    """
    if f.n != spec.n:
        raise ContractViolation(f"Partition lives in {f.n}, spec in {spec.n}")
    if f.nu > MAX_NUMERIC_N:
        raise CapabilityError(f"Quadrature dimension {f.nu} exceeds {MAX_NUMERIC_N}")
    hats = [block_hat(b, spec) for b in f.blocks]
    axes = [np.arange(-(len(g) // 2), len(g) // 2 + 1) for g in hats]
    idx = np.meshgrid(*axes, indexing="ij")
    weight = reduce(np.multiply.outer, hats)
    mu = mobius(f, SetPartition.coarsest(f.n))
    integrand = 0.5 * (mu + sign(f.nu) * _chi_star_grid(idx, spec.grid)) * weight
    return _integrate(integrand, spec.h)


def integral_E(spec: TestFunctionSpec) -> float:
    """Return E(O) = ∫_{u >= 0} Σ_I (-1)^{|I|+1} χ̃(Σ_I u_i - Σ_{I^c} u_i) ∏ f̂_i(u_i) du."""
    n = spec.n
    hats = [sampled_hat(i, spec) for i in range(1, n + 1)]
    # the nonnegative halves, starting at u = 0
    halves = [g[len(g) // 2 :] for g in hats]
    idx = np.meshgrid(*(np.arange(len(g)) for g in halves), indexing="ij")
    total = np.zeros(idx[0].shape)
    for mask in range(1 << n):
        k = sum(x if mask >> i & 1 else -x for i, x in enumerate(idx))
        total += sign(popcount(mask) + 1) * _chi_tilde(k, spec.grid)
    return _integrate(total * reduce(np.multiply.outer, halves), spec.h)


def lhs_integral(spec: TestFunctionSpec) -> float:
    """Return Σ_F C(F) over all partitions of {1, ..., n}."""
    return sum(integral_C(f, spec) for f in enumerate_partitions(spec.n))


@dataclass(frozen=True)
class NumericReport:
    """Both sides of the identity and the grid-calibrated tolerance."""

    spec: TestFunctionSpec
    lhs: float
    rhs: float
    tolerance: float

    @property
    def gap(self) -> float:
        """Return lhs - rhs."""
        return self.lhs - self.rhs

    @property
    def passed(self) -> bool:
        """Return whether the gap is within tolerance."""
        return abs(self.gap) <= self.tolerance

    def describe(self) -> str:
        """Return a human readable summary."""
        return (
            f"n={self.spec.n} supports={self.spec.describe_supports()} grid={self.spec.grid}\n"
            f"  sum_F C(F) = {self.lhs:.12g}\n"
            f"  E(O)       = {self.rhs:.12g}\n"
            f"  gap        = {self.gap:.3e} (tolerance {self.tolerance:.3e})"
        )


def check_identity(spec: TestFunctionSpec, tol: float = CONFIG.tol) -> NumericReport:
    """Compare both sides at grid h and h/2.

    The tolerance is four times the larger change between the two grids,
    floored at ``tol`` for round-off. The reported sides are those of the
    finer grid.
    """
    fine = spec.refined()
    lhs0, rhs0 = lhs_integral(spec), integral_E(spec)
    lhs1, rhs1 = lhs_integral(fine), integral_E(fine)
    tolerance = max(4 * max(abs(lhs1 - lhs0), abs(rhs1 - rhs0)), tol)
    log.debug(f"grid {spec.grid}: lhs={lhs0:.6g} rhs={rhs0:.6g}; grid {fine.grid}: lhs={lhs1:.6g} rhs={rhs1:.6g}")
    return NumericReport(fine, lhs1, rhs1, tolerance)
