"""Exact two-phase simplex over the rationals.

A small dense tableau solver for ``min c·x`` subject to linear rows and
``x >= 0``. All arithmetic is done with :class:`fractions.Fraction`, pivots
follow Bland's rule, so the solver terminates and optimal values on a
boundary are decided exactly.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Literal, Sequence

from chi_verify.exceptions import ContractViolation

log = logging.getLogger("chi_verify")

Sense = Literal["<=", ">=", "=="]


class LPStatus(Enum):
    """Outcome of a linear program."""

    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


@dataclass(frozen=True)
class Row:
    """A constraint ``coeffs · x <sense> rhs``."""

    coeffs: tuple[Fraction, ...]
    sense: Sense
    rhs: Fraction

    @classmethod
    def of(cls, coeffs: Sequence[int | Fraction], sense: Sense, rhs: int | Fraction) -> Row:
        """Build a row from integers or fractions."""
        if sense not in ("<=", ">=", "=="):
            raise ContractViolation(f"Unknown constraint sense {sense!r}")
        return cls(tuple(Fraction(a) for a in coeffs), sense, Fraction(rhs))


@dataclass(frozen=True)
class LPResult:
    """Optimal value and point, present iff the status is OPTIMAL."""

    status: LPStatus
    value: Fraction | None = None
    x: tuple[Fraction, ...] | None = None


class _Tableau:
    def __init__(self, rows: list[list[Fraction]], basis: list[int], width: int):
        # each row holds `width` coefficients followed by its rhs
        self.rows = rows
        self.basis = basis
        self.width = width
        self.obj: list[Fraction] = []
        self.pivots = 0

    def set_objective(self, cost: Sequence[Fraction]) -> None:
        obj = list(cost) + [Fraction(0)]
        for r, b in zip(self.rows, self.basis):
            cb = cost[b]
            if cb:
                for j in range(self.width + 1):
                    obj[j] -= cb * r[j]
        self.obj = obj

    def pivot(self, i: int, j: int) -> None:
        row = self.rows[i]
        p = row[j]
        if p != 1:
            self.rows[i] = row = [a / p for a in row]
        for k, other in enumerate(self.rows):
            if k != i and other[j]:
                f = other[j]
                self.rows[k] = [a - f * b for a, b in zip(other, row)]
        if self.obj[j]:
            f = self.obj[j]
            self.obj = [a - f * b for a, b in zip(self.obj, row)]
        self.basis[i] = j
        self.pivots += 1

    def run(self, allowed: Sequence[bool]) -> LPStatus:
        while True:
            # Bland: entering column is the least index with negative reduced cost
            entering = next(
                (j for j in range(self.width) if allowed[j] and self.obj[j] < 0), None
            )
            if entering is None:
                return LPStatus.OPTIMAL
            best: tuple[Fraction, int, int] | None = None
            for i, r in enumerate(self.rows):
                a = r[entering]
                if a > 0:
                    cand = (r[-1] / a, self.basis[i], i)
                    if best is None or cand < best:
                        best = cand
            if best is None:
                return LPStatus.UNBOUNDED
            self.pivot(best[2], entering)

    @property
    def value(self) -> Fraction:
        return -self.obj[-1]


def minimize(cost: Sequence[int | Fraction], rows: Sequence[Row]) -> LPResult:
    """Minimize ``cost · x`` over ``x >= 0`` subject to ``rows``.

    Parameters
    ----------
    cost : Sequence[int | Fraction]
        Objective coefficients, one per variable.
    rows : Sequence[Row]
        The constraints. Every row must have one coefficient per variable.

    Returns
    -------
    LPResult
        The status, and for OPTIMAL the exact optimal value and a vertex.
    """
    nvar = len(cost)
    for r in rows:
        if len(r.coeffs) != nvar:
            raise ContractViolation(
                f"Row has {len(r.coeffs)} coefficients, expected {nvar}"
            )

    # normalize to rhs >= 0; a `>=` row with rhs 0 becomes a `<=` row
    normal: list[tuple[list[Fraction], Sense, Fraction]] = []
    for r in rows:
        coeffs, sense, rhs = list(r.coeffs), r.sense, r.rhs
        if rhs < 0 or (rhs == 0 and sense == ">="):
            coeffs = [-a for a in coeffs]
            rhs = -rhs
            sense = {"<=": ">=", ">=": "<=", "==": "=="}[sense]
        normal.append((coeffs, sense, rhs))

    n_slack = sum(1 for _, s, _ in normal if s != "==")
    n_art = sum(1 for _, s, _ in normal if s != "<=")
    width = nvar + n_slack + n_art
    zero = Fraction(0)

    table: list[list[Fraction]] = []
    basis: list[int] = []
    slack = nvar
    art = nvar + n_slack
    for coeffs, sense, rhs in normal:
        row = coeffs + [zero] * (n_slack + n_art) + [rhs]
        if sense == "<=":
            row[slack] = Fraction(1)
            basis.append(slack)
            slack += 1
        else:
            if sense == ">=":
                row[slack] = Fraction(-1)
                slack += 1
            row[art] = Fraction(1)
            basis.append(art)
            art += 1
        table.append(row)

    tab = _Tableau(table, basis, width)
    is_art = [j >= nvar + n_slack for j in range(width)]

    if n_art:
        tab.set_objective([Fraction(int(a)) for a in is_art])
        tab.run([True] * width)
        if tab.value > 0:
            log.debug(f"LP infeasible after {tab.pivots} pivots")
            return LPResult(LPStatus.INFEASIBLE)
        # drive the remaining (zero-level) artificials out of the basis
        i = 0
        while i < len(tab.rows):
            if is_art[tab.basis[i]]:
                j = next(
                    (j for j in range(width) if not is_art[j] and tab.rows[i][j]), None
                )
                if j is None:
                    # redundant row
                    del tab.rows[i]
                    del tab.basis[i]
                    continue
                tab.pivot(i, j)
            i += 1

    allowed = [not a for a in is_art]
    tab.set_objective([Fraction(c) for c in cost] + [zero] * (n_slack + n_art))
    status = tab.run(allowed)
    if status is LPStatus.UNBOUNDED:
        return LPResult(status)

    x = [zero] * width
    for r, b in zip(tab.rows, tab.basis):
        x[b] = r[-1]
    log.debug(f"LP optimum {tab.value} after {tab.pivots} pivots")
    return LPResult(LPStatus.OPTIMAL, tab.value, tuple(x[:nvar]))
