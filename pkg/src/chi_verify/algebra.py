"""Formal sums of products of the threshold indicators χ̃_A.

χ̃_A stands for the indicator of Σ_{i ∈ A} u_i - Σ_{i ∉ A} u_i > 1. On the
region {u_i > 0} the relation χ̃_A χ̃_B = χ̃_A holds whenever A ⊆ B, so a
product is determined by the containment-minimal sets of its factors. Those
form an antichain, which is the canonical form of a :class:`Term`.

Only absorption is applied here. Removing products that vanish identically is
the job of :mod:`chi_verify.zero_oracle`.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from typing import IO, Iterable, Iterator, Mapping

from chi_verify.exceptions import ContractViolation
from chi_verify.subsets import Subset
from chi_verify.utils import popcount

log = logging.getLogger("chi_verify")

Masks = tuple[int, ...]


def absorb(masks: Iterable[int]) -> Masks:
    """Return the containment-minimal masks, deduplicated and sorted."""
    kept: list[int] = []
    for m in sorted(set(masks), key=popcount):
        if not any(k & m == k for k in kept):
            kept.append(m)
    kept.sort()
    return tuple(kept)


@dataclass(frozen=True, order=True)
class Term:
    """The product χ̃_{A_1} ... χ̃_{A_k} in canonical antichain form.

    The empty product is the constant 1.
    """

    masks: Masks
    n: int

    def __post_init__(self):
        if absorb(self.masks) != self.masks:
            raise ContractViolation(
                f"Sets {list(self.masks)} are not a sorted antichain, use make_term"
            )
        if any(m >> self.n for m in self.masks):
            raise ContractViolation(f"Set outside {{1..{self.n}}} in {list(self.masks)}")

    @property
    def sets(self) -> list[Subset]:
        """Return the factors as subsets."""
        return [Subset(m, self.n) for m in self.masks]

    @property
    def is_one(self) -> bool:
        """Return whether the term is the empty product."""
        return not self.masks

    def __len__(self) -> int:
        return len(self.masks)

    def __str__(self) -> str:
        if not self.masks:
            return "1"
        return "".join(f"x{s}" for s in self.sets)


def make_term(raw_sets: Iterable[Subset], n: int | None = None) -> Term:
    """Return the canonical term of a product of generators.

    Parameters
    ----------
    raw_sets : Iterable[Subset]
        The index sets of the factors, in any order and with repeats.
    n : int, optional
        Ground set size, required only for the empty product.
    """
    raw = list(raw_sets)
    ns = {s.n for s in raw}
    if n is not None:
        ns.add(n)
    if len(ns) != 1:
        raise ContractViolation(
            "Ground set size is ambiguous" if not ns else f"Mixed ground sets {sorted(ns)}"
        )
    return Term(absorb(s.bits for s in raw), ns.pop())


class FormalSum:
    """An integer combination of canonical terms over a common ground set.

    Coefficients are Python integers and never zero. Terms are stored by their
    mask tuples; :meth:`items` hands out :class:`Term` objects.
    """

    __slots__ = ("n", "terms")

    def __init__(self, n: int, terms: Mapping[Masks, int] | None = None):
        self.n = n
        self.terms: dict[Masks, int] = {}
        if terms:
            for key, c in terms.items():
                self.add_term(absorb(key), c)

    # ---------------------------------------------------------------- #
    #                          constructors                            #
    # ---------------------------------------------------------------- #

    @classmethod
    def zero(cls, n: int) -> FormalSum:
        """Return the empty sum."""
        return cls(n)

    @classmethod
    def one(cls, n: int) -> FormalSum:
        """Return the constant 1."""
        return cls(n, {(): 1})

    @classmethod
    def generator(cls, a: Subset, coeff: int = 1) -> FormalSum:
        """Return coeff · χ̃_A."""
        return cls(a.n, {(a.bits,): coeff})

    @classmethod
    def from_terms(cls, n: int, terms: Iterable[tuple[Term, int]]) -> FormalSum:
        """Collect (term, coefficient) pairs into a sum."""
        out = cls(n)
        for t, c in terms:
            out._check_n(t.n)
            out.add_term(t.masks, c)
        return out

    # ---------------------------------------------------------------- #
    #                           accumulation                           #
    # ---------------------------------------------------------------- #

    def add_term(self, key: Masks, coeff: int) -> None:
        """Add coeff times a canonical term in place, dropping zeros."""
        if not coeff:
            return
        c = self.terms.get(key, 0) + coeff
        if c:
            self.terms[key] = c
        else:
            del self.terms[key]

    def iadd(self, other: FormalSum, factor: int = 1) -> FormalSum:
        """Add factor · other in place and return self."""
        self._check_n(other.n)
        for key, c in other.terms.items():
            self.add_term(key, factor * c)
        return self

    def copy(self) -> FormalSum:
        """Return a shallow copy."""
        out = FormalSum(self.n)
        out.terms = dict(self.terms)
        return out

    # ---------------------------------------------------------------- #
    #                            ring ops                              #
    # ---------------------------------------------------------------- #

    def add(self, other: FormalSum) -> FormalSum:
        """Return self + other."""
        return self.copy().iadd(other)

    def scale(self, c: int) -> FormalSum:
        """Return c · self."""
        out = FormalSum(self.n)
        if c:
            out.terms = {k: c * v for k, v in self.terms.items()}
        return out

    def multiply(self, other: FormalSum) -> FormalSum:
        """Return the product, each monomial canonicalized by absorption."""
        self._check_n(other.n)
        out = FormalSum(self.n)
        for ka, ca in self.terms.items():
            for kb, cb in other.terms.items():
                out.add_term(absorb(ka + kb), ca * cb)
        return out

    def apply_sym_diff(self, j: Subset) -> FormalSum:
        """Replace every χ̃_A by χ̃_{A △ J} and re-canonicalize.

        Absorption is only valid on the positive orthant, so this map does not
        commute with multiplication of canonical terms. Shift factors before
        multiplying them.
        """
        self._check_n(j.n)
        out = FormalSum(self.n)
        for key, c in self.terms.items():
            out.add_term(absorb(m ^ j.bits for m in key), c)
        return out

    def __add__(self, other: FormalSum) -> FormalSum:
        return self.add(other)

    def __sub__(self, other: FormalSum) -> FormalSum:
        return self.copy().iadd(other, -1)

    def __neg__(self) -> FormalSum:
        return self.scale(-1)

    def __mul__(self, other: FormalSum | int) -> FormalSum:
        if isinstance(other, int):
            return self.scale(other)
        return self.multiply(other)

    __rmul__ = __mul__

    # ---------------------------------------------------------------- #
    #                            inspection                            #
    # ---------------------------------------------------------------- #

    def items(self) -> Iterator[tuple[Term, int]]:
        """Iterate over (term, coefficient) in canonical order."""
        for key in sorted(self.terms, key=lambda k: (len(k), k)):
            yield Term(key, self.n), self.terms[key]

    def coefficient(self, t: Term) -> int:
        """Return the coefficient of a term, 0 if absent."""
        return self.terms.get(t.masks, 0)

    def __len__(self) -> int:
        return len(self.terms)

    def __bool__(self) -> bool:
        return bool(self.terms)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FormalSum):
            return NotImplemented
        return self.n == other.n and self.terms == other.terms

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        return f"FormalSum(n={self.n}, terms={len(self.terms)})"

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for t, c in self.items():
            parts.append(f"{'+' if c > 0 else '-'} {abs(c)}*{t}")
        return " ".join(parts).lstrip("+ ")

    def _check_n(self, n: int) -> None:
        if n != self.n:
            raise ContractViolation(f"Ground sets differ: {self.n} != {n}")


# ---------------------------------------------------------------------------- #
#                                  Term dumps                                  #
# ---------------------------------------------------------------------------- #


def dump_terms(s: FormalSum, fp: IO[str]) -> int:
    """Write one JSON object per term and return the number of lines.

    Each line reads ``{"coeff": "<int>", "sets": [<masks>], "n": <n>}``.
    """
    count = 0
    for t, c in s.items():
        fp.write(json.dumps({"coeff": str(c), "sets": list(t.masks), "n": s.n}) + "\n")
        count += 1
    return count


def load_terms(fp: IO[str]) -> FormalSum:
    """Read a sum written by :func:`dump_terms`."""
    out: FormalSum | None = None
    for line_no, line in enumerate(fp, start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
            n = int(record["n"])
            key = tuple(int(m) for m in record["sets"])
            coeff = int(record["coeff"])
        except (ValueError, KeyError, TypeError) as e:
            raise ContractViolation(f"Line {line_no}: malformed term record") from e
        if out is None:
            out = FormalSum(n)
        out._check_n(n)
        out.add_term(Term(key, n).masks, coeff)
    if out is None:
        raise ContractViolation("No terms to load, the ground set size is unknown")
    return out
