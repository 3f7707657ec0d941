"""Subsets of {1, ..., n}, chains of subsets and signed sums over chains.

A subset is stored as an n-bit vector, bit ``i - 1`` standing for element
``i``. Chains are strictly ascending sequences of subsets and are enumerated
lazily, in lexicographic order of their bit vectors.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Iterable, Iterator, Sequence

from chi_verify.config import CONFIG
from chi_verify.exceptions import ContractViolation
from chi_verify.utils import elements, full_mask, popcount, sign

log = logging.getLogger("chi_verify")


def _check_n(n: int) -> None:
    if not 1 <= n <= CONFIG.max_ground_set:
        raise ContractViolation(
            f"Ground set size must be in [1, {CONFIG.max_ground_set}], got {n}"
        )


@dataclass(frozen=True, order=True)
class Subset:
    """A subset A of {1, ..., n}.

    Example:
    Subset(0b101, 3) is {1, 3}
    """

    bits: int
    n: int

    def __post_init__(self):
        _check_n(self.n)
        if self.bits < 0 or self.bits >> self.n:
            raise ContractViolation(
                f"Bits {self.bits:b} do not describe a subset of {{1..{self.n}}}"
            )

    @classmethod
    def of(cls, n: int, members: Iterable[int]) -> Subset:
        """Build a subset from its 1-indexed members."""
        bits = 0
        for i in members:
            if not 1 <= i <= n:
                raise ContractViolation(f"Element {i} not in {{1..{n}}}")
            bits |= 1 << (i - 1)
        return cls(bits, n)

    @classmethod
    def empty(cls, n: int) -> Subset:
        """Return the empty subset of {1, ..., n}."""
        return cls(0, n)

    @classmethod
    def full(cls, n: int) -> Subset:
        """Return {1, ..., n}."""
        return cls(full_mask(n), n)

    @property
    def members(self) -> list[int]:
        """Return the elements in increasing order."""
        return elements(self.bits)

    def complement(self) -> Subset:
        """Return the complement in {1, ..., n}."""
        return Subset(self.bits ^ full_mask(self.n), self.n)

    def issubset(self, other: Subset) -> bool:
        """Return whether self is contained in other."""
        return self.bits & other.bits == self.bits

    def __contains__(self, i: int) -> bool:
        """Return whether element i belongs to the subset."""
        return 1 <= i <= self.n and bool(self.bits >> (i - 1) & 1)

    def __len__(self) -> int:
        """Return the number of elements."""
        return popcount(self.bits)

    def __str__(self) -> str:
        """Return the subset in set notation, e.g. {1,3}."""
        return "{" + ",".join(str(i) for i in self.members) + "}"


def sym_diff(a: Subset, j: Subset) -> Subset:
    """Return the symmetric difference A △ J.

    Flipping the signs of the variables indexed by J turns the indicator of A
    into the indicator of A △ J.
    """
    if a.n != j.n:
        raise ContractViolation(f"Ground sets differ: {a.n} != {j.n}")
    return Subset(a.bits ^ j.bits, a.n)


@dataclass(frozen=True)
class Chain:
    """A strictly ascending chain A_1 ⊊ A_2 ⊊ ... ⊊ A_k of subsets."""

    sets: tuple[Subset, ...]
    n: int

    def __post_init__(self):
        if len(self.sets) == 0:
            raise ContractViolation("A chain needs at least one set")
        for s in self.sets:
            if s.n != self.n:
                raise ContractViolation(f"Set {s} is not over ground set {self.n}")
        for a, b in zip(self.sets, self.sets[1:]):
            if a == b or not a.issubset(b):
                raise ContractViolation(f"Chain is not strictly ascending at {a}, {b}")

    @classmethod
    def from_masks(cls, n: int, masks: Sequence[int]) -> Chain:
        """Build a chain from a sequence of bit masks."""
        return cls(tuple(Subset(m, n) for m in masks), n)

    @property
    def masks(self) -> tuple[int, ...]:
        """Return the bit vectors of the sets."""
        return tuple(s.bits for s in self.sets)

    def __len__(self) -> int:
        """Return the number of sets k = |A|."""
        return len(self.sets)

    def __str__(self) -> str:
        """Return the chain as A_1 < A_2 < ..."""
        return " < ".join(str(s) for s in self.sets)


def strict_supersets(n: int) -> list[list[int]]:
    """Return, for every mask, its strict supersets in increasing order."""
    full = full_mask(n)
    table: list[list[int]] = []
    for a in range(full + 1):
        free = full ^ a
        sups = []
        sub = free
        # submasks of the free bits, collected then sorted ascending
        while sub:
            sups.append(a | sub)
            sub = (sub - 1) & free
        sups.sort()
        table.append(sups)
    return table


def chain_masks(
    n: int, first: int, last: int | None = None
) -> Iterator[tuple[int, ...]]:
    """Stream chains starting at ``first`` as tuples of bit masks.

    This is the allocation-free core of :func:`enumerate_chains`.
    """
    if last is not None and first & last != first:
        return
    sups = strict_supersets(n)

    def walk(prefix: tuple[int, ...]) -> Iterator[tuple[int, ...]]:
        top = prefix[-1]
        if last is None or top == last:
            yield prefix
        if top == last:
            return
        for b in sups[top]:
            if last is not None and b & last != b:
                continue
            yield from walk(prefix + (b,))

    yield from walk((first,))


def enumerate_chains(
    n: int,
    first: Subset,
    last_constraint: Subset | None = None,
    *,
    allow_empty_first: bool = False,
) -> Iterator[Chain]:
    """Stream every strictly ascending chain with sets[0] = first.

    Parameters
    ----------
    n : int
        Size of the ground set.
    first : Subset
        The first set of every chain. Must be nonempty unless
        ``allow_empty_first`` is set.
    last_constraint : Subset, optional
        If given, only chains ending in this set are produced.
    allow_empty_first : bool
        Allow chains starting at the empty set.

    Yields
    ------
    Chain
        The chains, without duplicates, in lexicographic order of the
        sequence of bit vectors.
    """
    _check_n(n)
    if first.n != n or (last_constraint is not None and last_constraint.n != n):
        raise ContractViolation("Chain endpoints must live in the same ground set")
    if first.bits == 0 and not allow_empty_first:
        raise ContractViolation("The first set of the chain must be nonempty")
    last = None if last_constraint is None else last_constraint.bits
    for masks in chain_masks(n, first.bits, last):
        yield Chain.from_masks(n, masks)


class ChainSumVariant(Enum):
    """The constrained chain families summed over in the chain-sum lemma."""

    # 1 ∈ A_1 and A_k = {1, ..., n}
    FIRST_CONTAINS_1_LAST_FULL = 1
    # A_1 = ∅ and A_k = {1, ..., n}
    FIRST_EMPTY_LAST_FULL = 2
    # as 1, restricted to chains containing a fixed chain B
    CONTAINS_SUBCHAIN_B = 3


def _check_subchain(n: int, b: Chain | None) -> Chain:
    if b is None:
        raise ContractViolation("Variant CONTAINS_SUBCHAIN_B needs a chain B")
    if b.n != n:
        raise ContractViolation(f"Chain B lives in {b.n}, not {n}")
    if 1 not in b.sets[0]:
        raise ContractViolation("Chain B must satisfy 1 ∈ B_1")
    return b


def _chains_one_in_first_to_full(n: int) -> Iterator[tuple[int, ...]]:
    full = full_mask(n)
    for first in range(1, full + 1, 2):  # odd masks contain element 1
        yield from chain_masks(n, first, full)


def chain_sign_sum(
    n: int, variant: ChainSumVariant, b: Chain | None = None
) -> int:
    """Return the brute-force sum of (-1)^{|A|} over a chain family.

    Parameters
    ----------
    n : int
        Size of the ground set.
    variant : ChainSumVariant
        Which family of chains to sum over.
    b : Chain, optional
        The subchain all summed chains must contain, for
        ``CONTAINS_SUBCHAIN_B`` only.
    """
    _check_n(n)
    full = full_mask(n)
    total = 0
    if variant is ChainSumVariant.FIRST_CONTAINS_1_LAST_FULL:
        for masks in _chains_one_in_first_to_full(n):
            total += sign(len(masks))
    elif variant is ChainSumVariant.FIRST_EMPTY_LAST_FULL:
        for masks in chain_masks(n, 0, full):
            total += sign(len(masks))
    else:
        required = set(_check_subchain(n, b).masks)
        for masks in _chains_one_in_first_to_full(n):
            if required.issubset(masks):
                total += sign(len(masks))
    return total


def chain_sign_closed_form(
    n: int, variant: ChainSumVariant, b: Chain | None = None
) -> int:
    """Return the closed form of :func:`chain_sign_sum`."""
    _check_n(n)
    if variant is ChainSumVariant.FIRST_CONTAINS_1_LAST_FULL:
        return -1 if n == 1 else 0
    if variant is ChainSumVariant.FIRST_EMPTY_LAST_FULL:
        return sign(n - 1)
    b = _check_subchain(n, b)
    return sign(n) if b.sets[0].bits == 1 else 0


def enumerate_antichains(
    n: int,
    prune: Callable[[tuple[int, ...]], bool] | None = None,
    *,
    include_empty_set: bool = True,
) -> Iterator[tuple[int, ...]]:
    """Stream the antichains of the Boolean lattice of {1, ..., n}.

    The search is depth-first over the subsets ordered by decreasing size.
    The empty antichain is produced first.

    Parameters
    ----------
    n : int
        Size of the ground set.
    prune : callable, optional
        Called with every candidate antichain (sorted tuple of masks); a
        ``False`` answer drops the candidate and all its extensions, so the
        predicate must be inherited by sub-antichains.
    include_empty_set : bool
        Whether the empty subset is a candidate member. With it the counts
        are the Dedekind numbers 3, 6, 20, 168, 7581 for n = 1..5.

    Yields
    ------
    tuple[int, ...]
        The antichain as a sorted tuple of bit masks.
    """
    _check_n(n)
    lowest = 0 if include_empty_set else 1
    candidates = sorted(range(lowest, full_mask(n) + 1), key=lambda m: (-popcount(m), m))

    def walk(start: int, chosen: tuple[int, ...]) -> Iterator[tuple[int, ...]]:
        yield tuple(sorted(chosen))
        for idx in range(start, len(candidates)):
            s = candidates[idx]
            # chosen sets are at least as large, so only s ⊆ c can clash
            if any(s & c == s for c in chosen):
                continue
            extended = chosen + (s,)
            if prune is not None and not prune(tuple(sorted(extended))):
                continue
            yield from walk(idx + 1, extended)

    yield from walk(0, ())
