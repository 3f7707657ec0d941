"""The lattice Π(n) of set partitions of {1, ..., n}.

Partitions are ordered by refinement: F ⪯ G when every block of F lies inside
a block of G. The minimum O has only singletons, the maximum N a single block.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import product
from math import factorial
from typing import Callable, Iterable, Iterator, Mapping

from chi_verify.exceptions import CapabilityError, ContractViolation
from chi_verify.subsets import Subset
from chi_verify.utils import full_mask, popcount, sign

log = logging.getLogger("chi_verify")

MAX_PARTITION_N = 12
MAX_TABLE_N = 5


@dataclass(frozen=True)
class SetPartition:
    """A partition of {1, ..., n} into disjoint nonempty blocks.

    Blocks are kept sorted by their least element, so two partitions are equal
    iff their dataclasses are.
    """

    blocks: tuple[Subset, ...]
    n: int

    def __post_init__(self):
        seen = 0
        for b in self.blocks:
            if b.n != self.n:
                raise ContractViolation(f"Block {b} is not over ground set {self.n}")
            if b.bits == 0:
                raise ContractViolation("Blocks must be nonempty")
            if seen & b.bits:
                raise ContractViolation(f"Block {b} overlaps an earlier block")
            seen |= b.bits
        if seen != full_mask(self.n):
            raise ContractViolation(f"Blocks do not cover {{1..{self.n}}}")
        lows = [b.bits & -b.bits for b in self.blocks]
        if lows != sorted(lows):
            raise ContractViolation("Blocks must be sorted by least element")

    @classmethod
    def from_blocks(cls, n: int, blocks: Iterable[Iterable[int]]) -> SetPartition:
        """Build a partition from 1-indexed blocks given in any order."""
        subsets = [Subset.of(n, b) for b in blocks]
        subsets.sort(key=lambda s: s.bits & -s.bits)
        return cls(tuple(subsets), n)

    @classmethod
    def from_masks(cls, n: int, masks: Iterable[int]) -> SetPartition:
        """Build a partition from block bit masks given in any order."""
        ordered = sorted(masks, key=lambda m: m & -m)
        return cls(tuple(Subset(m, n) for m in ordered), n)

    @classmethod
    def finest(cls, n: int) -> SetPartition:
        """Return O, the partition into singletons."""
        return cls.from_masks(n, (1 << i for i in range(n)))

    @classmethod
    def coarsest(cls, n: int) -> SetPartition:
        """Return N, the partition with one block."""
        return cls.from_masks(n, [full_mask(n)])

    @property
    def nu(self) -> int:
        """Return the number of blocks ν(F)."""
        return len(self.blocks)

    @property
    def masks(self) -> tuple[int, ...]:
        """Return the block bit masks."""
        return tuple(b.bits for b in self.blocks)

    def block_of(self, i: int) -> Subset:
        """Return the block containing element i."""
        for b in self.blocks:
            if i in b:
                return b
        raise ContractViolation(f"Element {i} not in {{1..{self.n}}}")

    def __str__(self) -> str:
        return "{" + ",".join(str(b) for b in self.blocks) + "}"


def _same_n(f: SetPartition, g: SetPartition) -> None:
    if f.n != g.n:
        raise ContractViolation(f"Partitions live in different lattices: {f.n} != {g.n}")


def enumerate_partitions(n: int) -> Iterator[SetPartition]:
    """Stream every partition of {1, ..., n} in restricted growth string order.

    The restricted growth string a_1 ... a_n has a_1 = 0 and
    a_i <= max(a_1, ..., a_{i-1}) + 1; element i goes to block a_i.
    """
    if not 1 <= n <= MAX_PARTITION_N:
        raise ContractViolation(f"Partitions are enumerated for 1 <= n <= {MAX_PARTITION_N}")

    def walk(i: int, masks: list[int]) -> Iterator[SetPartition]:
        if i == n:
            yield SetPartition.from_masks(n, masks)
            return
        bit = 1 << i
        for b in range(len(masks)):
            masks[b] |= bit
            yield from walk(i + 1, masks)
            masks[b] ^= bit
        masks.append(bit)
        yield from walk(i + 1, masks)
        masks.pop()

    yield from walk(1, [1])


def refines(f: SetPartition, g: SetPartition) -> bool:
    """Return whether F ⪯ G, i.e. every block of F lies in a block of G."""
    _same_n(f, g)
    return all(any(fb & gb == fb for gb in g.masks) for fb in f.masks)


def mobius(f: SetPartition, g: SetPartition) -> int:
    """Return μ(F, G) from the factorial closed form.

    With b_i the number of blocks of F inside the i-th block of G,
    μ(F, G) = (-1)^{ν(F) - ν(G)} ∏ (b_i - 1)! and μ(F, G) = 0 unless F ⪯ G.
    """
    if not refines(f, g):
        return 0
    value = sign(f.nu - g.nu)
    for gb in g.masks:
        inside = sum(1 for fb in f.masks if fb & gb == fb)
        value *= factorial(inside - 1)
    return value


def interval(f: SetPartition, g: SetPartition) -> list[SetPartition]:
    """Return the interval [F, G] in restricted growth string order."""
    _same_n(f, g)
    if not refines(f, g):
        return []
    return [z for z in _all_partitions(f.n) if refines(f, z) and refines(z, g)]


@lru_cache(maxsize=None)
def _all_partitions(n: int) -> tuple[SetPartition, ...]:
    return tuple(enumerate_partitions(n))


def recursive_mobius(f: SetPartition, g: SetPartition) -> int:
    """Return μ(F, G) from the defining recursion Σ_{z ∈ [F, G]} μ(F, z) = δ(F, G)."""
    if f.n > MAX_TABLE_N:
        raise CapabilityError(f"Recursive Möbius is limited to n <= {MAX_TABLE_N}")
    return _recursive_mobius(f, g)


@lru_cache(maxsize=None)
def _recursive_mobius(f: SetPartition, g: SetPartition) -> int:
    if f == g:
        return 1
    if not refines(f, g):
        return 0
    return -sum(_recursive_mobius(f, z) for z in interval(f, g) if z != g)


# ---------------------------------------------------------------------------- #
#                                Incidence algebra                             #
# ---------------------------------------------------------------------------- #


@dataclass(frozen=True)
class IncidenceValue:
    """One entry f(lower, upper) of an incidence function."""

    lower: SetPartition
    upper: SetPartition
    value: int


@dataclass
class IncidenceTable:
    """A complete incidence function Π(n) × Π(n) -> Z.

    Only pairs with lower ⪯ upper carry values; every other entry is 0.
    """

    n: int
    values: dict[tuple[SetPartition, SetPartition], int] = field(default_factory=dict)

    def __post_init__(self):
        if not 1 <= self.n <= MAX_TABLE_N:
            raise CapabilityError(f"Incidence tables are materialized for n <= {MAX_TABLE_N}")
        for (x, y), v in self.values.items():
            if v != 0 and not refines(x, y):
                raise ContractViolation(f"Nonzero value at {x}, {y} but {x} does not refine {y}")

    @classmethod
    def from_function(
        cls, n: int, f: Callable[[SetPartition, SetPartition], int]
    ) -> IncidenceTable:
        """Tabulate f on every comparable pair of Π(n)."""
        table = cls(n)
        for x in _all_partitions(n):
            for y in _upper_sets(n)[x]:
                v = f(x, y)
                if v:
                    table.values[(x, y)] = v
        return table

    def __getitem__(self, key: tuple[SetPartition, SetPartition]) -> int:
        return self.values.get(key, 0)

    def entries(self) -> Iterator[IncidenceValue]:
        """Iterate over the nonzero entries."""
        for (x, y), v in self.values.items():
            yield IncidenceValue(x, y, v)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, IncidenceTable):
            return NotImplemented
        return self.n == other.n and _nonzero(self.values) == _nonzero(other.values)


def _nonzero(values: Mapping) -> dict:
    return {k: v for k, v in values.items() if v}


@lru_cache(maxsize=None)
def _upper_sets(n: int) -> dict[SetPartition, tuple[SetPartition, ...]]:
    parts = _all_partitions(n)
    return {x: tuple(y for y in parts if refines(x, y)) for x in parts}


def zeta_table(n: int) -> IncidenceTable:
    """Return ζ, the function that is 1 on every comparable pair."""
    return IncidenceTable.from_function(n, lambda x, y: 1)


def delta_table(n: int) -> IncidenceTable:
    """Return δ, the identity of the incidence algebra."""
    return IncidenceTable.from_function(n, lambda x, y: int(x == y))


def mobius_table(n: int) -> IncidenceTable:
    """Return μ from the closed form."""
    return IncidenceTable.from_function(n, mobius)


def convolve(f: IncidenceTable, g: IncidenceTable) -> IncidenceTable:
    """Return f ∗ g with (f ∗ g)(x, y) = Σ_{z ∈ [x, y]} f(x, z) g(z, y)."""
    if f.n != g.n:
        raise ContractViolation(f"Tables over different lattices: {f.n} != {g.n}")
    ups = _upper_sets(f.n)
    out: dict[tuple[SetPartition, SetPartition], int] = {}
    for x in _all_partitions(f.n):
        for z in ups[x]:
            fxz = f[(x, z)]
            if not fxz:
                continue
            for y in ups[z]:
                gzy = g[(z, y)]
                if gzy:
                    out[(x, y)] = out.get((x, y), 0) + fxz * gzy
    return IncidenceTable(f.n, _nonzero(out))


def act(
    f: IncidenceTable, g: Mapping[SetPartition, int]
) -> dict[SetPartition, int]:
    """Return the left action (f ∗ g)(x) = Σ_{y ⪰ x} f(x, y) g(y).

    Möbius inversion reads: if h = ζ ∗ g then g = μ ∗ h.
    """
    ups = _upper_sets(f.n)
    return {
        x: sum(f[(x, y)] * g.get(y, 0) for y in ups[x]) for x in _all_partitions(f.n)
    }


# ---------------------------------------------------------------------------- #
#                          2-refinements and 2-coarsenings                     #
# ---------------------------------------------------------------------------- #


def _splits(block: int) -> list[tuple[int, ...]]:
    # the block itself, then every unordered split into two nonempty parts
    low = block & -block
    rest = block ^ low
    out: list[tuple[int, ...]] = [(block,)]
    sub = rest
    while sub:
        # sub is the part moved away from the least element
        out.append((block ^ sub, sub))
        sub = (sub - 1) & rest
    return out


def enumerate_2_refinements(g: SetPartition) -> Iterator[SetPartition]:
    """Stream every F ⪯ G in which each block of G splits into at most 2 blocks.

    G itself comes first.
    """
    for choice in product(*(_splits(b) for b in g.masks)):
        yield SetPartition.from_masks(g.n, (m for parts in choice for m in parts))


def enumerate_2_coarser(f: SetPartition) -> Iterator[SetPartition]:
    """Stream every G ⪰ F obtained by merging disjoint pairs of blocks of F.

    A coarsening is given by a partial matching of the blocks. The least
    unprocessed block is either left alone or paired with a later one, so
    every matching is produced once. F itself comes first.
    """

    def walk(rest: tuple[int, ...], done: list[int]) -> Iterator[SetPartition]:
        if not rest:
            yield SetPartition.from_masks(f.n, done)
            return
        head, tail = rest[0], rest[1:]
        yield from walk(tail, done + [head])
        for k, partner in enumerate(tail):
            yield from walk(tail[:k] + tail[k + 1 :], done + [head | partner])

    yield from walk(f.masks, [])


def is_cover(f: SetPartition, g: SetPartition) -> bool:
    """Return whether G covers F, i.e. G merges exactly two blocks of F."""
    return refines(f, g) and f.nu == g.nu + 1


def cover_ratio(f: SetPartition, g: SetPartition) -> Fraction:
    """Return μ(O, F) / μ(O, G) for a cover F ⋖ G.

    If G_k = F_i ∪ F_j is the merged block, the ratio is
    -(|F_i| - 1)! (|F_j| - 1)! / (|G_k| - 1)!.
    """
    if not is_cover(f, g):
        raise ContractViolation(f"{g} does not cover {f}")
    merged = next(m for m in g.masks if m not in f.masks)
    fi, fj = (m for m in f.masks if m & merged)
    return Fraction(
        -factorial(popcount(fi) - 1) * factorial(popcount(fj) - 1),
        factorial(popcount(merged) - 1),
    )
