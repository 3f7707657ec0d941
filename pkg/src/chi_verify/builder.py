"""Build both sides of the Fourier identity as formal sums.

The right hand side is E'(O), a signed sum of 2^n single indicators. The left
hand side has two constructions:

* the canonical form, a double sum over J ⊆ {2, ..., n} and chains
  {1} = A_1 ⊊ ... ⊊ A_k with products of χ̃_{A_i △ J} + χ̃_{A_i^c △ J}. This is
  the production path; every J is an independent shard.
* the direct form, summing C'(F) over all partitions F via the permutation
  sums χ*. It grows factorially and serves as a cross-check for small n.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from itertools import permutations
from math import comb
from multiprocessing import Pool
from typing import Iterator, Sequence

from chi_verify.algebra import FormalSum, Masks
from chi_verify.exceptions import CapabilityError, ContractViolation, ExpansionError
from chi_verify.partitions import SetPartition, enumerate_partitions, mobius
from chi_verify.subsets import Subset, strict_supersets
from chi_verify.utils import elements, full_mask, popcount, sign, submasks
from chi_verify.zero_oracle import ZeroCache, is_zero_key

log = logging.getLogger("chi_verify")

MAX_CANONICAL_N = 8
MAX_DIRECT_N = 6


@dataclass
class BuildStats:
    """Counters collected while expanding the canonical form."""

    # monomials before absorption, summed over the visited chains
    raw_monomials: int = 0
    # products dropped by zero elimination
    eliminated: int = 0
    chains: int = 0
    shards: int = 0
    lhs_terms: int = 0

    def merge(self, other: BuildStats) -> None:
        """Add the counters of a finished shard."""
        self.raw_monomials += other.raw_monomials
        self.eliminated += other.eliminated
        self.chains += other.chains
        self.shards += other.shards


def _times_generator(key: Masks, g: int) -> Masks:
    # multiply a canonical term by χ̃_g
    for k in key:
        if k & g == k:
            return key
    return tuple(sorted([k for k in key if g & k != g] + [g]))


def _check_shift(n: int, j: int) -> None:
    if j & 1 or j >> n:
        raise ContractViolation(f"J must be a subset of {{2..{n}}}, got {elements(j)}")


def shifts(n: int) -> list[int]:
    """Return the masks of all J ⊆ {2, ..., n} in increasing order."""
    return list(submasks(full_mask(n) ^ 1))


@dataclass
class _Shard:
    n: int
    j: int
    zero_elim: bool
    cache: ZeroCache | None
    sups: list[list[int]]
    stats: BuildStats = field(default_factory=BuildStats)

    def run(self) -> FormalSum:
        acc = FormalSum(self.n)
        self._walk(1, 1, {(): 1}, acc)
        self.stats.shards = 1
        return acc

    def _walk(self, top: int, length: int, partial: dict[Masks, int], acc: FormalSum) -> None:
        n, j = self.n, self.j
        full = full_mask(n)
        gens = (top ^ j, (full ^ top) ^ j)
        nxt: dict[Masks, int] = {}
        for key, c in partial.items():
            for g in gens:
                k2 = _times_generator(key, g)
                nxt[k2] = nxt.get(k2, 0) + c
        self.stats.chains += 1
        self.stats.raw_monomials += 1 << length
        if self.zero_elim:
            for k2 in [k for k in nxt if is_zero_key(n, k, self.cache)]:
                del nxt[k2]
                self.stats.eliminated += 1
        if not nxt:
            return
        s = sign(n - length)
        for k2, c in nxt.items():
            acc.add_term(k2, s * c)
        for b in self.sups[top]:
            self._walk(b, length + 1, nxt, acc)


# worker processes keep a local cache seeded from the parent's snapshot
_WORKER_CACHE: ZeroCache | None = None


def _init_worker(entries: dict) -> None:
    global _WORKER_CACHE
    _WORKER_CACHE = ZeroCache.in_memory(entries)


def _run_shard(args: tuple[int, int, bool]) -> tuple[int, dict, BuildStats, dict]:
    n, j, zero_elim = args
    shard = _Shard(n, j, zero_elim, _WORKER_CACHE, strict_supersets(n))
    terms = shard.run().terms
    fresh = _WORKER_CACHE.take_fresh() if _WORKER_CACHE is not None else {}
    return j, terms, shard.stats, fresh


class IdentityBuilder:
    """Expand the sides of the identity for one ground set size.

    Parameters
    ----------
    n : int
        Size of the ground set.
    zero_elim : bool
        Drop identically-zero products while expanding the canonical form.
    cache : ZeroCache, optional
        Verdict cache for zero elimination; an in-memory one is used if
        omitted.
    workers : int
        Number of processes for the J shards, 1 runs in-process.
    """

    def __init__(
        self,
        n: int,
        zero_elim: bool = True,
        cache: ZeroCache | None = None,
        workers: int = 1,
    ):
        if not 1 <= n <= MAX_CANONICAL_N:
            raise CapabilityError(f"The identity is built for 1 <= n <= {MAX_CANONICAL_N}")
        if workers < 1:
            raise ContractViolation(f"workers must be positive, got {workers}")
        self.n = n
        self.zero_elim = zero_elim
        self.cache = cache if cache is not None else ZeroCache.in_memory()
        self.workers = workers
        self.stats = BuildStats()
        self._sups: list[list[int]] | None = None

    @property
    def sups(self) -> list[list[int]]:
        """Return the strict-superset table of the ground set."""
        if self._sups is None:
            self._sups = strict_supersets(self.n)
        return self._sups

    def rhs(self) -> FormalSum:
        """Return E'(O) = Σ_I (-1)^{|I|+1} χ̃_I over all I ⊆ {1, ..., n}."""
        out = FormalSum(self.n)
        for i in range(full_mask(self.n) + 1):
            out.add_term((i,), sign(popcount(i) + 1))
        return out

    def inner_sum(self, j: int) -> FormalSum:
        """Return the chain sum of the canonical form at a fixed J.

        That is Σ over chains with A_1 = {1} of
        (-1)^{n - k} ∏_i (χ̃_{A_i △ J} + χ̃_{A_i^c △ J}).
        """
        _check_shift(self.n, j)
        shard = _Shard(self.n, j, self.zero_elim, self.cache, self.sups)
        out = shard.run()
        self.stats.merge(shard.stats)
        return out

    def _shard_results(self) -> Iterator[tuple[int, dict, BuildStats]]:
        js = shifts(self.n)
        if self.workers == 1 or len(js) == 1:
            for j in js:
                shard = _Shard(self.n, j, self.zero_elim, self.cache, self.sups)
                yield j, shard.run().terms, shard.stats
            return
        tasks = [(self.n, j, self.zero_elim) for j in js]
        with Pool(
            min(self.workers, len(js)),
            initializer=_init_worker,
            initargs=(self.cache.snapshot(),),
        ) as pool:
            # imap keeps J order, so merging is deterministic
            for j, terms, stats, fresh in pool.imap(_run_shard, tasks):
                self.cache.merge(fresh)
                yield j, terms, stats

    def lhs_canonical(self) -> FormalSum:
        """Return the canonical left hand side, summed over all J shards."""
        total = FormalSum(self.n)
        done = 0
        count = 1 << (self.n - 1)
        for j, terms, stats in self._shard_results():
            for key, c in terms.items():
                total.add_term(key, c)
            self.stats.merge(stats)
            done += 1
            log.info(
                f"n={self.n} J={{{','.join(map(str, elements(j)))}}} done "
                f"({done}/{count}): {len(terms)} terms, {stats.eliminated} eliminated"
            )
        self.stats.lhs_terms = len(total)
        return total

    def lhs_direct(self) -> FormalSum:
        """Return Σ_F C'(F) over all partitions F of {1, ..., n}.

        Twice C'(F) is Σ_{J ⊆ {1..n}} (μ(F, N) + (-1)^{ν(F)} χ*_{ν(F)} shifted
        by J). The doubled sum is accumulated and halved at the end.

        Raises
        ------
        ExpansionError
            If a doubled coefficient is odd.
        """
        n = self.n
        if n > MAX_DIRECT_N:
            raise CapabilityError(f"The direct form is built for n <= {MAX_DIRECT_N}")
        top = SetPartition.coarsest(n)
        doubled = FormalSum(n)
        for f in enumerate_partitions(n):
            mu = mobius(f, top)
            for j in range(full_mask(n) + 1):
                doubled.add_term((), mu)
                star = chi_star(f.nu, list(f.blocks), Subset(j, n))
                doubled.iadd(star, sign(f.nu))
        out = FormalSum(n)
        for key, c in doubled.terms.items():
            if c % 2:
                raise ExpansionError(f"Odd doubled coefficient {c} at {list(key)}")
            out.add_term(key, c // 2)
        return out

    def simp_forms(self, j: int) -> FormalSum:
        """Return simp_1(J; n), plus simp_2(n) when J = {2, ..., n}.

        simp_1 is (Σ_{A ⊆ J} (-1)^{|A|} χ̃_{A ∪ {1}}) times
        (Σ_{J ⊆ B ⊆ {2..n}} (-1)^{|B| - |J| - 1} χ̃_B), and simp_2 is
        Σ_{A ⊆ {2..n}} (-1)^{|A|} χ̃_{A ∪ {1}}.
        """
        n = self.n
        _check_shift(n, j)
        rest = full_mask(n) ^ 1
        left = FormalSum(n)
        for a in submasks(j):
            left.add_term((a | 1,), sign(popcount(a)))
        right = FormalSum(n)
        for extra in submasks(rest ^ j):
            right.add_term((j | extra,), sign(popcount(extra) - 1))
        out = left.multiply(right)
        if j == rest:
            for a in submasks(rest):
                out.add_term((a | 1,), sign(popcount(a)))
        return out


def chi_star(
    k: int, blocks: Sequence[Subset], shift: Subset | None = None
) -> FormalSum:
    """Return χ*_k on the given blocks as a formal sum.

    The sum runs over the (k-1)! orderings of the blocks that keep the first
    block first. Each ordering contributes ∏_i χ(S_i) with S_i the union of
    the first i blocks and χ(S) = 1 - χ̃_S - χ̃_{S^c}. With a shift J every
    generator index is replaced by its symmetric difference with J.
    """
    if k != len(blocks) or k < 1:
        raise ContractViolation(f"chi_star needs k = |blocks| >= 1, got k={k}, {len(blocks)}")
    n = blocks[0].n
    seen = 0
    for b in blocks:
        if b.n != n or seen & b.bits or not b.bits:
            raise ContractViolation("Blocks must be nonempty, disjoint and share n")
        seen |= b.bits
    full = full_mask(n)
    j = 0 if shift is None else shift.bits
    out = FormalSum(n)
    first, others = blocks[0].bits, [b.bits for b in blocks[1:]]
    for order in permutations(others):
        prod = FormalSum.one(n)
        prefix = first
        for step in range(k):
            if step:
                prefix |= order[step - 1]
            factor = FormalSum(n, {(): 1})
            factor.add_term((prefix ^ j,), -1)
            factor.add_term(((full ^ prefix) ^ j,), -1)
            prod = prod.multiply(factor)
        out.iadd(prod)
    return out


def raw_monomial_count(n: int) -> int:
    """Return 2^{n-1} Σ_chains 2^{|A|}, the unabsorbed size of the canonical form.

    With m free elements above the current top set, the chain sum h obeys
    h(0) = 2 and h(m) = 2 (1 + Σ_{i=1}^m C(m, i) h(m - i)).
    """
    h = [2]
    for m in range(1, n):
        h.append(2 * (1 + sum(comb(m, i) * h[m - i] for i in range(1, m + 1))))
    return (1 << (n - 1)) * h[n - 1]


# ---------------------------------------------------------------------------- #
#                              Functional interface                            #
# ---------------------------------------------------------------------------- #


def build_rhs(n: int) -> FormalSum:
    """Return E'(O), see :meth:`IdentityBuilder.rhs`."""
    return IdentityBuilder(n, zero_elim=False).rhs()


def build_inner_sum(
    n: int, j: Subset, zero_elim: bool = False, cache: ZeroCache | None = None
) -> FormalSum:
    """Return one J shard of the canonical form."""
    if j.n != n:
        raise ContractViolation(f"J lives in {j.n}, not {n}")
    return IdentityBuilder(n, zero_elim, cache).inner_sum(j.bits)


def build_lhs_canonical(
    n: int,
    zero_elim: bool = True,
    cache: ZeroCache | None = None,
    workers: int = 1,
) -> FormalSum:
    """Return the canonical left hand side, see :meth:`IdentityBuilder.lhs_canonical`."""
    return IdentityBuilder(n, zero_elim, cache, workers).lhs_canonical()


def build_lhs_direct(n: int) -> FormalSum:
    """Return the direct left hand side, see :meth:`IdentityBuilder.lhs_direct`."""
    return IdentityBuilder(n, zero_elim=False).lhs_direct()


def build_simp_forms(n: int, j: Subset) -> FormalSum:
    """Return the conjectured simple form of the inner sum at J."""
    if j.n != n:
        raise ContractViolation(f"J lives in {j.n}, not {n}")
    return IdentityBuilder(n, zero_elim=False).simp_forms(j.bits)
