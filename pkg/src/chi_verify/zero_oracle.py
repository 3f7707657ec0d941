"""Decide whether a product of indicators vanishes on the support region.

The region is the open set {u_i > 0, Σ u_i < 2}. The product
χ̃_{A_1} ... χ̃_{A_k} is nonzero there iff some point satisfies
M_j · u > 1 for every row j, where M_j is +1 on A_j and -1 off it. By
scaling, this holds iff the closed program

    min Σ x_i  subject to  M x >= 1, x >= 0

has an optimum below 2. The program cannot be unbounded since Σ x_i >= 0.

Verdicts of the exact program are remembered in a :class:`ZeroCache`, which
can be persisted as an append-only text file with one ``n;A_1,...,A_k;z``
line per term (z = 1 if the product is identically zero).
"""

from __future__ import annotations

import logging
import threading
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from pathlib import Path
from typing import IO, Iterable, Iterator, Sequence

import numpy as np

from chi_verify.algebra import Masks, Term, absorb
from chi_verify.exceptions import CacheCorruptError, ContractViolation
from chi_verify.simplex import LPStatus, Row, minimize
from chi_verify.utils import full_mask

log = logging.getLogger("chi_verify")

Point = tuple[Fraction, ...]


class ZeroKind(Enum):
    """Answer of a zero test."""

    ZERO = "zero"
    NONZERO = "nonzero"
    UNKNOWN = "unknown"


def sign_row(mask: int, n: int) -> tuple[int, ...]:
    """Return the ±1 row that is +1 exactly on the members of mask."""
    return tuple(1 if mask >> i & 1 else -1 for i in range(n))


def row_value(mask: int, u: Sequence[Fraction]) -> Fraction:
    """Return Σ_{i ∈ A} u_i - Σ_{i ∉ A} u_i."""
    return sum(
        (x if mask >> i & 1 else -x for i, x in enumerate(u)), start=Fraction(0)
    )


@dataclass(frozen=True)
class LPInstance:
    """The program min c·x subject to M x >= b, x >= 0 of a term.

    Row j of M is +1 on A_j and -1 elsewhere, b and c are all ones.
    """

    M: tuple[tuple[int, ...], ...]
    n: int

    def __post_init__(self):
        for row in self.M:
            if len(row) != self.n or any(a not in (1, -1) for a in row):
                raise ContractViolation(f"Row {row} is not a ±1 vector of length {self.n}")

    @classmethod
    def from_term(cls, t: Term) -> LPInstance:
        """Build the program of a term."""
        return cls(tuple(sign_row(m, t.n) for m in t.masks), t.n)

    @property
    def b(self) -> tuple[int, ...]:
        """Return the right hand side, all ones."""
        return (1,) * len(self.M)

    @property
    def c(self) -> tuple[int, ...]:
        """Return the objective, all ones."""
        return (1,) * self.n

    def solve(self):
        """Solve the program exactly."""
        return minimize(self.c, [Row.of(r, ">=", 1) for r in self.M])


@dataclass(frozen=True)
class LPVerdict:
    """Outcome of the exact zero test.

    ``optimum`` is None when the program is infeasible. ``witness`` is a
    point of the open region where every factor is 1, present iff NONZERO.
    """

    kind: ZeroKind
    optimum: Fraction | None
    witness: Point | None = None

    @property
    def infeasible(self) -> bool:
        """Return whether the program had no feasible point."""
        return self.optimum is None


def _counting_rule(n: int, key: Masks) -> bool:
    k = len(key)
    if k < 2:
        return False
    for i in range(n):
        e = sum(1 for m in key if m >> i & 1)
        if 4 * e > 3 * k:
            return False
    return True


def quick_zero_test(t: Term) -> ZeroKind:
    """Apply the counting rule: zero if 4 e_i <= 3 k for every element i.

    e_i counts the factors whose set contains i. Adding the k constraints
    with weights shows the product vanishes. The rule needs k >= 2.
    """
    return ZeroKind.ZERO if _counting_rule(t.n, t.masks) else ZeroKind.UNKNOWN


def strict_point(x: Sequence[Fraction], optimum: Fraction) -> Point:
    """Push an optimal vertex of the closed program into the open region.

    With g = 2 - c*, ε = g / (2 (c* + 1)) and δ = ε / (2n) the point
    (1 + ε) x* + δ has positive coordinates, every row above 1 and sum below 2.
    """
    n = len(x)
    gap = 2 - optimum
    eps = gap / (2 * (optimum + 1))
    delta = eps / (2 * n)
    return tuple((1 + eps) * xi + delta for xi in x)


def lp_zero_test(t: Term) -> LPVerdict:
    """Decide a term exactly with the rational simplex."""
    if t.is_one:
        # any small point, the empty product is 1 everywhere
        return LPVerdict(
            ZeroKind.NONZERO, Fraction(0), (Fraction(1, t.n + 1),) * t.n
        )
    result = LPInstance.from_term(t).solve()
    if result.status is LPStatus.INFEASIBLE:
        return LPVerdict(ZeroKind.ZERO, None)
    if result.status is not LPStatus.OPTIMAL:
        raise ContractViolation(f"Zero test of {t} returned {result.status.value}")
    assert result.value is not None and result.x is not None
    if result.value >= 2:
        return LPVerdict(ZeroKind.ZERO, result.value)
    return LPVerdict(ZeroKind.NONZERO, result.value, strict_point(result.x, result.value))


def check_witness(t: Term, w: Sequence[Fraction]) -> bool:
    """Return whether w lies in the open region and makes every factor 1."""
    if len(w) != t.n or any(x <= 0 for x in w) or sum(w) >= 2:
        return False
    return all(row_value(m, w) > 1 for m in t.masks)


# ---------------------------------------------------------------------------- #
#                                     Cache                                    #
# ---------------------------------------------------------------------------- #


@dataclass(frozen=True)
class CacheStats:
    """Entry counts of a zero cache."""

    entries: int
    zeros: int
    nonzeros: int


def format_line(n: int, key: Masks, zero: bool) -> str:
    """Return the cache line of a verdict."""
    return f"{n};{','.join(str(m) for m in key)};{int(zero)}"


def parse_line(line: str) -> tuple[int, Masks, bool]:
    """Parse a cache line, raising ValueError if malformed."""
    parts = line.split(";")
    if len(parts) != 3 or parts[2] not in ("0", "1"):
        raise ValueError(line)
    n = int(parts[0])
    key = tuple(int(m) for m in parts[1].split(",")) if parts[1] else ()
    if not key or n < 1 or absorb(key) != key or any(m >> n for m in key):
        raise ValueError(line)
    return n, key, parts[2] == "1"


class ZeroCache:
    """Remembered LP verdicts, keyed by (n, canonical masks).

    Lookups and insertions are guarded by a lock. With a path, every new
    verdict is appended to the file as well.
    """

    def __init__(self, path: Path | None = None):
        self.path = path
        self._entries: dict[tuple[int, Masks], bool] = {}
        self._lock = threading.Lock()
        self._fp: IO[str] | None = None
        self._fresh: dict[tuple[int, Masks], bool] = {}

    @classmethod
    def in_memory(cls, entries: dict[tuple[int, Masks], bool] | None = None) -> ZeroCache:
        """Return a cache without backing file, optionally pre-seeded."""
        cache = cls()
        if entries:
            cache._entries.update(entries)
        return cache

    @classmethod
    def load(cls, path: Path | str) -> ZeroCache:
        """Load every line of a cache file. A missing file is an empty cache.

        Raises
        ------
        CacheCorruptError
            If a line cannot be parsed.
        """
        path = Path(path)
        cache = cls(path)
        if path.exists():
            with open(path, encoding="utf-8") as fp:
                for line_no, raw in enumerate(fp, start=1):
                    line = raw.strip()
                    if not line:
                        continue
                    try:
                        n, key, zero = parse_line(line)
                    except ValueError:
                        raise CacheCorruptError(str(path), line_no, line) from None
                    cache._entries[(n, key)] = zero
        log.debug(f"Loaded {len(cache)} zero verdicts from {path}")
        return cache

    def get(self, n: int, key: Masks) -> bool | None:
        """Return the stored verdict, or None."""
        with self._lock:
            return self._entries.get((n, key))

    def put(self, n: int, key: Masks, zero: bool) -> None:
        """Store a verdict; new entries are appended to the backing file."""
        with self._lock:
            if (n, key) in self._entries:
                return
            self._entries[(n, key)] = zero
            self._fresh[(n, key)] = zero
            if self.path is not None:
                if self._fp is None:
                    self.path.parent.mkdir(parents=True, exist_ok=True)
                    self._fp = open(self.path, "a", encoding="utf-8")
                self._fp.write(format_line(n, key, zero) + "\n")

    def merge(self, entries: dict[tuple[int, Masks], bool]) -> int:
        """Store many verdicts and return how many were new."""
        before = len(self)
        for (n, key), zero in entries.items():
            self.put(n, key, zero)
        return len(self) - before

    def take_fresh(self) -> dict[tuple[int, Masks], bool]:
        """Return the verdicts stored since the last call and forget them."""
        with self._lock:
            fresh, self._fresh = self._fresh, {}
            return fresh

    def snapshot(self) -> dict[tuple[int, Masks], bool]:
        """Return a copy of all entries."""
        with self._lock:
            return dict(self._entries)

    def items(self) -> Iterator[tuple[tuple[int, Masks], bool]]:
        """Iterate over a snapshot of the entries."""
        yield from self.snapshot().items()

    def stats(self) -> CacheStats:
        """Return entry counts."""
        snap = self.snapshot()
        zeros = sum(1 for z in snap.values() if z)
        return CacheStats(len(snap), zeros, len(snap) - zeros)

    def flush(self) -> None:
        """Flush appended lines to disk."""
        with self._lock:
            if self._fp is not None:
                self._fp.flush()

    def close(self) -> None:
        """Flush and close the backing file."""
        with self._lock:
            if self._fp is not None:
                self._fp.close()
                self._fp = None

    def __enter__(self) -> ZeroCache:
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def __len__(self) -> int:
        with self._lock:
            return len(self._entries)

    def __getstate__(self):
        # worker processes get the entries only, never the file
        return {"entries": self.snapshot()}

    def __setstate__(self, state):
        self.__init__()
        self._entries.update(state["entries"])


def verify_integrity(
    cache: ZeroCache, fraction: float, seed: int = 0
) -> list[tuple[int, Masks]]:
    """Re-run the exact test on a random sample of entries.

    At least one entry is checked when the cache is not empty.

    Returns
    -------
    list[tuple[int, Masks]]
        The keys whose stored verdict disagrees with a fresh LP run.
    """
    keys = sorted(cache.snapshot())
    if not keys:
        return []
    size = max(1, int(round(fraction * len(keys))))
    rng = np.random.default_rng(seed)
    picked = rng.choice(len(keys), size=min(size, len(keys)), replace=False)
    bad = []
    for idx in sorted(int(i) for i in picked):
        n, key = keys[idx]
        stored = cache.get(n, key)
        fresh = lp_zero_test(Term(key, n)).kind is ZeroKind.ZERO
        if stored != fresh:
            log.warning(f"Cache entry {format_line(n, key, bool(stored))} disagrees with LP")
            bad.append((n, key))
    log.info(f"Re-checked {len(picked)} of {len(keys)} cache entries, {len(bad)} mismatches")
    return bad


def is_zero(t: Term, cache: ZeroCache | None = None) -> bool:
    """Return whether a canonical term vanishes on the support region.

    The counting rule runs first; otherwise the cache is consulted and, on a
    miss, the exact program decides and the verdict is recorded.
    """
    return is_zero_key(t.n, t.masks, cache)


def is_zero_key(n: int, key: Masks, cache: ZeroCache | None = None) -> bool:
    """Return :func:`is_zero` of the term with canonical masks ``key``."""
    if not key:
        return False
    if key[0] == 0:
        # χ̃_∅ needs -Σ u_i > 1
        return True
    if len(key) == 1:
        return False
    if _counting_rule(n, key):
        return True
    if cache is not None:
        hit = cache.get(n, key)
        if hit is not None:
            return hit
    zero = lp_zero_test(Term(key, n)).kind is ZeroKind.ZERO
    if cache is not None:
        cache.put(n, key, zero)
    return zero


# ---------------------------------------------------------------------------- #
#                               Sign cells                                     #
# ---------------------------------------------------------------------------- #


def induced_antichain(u: Sequence[Fraction]) -> Masks:
    """Return the minimal sets A with χ̃_A(u) = 1 at a point u >= 0."""
    n = len(u)
    on = [m for m in range(full_mask(n) + 1) if row_value(m, u) > 1]
    return absorb(on)


def maximal_off_sets(antichain: Iterable[int], n: int) -> list[int]:
    """Return the maximal sets containing none of the antichain members."""
    w = list(antichain)
    off = [m for m in range(full_mask(n) + 1) if not any(a & m == a for a in w)]
    off_set = set(off)
    return [
        m
        for m in off
        if not any((m | 1 << i) in off_set for i in range(n) if not m >> i & 1)
    ]


def cell_witness(antichain: Iterable[int], n: int) -> Point | None:
    """Return a point of the open region whose on-sets are the up-set of W.

    The point turns χ̃_A on exactly for the sets A containing some W_i. None
    means no such point exists, even if the product of the W_i is nonzero.
    The program maximizes a margin t subject to

        M_{W_i} u - t >= 1,  M_A u <= 1 for maximal off-sets A,
        u_i - t >= 0,  Σ u_i + t <= 2,  t <= 1,

    and the cell is realized iff the optimal t is positive.
    """
    w = absorb(antichain)
    if w and w[0] == 0:
        return None
    if w:
        verdict = lp_zero_test(Term(w, n))
        if verdict.kind is ZeroKind.ZERO:
            return None
        assert verdict.witness is not None
        if induced_antichain(verdict.witness) == w:
            return verdict.witness

    rows = []
    for m in w:
        rows.append(Row.of(sign_row(m, n) + (-1,), ">=", 1))
    for m in maximal_off_sets(w, n):
        rows.append(Row.of(sign_row(m, n) + (0,), "<=", 1))
    for i in range(n):
        e = [0] * (n + 1)
        e[i] = 1
        e[n] = -1
        rows.append(Row.of(e, ">=", 0))
    rows.append(Row.of((1,) * (n + 1), "<=", 2))
    rows.append(Row.of((0,) * n + (1,), "<=", 1))
    result = minimize((0,) * n + (-1,), rows)
    if result.status is not LPStatus.OPTIMAL or result.value is None or result.value >= 0:
        log.debug(f"Antichain {list(w)} is not realized by any point")
        return None
    assert result.x is not None
    return tuple(result.x[:n])
