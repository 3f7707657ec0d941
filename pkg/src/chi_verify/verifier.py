"""Decide the Fourier identity.

Two methods are offered:

* cancellation subtracts the sides and drops every product that vanishes
  identically. An empty residual proves equality; a nonempty one proves
  nothing, since relations outside the generated ideal may exist.
* valuations evaluate both sides at every antichain W whose product is
  nonzero: x_A maps to 1 iff A contains some W_i. At a point u of the region
  the set {A : χ̃_A(u) = 1} is an up-set, so both sides at u are their values
  at its minimal antichain. Agreement everywhere proves equality; a
  disagreement at a valuation realized by a point is a counterexample.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Sequence

import numpy as np

from chi_verify.algebra import FormalSum, Masks, absorb
from chi_verify.builder import IdentityBuilder, shifts
from chi_verify.config import CONFIG
from chi_verify.data import ConjectureRow, Verdict, VerdictKind, Witness
from chi_verify.exceptions import CapabilityError, ContractViolation, IdentityMismatch
from chi_verify.subsets import Subset, enumerate_antichains
from chi_verify.utils import elements, full_mask, popcount, sign
from chi_verify.zero_oracle import (
    Point,
    ZeroCache,
    cell_witness,
    induced_antichain,
    is_zero_key,
    row_value,
)

log = logging.getLogger("chi_verify")


@dataclass(frozen=True)
class AntichainValuation:
    """The evaluation x_A -> [A contains some W_i] of an antichain W.

    ``point`` is a point of the open region realizing the valuation, when one
    has been computed.
    """

    masks: Masks
    n: int
    point: Point | None = None

    def __post_init__(self):
        if absorb(self.masks) != self.masks or any(m >> self.n for m in self.masks):
            raise ContractViolation(f"{list(self.masks)} is not a sorted antichain in {self.n}")

    @classmethod
    def of(cls, n: int, sets: Sequence[Sequence[int]]) -> AntichainValuation:
        """Build a valuation from 1-indexed member lists."""
        return cls(absorb(Subset.of(n, s).bits for s in sets), n)

    @property
    def sets(self) -> list[Subset]:
        """Return the minimal 1-sets."""
        return [Subset(m, self.n) for m in self.masks]

    def up_bits(self) -> int:
        """Return the up-set as a bit vector over the 2^n masks."""
        bits = 0
        for a in range(full_mask(self.n) + 1):
            if any(w & a == w for w in self.masks):
                bits |= 1 << a
        return bits

    def __str__(self) -> str:
        return "{" + ",".join(str(s) for s in self.sets) + "}"


class _Evaluator:
    # a term is 1 iff all its sets lie in the up-set
    def __init__(self, s: FormalSum):
        self.n = s.n
        self.terms = [(sum(1 << m for m in key), c) for key, c in s.terms.items()]

    def at(self, up: int) -> int:
        return sum(c for bits, c in self.terms if bits & up == bits)


def _on_bits(u: Sequence[Fraction]) -> int:
    bits = 0
    for a in range(full_mask(len(u)) + 1):
        if row_value(a, u) > 1:
            bits |= 1 << a
    return bits


def evaluate(s: FormalSum, v: AntichainValuation) -> int:
    """Return the value of a sum under the valuation of an antichain."""
    if s.n != v.n:
        raise ContractViolation(f"Ground sets differ: {s.n} != {v.n}")
    return _Evaluator(s).at(v.up_bits())


def evaluate_at_point(s: FormalSum, u: Sequence[Fraction]) -> int:
    """Return the value of a sum at a point u with all u_i > 0."""
    if len(u) != s.n:
        raise ContractViolation(f"Point has {len(u)} coordinates, expected {s.n}")
    return _Evaluator(s).at(_on_bits(u))


def valuation_at_point(u: Sequence[Fraction]) -> AntichainValuation:
    """Return the valuation induced by a point, with the point attached."""
    point = tuple(Fraction(x) for x in u)
    return AntichainValuation(induced_antichain(point), len(point), point)


def enumerate_feasible_valuations(
    n: int, cache: ZeroCache | None = None, with_points: bool = False
) -> Iterator[AntichainValuation]:
    """Stream every antichain whose product is not identically zero.

    The empty antichain comes first. Extensions of a zero antichain stay zero,
    so the search prunes there.

    Parameters
    ----------
    n : int
        Size of the ground set.
    cache : ZeroCache, optional
        Verdict cache for the zero tests.
    with_points : bool
        Attach a realizing point to each valuation. A valuation whose point
        is None cannot be realized: some set outside its up-set is forced on.
    """
    if n > CONFIG.max_sampled_valuations:
        raise CapabilityError(f"Valuations are enumerated for n <= {CONFIG.max_sampled_valuations}")
    cache = cache if cache is not None else ZeroCache.in_memory()
    for w in enumerate_antichains(n, prune=lambda w: not is_zero_key(n, w, cache)):
        point = cell_witness(w, n) if with_points else None
        yield AntichainValuation(w, n, point)


def _feasible_with_up(n: int, cache: ZeroCache) -> list[tuple[AntichainValuation, int]]:
    return [(v, v.up_bits()) for v in enumerate_feasible_valuations(n, cache)]


def _elapsed(start: float) -> int:
    return int(round((time.perf_counter() - start) * 1000))


def _default_sides(n: int, cache: ZeroCache) -> tuple[FormalSum, FormalSum, dict]:
    builder = IdentityBuilder(n, zero_elim=True, cache=cache, workers=1)
    lhs = builder.lhs_canonical()
    return lhs, builder.rhs(), {"eliminated": builder.stats.eliminated}


def residual(lhs: FormalSum, rhs: FormalSum, cache: ZeroCache | None = None) -> FormalSum:
    """Return lhs - rhs without the identically-zero products."""
    diff = lhs - rhs
    out = FormalSum(diff.n)
    for key, c in diff.terms.items():
        if not is_zero_key(diff.n, key, cache):
            out.add_term(key, c)
    return out


def verify_by_cancellation(
    lhs: FormalSum, rhs: FormalSum, cache: ZeroCache | None = None
) -> Verdict:
    """Prove lhs = rhs by showing their difference lies in the zero ideal.

    Never returns NotEqual.
    """
    if lhs.n != rhs.n:
        raise ContractViolation(f"Ground sets differ: {lhs.n} != {rhs.n}")
    start = time.perf_counter()
    rest = residual(lhs, rhs, cache)
    for t, c in rest.items():
        log.debug(f"residual {c:+d} {t}")
    kind = VerdictKind.INCONCLUSIVE if rest else VerdictKind.PROVED_EQUAL
    return Verdict(
        n=lhs.n,
        method="cancel",
        kind=kind,
        residual_terms=len(rest),
        elapsed_ms=_elapsed(start),
        stats={"lhs_terms": len(lhs), "rhs_terms": len(rhs)},
        message=f"{len(rest)} residual terms are not identically zero" if rest else "residual is empty",
    )


def _random_point(rng: np.random.Generator, n: int) -> Point:
    # u_i = 2 r_i / (Σ r + r_0) lies in the open region
    r = [int(x) for x in rng.integers(1, 1 << 20, size=n + 1)]
    total = sum(r)
    return tuple(Fraction(2 * ri, total) for ri in r[1:])


def verify_by_valuations(
    n: int,
    cache: ZeroCache | None = None,
    lhs: FormalSum | None = None,
    rhs: FormalSum | None = None,
) -> Verdict:
    """Decide lhs = rhs by evaluating at every feasible valuation.

    For n up to ``CONFIG.max_exhaustive_valuations`` all valuations are
    checked. One above, random rational points are sampled instead and
    agreement is reported as Inconclusive. Larger n is refused.

    The sides default to the canonical left hand side and E'(O).
    """
    if n > CONFIG.max_sampled_valuations:
        raise CapabilityError(
            f"The valuation method supports n <= {CONFIG.max_sampled_valuations}, got {n}"
        )
    start = time.perf_counter()
    cache = cache if cache is not None else ZeroCache.in_memory()
    stats: dict = {}
    if lhs is None or rhs is None:
        lhs, rhs, stats = _default_sides(n, cache)
    if lhs.n != n or rhs.n != n:
        raise ContractViolation(f"Sides do not live in ground set {n}")
    left, right = _Evaluator(lhs), _Evaluator(rhs)
    stats.update(lhs_terms=len(lhs), rhs_terms=len(rhs))

    if n > CONFIG.max_exhaustive_valuations:
        log.warning(f"n={n}: sampling {CONFIG.sample_points} points, the result is not exhaustive")
        rng = np.random.default_rng(CONFIG.seed)
        for _ in range(CONFIG.sample_points):
            u = _random_point(rng, n)
            on = _on_bits(u)
            a, b = left.at(on), right.at(on)
            if a != b:
                witness = Witness(induced_antichain(u), u, a, b)
                stats.update(points=CONFIG.sample_points, exhaustive=False)
                message = "sides differ at a sampled point"
                return Verdict(n, "valuations", VerdictKind.NOT_EQUAL, 0, witness, _elapsed(start), stats, message)
        stats.update(points=CONFIG.sample_points, exhaustive=False)
        message = f"sides agree at {CONFIG.sample_points} sampled points"
        return Verdict(n, "valuations", VerdictKind.INCONCLUSIVE, 0, None, _elapsed(start), stats, message)

    checked = 0
    unrealized = 0
    for v, up in _feasible_with_up(n, cache):
        checked += 1
        a, b = left.at(up), right.at(up)
        if a == b:
            continue
        point = cell_witness(v.masks, n)
        if point is None:
            unrealized += 1
            log.warning(f"Sides differ at {v}, which no point realizes")
            continue
        stats.update(valuations=checked, unrealized_disagreements=unrealized, exhaustive=True)
        witness = Witness(v.masks, point, a, b)
        message = f"sides differ at {v}" + _skipped_note(unrealized)
        return Verdict(n, "valuations", VerdictKind.NOT_EQUAL, 0, witness, _elapsed(start), stats, message)
    stats.update(valuations=checked, unrealized_disagreements=unrealized, exhaustive=True)
    message = f"both sides agree at {checked - unrealized} of {checked} feasible valuations"
    message += _skipped_note(unrealized)
    log.info(f"n={n}: {message}")
    return Verdict(n, "valuations", VerdictKind.PROVED_EQUAL, 0, None, _elapsed(start), stats, message)


def _skipped_note(unrealized: int) -> str:
    if not unrealized:
        return ""
    return f"; skipped {unrealized} disagreement(s) at valuations no point realizes"


# ---------------------------------------------------------------------------- #
#                            Euler characteristic checks                       #
# ---------------------------------------------------------------------------- #


def _pairwise_intersecting(v: AntichainValuation) -> bool:
    return all(a & b for i, a in enumerate(v.masks) for b in v.masks[i + 1 :])


def rhs_euler_value(v: AntichainValuation) -> int:
    """Return (-1)^{n-1} Σ_{A ∈ S} (-1)^{|A|} with S = ∪_i [∅, W_i^c]."""
    n = v.n
    faces = (a for a in range(full_mask(n) + 1) if any(a & w == 0 for w in v.masks))
    return sign(n - 1) * sum(sign(popcount(a)) for a in faces)


def euler_rhs_check(v: AntichainValuation, n: int) -> int:
    """Return the right hand side at v from the Euler characteristic of S.

    Raises
    ------
    IdentityMismatch
        If it differs from evaluating E'(O) at v.
    """
    if v.n != n:
        raise ContractViolation(f"Valuation lives in {v.n}, not {n}")
    value = rhs_euler_value(v)
    direct = evaluate(IdentityBuilder(n, zero_elim=False).rhs(), v)
    if value != direct:
        raise IdentityMismatch(f"E'(O) at {v}: Euler form {value}, direct {direct}")
    return value


def segment_union(j: int, v: AntichainValuation) -> set[int]:
    """Return U(J; W), the sets A with A ∩ W_i equal to W_i - J or W_i ∩ J for some i."""
    out = set()
    for a in range(full_mask(v.n) + 1):
        for w in v.masks:
            if a & w in (w & ~j, w & j):
                out.add(a)
                break
    return out


def order_complex_euler(sets: set[int]) -> int:
    """Return the Euler characteristic Σ_chains (-1)^{|c| - 1} of a subset family.

    h(A) = 1 - Σ_{B ⊋ A} h(B) counts the chains starting at A with signs.
    """
    h: dict[int, int] = {}
    for a in sorted(sets, key=popcount, reverse=True):
        h[a] = 1 - sum(h[b] for b in h if b != a and a & b == a)
    return sum(h.values())


def lhs_inner_euler_value(j: int, v: AntichainValuation) -> int:
    """Return the inner chain sum at J under v via the order complex of Û."""
    u = segment_union(j, v)
    if 1 not in u:
        return 0
    hat = {a for a in u if a & 1 and a != 1}
    return sign(v.n) * (order_complex_euler(hat) - 1)


def euler_lhs_inner_check(j: Subset, v: AntichainValuation, n: int) -> int:
    """Return the inner chain sum at J under v from the Euler characteristic of Û.

    Only valid for pairwise intersecting W, which every feasible W is.

    Raises
    ------
    IdentityMismatch
        If it differs from evaluating the inner chain sum directly.
    """
    if v.n != n or j.n != n:
        raise ContractViolation(f"Arguments do not live in ground set {n}")
    if 1 in j:
        raise ContractViolation("J must not contain 1")
    if not _pairwise_intersecting(v):
        raise ContractViolation(f"{v} has disjoint members")
    value = lhs_inner_euler_value(j.bits, v)
    direct = evaluate(IdentityBuilder(n, zero_elim=False).inner_sum(j.bits), v)
    if value != direct:
        raise IdentityMismatch(f"Inner sum at J={j}, {v}: Euler form {value}, direct {direct}")
    return value


def euler_identity_check(v: AntichainValuation, n: int) -> tuple[int, int]:
    """Return both sides of the identity at v in Euler form.

    The left value is Σ over J with {1} ∈ U(J; W) of 1 - χ(Δ(Û)), the right
    value Σ_{A ∈ S} (-1)^{|A|}. They agree iff the identity holds at v.
    """
    if v.n != n:
        raise ContractViolation(f"Valuation lives in {v.n}, not {n}")
    left = 0
    for j in shifts(n):
        u = segment_union(j, v)
        if 1 in u:
            left += 1 - order_complex_euler({a for a in u if a & 1 and a != 1})
    right = sign(n - 1) * rhs_euler_value(v)
    return left, right


# ---------------------------------------------------------------------------- #
#                                   Conjecture                                 #
# ---------------------------------------------------------------------------- #

MAX_CONJECTURE_N = 5


def check_conjecture(n: int, cache: ZeroCache | None = None) -> list[ConjectureRow]:
    """Compare the inner sum with its conjectured simple form for every J.

    A J passes if the difference cancels modulo the zero ideal, or else if it
    vanishes at every realized feasible valuation.
    """
    if not 1 <= n <= MAX_CONJECTURE_N:
        raise CapabilityError(f"The conjecture is checked for 1 <= n <= {MAX_CONJECTURE_N}")
    cache = cache if cache is not None else ZeroCache.in_memory()
    builder = IdentityBuilder(n, zero_elim=True, cache=cache)
    valuations: list[tuple[AntichainValuation, int]] | None = None
    rows = []
    for j in shifts(n):
        rest = residual(builder.inner_sum(j), builder.simp_forms(j), cache)
        if not rest:
            rows.append(ConjectureRow(j, True, True))
            continue
        if valuations is None:
            valuations = _feasible_with_up(n, cache)
        ev = _Evaluator(rest)
        witness = None
        for v, up in valuations:
            value = ev.at(up)
            if value == 0:
                continue
            point = cell_witness(v.masks, n)
            if point is not None:
                witness = Witness(v.masks, point, value, 0)
                break
        rows.append(ConjectureRow(j, witness is None, False, witness))
        log.info(f"n={n} J={elements(j)}: {'pass' if witness is None else 'FAIL'}")
    return rows
