import io
from fractions import Fraction

import numpy as np
import pytest
from chi_verify.algebra import FormalSum, Term, dump_terms, load_terms, make_term
from chi_verify.exceptions import ContractViolation
from chi_verify.subsets import Subset
from chi_verify.verifier import evaluate_at_point


def S(n, *members):
    return Subset.of(n, members)


def x(n, *members, coeff=1):
    return FormalSum.generator(S(n, *members), coeff)


@pytest.mark.parametrize(
    "raw, expected",
    [
        ([[1], [1, 2]], [[1]]),
        ([[1, 2]], [[1, 2]]),
        ([[1, 2], [1, 3], [1, 2, 3]], [[1, 2], [1, 3]]),
        ([[2], [1], [2]], [[1], [2]]),
    ],
)
def test_make_term(raw, expected):
    t = make_term([Subset.of(3, r) for r in raw])
    assert t.sets == [Subset.of(3, e) for e in expected]
    assert make_term(t.sets) == t


def test_make_term_empty_product():
    assert make_term([], n=3).is_one
    with pytest.raises(ContractViolation):
        make_term([])
    with pytest.raises(ContractViolation):
        make_term([S(2, 1), S(3, 1)])


def test_term_must_be_canonical():
    with pytest.raises(ContractViolation):
        Term((3, 1), 2)
    with pytest.raises(ContractViolation):
        Term((1, 3), 2)


def test_multiply_examples():
    one = FormalSum.one(2)
    assert x(2, 1) * one == x(2, 1)
    assert x(2, 1) * x(2, 1) == x(2, 1)
    left = x(2, 1) - x(2, 2)
    right = x(2, 1) + x(2, 2)
    assert left * right == x(2, 1) - x(2, 2)


def test_add_and_scale():
    s = x(2, 1) + x(2, 2, coeff=3)
    assert s + FormalSum.zero(2) == s
    assert not (s + s.scale(-1))
    assert x(2, 1, coeff=2) + x(2, 1, coeff=-1) == x(2, 1)
    assert s.scale(0) == FormalSum.zero(2)
    assert 2 * s == s + s


def test_mixed_ground_sets():
    with pytest.raises(ContractViolation):
        x(2, 1) + x(3, 1)
    with pytest.raises(ContractViolation):
        x(2, 1) * x(3, 1)


def test_apply_sym_diff_examples():
    s = x(2, 1) + x(2, 1, 2, coeff=-2)
    assert s.apply_sym_diff(Subset.empty(2)) == s
    assert x(2, 1).apply_sym_diff(S(2, 1, 2)) == x(2, 2)

    product = FormalSum(3, {(0b001, 0b101): 1})
    assert product.terms == {(0b001,): 1}
    # the antichain {1,2},{1,3} maps to {1,2,3},{1} and is absorbed to {1}
    pair = FormalSum(3, {(0b011, 0b101): 1})
    assert pair.apply_sym_diff(S(3, 3)) == x(3, 1)


def _random_sum(rng, n, terms=4, width=3):
    s = FormalSum(n)
    for _ in range(terms):
        k = int(rng.integers(0, width + 1))
        masks = [int(m) for m in rng.integers(0, 1 << n, size=k)]
        s = s + FormalSum(n, {tuple(masks): int(rng.integers(-3, 4))})
    return s


@pytest.mark.parametrize("seed", range(10))
def test_ring_laws(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 5))
    a, b, c = (_random_sum(rng, n) for _ in range(3))
    assert a * b == b * a
    assert (a * b) * c == a * (b * c)
    assert a * (b + c) == a * b + a * c


@pytest.mark.parametrize("n", range(1, 5))
def test_generators_are_idempotent(n):
    for bits in range(1 << n):
        g = FormalSum.generator(Subset(bits, n))
        assert g * g == g


def _raw_value(raw, u):
    # product of indicators evaluated without any canonicalization
    value = 1
    for mask in raw:
        s = sum((ui if mask >> i & 1 else -ui) for i, ui in enumerate(u))
        value *= int(s > 1)
    return value


@pytest.mark.parametrize("n", range(1, 4))
def test_absorption_is_sound_on_the_region(n):
    rng = np.random.default_rng(100 + n)
    raws = [
        [int(m) for m in rng.integers(0, 1 << n, size=int(rng.integers(1, 4)))]
        for _ in range(8)
    ]
    coeffs = [int(c) for c in rng.integers(-3, 4, size=len(raws))]
    canonical = FormalSum(n)
    for raw, c in zip(raws, coeffs):
        canonical.add_term(make_term([Subset(m, n) for m in raw]).masks, c)
    for _ in range(200):
        r = [int(v) for v in rng.integers(1, 1000, size=n + 1)]
        u = [Fraction(2 * ri, sum(r)) for ri in r[1:]]
        direct = sum(c * _raw_value(raw, u) for raw, c in zip(raws, coeffs))
        assert evaluate_at_point(canonical, u) == direct


def test_dump_and_load_terms():
    s = x(3, 1) - x(3, 2, 3, coeff=5) + FormalSum(3, {(0b011, 0b101): 2**70})
    fp = io.StringIO()
    assert dump_terms(s, fp) == 3
    lines = fp.getvalue().splitlines()
    assert lines[0] == '{"coeff": "1", "sets": [1], "n": 3}'
    fp.seek(0)
    assert load_terms(fp) == s


def test_load_terms_rejects_garbage():
    with pytest.raises(ContractViolation):
        load_terms(io.StringIO('{"coeff": "x", "sets": [1], "n": 3}\n'))
    with pytest.raises(ContractViolation):
        load_terms(io.StringIO(""))
