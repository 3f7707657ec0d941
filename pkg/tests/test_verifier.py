from fractions import Fraction

import numpy as np
import pytest
from chi_verify.algebra import FormalSum, Term
from chi_verify.builder import IdentityBuilder, build_inner_sum, build_lhs_canonical, build_rhs, shifts
from chi_verify.data import VerdictKind
from chi_verify.exceptions import CapabilityError, ContractViolation
from chi_verify.subsets import Subset, enumerate_antichains
from chi_verify.verifier import (
    AntichainValuation,
    check_conjecture,
    enumerate_feasible_valuations,
    euler_identity_check,
    euler_lhs_inner_check,
    euler_rhs_check,
    evaluate,
    evaluate_at_point,
    residual,
    valuation_at_point,
    verify_by_cancellation,
    verify_by_valuations,
)
from chi_verify.zero_oracle import ZeroCache, check_witness


def S(n, *members):
    return Subset.of(n, members)


def x(n, *members, coeff=1):
    return FormalSum.generator(S(n, *members), coeff)


def V(n, *sets):
    return AntichainValuation.of(n, sets)


def sides(n, cache=None):
    cache = cache if cache is not None else ZeroCache.in_memory()
    return build_lhs_canonical(n, cache=cache), build_rhs(n), cache


# ---------------------------------------------------------------------------- #
#                                 Cancellation                                 #
# ---------------------------------------------------------------------------- #


@pytest.mark.parametrize("n", [1, 2, 3, pytest.param(4, marks=pytest.mark.slow)])
def test_cancellation_proves_identity(n):
    lhs, rhs, cache = sides(n)
    verdict = verify_by_cancellation(lhs, rhs, cache)
    print(verdict.to_json())
    assert verdict.kind is VerdictKind.PROVED_EQUAL
    assert verdict.residual_terms == 0
    assert verdict.witness is None


def test_cancellation_ignores_zero_terms():
    lhs, rhs, cache = sides(2)
    planted = lhs + FormalSum(2, {(0b01, 0b10): 5})
    assert verify_by_cancellation(planted, rhs, cache).kind is VerdictKind.PROVED_EQUAL


def test_cancellation_never_says_not_equal():
    lhs, rhs, cache = sides(2)
    verdict = verify_by_cancellation(lhs + x(2, 1), rhs, cache)
    assert verdict.kind is VerdictKind.INCONCLUSIVE
    assert verdict.residual_terms == 1
    assert verdict.exit_code == 2


def test_cancellation_rejects_mixed_n():
    with pytest.raises(ContractViolation):
        verify_by_cancellation(build_rhs(1), build_rhs(2))


# ---------------------------------------------------------------------------- #
#                                  Valuations                                  #
# ---------------------------------------------------------------------------- #


def test_valuation_validation():
    assert V(3, [1, 2], [1]).masks == (1,)
    with pytest.raises(ContractViolation):
        AntichainValuation((3, 1), 2)
    assert str(V(2, [1], [2])) == "{{1},{2}}"


@pytest.mark.parametrize("n, count", [(1, 2), (2, 4)])
def test_feasible_valuation_counts(n, count):
    valuations = list(enumerate_feasible_valuations(n))
    assert len(valuations) == count
    assert valuations[0].masks == ()


def test_feasible_valuations_n3():
    total = list(enumerate_antichains(3))
    feasible = list(enumerate_feasible_valuations(3))
    assert len(total) == 20
    assert 0 < len(feasible) < len(total)
    assert all(v.masks == () or v.masks[0] != 0 for v in feasible)


def test_feasible_valuations_with_points():
    for v in enumerate_feasible_valuations(3, with_points=True):
        if v.point is not None:
            assert valuation_at_point(v.point).masks == v.masks
            if v.masks:
                assert check_witness(Term(v.masks, 3), v.point)


def test_evaluate_examples():
    assert evaluate(build_rhs(1), V(1, [1])) == 1
    assert evaluate(x(2, 1, 2), V(2, [1])) == 1
    assert evaluate(x(2, 2), V(2, [1])) == 0
    s = 5 * FormalSum.one(2) + x(2, 1) - x(2, 1, 2)
    assert evaluate(s, V(2)) == 5
    with pytest.raises(ContractViolation):
        evaluate(x(2, 1), V(3, [1]))


def test_evaluate_n1_by_hand():
    lhs, rhs, _ = sides(1)
    assert [evaluate(lhs, v) for v in (V(1), V(1, [1]))] == [0, 1]
    assert [evaluate(rhs, v) for v in (V(1), V(1, [1]))] == [0, 1]


@pytest.mark.parametrize("n", [1, 2, 3, 4, pytest.param(5, marks=pytest.mark.slow)])
def test_valuations_prove_identity(n):
    cache = ZeroCache.in_memory()
    verdict = verify_by_valuations(n, cache)
    print(verdict.to_json())
    assert verdict.kind is VerdictKind.PROVED_EQUAL
    assert verdict.stats["exhaustive"] is True
    assert verdict.stats["valuations"] > 0


def test_valuations_find_planted_defect():
    lhs, rhs, cache = sides(2)
    defect = rhs - x(2, 1, coeff=2)
    verdict = verify_by_valuations(2, cache, lhs, defect)
    assert verdict.kind is VerdictKind.NOT_EQUAL
    assert verdict.exit_code == 1
    w = verdict.witness
    assert w is not None
    assert w.antichain == (0b01,)
    assert w.point == (Fraction(21, 16), Fraction(1, 16))
    assert (w.lhs, w.rhs) == (0, -2)
    # the point is an independent counterexample
    assert evaluate_at_point(lhs, w.point) != evaluate_at_point(defect, w.point)
    assert verdict.to_dict()["witness"]["point"] == ["21/16", "1/16"]


def test_valuations_refuse_large_n():
    with pytest.raises(CapabilityError):
        verify_by_valuations(7)
    with pytest.raises(CapabilityError):
        list(enumerate_feasible_valuations(7))


@pytest.mark.parametrize("n", range(1, 4))
def test_points_evaluate_like_their_valuation(n):
    rng = np.random.default_rng(n)
    lhs, rhs, _ = sides(n)
    probes = [lhs, rhs, build_inner_sum(n, Subset.empty(n))]
    for _ in range(500):
        r = [int(v) for v in rng.integers(1, 1000, size=n + 1)]
        u = [Fraction(2 * ri, sum(r)) for ri in r[1:]]
        v = valuation_at_point(u)
        for s in probes:
            assert evaluate_at_point(s, u) == evaluate(s, v)


@pytest.fixture(scope="module")
def built_sides():
    built = {}

    def get(n):
        if n not in built:
            built[n] = sides(n)
        return built[n]

    return get


def random_defect(rng, n):
    # one or two scaled products of one or two generators
    out = FormalSum(n)
    for _ in range(int(rng.integers(1, 3))):
        term = FormalSum.generator(Subset(int(rng.integers(1, 1 << n)), n), int(rng.choice([-2, -1, 1, 2])))
        if rng.random() < 0.5:
            term = term * FormalSum.generator(Subset(int(rng.integers(1, 1 << n)), n))
        out = out + term
    return out


@pytest.mark.parametrize("n", [2, 3, 4, pytest.param(5, marks=pytest.mark.slow)])
@pytest.mark.parametrize("seed", range(6))
def test_methods_agree_on_planted_defects(built_sides, n, seed):
    rng = np.random.default_rng(100 * n + seed)
    lhs, rhs, cache = built_sides(n)
    planted = random_defect(rng, n)
    real = bool(residual(planted, FormalSum(n), cache))
    print(n, [(str(t), c) for t, c in planted.items()], real)

    defect = rhs + planted
    by_cancel = verify_by_cancellation(lhs, defect, cache)
    by_values = verify_by_valuations(n, cache, lhs, defect)
    if not real:
        assert by_cancel.kind is VerdictKind.PROVED_EQUAL
        assert by_values.kind is VerdictKind.PROVED_EQUAL
        return
    assert by_cancel.kind is VerdictKind.INCONCLUSIVE
    assert by_values.kind is VerdictKind.NOT_EQUAL
    w = by_values.witness
    assert evaluate_at_point(lhs, w.point) != evaluate_at_point(defect, w.point)
    assert evaluate_at_point(planted, w.point) != 0


def test_methods_agree_on_a_nonzero_product(built_sides):
    # χ̃_{12} χ̃_{13} is on where u_1 is large, e.g. u = (3/2, 1/8, 1/8)
    lhs, rhs, cache = built_sides(3)
    planted = 3 * (x(3, 1, 2) * x(3, 1, 3))
    assert evaluate_at_point(planted, [Fraction(3, 2), Fraction(1, 8), Fraction(1, 8)]) == 3
    defect = rhs + planted
    assert verify_by_cancellation(lhs, defect, cache).kind is VerdictKind.INCONCLUSIVE
    verdict = verify_by_valuations(3, cache, lhs, defect)
    assert verdict.kind is VerdictKind.NOT_EQUAL
    assert verdict.witness.rhs - verdict.witness.lhs == 3


def test_methods_agree_on_a_zero_product(built_sides):
    # u_1 - u_2 - u_3 > 1 and u_2 - u_1 - u_3 > 1 never hold together
    lhs, rhs, cache = built_sides(3)
    defect = rhs + 2 * (x(3, 1) * x(3, 2))
    assert verify_by_cancellation(lhs, defect, cache).kind is VerdictKind.PROVED_EQUAL
    assert verify_by_valuations(3, cache, lhs, defect).kind is VerdictKind.PROVED_EQUAL


# ---------------------------------------------------------------------------- #
#                                 Euler checks                                 #
# ---------------------------------------------------------------------------- #


def test_euler_rhs_examples():
    for n in range(1, 5):
        full = list(range(1, n + 1))
        assert euler_rhs_check(V(n, full), n) == (-1) ** (n - 1)
        assert euler_rhs_check(V(n), n) == 0
    assert euler_rhs_check(V(2, [1]), 2) == evaluate(build_rhs(2), V(2, [1]))


def test_euler_lhs_inner_examples():
    assert euler_lhs_inner_check(Subset.empty(2), V(2, [1, 2]), 2) == 0
    with pytest.raises(ContractViolation):
        euler_lhs_inner_check(S(2, 1), V(2, [1]), 2)
    with pytest.raises(ContractViolation):
        euler_lhs_inner_check(Subset.empty(2), V(2, [1], [2]), 2)


@pytest.mark.parametrize("n", range(1, 5))
def test_euler_checks_at_feasible_valuations(n):
    checked = 0
    for v in enumerate_feasible_valuations(n):
        euler_rhs_check(v, n)
        for j in shifts(n):
            euler_lhs_inner_check(Subset(j, n), v, n)
        checked += 1
    print(f"n={n}: {checked} valuations")


@pytest.mark.parametrize("n", range(1, 5))
def test_euler_identity_at_realized_valuations(n):
    for v in enumerate_feasible_valuations(n, with_points=True):
        if v.point is None:
            continue
        left, right = euler_identity_check(v, n)
        assert left == right, v


# ---------------------------------------------------------------------------- #
#                                  Conjecture                                  #
# ---------------------------------------------------------------------------- #


@pytest.mark.parametrize("n", [1, 2, 3])
def test_conjecture_small_n(n):
    rows = check_conjecture(n)
    assert len(rows) == 1 << (n - 1)
    for row in rows:
        print(row.describe())
        assert row.passed


@pytest.mark.parametrize("n", [4, pytest.param(5, marks=pytest.mark.slow)])
def test_conjecture_holds_for_every_shift(n):
    rows = check_conjecture(n)
    assert [r.j for r in rows] == shifts(n)
    for row in rows:
        print(row.describe())
        assert row.passed
        assert row.witness is None
    named = {0, S(n, 2).bits, S(n, *range(2, n + 1)).bits}
    assert all(r.by_cancellation for r in rows if r.j in named)


def plant_in_simple_form(monkeypatch, j, planted):
    simple = IdentityBuilder.simp_forms

    def simp_forms(self, shift):
        out = simple(self, shift)
        return out + planted if shift == j else out

    monkeypatch.setattr(IdentityBuilder, "simp_forms", simp_forms)


def test_conjecture_falls_back_to_valuations(monkeypatch):
    plant_in_simple_form(monkeypatch, 0, x(3, 1))
    rows = check_conjecture(3)
    (bad,) = [r for r in rows if not r.passed]
    print(bad.describe())
    assert bad.j == 0
    assert not bad.by_cancellation
    assert "FAIL" in bad.describe()
    # the residual is -χ̃_1, on at the witness point
    assert bad.witness.lhs == -1
    assert evaluate_at_point(x(3, 1), bad.witness.point) == 1
    assert all(r.passed and r.by_cancellation for r in rows if r.j != 0)


def test_conjecture_skips_unrealized_disagreements(monkeypatch):
    plant_in_simple_form(monkeypatch, 0, x(2, 1))
    monkeypatch.setattr("chi_verify.verifier.cell_witness", lambda antichain, n: None)
    row = check_conjecture(2)[0]
    assert row.passed
    assert not row.by_cancellation
    assert row.describe().endswith("pass (valuations)")


def test_unrealized_disagreements_are_reported(monkeypatch):
    monkeypatch.setattr("chi_verify.verifier.cell_witness", lambda antichain, n: None)
    lhs, rhs, cache = sides(2)
    verdict = verify_by_valuations(2, cache, lhs, rhs - x(2, 1, coeff=2))
    print(verdict.to_json())
    assert verdict.kind is VerdictKind.PROVED_EQUAL
    assert verdict.stats["unrealized_disagreements"] == 1
    assert "skipped 1 disagreement" in verdict.message
    assert verdict.to_dict()["message"] == verdict.message

    verdict = verify_by_valuations(2, cache, lhs, rhs)
    assert verdict.stats["unrealized_disagreements"] == 0
    assert verdict.message == "both sides agree at 4 of 4 feasible valuations"


def test_conjecture_is_capped():
    with pytest.raises(CapabilityError):
        check_conjecture(6)


def test_sampled_mode(monkeypatch):
    from chi_verify.config import CONFIG

    monkeypatch.setattr(CONFIG, "max_exhaustive_valuations", 2)
    monkeypatch.setattr(CONFIG, "sample_points", 200)
    lhs, rhs, cache = sides(3)
    verdict = verify_by_valuations(3, cache, lhs, rhs)
    assert verdict.kind is VerdictKind.INCONCLUSIVE
    assert verdict.stats["exhaustive"] is False
    assert verdict.stats["points"] == 200

    defect = rhs + x(3, 1, 2, 3)
    verdict = verify_by_valuations(3, cache, lhs, defect)
    assert verdict.kind is VerdictKind.NOT_EQUAL
    assert check_witness(Term(verdict.witness.antichain, 3), verdict.witness.point)
