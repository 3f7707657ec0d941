from fractions import Fraction

import numpy as np
import pytest
from chi_verify.exceptions import CapabilityError, ContractViolation
from chi_verify.partitions import (
    IncidenceTable,
    SetPartition,
    act,
    convolve,
    cover_ratio,
    delta_table,
    enumerate_2_coarser,
    enumerate_2_refinements,
    enumerate_partitions,
    is_cover,
    mobius,
    mobius_table,
    recursive_mobius,
    refines,
    zeta_table,
)

BELL = [1, 1, 2, 5, 15, 52, 203, 877]


@pytest.mark.parametrize("n", range(1, 8))
def test_partition_count(n):
    parts = list(enumerate_partitions(n))
    assert len(parts) == BELL[n]
    assert len(set(parts)) == BELL[n]


def test_partition_order_is_restricted_growth():
    parts = list(enumerate_partitions(3))
    assert parts[0] == SetPartition.coarsest(3)
    assert parts[-1] == SetPartition.finest(3)


def test_partition_validation():
    with pytest.raises(ContractViolation):
        SetPartition.from_blocks(3, [[1, 2], [2, 3]])
    with pytest.raises(ContractViolation):
        SetPartition.from_blocks(3, [[1, 2]])
    with pytest.raises(ContractViolation):
        enumerate_partitions(13).__next__()
    p = SetPartition.from_blocks(3, [[3], [2, 1]])
    assert p.masks == (0b011, 0b100)
    assert p.nu == 2


@pytest.mark.parametrize(
    "f, g, expected",
    [
        ([[1], [2], [3]], [[1, 3], [2]], True),
        ([[1, 2], [3]], [[1, 2, 3]], True),
        ([[1, 2], [3]], [[1, 3], [2]], False),
    ],
)
def test_refines(f, g, expected):
    assert refines(SetPartition.from_blocks(3, f), SetPartition.from_blocks(3, g)) is expected


def test_mobius_examples():
    o, top = SetPartition.finest(3), SetPartition.coarsest(3)
    assert mobius(o, o) == 1
    assert mobius(o, top) == 2
    assert mobius(SetPartition.finest(4), SetPartition.from_blocks(4, [[1, 2, 3], [4]])) == 2
    assert mobius(top, o) == 0


@pytest.mark.parametrize("n", range(1, 6))
def test_mobius_closed_form_matches_recursion(n):
    parts = list(enumerate_partitions(n))
    for f in parts:
        for g in parts:
            assert mobius(f, g) == recursive_mobius(f, g)


@pytest.mark.parametrize("n", range(1, 6))
def test_mobius_times_zeta_is_delta(n):
    assert convolve(mobius_table(n), zeta_table(n)) == delta_table(n)
    assert convolve(zeta_table(n), mobius_table(n)) == delta_table(n)


def test_delta_is_identity():
    f = IncidenceTable.from_function(3, lambda x, y: x.nu - y.nu + 7)
    assert convolve(delta_table(3), f) == f
    assert convolve(f, delta_table(3)) == f


def test_zeta_squared_counts_interval():
    zz = convolve(zeta_table(2), zeta_table(2))
    assert zz[(SetPartition.finest(2), SetPartition.coarsest(2))] == 2


def test_tables_are_capped():
    with pytest.raises(CapabilityError):
        zeta_table(6)
    with pytest.raises(ContractViolation):
        IncidenceTable(2, {(SetPartition.coarsest(2), SetPartition.finest(2)): 1})


@pytest.mark.parametrize("n", range(1, 6))
def test_mobius_inversion(n):
    rng = np.random.default_rng(n)
    parts = list(enumerate_partitions(n))
    zeta, mu = zeta_table(n), mobius_table(n)
    for _ in range(10):
        g = {p: int(x) for p, x in zip(parts, rng.integers(-50, 50, size=len(parts)))}
        assert act(mu, act(zeta, g)) == g


def test_2_refinements_examples():
    assert list(enumerate_2_refinements(SetPartition.finest(3))) == [SetPartition.finest(3)]
    assert len(list(enumerate_2_refinements(SetPartition.coarsest(2)))) == 2
    refinements = list(enumerate_2_refinements(SetPartition.coarsest(3)))
    assert len(refinements) == 4
    assert refinements[0] == SetPartition.coarsest(3)


def test_2_coarser_examples():
    assert list(enumerate_2_coarser(SetPartition.coarsest(3))) == [SetPartition.coarsest(3)]
    assert len(list(enumerate_2_coarser(SetPartition.finest(2)))) == 2
    coarser = list(enumerate_2_coarser(SetPartition.finest(4)))
    assert len(coarser) == 10
    assert len(set(coarser)) == 10
    assert sorted(p.nu for p in coarser) == [2] * 3 + [3] * 6 + [4]


@pytest.mark.parametrize("n", range(1, 6))
def test_refinement_coarsening_duality(n):
    parts = list(enumerate_partitions(n))
    refinements = {g: set(enumerate_2_refinements(g)) for g in parts}
    coarsenings = {f: set(enumerate_2_coarser(f)) for f in parts}
    for f in parts:
        for g in parts:
            assert (f in refinements[g]) == (g in coarsenings[f])
            if f in refinements[g]:
                assert refines(f, g)


@pytest.mark.parametrize("n", range(2, 6))
def test_cover_ratio(n):
    o = SetPartition.finest(n)
    parts = list(enumerate_partitions(n))
    covers = 0
    for f in parts:
        for g in parts:
            if is_cover(f, g):
                assert cover_ratio(f, g) == Fraction(mobius(o, f), mobius(o, g))
                covers += 1
    assert covers > 0


def test_cover_ratio_needs_cover():
    with pytest.raises(ContractViolation):
        cover_ratio(SetPartition.finest(3), SetPartition.coarsest(3))
