"""Differential-operator constraint families and their consequences."""

import pytest

from grav1d.constraints import (
    DiffOperator,
    WeylElement,
    commutator,
    commutator_residual_on_basis,
    dF_dI0_residuals,
    dilaton_consequences,
    dn_closed_form,
    dn_polynomials,
    flow_polymer_check,
    join_check,
    ltilde_commutator_z_residual,
    operator_solution,
    virasoro,
    virasoro_z_residual,
    weyl_commutator,
    weyl_product,
)
from grav1d.partition import recommended_spec
from grav1d.series import QQ, Series


@pytest.mark.parametrize("family", ["L", "Ltilde"])
@pytest.mark.parametrize("m", range(-1, 6))
def test_constraints_annihilate_partition_series(family, m):
    spec = recommended_spec(5, 5, 2)
    assert virasoro_z_residual(spec, m, family).is_zero()


def test_first_family_commutators_on_basis(spec6):
    small = recommended_spec(4, 4, 2)
    pairs = [(m, n) for m in range(-1, 3) for n in range(m + 1, 3)]
    assert commutator_residual_on_basis(small, pairs, "L") == []


def test_second_family_commutes_only_on_the_solution(spec6):
    # as operators the second family does NOT commute: [A_1, A_2] t_5 = -360 t_2
    spec = spec6
    A1 = virasoro(spec, 1, "Ltilde")
    A2 = virasoro(spec, 2, "Ltilde")
    t5 = Series.coupling(spec, 5)
    got = commutator(A1, A2).apply(t5)
    assert got == Series.coupling(spec, 2).scale(-360)
    # applied to the partition series the commutator vanishes
    assert ltilde_commutator_z_residual(spec, 1, 2).is_zero()
    assert ltilde_commutator_z_residual(spec, 2, 3).is_zero()


def test_flow_and_polymer(Z6):
    for name, res in flow_polymer_check(Z6, 5).items():
        assert res.is_zero(), name


def test_join_identities(Z6):
    for ns in ((1, 1), (1, 2), (2, 3), (1, 1, 2)):
        assert join_check(Z6, ns).is_zero(), ns


def test_operator_solution_matches_closed_form(spec6, Z6):
    assert (operator_solution(spec6) - Z6).is_zero()


def test_dilaton_insertions(F6):
    for name, res in dilaton_consequences(F6).items():
        assert res == 0, name


def test_positive_genus_independent_of_leading_coordinate(F6):
    for name, res in dF_dI0_residuals(F6, 3).items():
        assert res.is_zero(), name


def test_weyl_algebra_basics():
    x = WeylElement.basis(1, 0)
    d = WeylElement.basis(0, 1)
    assert weyl_commutator(d, x) == WeylElement.basis(0, 0)
    # d^2 x^2 = x^2 d^2 + 4 x d + 2
    got = weyl_product(WeylElement.basis(0, 2), WeylElement.basis(2, 0))
    expect = (
        WeylElement.basis(2, 2)
        + WeylElement.basis(1, 1, 4)
        + WeylElement.basis(0, 0, 2)
    )
    assert (got - expect).is_zero()


def test_normal_ordering_polynomials_match_closed_form():
    polys = dn_polynomials(6)
    for n, dn in enumerate(polys):
        assert dn == dn_closed_form(n, dn.spec), n
