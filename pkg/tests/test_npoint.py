"""Multi-point expansions: insertion operators, closed forms, recursions."""

from math import factorial

import pytest

from grav1d import npoint
from grav1d.series import QQ, OuterSeries, Series


def test_bessel_triangle_values():
    T = npoint.bessel_T
    assert [T(4, k) for k in range(3)] == [1, 6, 3]
    assert T(5, 2) == 15
    assert T(3, 2) == 0  # 2k > n vanishes
    # row sums count involutions
    assert sum(T(4, k) for k in range(3)) == 10


def test_insertion_starts_from_log_series(wide_spec6, wide_F6):
    W1 = npoint.multi_point(wide_spec6, 1, 4, F=wide_F6)
    # the z-expansion starts with 1/z plus derivative coefficients
    assert W1.coefficient((-1,)).constant_term() == 1


def test_one_point_routes_agree(spec6, wide_F6):
    for name, res in npoint.one_point_checks(spec6, 6, F=wide_F6).items():
        assert res.is_zero(), name


def test_two_point_routes_agree(spec6, wide_F6):
    for name, res in npoint.two_point_checks(spec6, 4, F=wide_F6).items():
        assert res.is_zero(), name


@pytest.mark.parametrize("l", [3, 4, 5])
def test_l_point_genus_zero_forms(spec6, wide_F6, l):
    for name, res in npoint.l_point_genus0_checks(
        spec6, l, 3, F=wide_F6
    ).items():
        assert res.is_zero(), (l, name)


@pytest.mark.parametrize("l", [3, 4, 5])
def test_genus_zero_correlator_polynomial(wide_F6, l):
    assert npoint.genus0_correlator_polynomial_check(wide_F6, l) == []


def test_cumulant_partition_formula(spec6, wide_F6):
    assert npoint.hat_partition_residual(spec6, 3, 3, F=wide_F6).is_zero()


def test_pole_recursion(spec6, wide_F6):
    for name, res in npoint.recursion_checks(spec6, 6, F=wide_F6).items():
        assert res.is_zero(), name


def test_marked_tree_rules(spec6, wide_F6):
    for name, res in npoint.marked_tree_checks(spec6, 3, F=wide_F6).items():
        assert res.is_zero(), name


def test_five_term_genus1_variant_does_not_match(spec6, wide_F6):
    """The reduced five-term genus-one two-point expression is kept for
    reference only; it must NOT reproduce the insertion route."""
    wspec = npoint.widened(spec6)
    order = 3
    W2 = npoint.multi_point(wspec, 2, order, F=wide_F6)
    five = npoint.genus1_two_point_form(
        wspec, order, F=wide_F6, seven_terms=False
    ).lshift(1)
    res = npoint.trimmed(
        npoint.genus_part(W2, 1) - five, cut=spec6.dmax - 4
    )
    assert not res.is_zero()


def test_first_coupling_line_one_point(spec6, wide_F6):
    wspec = npoint.widened(spec6)
    W1 = npoint.multi_point(wspec, 1, 6, F=wide_F6)
    form = npoint.one_point_t0_line_form(wspec, 6)
    res = npoint.trimmed(npoint.t0_line(W1) - form, cut=spec6.dmax - 1)
    assert res.is_zero()


def test_slot_weight_and_helpers():
    assert npoint.slot_weight((-3, 2, 0)) == 4
    slots = npoint.zslots(2, 3)
    assert slots[0].emin == -4 and slots[0].emax == 0
    wslots = npoint.wslots(1, 5)
    assert wslots[0].emin == 0 and wslots[0].emax == 5
