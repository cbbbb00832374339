"""Triangular coordinate change, its Jacobians, and the genus formulas."""

import pytest

from grav1d.icoords import (
    F0_composition_sum,
    F0_resummed_sum,
    F_in_I,
    compute_I,
    dI0_duality,
    gradient_flow_coeffs,
    jacobian_identities,
    renorm_limit,
    t_from_I,
)
from grav1d.partition import CorrelatorKey, correlator, recommended_spec
from grav1d.series import QQ, Series


@pytest.fixture(scope="module")
def bundle(spec6):
    return compute_I(spec6)


def test_I0_low_order_terms(bundle):
    spec = bundle.spec
    I0 = bundle.I[0]
    z = [0] * (spec.kmax + 1)

    def coeff(powers):
        exps = list(z)
        for i, e in powers.items():
            exps[i] = e
        return I0.terms.get((tuple(exps), 0), 0)

    assert coeff({0: 1}) == 1
    assert coeff({0: 1, 1: 1}) == 1
    assert coeff({0: 2, 2: 1}) == QQ(1, 2)
    assert coeff({0: 2}) == 0


def test_roundtrip_is_identity(bundle):
    spec = bundle.spec
    for k, tk in enumerate(t_from_I(bundle)):
        assert tk == Series.coupling(spec, k)


def test_jacobian_identities(bundle):
    for name, res in jacobian_identities(bundle).items():
        assert res.is_zero(), name


def test_derivative_dualities(bundle):
    for name, res in dI0_duality(bundle, 4).items():
        assert res.is_zero(), name


def test_renormalization_limit_unshifted_first_coupling(spec6, bundle):
    limit = renorm_limit(spec6)
    assert limit.couplings[0].is_zero()
    assert limit.couplings[1] == bundle.I[1]
    assert limit.couplings[2] == bundle.I[2]


def test_gradient_flow_fourth_coefficient(spec6):
    a = gradient_flow_coeffs(spec6, 4)
    spec = spec6
    one = Series.one(spec)
    t0 = Series.coupling(spec, 0)
    s = one - Series.coupling(spec, 1)
    expected = (
        -(t0 * s * s * s + (t0 * t0 * Series.coupling(spec, 2) * s).scale(4))
        + t0 * t0 * t0 * Series.coupling(spec, 3)
    ).scale(QQ(1, 24))
    assert a[3] == expected


def test_genus_formulas_reproduce_slices(F6, bundle):
    for g in range(0, 4):
        _formula, res = F_in_I(g, F6, bundle)
        assert res.is_zero(), g


def test_genus_two_and_three_coefficients(F6):
    # genus-2 closed form carries 1/8 and 5/24; genus-3 carries
    # 1/48, 1/12, 7/48, 25/48, 5/16 on its five monomials
    c = lambda idx, g: correlator(CorrelatorKey(idx, g), F6)
    assert c((3,), 2) == QQ(1, 8)
    assert c((2, 2), 2) / 2 == QQ(5, 24)
    assert c((5,), 3) == QQ(1, 48)
    assert c((3, 3), 3) / 2 == QQ(1, 12)
    assert c((2, 4), 3) == QQ(7, 48)
    assert c((2, 2, 3), 3) / 2 == QQ(25, 48)
    assert c((2, 2, 2, 2), 3) / 24 == QQ(5, 16)


def test_genus_zero_composition_sums(F6, spec6):
    F0 = F6.grade_slice(-1)
    assert F0_composition_sum(spec6) == F0
    assert F0_resummed_sum(spec6) == F0
