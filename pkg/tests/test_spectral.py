"""Spectral curve: squared-field identity, uniqueness, inversion, quantization."""

import pytest

from grav1d import spectral
from grav1d.partition import recommended_spec
from grav1d.series import QQ


def test_squared_field_identity(spec6):
    res = spectral.deformation_residual(spec6)
    assert res.is_zero()


def test_uniqueness_recursion_matches_one_point(spec6):
    for m, res in spectral.uniqueness_residuals(spec6, 6).items():
        assert res.is_zero(), m


def test_signed_catalan_values():
    assert spectral.signed_catalan_coefficients(6) == [1, -1, 2, -5, 14, -42]


def test_reversion_produces_signed_catalans():
    got = spectral.catalan_reversion(6)
    assert got == spectral.signed_catalan_coefficients(6)


def test_normalization_constant():
    assert spectral.NORMALIZATION == QQ(2)


@pytest.mark.parametrize("m", range(-1, 5))
def test_operator_identity_up_to_normalization(m):
    spec = recommended_spec(5, 5, 2)
    assert spectral.normalization_residual(spec, m).is_zero()


@pytest.mark.parametrize("m", range(-1, 5))
def test_quadratic_operators_annihilate_partition_series(m):
    spec = recommended_spec(5, 5, 2)
    assert spectral.quantized_z_residual(spec, m).is_zero()


def test_ladder_commutators_are_diagonal(spec6):
    for n in range(3):
        for m in range(3):
            c = spectral.propagator_coefficient(spec6, n, m)
            assert c == (QQ(n + 1) if n == m else 0)
