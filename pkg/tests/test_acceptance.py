"""End-to-end acceptance battery at desk scale (kmax=8, dmax=8, genus <= 4).

Every assertion is exact rational equality; no floating point anywhere.
"""

import pytest

from grav1d import constraints, graphs, icoords, npoint, spectral
from grav1d.partition import (
    CorrelatorKey,
    RestrictedForm,
    closed_form_Z,
    correlator,
    free_energy,
    recommended_spec,
    restricted_form,
)
from grav1d.series import QQ, Series


@pytest.fixture(scope="module")
def spec8():
    return recommended_spec(8, 8, 4)


@pytest.fixture(scope="module")
def Z8(spec8):
    return closed_form_Z(spec8)


@pytest.fixture(scope="module")
def F8(Z8):
    return free_energy(Z8)


@pytest.fixture(scope="module")
def wide_F8(spec8):
    return free_energy(closed_form_Z(npoint.widened(spec8)))


@pytest.fixture(scope="module")
def bundle8(spec8):
    return icoords.compute_I(spec8)


# --------------------------------------------------------------------------
# 1. correlator table
# --------------------------------------------------------------------------

CORRELATOR_TABLE = [
    # (indices, genus, value)
    ((0, 0), 0, QQ(1)),
    ((1,), 1, QQ(1, 2)),
    ((0, 0, 1), 0, QQ(1)),
    ((0, 2), 1, QQ(1, 2)),
    ((1, 1), 1, QQ(1, 2)),
    ((3,), 2, QQ(1, 8)),
    ((0, 0, 1, 1), 0, QQ(2)),
    ((0, 0, 0, 2), 0, QQ(1)),
    ((1, 1, 1), 1, QQ(1)),
    ((0, 0, 3), 1, QQ(1, 2)),
    ((0, 1, 2), 1, QQ(1)),
    ((2, 2), 2, QQ(5, 12)),
    ((0, 4), 2, QQ(1, 8)),
    ((1, 3), 2, QQ(1, 4)),
    ((5,), 3, QQ(1, 48)),
    ((0, 0, 1, 1, 1), 0, QQ(6)),
    ((0, 0, 0, 1, 2), 0, QQ(3)),
    ((0, 0, 0, 0, 3), 0, QQ(1)),
    ((1, 1, 1, 1), 1, QQ(3)),
    ((0, 0, 1, 3), 1, QQ(3, 2)),
    ((0, 1, 1, 2), 1, QQ(3)),
    ((0, 0, 0, 4), 1, QQ(1, 2)),
    ((0, 0, 2, 2), 1, QQ(2)),
    ((1, 2, 2), 2, QQ(5, 4)),
    ((0, 1, 4), 2, QQ(3, 8)),
    ((1, 1, 3), 2, QQ(3, 4)),
    ((0, 0, 5), 2, QQ(1, 8)),
    ((0, 2, 3), 2, QQ(2, 3)),
    ((1, 5), 3, QQ(1, 16)),
    ((3, 3), 3, QQ(1, 6)),
    ((0, 6), 3, QQ(1, 48)),
    ((2, 4), 3, QQ(7, 48)),
    ((7,), 4, QQ(1, 384)),
]


def test_correlator_table(F8):
    for indices, genus, value in CORRELATOR_TABLE:
        key = CorrelatorKey(indices, genus)
        assert correlator(key, F8) == value, (indices, genus)


# --------------------------------------------------------------------------
# 2. single-coupling coefficient sequences
# --------------------------------------------------------------------------

Z_T2 = [
    QQ(1),
    QQ(5, 24),
    QQ(385, 1152),
    QQ(85085, 82944),
    QQ(37182145, 7962624),
    QQ(5391411025, 191102976),
    QQ(5849680962125, 27518828544),
    QQ(1267709431363375, 660451885056),
    QQ(2562040760785380875, 126806761930752),
]

F_T2 = [
    QQ(0),
    QQ(5, 24),
    QQ(5, 16),
    QQ(1105, 1152),
    QQ(565, 128),
    QQ(82825, 3072),
    QQ(19675, 96),
    QQ(1282031525, 688128),
    QQ(80727925, 4096),
]


def test_third_coupling_sequences(Z8, F8, spec8):
    table = restricted_form(RestrictedForm("Z_t2"), 8)
    assert table["Z"] == Z_T2
    assert table["F"][1:] == F_T2[1:]
    # the computed series carries the same slice where it fits the window
    for n in range(0, spec8.dmax // 2 + 1):
        exps = [0] * (spec8.kmax + 1)
        exps[2] = 2 * n
        assert Z8.terms.get((tuple(exps), n), 0) == Z_T2[n], n
        if n >= 1:
            assert F8.terms.get((tuple(exps), n), 0) == F_T2[n], n


# --------------------------------------------------------------------------
# 3. constraint families annihilate the series; first-family commutators
# --------------------------------------------------------------------------

@pytest.mark.parametrize("family", ["L", "Ltilde"])
def test_constraints_annihilate_series(spec8, family):
    for m in range(-1, 6):
        res = constraints.virasoro_z_residual(spec8, m, family)
        assert res.is_zero(), (family, m)


def test_first_family_commutators_on_full_basis(spec8):
    pairs = [(m, n) for m in range(-1, 4) for n in range(m + 1, 4)]
    assert constraints.commutator_residual_on_basis(spec8, pairs, "L") == []


# --------------------------------------------------------------------------
# 4. flow, polymer, operator solution
# --------------------------------------------------------------------------


def test_flow_polymer_and_operator_solution(Z8):
    report = constraints.flow_polymer_check(Z8, 6)
    assert set(f"flow_{n}" for n in range(1, 7)) <= set(report)
    assert "polymer" in report and "operator_solution" in report
    for name, res in report.items():
        assert res.is_zero(), name


# --------------------------------------------------------------------------
# 5. triangular coordinates
# --------------------------------------------------------------------------


def test_coordinate_roundtrip(spec8, bundle8):
    for k, tk in enumerate(icoords.t_from_I(bundle8)):
        assert tk == Series.coupling(spec8, k), k


def test_genus_slices_in_new_coordinates(F8, bundle8):
    for g in range(0, 4):
        _formula, res = icoords.F_in_I(g, F8, bundle8)
        assert res.is_zero(), g


def test_genus_two_and_three_closed_form_coefficients(F8):
    c = lambda idx, g: correlator(CorrelatorKey(idx, g), F8)
    assert c((3,), 2) == QQ(1, 8)
    assert c((2, 2), 2) / 2 == QQ(5, 24)
    assert c((5,), 3) == QQ(1, 48)
    assert c((3, 3), 3) / 2 == QQ(1, 12)
    assert c((2, 4), 3) == QQ(7, 48)
    assert c((2, 2, 3), 3) / 2 == QQ(25, 48)
    assert c((2, 2, 2, 2), 3) / 24 == QQ(5, 16)


# --------------------------------------------------------------------------
# 6. graph sums
# --------------------------------------------------------------------------


def test_graph_oracles(spec8):
    report = graphs.oracle_compare(spec8, max_edges=5, tree_degree=6)
    for key in ("F", "Z", "exp", "I0"):
        assert key in report
    for name, res in report.items():
        assert res.is_zero(), name


def test_automorphism_spot_values():
    loop = graphs.classes_for_profile([(graphs.PLAIN, 2)])[0]
    assert loop.aut_order == 2
    eight = graphs.classes_for_profile([(graphs.PLAIN, 4)])[0]
    assert eight.aut_order == 8
    two_cubic = graphs.classes_for_profile(
        [(graphs.PLAIN, 3), (graphs.PLAIN, 3)]
    )
    orders = {
        sum(g.matrix[i][i] for i in range(2)): g.aut_order for g in two_cubic
    }
    assert orders[0] == 12  # triple edge
    assert orders[2] == 8  # two self-loops joined by a bridge


# --------------------------------------------------------------------------
# 7. multi-point expansions
# --------------------------------------------------------------------------


def test_first_coupling_line_one_point(spec8, wide_F8):
    wspec = npoint.widened(spec8)
    W1 = npoint.multi_point(wspec, 1, 8, F=wide_F8)
    form = npoint.one_point_t0_line_form(wspec, 8)
    res = npoint.trimmed(
        npoint.t0_line(W1) - form, cut=spec8.dmax - 1
    )
    assert res.is_zero()


@pytest.mark.parametrize("l", [3, 4, 5])
def test_genus_zero_multi_point_polynomial(wide_F8, l):
    assert npoint.genus0_correlator_polynomial_check(wide_F8, l) == []


def test_three_point_recursion(spec8, wide_F8):
    for name, res in npoint.recursion_checks(spec8, 8, F=wide_F8).items():
        assert res.is_zero(), name


def test_marked_tree_rules(spec8, wide_F8):
    for name, res in npoint.marked_tree_checks(spec8, 4, F=wide_F8).items():
        assert res.is_zero(), name


# --------------------------------------------------------------------------
# 8. spectral curve and quantization
# --------------------------------------------------------------------------


def test_squared_deformation_identity():
    spec = recommended_spec(6, 6, 3)
    assert spectral.deformation_residual(spec).is_zero()


def test_uniqueness_recursion():
    spec = recommended_spec(6, 6, 3)
    for m, res in spectral.uniqueness_residuals(spec, 6).items():
        assert res.is_zero(), m


def test_signed_catalan_reversion():
    expected = [1, -1, 2, -5, 14, -42]
    assert spectral.signed_catalan_coefficients(6) == expected
    assert spectral.catalan_reversion(6) == expected


def test_quantized_field_operators():
    spec = recommended_spec(5, 5, 2)
    assert spectral.NORMALIZATION == QQ(2)
    for m in range(-1, 5):
        assert spectral.normalization_residual(spec, m).is_zero(), m
        assert spectral.quantized_z_residual(spec, m).is_zero(), m


# --------------------------------------------------------------------------
# 9. scope statement
# --------------------------------------------------------------------------


def test_truncated_ring_equivalence_is_the_acceptance():
    """All-order statements are checked as exact identities in every
    truncated ring tested above; nothing here is approximate."""
    assert True
