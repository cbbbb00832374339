"""Partition series, free energy, correlators, and restricted closed forms."""

from math import factorial

from grav1d.partition import (
    CorrelatorKey,
    RestrictedForm,
    admissible_keys,
    closed_form_Z,
    correlator,
    double_factorial,
    free_energy,
    one_minus_t1_form,
    recommended_spec,
    restricted_form,
)
from grav1d.series import QQ, Series, TruncationSpec, rat


def test_recommended_spec_window():
    spec = recommended_spec(8, 8, 4)
    assert spec == TruncationSpec(8, 8, -5, 8)


def test_selection_rule_grading(F6):
    # every monomial of F satisfies: sum of coupling indices = 2l + degree
    for (exps, l), _c in F6.terms.items():
        weighted = sum(i * e for i, e in enumerate(exps))
        assert weighted == 2 * l + sum(exps)


def test_single_coupling_gaussian():
    # with only the first coupling on, the series is exp(t_0^2 L^-1 / 2)
    table = restricted_form(RestrictedForm("Z_t0"), 4)["coeffs"]
    assert table[:3] == [QQ(1), QQ(1, 2), QQ(1, 8)]
    spec = recommended_spec(4, 8, 2)
    Z = closed_form_Z(spec)
    for n in range(0, 5):
        exps = [0] * (spec.kmax + 1)
        exps[0] = 2 * n
        assert Z.terms.get((tuple(exps), -n), 0) == table[n]


def test_two_coupling_closed_form():
    out = restricted_form(RestrictedForm("Z_t0t1"), 3)["series"]
    spec = out.spec
    # coefficient of t_0^2 t_1 L^-1 in exp(t_0^2/(2L(1-t_1)) + log(1/(1-t_1))/2)
    exps = [2, 1]
    # 1/2 from the geometric factor plus 1/4 from the cross product
    assert out.terms[(tuple(exps), -1)] == QQ(3, 4)
    assert out.terms[((0, 1), 0)] == QQ(1, 2)
    assert out.terms[((0, 2), 0)] == QQ(3, 8)


def test_third_coupling_sequences_match_log():
    t2 = restricted_form(RestrictedForm("Z_t2"), 4)
    assert t2["Z"][1] == QQ(5, 24)
    assert t2["Z"][2] == QQ(385, 1152)
    assert t2["F"][1] == QQ(5, 24)
    assert t2["F"][2] == QQ(5, 16)
    # dual route: the same slice of the computed series
    spec = recommended_spec(4, 8, 4)
    Z = closed_form_Z(spec)
    F = free_energy(Z)
    for n in range(1, 5):
        exps = [0] * (spec.kmax + 1)
        exps[2] = 2 * n
        assert Z.terms.get((tuple(exps), n), 0) == t2["Z"][n]
        assert F.terms.get((tuple(exps), n), 0) == t2["F"][n]


def test_odd_even_families():
    odd = restricted_form(RestrictedForm("Z_odd", k=2), 3)["coeffs"]
    assert odd[1] == QQ(double_factorial(3), factorial(4))
    even = restricted_form(RestrictedForm("Z_even", k=1), 2)["coeffs"]
    assert even[1] == QQ(double_factorial(5), factorial(3) ** 2 * 2)


def test_correlator_examples(F6):
    assert correlator(CorrelatorKey((0, 0), 0), F6) == 1
    assert correlator(CorrelatorKey((1,), 1), F6) == QQ(1, 2)
    assert correlator(CorrelatorKey((3,), 2), F6) == QQ(1, 8)
    assert correlator(CorrelatorKey((2, 2), 2), F6) == QQ(5, 12)
    assert correlator(CorrelatorKey((5,), 3), F6) == QQ(1, 48)
    # selection rule: inadmissible keys vanish identically
    assert correlator(CorrelatorKey((1, 1), 0), F6) == 0


def test_admissible_keys_respect_selection_rule():
    keys = admissible_keys(3, 4, 2)
    assert all(k.admissible() for k in keys)
    assert CorrelatorKey((0, 0), 0) in keys
    assert CorrelatorKey((3,), 2) in keys
    assert all(k.genus <= 2 and k.npoints <= 4 for k in keys)


def test_resummed_reconstruction_is_exact(F6):
    assert one_minus_t1_form(F6).is_zero()


def test_free_energy_low_terms(F6):
    spec = F6.spec
    z = [0] * (spec.kmax + 1)

    def coeff(powers, l):
        exps = list(z)
        for i, e in powers.items():
            exps[i] = e
        return F6.terms.get((tuple(exps), l), 0)

    assert coeff({0: 2}, -1) == QQ(1, 2)
    assert coeff({1: 1}, 0) == QQ(1, 2)
    assert coeff({2: 2}, 1) == QQ(5, 24)
    assert coeff({0: 1, 2: 1}, 0) == QQ(1, 2)
