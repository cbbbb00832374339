"""Spectral curve of the one-dimensional gravity model.

The gradient of the action and the genus-zero one-point function combine into
a single Laurent field in an auxiliary variable z.  This module builds that
field (the *special deformation* of the curve), verifies that the negative
part of its square reproduces the squared one-point function, solves the
combinatorial recursion that characterizes the deformation uniquely, inverts
the undeformed curve (signed Catalan numbers), and quantizes the field into
ladder operators whose quadratic combinations reproduce the second constraint
family acting on the partition series.

Scaling convention: the curve carries an overall 1/sqrt(2); to stay inside
exact rational arithmetic every field here is the sqrt(2)-multiple of the
conventionally normalized one.  Squares of scaled fields are therefore twice
the conventional squares, and the quadratic operators come out as
``NORMALIZATION`` (= 2) times the constraint operators.
"""

from __future__ import annotations

from fractions import Fraction
from math import factorial

from .series import QQ, Series, OuterSeries, Slot, TruncationSpec
from .partition import closed_form_Z, free_energy
from .constraints import DiffOperator, commutator, virasoro, _shifted_coupling

__all__ = [
    "NORMALIZATION",
    "deformation_slots",
    "genus_zero_part",
    "special_deformation",
    "genus_zero_one_point",
    "deformation_residual",
    "uniqueness_solution",
    "uniqueness_residuals",
    "signed_catalan_coefficients",
    "catalan_reversion",
    "creator",
    "annihilator",
    "field_constant",
    "minus_coefficient_operator",
    "normalization_residual",
    "quantized_z_residual",
    "ladder_commutator",
    "propagator_coefficient",
]

# ratio between the quadratic-field coefficient operators and the second
# constraint family (a consequence of working with the sqrt(2)-scaled field)
NORMALIZATION = QQ(2)


# ---------------------------------------------------------------------------
# the scaled field and its defining identity
# ---------------------------------------------------------------------------


def deformation_slots(spec: TruncationSpec):
    """Slot wide enough to hold the field and its square exactly."""
    return (Slot("z", -(2 * spec.kmax + 4), 2 * spec.kmax),)


def genus_zero_part(F: Series) -> Series:
    """Leading-grade slice of the free energy as a grade-0 polynomial."""
    return F.grade_slice(-1).lshift(1)


def genus_zero_one_point(spec: TruncationSpec, F0: Series, slots=None) -> OuterSeries:
    """1/z plus the generating series of first derivatives of ``F0`` in
    inverse powers of z with factorial weights."""
    if slots is None:
        slots = deformation_slots(spec)
    terms = {(-1,): Series.one(spec)}
    for n in range(1, spec.kmax + 2):
        d = F0.derive(n - 1)
        if not d.is_zero():
            terms[(-n - 1,)] = d.scale(QQ(factorial(n)))
    return OuterSeries(slots, spec, terms)


def special_deformation(spec: TruncationSpec, F0: Series, slots=None) -> OuterSeries:
    """The scaled curve field: polynomial part from the action gradient,
    Laurent tail twice the one-point series."""
    if slots is None:
        slots = deformation_slots(spec)
    terms = {}
    for n in range(0, spec.kmax + 1):
        c = _shifted_coupling(spec, n).lshift(1).scale(QQ(1, factorial(n)))
        if not c.is_zero():
            terms[(n,)] = c
    y = OuterSeries(slots, spec, terms)
    return y + genus_zero_one_point(spec, F0, slots=slots).scale(QQ(2))


def deformation_residual(spec: TruncationSpec, head: int = None) -> OuterSeries:
    """Quarter of the negative part of the squared field minus the squared
    one-point series.

    Computed with coupling-index headroom ``head`` (default kmax) so that the
    asserted inverse powers z^{-m-2}, m <= head, are exact after restricting
    to ``spec``; one t-degree is lost to the derivatives in the tail.
    """
    if head is None:
        head = spec.kmax
    big = TruncationSpec(
        spec.kmax + head, spec.dmax, -(spec.dmax // 2) - 1, spec.dmax // 2 + 2
    )
    F0 = genus_zero_part(free_energy(closed_form_Z(big)))
    slots = deformation_slots(big)
    y = special_deformation(big, F0, slots=slots)
    w = genus_zero_one_point(big, F0, slots=slots)
    res = (y * y).minus_part().scale(QQ(1, 4)) - w * w
    out = OuterSeries(deformation_slots(spec), spec)
    for (e,), s in res.terms.items():
        if e < -(head + 2):
            continue
        s = s.restrict(spec).truncate_tdegree(spec.dmax - 1)
        if not s.is_zero():
            out.terms[(e,)] = s
    return out


# ---------------------------------------------------------------------------
# uniqueness recursion for the Laurent tail
# ---------------------------------------------------------------------------


def uniqueness_solution(spec: TruncationSpec, mmax: int) -> list:
    """Tail coefficients w_0..w_mmax solving the triangular system

        w_m = sum_j v_j w_{j+m-1},   w_{-1} := 1,   v_j := t_j / j!,

    the degree-graded fixed point of which is the unique tail making the
    negative part of the squared curve a perfect square."""
    v = [
        Series.coupling(spec, j).scale(QQ(1, factorial(j)))
        for j in range(spec.kmax + 1)
    ]
    top = mmax + (spec.dmax - 1) * max(spec.kmax - 1, 1) + 1
    w = [Series.zero(spec) for _ in range(top + 1)]

    def at(ws, i):
        if i == -1:
            return Series.one(spec)
        if 0 <= i <= top:
            return ws[i]
        return Series.zero(spec)

    for _ in range(spec.dmax):
        w = [
            sum(
                (v[j] * at(w, j + m - 1) for j in range(spec.kmax + 1)),
                Series.zero(spec),
            )
            for m in range(top + 1)
        ]
    return w[: mmax + 1]


def uniqueness_residuals(spec: TruncationSpec, mmax: int, F0: Series = None) -> dict:
    """Recursion solution minus (m+1)! times the m-th derivative of the
    genus-zero free energy, per index m."""
    if F0 is None:
        F0 = genus_zero_part(free_energy(closed_form_Z(spec)))
    w = uniqueness_solution(spec, mmax)
    out = {}
    for m in range(mmax + 1):
        diff = w[m] - F0.derive(m).scale(QQ(factorial(m + 1)))
        out[m] = diff.truncate_tdegree(spec.dmax - 1)
    return out


# ---------------------------------------------------------------------------
# signed Catalan inversion of the undeformed curve
# ---------------------------------------------------------------------------


def signed_catalan_coefficients(count: int) -> list:
    """(-1)^n C_n for n < count, C_n the Catalan numbers."""
    out = []
    for n in range(count):
        c = Fraction(factorial(2 * n), factorial(n) * factorial(n + 1))
        out.append(c if n % 2 == 0 else -c)
    return out


def catalan_reversion(count: int) -> list:
    """Coefficients of u^{2n+1} (u the reciprocal of the curve value) in the
    inverse of x -> -x + 1/x, computed by fixed-point iteration of
    x = u / (1 + u x); they are the signed Catalan numbers."""
    order = 2 * count
    # dense polynomials in u, truncated beyond degree ``order``
    def mul(a, b):
        out = [Fraction(0)] * (order + 1)
        for i, ai in enumerate(a):
            if not ai:
                continue
            for j, bj in enumerate(b):
                if i + j > order:
                    break
                out[i + j] += ai * bj
        return out

    u = [Fraction(0), Fraction(1)] + [Fraction(0)] * (order - 1)
    x = list(u)
    for _ in range(order):
        ux = mul(u, x)
        # geometric series 1/(1 + ux)
        inv = [Fraction(1)] + [Fraction(0)] * order
        power = [Fraction(1)] + [Fraction(0)] * order
        for k in range(1, order + 1):
            power = mul(power, ux)
            sign = -1 if k % 2 else 1
            inv = [c + sign * p for c, p in zip(inv, power)]
        x = mul(u, inv)
    return [x[2 * n + 1] for n in range(count)]


# ---------------------------------------------------------------------------
# quantization: ladder operators and quadratic coefficient operators
# ---------------------------------------------------------------------------


def creator(spec: TruncationSpec, k: int) -> DiffOperator:
    """Scaled creation operator: multiplication by the shifted coupling
    t~_k / k! at inverse squared-coupling order."""
    zero_multi = (0,) * (spec.kmax + 1)
    c = _shifted_coupling(spec, k).lshift(-1).scale(QQ(1, factorial(k)))
    return DiffOperator(spec, [(c, zero_multi)])


def annihilator(spec: TruncationSpec, k: int) -> DiffOperator:
    """Scaled annihilation operator: 2 (k+1)! times the k-th coupling
    derivative at squared-coupling order."""
    multi = tuple(1 if i == k else 0 for i in range(spec.kmax + 1))
    c = Series.one(spec).lshift(1).scale(QQ(2 * factorial(k + 1)))
    return DiffOperator(spec, [(c, multi)])


def field_constant(spec: TruncationSpec) -> DiffOperator:
    """Zero-mode of the scaled field: the constant 2."""
    zero_multi = (0,) * (spec.kmax + 1)
    return DiffOperator(spec, [(Series.const(spec, 2), zero_multi)])


def minus_coefficient_operator(spec: TruncationSpec, m: int) -> DiffOperator:
    """Coefficient of z^{-m-2} (m >= -1) in the negative part of the normally
    ordered square of the quantized scaled field."""
    if m < -1:
        raise ValueError("index must be >= -1")
    kmax = spec.kmax
    b0 = field_constant(spec)
    terms = DiffOperator.zero(spec)
    if m == -1:
        terms = terms + b0.compose(creator(spec, 0))
        for n in range(1, kmax + 1):
            terms = terms + creator(spec, n).compose(annihilator(spec, n - 1))
        return terms.collect()
    if m == 0:
        for n in range(0, kmax + 1):
            terms = terms + creator(spec, n).compose(annihilator(spec, n))
        return (terms + b0.compose(b0).scale(QQ(1, 2))).collect()
    for n in range(0, kmax - m + 1):
        terms = terms + creator(spec, n).compose(annihilator(spec, n + m))
    # half-sum over ordered splits j + k = m of the zero/annihilation modes
    terms = terms + b0.compose(annihilator(spec, m - 1))
    for j in range(1, m):
        terms = terms + annihilator(spec, j - 1).compose(
            annihilator(spec, m - j - 1)
        ).scale(QQ(1, 2))
    return terms.collect()


def normalization_residual(spec: TruncationSpec, m: int) -> DiffOperator:
    """Quadratic coefficient operator minus NORMALIZATION times the second
    constraint family; zero as an operator identity."""
    family = "Ltilde" if m >= 1 else "L"
    expected = virasoro(spec, m, family)
    diff = minus_coefficient_operator(spec, m) - expected.scale(NORMALIZATION)
    return diff.collect()


def quantized_z_residual(spec: TruncationSpec, m: int) -> Series:
    """Quadratic coefficient operator applied to the closed-form partition
    series, with coupling-index and grade headroom as in the constraint
    residuals."""
    head = max(m, 0)
    big = TruncationSpec(spec.kmax + head, spec.dmax, spec.lmin - 2, spec.lmax + 2)
    Z = closed_form_Z(big)
    res = minus_coefficient_operator(big, m).apply(Z)
    order = 2 if m >= 2 else 1
    return res.restrict(spec).truncate_tdegree(spec.dmax - order)


def ladder_commutator(spec: TruncationSpec, n: int, m: int) -> DiffOperator:
    """[annihilator_{n+1}, creator_{m+1}] as an operator; equals the constant
    2 (n+1) when n == m and zero otherwise."""
    return commutator(annihilator(spec, n), creator(spec, m)).collect()


def propagator_coefficient(spec: TruncationSpec, n: int, m: int):
    """Vacuum two-field contraction coefficient of z^{-n-2} w^m for the
    conventionally normalized field: the ladder commutator constant divided
    by NORMALIZATION, i.e. (n+1) on the diagonal."""
    op = ladder_commutator(spec, n, m)
    zero_multi = (0,) * (spec.kmax + 1)
    const = Series.zero(spec)
    for c, multi in op.terms:
        if multi != zero_multi:
            raise ValueError("contraction is not a constant")
        const = const + c
    return const.constant_term() / NORMALIZATION
