"""Triangular coordinate change t <-> I, renormalization map, and the
free-energy formulas in the I-coordinates.

The I-series are defined by I_0 = the formal critical point of the action
(a Lagrange-inversion composition sum) and I_k = sum_n t_{n+k} I_0^n/n!.
The change is triangular (I_k - t_k has t-degree >= 2), hence invertible
to truncation.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import factorial

from .expr import Expr, Inv, Log, Num, Sym, substitute
from .partition import CorrelatorKey, correlator
from .series import QQ, NotAUnitError, Series, TruncationSpec

__all__ = [
    "ICoordBundle",
    "RenormState",
    "compute_I",
    "t_from_I_formula",
    "t_from_I",
    "renorm_step",
    "renorm_limit",
    "gradient_flow_coeffs",
    "jacobian_identities",
    "dI0_duality",
    "F_in_I",
    "F0_composition_sum",
    "F0_resummed_sum",
]


# ---------------------------------------------------------------------------
# multiset helpers
# ---------------------------------------------------------------------------


def _multisets(total, count, max_part):
    """Multisets {p: m_p} of exactly `count` non-negative parts summing to `total`.

    Yields (multiset dict, permutation count = count!/prod m_p!).
    """

    def rec(p, remaining_total, remaining_count, acc):
        if remaining_count == 0:
            if remaining_total == 0:
                perms = factorial(count)
                for m in acc.values():
                    perms //= factorial(m)
                yield dict(acc), perms
            return
        if p > max_part:
            return
        # part p can appear 0..remaining_count times
        for m in range(0, remaining_count + 1):
            if p * m > remaining_total:
                break
            if m:
                acc[p] = m
            yield from rec(p + 1, remaining_total - p * m, remaining_count - m, acc)
            acc.pop(p, None)

    yield from rec(0, total, count, {})


def _powers(s: Series, n: int) -> list:
    """[1, s, s^2, ..., s^n]; high powers of nilpotent series become zero."""
    out = [Series.one(s.spec)]
    for _ in range(n):
        out.append(out[-1] * s if not out[-1].is_zero() else out[-1])
    return out


def _composition_sum(spec, total, count, forbid=(), extra_l=0):
    """sum over p_1+...+p_count = total of prod t_{p_i}/p_i!  (ordered)."""
    out = Series.zero(spec)
    for ms, perms in _multisets(total, count, spec.kmax):
        if any(p in forbid for p in ms):
            continue
        c = QQ(perms)
        for p, m in ms.items():
            c /= factorial(p) ** m
        out = out + Series.monomial(spec, ms, extra_l, c)
    return out


# ---------------------------------------------------------------------------
# the I-coordinates
# ---------------------------------------------------------------------------


@dataclass
class ICoordBundle:
    I: list  # I[k] for 0 <= k <= kmax
    Iminus1: Series
    spec: TruncationSpec


def compute_I(spec: TruncationSpec) -> ICoordBundle:
    I0 = Series.zero(spec)
    for k in range(1, spec.dmax + 1):
        I0 = I0 + _composition_sum(spec, k - 1, k).scale(QQ(1, k))
    I0_pows = _powers(I0, max(spec.kmax, spec.dmax) + 2)
    Ik = [I0]
    for k in range(1, spec.kmax + 1):
        s = Series.zero(spec)
        for n in range(0, spec.kmax - k + 1):
            s = s + (Series.coupling(spec, n + k) * I0_pows[n]).scale(
                QQ(1) / factorial(n)
            )
        Ik.append(s)
    Im1 = Series.zero(spec)
    for n in range(0, spec.kmax + 1):
        Im1 = Im1 + (Series.coupling(spec, n) * I0_pows[n + 1]).scale(
            QQ(1) / factorial(n + 1)
        )
    return ICoordBundle(Ik, Im1, spec)


def _I_env(bundle: ICoordBundle):
    env = {f"I{k}": s for k, s in enumerate(bundle.I)}
    env["Im1"] = bundle.Iminus1
    return env


def t_from_I_formula(k: int, kmax: int) -> Expr:
    """The abstract inversion t_k = sum_n (-1)^n I_0^n/n! I_{n+k}."""
    I0 = Sym("I0")
    out: Expr = Num(0)
    for n in range(0, kmax - k + 1):
        out = out + Num(QQ((-1) ** n) / factorial(n)) * I0**n * Sym(f"I{n + k}")
    return out


def t_from_I(bundle: ICoordBundle) -> list:
    """Evaluate the inversion formulas on the computed I-series."""
    env = _I_env(bundle)
    return [
        substitute(t_from_I_formula(k, bundle.spec.kmax), env, bundle.spec)
        for k in range(bundle.spec.kmax + 1)
    ]


# ---------------------------------------------------------------------------
# renormalization map (completing the square at the Newton iterate)
# ---------------------------------------------------------------------------


@dataclass
class RenormState:
    tminus1: Series
    couplings: list  # current t-hat_k, 0 <= k <= kmax

    @property
    def spec(self):
        return self.tminus1.spec


def initial_state(spec: TruncationSpec) -> RenormState:
    return RenormState(
        Series.zero(spec), [Series.coupling(spec, k) for k in range(spec.kmax + 1)]
    )


def renorm_step(state: RenormState) -> RenormState:
    spec = state.spec
    t = state.couplings
    one = Series.one(spec)
    if (one - t[1]).constant_term() == 0:
        raise NotAUnitError("1 - t_1 is not a unit")
    x1 = t[0] * (one - t[1]).invert_unit()
    x1_pows = _powers(x1, spec.kmax + 2)

    def shifted(m):
        # sum_n t_{n+m} x1^n / n!
        s = Series.zero(spec)
        for n in range(0, spec.kmax - m + 1):
            s = s + (t[n + m] * x1_pows[n]).scale(QQ(1) / factorial(n))
        return s

    new_tm1 = (
        state.tminus1
        + (t[0] * t[0] * (one - t[1]).invert_unit()).scale(QQ(1, 2))
        + sum(
            (
                (t[n - 1] * x1_pows[n]).scale(QQ(1) / factorial(n))
                for n in range(3, spec.kmax + 2)
            ),
            Series.zero(spec),
        )
    )
    new_t0 = Series.zero(spec)
    for n in range(2, spec.kmax + 1):
        new_t0 = new_t0 + (t[n] * x1_pows[n]).scale(QQ(1) / factorial(n))
    new = [new_t0] + [shifted(m) for m in range(1, spec.kmax + 1)]
    return RenormState(new_tm1, new)


def renorm_limit(spec: TruncationSpec, max_steps=None) -> RenormState:
    """Iterate the map until the zeroth coupling vanishes to truncation."""
    state = initial_state(spec)
    steps = max_steps if max_steps is not None else spec.dmax + 2
    for _ in range(steps):
        if state.couplings[0].is_zero():
            return state
        state = renorm_step(state)
    if not state.couplings[0].is_zero():
        raise RuntimeError("renormalization did not converge in the degree bound")
    return state


# ---------------------------------------------------------------------------
# gradient-flow coefficient recursion
# ---------------------------------------------------------------------------


def gradient_flow_coeffs(spec: TruncationSpec, mmax: int) -> list:
    """Polynomials a_1..a_mmax with (m+1)a_{m+1} = -a_m + sum over partitions."""
    a = [None, Series.coupling(spec, 0)]
    for m in range(1, mmax):
        s = -a[m]
        for ms, _perms in _partitions_of(m):
            # ms: {j: k_j}, sum j*k_j = m; term prod a_j^{k_j}/k_j! * t_{sum k_j}
            idx = sum(ms.values())
            if idx > spec.kmax:
                continue
            term = Series.coupling(spec, idx)
            for j, kj in ms.items():
                term = term * (a[j] ** kj).scale(QQ(1) / factorial(kj))
            s = s + term
        a.append(s.scale(QQ(1, m + 1)))
    return a[1:]


def _partitions_of(m):
    """Partitions of m as multisets {j: k_j} with parts j >= 1."""

    def rec(j, remaining, acc):
        if remaining == 0:
            yield dict(acc), None
            return
        if j > remaining:
            return
        for k in range(0, remaining // j + 1):
            if k:
                acc[j] = k
            yield from rec(j + 1, remaining - j * k, acc)
            acc.pop(j, None)

    yield from rec(1, m, {})


# ---------------------------------------------------------------------------
# Jacobian / determinant identities
# ---------------------------------------------------------------------------


def _symbol_ring_env(spec: TruncationSpec):
    """Map the abstract I-symbols onto couplings of a fresh ring, so abstract
    polynomial identities can be checked by exact ring arithmetic."""
    return {f"I{k}": Series.coupling(spec, k) for k in range(spec.kmax + 1)}


def jacobian_identities(bundle: ICoordBundle) -> dict:
    """Residuals of the forward/inverse Jacobian and determinant identities.

    Every value in the returned dict should be a zero Series.
    """
    spec = bundle.spec
    one = Series.one(spec)
    I = bundle.I
    inv1I1 = (one - I[1]).invert_unit()
    I0_pows = _powers(I[0], max(spec.kmax, spec.dmax) + 2)
    out = {}
    d1 = spec.dmax - 1  # one derivative is exact only below the top degree
    for k in range(spec.kmax + 1):
        out[f"dI0/dt{k}"] = (
            I[0].derive(k).scale(factorial(k)) * (one - I[1]) - I0_pows[k]
        ).truncate_tdegree(d1)
    for ll in range(1, spec.kmax + 1):
        for k in range(spec.kmax + 1):
            rhs = I_next(bundle, ll) * I0_pows[k] * inv1I1.scale(QQ(1) / factorial(k))
            if k >= ll:
                rhs = rhs + I0_pows[k - ll].scale(QQ(1) / factorial(k - ll))
            out[f"dI{ll}/dt{k}"] = (I[ll].derive(k) - rhs).truncate_tdegree(d1)
    # inverse Jacobian entries, as abstract polynomial identities in I-symbols
    sym = _symbol_ring_env(spec)
    sym_pows = _powers(sym["I0"], spec.kmax + 1)
    for k in range(spec.kmax + 1):
        tk = substitute(t_from_I_formula(k, spec.kmax), sym, spec)
        d0 = tk.derive(0)  # d t_k / d I_0 in the symbol ring
        expect = -substitute(t_from_I_formula(k + 1, spec.kmax), sym, spec)
        if k == 0:
            expect = expect + one
        out[f"dt{k}/dI0"] = (d0 - expect).truncate_tdegree(d1)
        for ll in range(1, spec.kmax + 1):
            dl = tk.derive(ll)
            if ll >= k:
                expect_l = sym_pows[ll - k].scale(
                    QQ((-1) ** (ll - k)) / factorial(ll - k)
                )
            else:
                expect_l = Series.zero(spec)
            out[f"dt{k}/dI{ll}"] = (dl - expect_l).truncate_tdegree(d1)
    # A_j recursion vs closed form (in the I-symbol ring)
    A = [None, one]
    for j in range(2, spec.kmax + 1):
        s = Series.zero(spec)
        for i in range(1, j):
            s = s + (I0_pows[i] * A[j - i]).scale(QQ(1) / factorial(i))
        A.append(-s)
        closed = I0_pows[j - 1].scale(QQ((-1) ** (j - 1)) / factorial(j - 1))
        out[f"A{j}"] = A[j] - closed
    # determinant telescopes: (1-t_1) - sum_{j>=2} t_j I_0^{j-1}/(j-1)! = 1 - I_1
    det = one - Series.coupling(spec, 1)
    for j in range(2, spec.kmax + 1):
        det = det - (Series.coupling(spec, j) * I0_pows[j - 1]).scale(
            QQ(1) / factorial(j - 1)
        )
    out["det"] = det - (one - I[1])
    return out


def I_next(bundle: ICoordBundle, ll: int) -> Series:
    """I_{ll+1} within the ring (zero when the index exceeds kmax)."""
    if ll + 1 <= bundle.spec.kmax:
        return bundle.I[ll + 1]
    return Series.zero(bundle.spec)


# ---------------------------------------------------------------------------
# derivative dualities for I_0
# ---------------------------------------------------------------------------


def dI0_closed_form(n: int) -> Expr:
    """d^n I_0/dt_0^n as an abstract formula in the I-symbols (n >= 1)."""
    inv = Inv(Num(1) - Sym("I1"))
    if n == 1:
        return inv
    out: Expr = Num(0)
    for ms, _ in _partitions_of(n - 1):
        w = sum((j + 1) * m for j, m in ms.items())
        c = QQ(factorial(w))
        term: Expr = Num(1)
        for j, m in ms.items():
            c /= factorial(j + 1) ** m * factorial(m)
            term = term * Sym(f"I{j + 1}") ** m
        out = out + Num(c) * term * inv ** (w + 1)
    return out


def In_from_derivatives(n: int) -> Expr:
    """I_n in terms of the symbols D1..Dn (the t_0-derivatives of I_0)."""
    out: Expr = Num(0)
    for ms, _ in _partitions_of(n - 1):
        w = sum((j + 1) * m for j, m in ms.items())
        c = QQ(factorial(w))
        term: Expr = Num(1)
        for j, m in ms.items():
            c /= factorial(j + 1) ** m * factorial(m)
            term = term * (Num(-1) * Sym(f"D{j + 1}")) ** m
        out = out + Num(c) * term * Inv(Sym("D1")) ** (w + 1)
    return Num(-1) * out


def dI0_composition_form(spec: TruncationSpec, l: int) -> Series:
    """d^l I_0/dt_0^l by the composition sum (k+1)...(k+l-1) over k parts."""
    out = Series.zero(spec)
    for k in range(0, spec.dmax + 1):
        coeff = QQ(factorial(k + l - 1)) / factorial(k)
        out = out + _composition_sum(spec, k + l - 1, k).scale(coeff)
    return out


def dI0_duality(bundle: ICoordBundle, nmax: int) -> dict:
    """Residuals for the derivative dualities (expected all zero)."""
    spec = bundle.spec
    env = _I_env(bundle)
    out = {}
    D = [None, bundle.I[0].derive(0)]
    for n in range(2, nmax + 1):
        D.append(D[-1].derive(0))
    for n in range(1, nmax + 1):
        d = spec.dmax - n  # n derivatives are exact only to degree dmax - n
        out[f"d{n}I0_closed"] = (
            D[n] - substitute(dI0_closed_form(n), env, spec)
        ).truncate_tdegree(d)
        out[f"d{n}I0_composition"] = (
            D[n] - dI0_composition_form(spec, n)
        ).truncate_tdegree(d)
    denv = {f"D{i}": D[i] for i in range(1, nmax + 1)}
    for n in range(2, nmax + 1):
        out[f"I{n}_from_derivatives"] = (
            bundle.I[n] - substitute(In_from_derivatives(n), denv, spec)
        ).truncate_tdegree(spec.dmax - n)
    return out


# ---------------------------------------------------------------------------
# free energies in I-coordinates
# ---------------------------------------------------------------------------


def F_in_I_formula(g: int, F: Series) -> Expr:
    """The closed formula for the genus-g free energy in the I-symbols."""
    if g == 0:
        out: Expr = Num(0)
        # sum_k (-1)^k/(k+1)! (I_k + delta_{k,1}) I_0^{k+1}
        for k in range(0, F.spec.kmax + 1):
            term: Expr = Sym(f"I{k}")
            if k == 1:
                term = term + Num(1)
            out = out + Num(QQ((-1) ** k) / factorial(k + 1)) * term * Sym("I0") ** (
                k + 1
            )
        return out
    if g == 1:
        return Num(QQ(1, 2)) * Log(Inv(Num(1) - Sym("I1")))
    out = Num(0)
    inv = Inv(Num(1) - Sym("I1"))
    for ms in _valence_profiles(g):
        key = CorrelatorKey(
            tuple(j - 1 for j, m in ms.items() for _ in range(m)), g
        )
        c = correlator(key, F)
        if not c:
            continue
        w = sum(j * m for j, m in ms.items())
        term: Expr = Num(1)
        for j, m in ms.items():
            c /= factorial(m)
            term = term * Sym(f"I{j - 1}") ** m
        out = out + Num(c) * term * inv ** (w // 2)
    return out


def _valence_profiles(g):
    """Multisets {j: m_j} with j >= 3 and sum (j-2) m_j = 2g-2."""
    target = 2 * g - 2

    def rec(j, remaining, acc):
        if remaining == 0:
            yield dict(acc)
            return
        if j - 2 > remaining:
            return
        for m in range(0, remaining // (j - 2) + 1):
            if m:
                acc[j] = m
            yield from rec(j + 1, remaining - (j - 2) * m, acc)
            acc.pop(j, None)

    yield from rec(3, target, {})


def F_in_I(g: int, F: Series, bundle: ICoordBundle):
    """Returns (abstract formula, residual Series); residual contract: zero."""
    formula = F_in_I_formula(g, F)
    env = _I_env(bundle)
    value = substitute(formula, env, bundle.spec).lshift(g - 1)
    return formula, F.grade_slice(g - 1) - value


def F0_composition_sum(spec: TruncationSpec) -> Series:
    """F_0 = sum_k 1/(k(k+1)) sum_{p_1+..+p_{k+1}=k-1} prod t_{p_i}/p_i!  (grade -1)."""
    out = Series.zero(spec)
    for k in range(1, spec.dmax + 1):
        out = out + _composition_sum(spec, k - 1, k + 1, extra_l=-1).scale(
            QQ(1, k * (k + 1))
        )
    return out


def F0_resummed_sum(spec: TruncationSpec) -> Series:
    """The (1-t_1)-resummed variant of the composition sum for F_0 (grade -1)."""
    one = Series.one(spec)
    inv = (one - Series.coupling(spec, 1)).invert_unit()
    inv_pows = [one]
    for _ in range(spec.dmax + 1):
        inv_pows.append(inv_pows[-1] * inv)
    out = Series.zero(spec)
    for k in range(1, spec.dmax + 1):
        base = _composition_sum(spec, k - 1, k + 1, forbid=(1,), extra_l=-1)
        if base.is_zero():
            continue
        out = out + (base * inv_pows[k]).scale(QQ(1, k * (k + 1)))
    return out
