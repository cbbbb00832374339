"""Multi-point correlation series in auxiliary spectral variables.

Two presentations are maintained side by side:

* ``z``-presentation: expansions in negative powers of outer variables
  ``z_1, ..., z_n`` (resolvent-type series),
* ``w``-presentation: expansions in non-negative powers of outer variables
  ``w_1, ..., w_n`` (exponential-type series).

Both are realized as :class:`~grav1d.series.OuterSeries` objects whose
coefficients live in the exact truncated coupling ring.  The module provides
the insertion operators that add an outer variable to an ``(n-1)``-point
series, several independent closed forms (profile sums, exponential forms,
geometric resummations, marked-tree expansions), and residual checks that
compare the different routes pairwise.

Every check reports a residual ``OuterSeries``; truncation artifacts are
removed by cutting each coefficient at the degree the exact ring can still
resolve, which depends on how many coupling derivatives each route consumed.
"""

from __future__ import annotations

import heapq
import itertools
from math import comb, factorial

from .icoords import compute_I
from .partition import closed_form_Z, double_factorial, free_energy
from .series import QQ, OuterSeries, Series, Slot, TruncationSpec

__all__ = [
    "zslots",
    "wslots",
    "widened",
    "insertion_operator",
    "multi_point",
    "genus_part",
    "t0_line",
    "slot_weight",
    "trimmed",
    "geometric_power",
    "bessel_T",
    "coupling_derivative_t0_line",
    "one_point_exponential_form",
    "one_point_profile_form",
    "one_point_t0_line_form",
    "one_point_checks",
    "merge_exponential",
    "two_point_checks",
    "l_point_genus0_checks",
    "genus0_correlator_polynomial_check",
    "hat_partition_residual",
    "recursion_checks",
    "marked_tree_genus0",
    "genus1_one_point_form",
    "genus1_two_point_form",
    "marked_tree_checks",
]


# ---------------------------------------------------------------------------
# slots and basic builders
# ---------------------------------------------------------------------------


def zslots(n, order):
    """Slots for expansions in z_i^{-1}, ..., z_i^{-(order+1)} (plus z^0)."""
    return tuple(Slot(f"z{i + 1}", -(order + 1), 0) for i in range(n))


def wslots(n, order):
    """Slots for expansions in w_i^0, ..., w_i^order."""
    return tuple(Slot(f"w{i + 1}", 0, order) for i in range(n))


def widened(spec: TruncationSpec, pad: int = 2) -> TruncationSpec:
    """Enlarge the grade window so intermediate grade shifts are not clipped."""
    return TruncationSpec(spec.kmax, spec.dmax, spec.lmin - 2, spec.lmax + pad)


def insertion_operator(x: OuterSeries, slot_index: int, hat: bool) -> OuterSeries:
    """Insert one outer variable by differentiating all coupling coefficients.

    ``hat=False``: sum over m >= 1 of m! z^{-m-1} d/dt_{m-1};
    ``hat=True``:  sum over m >= 1 of w^m d/dt_{m-1}.
    """
    spec = x.spec
    out = OuterSeries.zero(x.slots, spec)
    sl = x.slots[slot_index]
    for ev, s in x.terms.items():
        if hat:
            moves = [
                (m - 1, ev[slot_index] + m, QQ(1))
                for m in range(1, min(spec.kmax + 1, sl.emax - ev[slot_index]) + 1)
            ]
        else:
            room = ev[slot_index] - sl.emin - 1
            moves = [
                (m - 1, ev[slot_index] - m - 1, QQ(factorial(m)))
                for m in range(1, min(spec.kmax + 1, room) + 1)
            ]
        for k, newe, c in moves:
            d = s.derive(k)
            if d.is_zero():
                continue
            nev = ev[:slot_index] + (newe,) + ev[slot_index + 1 :]
            v = d.scale(c)
            cur = out.terms.get(nev)
            cur = v if cur is None else cur + v
            if cur.is_zero():
                out.terms.pop(nev, None)
            else:
                out.terms[nev] = cur
    return out


def multi_point(spec: TruncationSpec, n: int, order: int, F=None, hat=False):
    """The n-point series built by repeated variable insertion.

    Starts from the grade-shifted log-series and inserts n outer variables.
    For n = 1 the constant tail (1 for the w-form, 1/z for the z-form) is
    included.
    """
    if F is None:
        F = free_energy(closed_form_Z(spec))
    slots = wslots(n, order) if hat else zslots(n, order)
    x = OuterSeries(slots, spec, {(0,) * n: F.lshift(1)})
    for i in range(n):
        x = insertion_operator(x, i, hat)
    if n == 1:
        ev = (0,) if hat else (-1,)
        x = x + OuterSeries(slots, spec, {ev: Series.one(spec)})
    return x


def genus_part(x: OuterSeries, g: int) -> OuterSeries:
    """Grade slice selecting the genus-g coefficients."""
    return x.map_coefficients(lambda s: s.grade_slice(g))


def _t0_only(s: Series) -> Series:
    out = Series.zero(s.spec)
    out.terms = {(e, l): c for (e, l), c in s.terms.items() if not any(e[1:])}
    return out


def t0_line(x):
    """Set all couplings except the first to zero."""
    if isinstance(x, Series):
        return _t0_only(x)
    return x.map_coefficients(_t0_only)


def slot_weight(ev) -> int:
    """Total insertion order of an outer monomial.

    Exponent -(m+1) in a z-slot and exponent m in a w-slot both correspond to
    an m-th order coupling insertion.
    """
    return sum((-e - 1) if e < 0 else e for e in ev)


def trimmed(diff: OuterSeries, cut=None, cut_fn=None, graded_cut_fn=None):
    """Drop the coefficient degrees the truncated ring cannot resolve.

    Exactly one of the arguments selects the cut: a constant degree ``cut``,
    a per-monomial function ``cut_fn(ev)``, or a per-monomial per-grade
    function ``graded_cut_fn(ev, l)``.
    """
    spec = diff.spec
    out = OuterSeries.zero(diff.slots, spec)
    for ev, s in diff.terms.items():
        if graded_cut_fn is not None:
            v = Series.zero(spec)
            for l in s.support_grades():
                sl = s.grade_slice(l).truncate_tdegree(graded_cut_fn(ev, l))
                v = v + sl
        else:
            c = cut_fn(ev) if cut_fn is not None else cut
            v = s.truncate_tdegree(c)
        if not v.is_zero():
            out.terms[ev] = v
    return out


def geometric_power(slots, spec, i, u: Series, p: int, coeff=None) -> OuterSeries:
    """Expansion of 1/(z_i - u)^p as a series in z_i^{-1}.

    ``u`` must have no constant term so that the expansion terminates.
    """
    if u.constant_term():
        raise ValueError("expansion point must have no constant term")
    order = -slots[i].emin - 1
    out = OuterSeries.zero(slots, spec)
    up = Series.one(spec)
    for j in range(0, order - p + 2):
        c = up.scale(comb(p - 1 + j, j))
        if coeff is not None:
            c = c * coeff
        if not c.is_zero():
            ev = [0] * len(slots)
            ev[i] = -(p + j)
            out = out + OuterSeries(slots, spec, {tuple(ev): c})
        up = up * u
        if up.is_zero():
            break
    return out


def _outer_exp(x: OuterSeries) -> OuterSeries:
    """exp of an outer series whose terms all carry positive slot weight or a
    nilpotent coefficient; the expansion terminates by truncation."""
    slots, spec = x.slots, x.spec
    one = OuterSeries(slots, spec, {(0,) * len(slots): Series.one(spec)})
    result = one
    p = one
    bound = (
        sum(max(abs(sl.emin), sl.emax) for sl in slots)
        + spec.dmax
        + (spec.lmax - spec.lmin)
        + 2
    )
    for n in range(1, bound + 1):
        p = p * x
        if p.is_zero():
            break
        result = result + p.scale(QQ(1) / factorial(n))
    return result


def _slot_subset(slots, x: OuterSeries, indices) -> OuterSeries:
    """Re-embed a series on fewer slots into a bigger slot tuple; exponents
    that fall outside the target ranges are dropped."""
    out = OuterSeries.zero(slots, x.spec)
    for ev, s in x.terms.items():
        nev = [0] * len(slots)
        ok = True
        for pos, i in enumerate(indices):
            if not (slots[i].emin <= ev[pos] <= slots[i].emax):
                ok = False
                break
            nev[i] = ev[pos]
        if not ok:
            continue
        nev = tuple(nev)
        cur = out.terms.get(nev)
        cur = s if cur is None else cur + s
        out.terms[nev] = cur
    return out


def _z_derive(x: OuterSeries, i: int, k: int) -> OuterSeries:
    out = x
    for _ in range(k):
        out = out.slot_derive(i)
    return out


def _t0_derive(x: OuterSeries, k: int) -> OuterSeries:
    out = x
    for _ in range(k):
        out = out.map_coefficients(lambda s: s.derive(0))
    return out


# ---------------------------------------------------------------------------
# one-point forms
# ---------------------------------------------------------------------------


def bessel_T(n: int, k: int):
    """Triangle n!/((n-2k)! k! 2^k) counting involutive matchings."""
    if k < 0 or 2 * k > n:
        return QQ(0)
    return QQ(factorial(n), factorial(n - 2 * k) * factorial(k) * 2**k)


def coupling_derivative_t0_line(spec: TruncationSpec, n: int) -> Series:
    """Closed form of the n-th coupling derivative of the log-series with all
    couplings but the first set to zero."""
    out = Series.zero(spec)
    for k in range(0, (n + 1) // 2 + 1):
        d = n + 1 - 2 * k
        if d > spec.dmax or not (spec.lmin <= k - 1 <= spec.lmax):
            continue
        c = bessel_T(n + 1, k) / factorial(n + 1)
        out = out + Series.monomial(spec, {0: d}, l=k - 1, c=c)
    return out


def one_point_exponential_form(spec: TruncationSpec, order: int, F: Series):
    """w-form one-point series as the exponential of weighted t_0-derivatives."""
    slots = wslots(1, order)
    x = OuterSeries.zero(slots, spec)
    d = F
    for n in range(1, order + 1):
        d = d.derive(0)
        if d.is_zero():
            break
        x = x + OuterSeries(slots, spec, {(n,): d.lshift(n).scale(QQ(1) / factorial(n))})
    return _outer_exp(x)


def _profiles(total):
    """Multiplicity profiles {j: m_j} with sum j*m_j == total, j >= 1."""

    def rec(j, remaining, acc):
        if remaining == 0:
            yield acc
            return
        if j > remaining:
            return
        for m in range(0, remaining // j + 1):
            yield from rec(j + 1, remaining - j * m, acc + ([(j, m)] if m else []))

    yield from rec(1, total, [])


def one_point_profile_form(spec: TruncationSpec, order: int, F: Series):
    """z-form one-point series as a sum over derivative profiles.

    Coefficient of z^{-1-m}: sum over profiles (m_1, m_2, ...) with
    sum j*m_j = m of m!/prod(m_j! (j!)^{m_j}) prod (lambda^{2j} d^jF/dt_0^j)^{m_j}.
    """
    slots = zslots(1, order)
    derivs = [None, F.derive(0).lshift(1)]
    for j in range(2, order + 1):
        derivs.append(derivs[-1].derive(0).lshift(1))
    out = OuterSeries(slots, spec, {(-1,): Series.one(spec)})
    for total in range(1, order + 1):
        coeff = Series.zero(spec)
        for prof in _profiles(total):
            c = QQ(factorial(total))
            term = Series.one(spec)
            for j, m in prof:
                c /= factorial(m) * factorial(j) ** m
                term = term * derivs[j] ** m
            coeff = coeff + term.scale(c)
        if not coeff.is_zero():
            out = out + OuterSeries(slots, spec, {(-1 - total,): coeff})
    return out


def one_point_t0_line_form(spec: TruncationSpec, order: int):
    """z-form one-point series on the first-coupling line: for each g the
    residue series (2g-1)!! lambda^{2g}/(z - t_0)^{2g+1}."""
    slots = zslots(1, order)
    t0 = Series.coupling(spec, 0)
    out = OuterSeries.zero(slots, spec)
    g = 0
    while 2 * g + 1 <= order + 1 and g <= spec.lmax:
        coeff = Series.const(spec, double_factorial(2 * g - 1), l=g)
        out = out + geometric_power(slots, spec, 0, t0, 2 * g + 1, coeff=coeff)
        g += 1
    return out


def one_point_checks(spec: TruncationSpec, order: int, F=None) -> dict:
    """Residuals comparing the independent one-point routes."""
    wspec = widened(spec)
    if F is None:
        F = free_energy(closed_form_Z(wspec))
    W1 = multi_point(wspec, 1, order, F=F)
    W1h = multi_point(wspec, 1, order, F=F, hat=True)
    bundle = compute_I(wspec)
    d = spec.dmax
    out = {}
    # the exponential and profile routes consume slot_weight(ev) derivatives
    out["exponential"] = trimmed(
        W1h - one_point_exponential_form(wspec, order, F),
        cut_fn=lambda ev: d - slot_weight(ev),
    )
    out["profile"] = trimmed(
        W1 - one_point_profile_form(wspec, order, F),
        cut_fn=lambda ev: d - slot_weight(ev),
    )
    out["genus0_geometric"] = trimmed(
        genus_part(W1, 0) - geometric_power(W1.slots, wspec, 0, bundle.I[0], 1),
        cut=d - 1,
    )
    out["t0_line"] = trimmed(
        t0_line(W1) - one_point_t0_line_form(wspec, order), cut=d - 1
    )
    bessel = OuterSeries.zero(zslots(1, order), wspec)
    for n in range(0, min(spec.kmax, order) + 1):
        diff = t0_line(F.derive(n)) - coupling_derivative_t0_line(wspec, n)
        diff = diff.truncate_tdegree(d - 1)
        if not diff.is_zero():
            bessel = bessel + OuterSeries(zslots(1, order), wspec, {(-n - 1,): diff})
    out["bessel"] = bessel
    return out


# ---------------------------------------------------------------------------
# two-point forms
# ---------------------------------------------------------------------------


def merge_exponential(x: OuterSeries, slots) -> OuterSeries:
    """Substitute the single outer variable of ``x`` by the sum of the
    variables of ``slots`` (binomial spreading of exponents)."""
    n = len(slots)
    out = OuterSeries.zero(slots, x.spec)
    for (e,), s in x.terms.items():
        for split in itertools.product(*[range(e + 1)] * (n - 1)):
            if sum(split) > e:
                continue
            ev = split + (e - sum(split),)
            if any(a > sl.emax for a, sl in zip(ev, slots)):
                continue
            c = factorial(e)
            for a in ev:
                c //= factorial(a)
            v = s.scale(c)
            cur = out.terms.get(ev)
            cur = v if cur is None else cur + v
            if cur.is_zero():
                out.terms.pop(ev, None)
            else:
                out.terms[ev] = cur
    return out


def _factor_cut(x: OuterSeries, k: int, keep) -> OuterSeries:
    """Keep coefficient terms for which ``keep(degree, grade, k)`` holds."""

    def f(s):
        out = Series.zero(s.spec)
        out.terms = {
            (e, l): c for (e, l), c in s.terms.items() if keep(sum(e), l, k)
        }
        return out

    return x.map_coefficients(f)


def _pairing_sum(slots, spec, a_embedded, deriv_slot, b_embedded, kcap, keep=None):
    """sum_{k>=1} (-1)^k lambda^{2k}/k! d_z^k(a) . d_t0^k(b).

    ``keep(degree, grade, k)`` prunes factor terms that cannot reach the
    resolvable region of the final residual (the other factor contributes
    non-negative degree and grade, so pruning against the per-grade degree
    cut of the residual is safe when that cut is non-increasing in the grade).
    """
    acc = OuterSeries.zero(slots, spec)
    a, b = a_embedded, b_embedded
    for k in range(1, kcap + 1):
        a = a.slot_derive(deriv_slot)
        b = b.map_coefficients(lambda s: s.derive(0))
        if a.is_zero() or b.is_zero():
            break
        af, bf = a, b
        if keep is not None:
            af = _factor_cut(a, k, keep)
            bf = _factor_cut(b, k, keep)
        acc = acc + (af * bf).scale(QQ((-1) ** k) / factorial(k)).lshift(k)
    return acc


def _permute_slots(x: OuterSeries, perm) -> OuterSeries:
    """Relabel slot positions: position p of ``x`` becomes position perm[p]."""
    out = OuterSeries.zero(x.slots, x.spec)
    for ev, s in x.terms.items():
        nev = [0] * len(ev)
        for p, e in enumerate(ev):
            nev[perm[p]] = e
        nev = tuple(nev)
        cur = out.terms.get(nev)
        cur = s if cur is None else cur + s
        out.terms[nev] = cur
    return out


def _gaussian_exponent(slots, spec, indices):
    """sum over the chosen slots of w t_0 + (sum w)^2 lambda^2/2."""
    t0 = Series.coupling(spec, 0)
    x = OuterSeries.zero(slots, spec)
    for i in indices:
        ev = tuple(1 if j == i else 0 for j in range(len(slots)))
        x = x + OuterSeries(slots, spec, {ev: t0})
    for i in indices:
        for j in indices:
            ev = tuple(
                (2 if a == i else 0) if i == j else (1 if a in (i, j) else 0)
                for a in range(len(slots))
            )
            x = x + OuterSeries(
                slots, spec, {ev: Series.const(spec, QQ(1, 2), l=1)}
            )
    return x


def two_point_checks(spec: TruncationSpec, order: int, F=None) -> dict:
    wspec = widened(spec)
    if F is None:
        F = free_energy(closed_form_Z(wspec))
    d = spec.dmax
    out = {}

    # w-form product identity: shifted two-point series against the merged
    # one-point series minus the product of one-point series
    slots2w = wslots(2, order)
    W2h = multi_point(wspec, 2, order, F=F, hat=True)
    W1h_big = multi_point(wspec, 1, 2 * order, F=F, hat=True)
    W1h = multi_point(wspec, 1, order, F=F, hat=True)
    merged = merge_exponential(W1h_big, slots2w)
    prod = _slot_subset(slots2w, W1h, [0]) * _slot_subset(slots2w, W1h, [1])
    diff = trimmed(W2h.lshift(1) - (merged - prod), cut=d - 2)
    # the merged series needs the coupling of index a+b-1, which the ring
    # only carries up to kmax
    diff.terms = {
        ev: s for ev, s in diff.terms.items() if sum(ev) <= spec.kmax + 1
    }
    out["hat_product"] = diff

    # z-form derivative pairing identity (and its symmetrized variant)
    slots2 = zslots(2, order)
    W2 = multi_point(wspec, 2, order, F=F)
    W1 = multi_point(wspec, 1, order, F=F)
    kcap = min(wspec.lmax, d)

    def pairing(first, second):
        a = _slot_subset(slots2, W1, [first])
        b = _slot_subset(slots2, W1, [second])
        return _pairing_sum(
            slots2, wspec, a, first, b, kcap,
            keep=lambda da, la, k: da <= d - la - k - 1,
        )

    gcut = lambda ev, l: d - l - 1
    out["z_pairing"] = trimmed(W2.lshift(1) - pairing(1, 0), graded_cut_fn=gcut)
    sym = (pairing(1, 0) + pairing(0, 1)).scale(QQ(1, 2))
    out["z_pairing_symmetric"] = trimmed(W2.lshift(1) - sym, graded_cut_fn=gcut)

    # genus-zero factorization
    F0 = F.grade_slice(-1).lshift(1)
    u = F0.derive(0)
    P = u.derive(0)
    g1 = geometric_power(slots2, wspec, 0, u, 2)
    g2 = geometric_power(slots2, wspec, 1, u, 2)
    out["genus0_factorized"] = trimmed(genus_part(W2, 0) - g1 * g2 * P, cut=d - 2)

    # first-coupling-line w-form closed form
    both = _outer_exp(_gaussian_exponent(slots2w, wspec, [0, 1]))
    single = _outer_exp(_gaussian_exponent(slots2w, wspec, [0])) * _outer_exp(
        _gaussian_exponent(slots2w, wspec, [1])
    )
    out["hat_t0_line"] = trimmed(
        t0_line(W2h).lshift(1) - (both - single), cut=d - 2
    )
    return out


# ---------------------------------------------------------------------------
# genus-zero l-point forms
# ---------------------------------------------------------------------------


def l_point_genus0_checks(spec: TruncationSpec, l: int, order: int, F=None) -> dict:
    wspec = widened(spec)
    if F is None:
        F = free_energy(closed_form_Z(wspec))
    F0 = F.grade_slice(-1).lshift(1)
    u = F0.derive(0)
    P = u.derive(0)
    d = spec.dmax
    out = {}

    # z-form: (l-2)-nd t_0-derivative of the product of double poles
    slots = zslots(l, order)
    Wl = multi_point(wspec, l, order, F=F)
    prod = geometric_power(slots, wspec, 0, u, 2)
    for i in range(1, l):
        prod = prod * geometric_power(slots, wspec, i, u, 2)
    prod = prod * P
    out["z_form"] = trimmed(genus_part(Wl, 0) - _t0_derive(prod, l - 2), cut=d - l)

    # w-form: the unshifted generating function (every exponent lowered by
    # one) equals the (l-1)-st t_0-derivative of sum_{n>=1} u^n S^{n-1}/n!,
    # where S is the sum of the outer variables
    slotsw = wslots(l, order)
    Wlh = multi_point(wspec, l, order, F=F, hat=True)
    lowered = OuterSeries.zero(slotsw, wspec)
    for ev, s in genus_part(Wlh, 0).terms.items():
        if any(e < 1 for e in ev):
            continue
        lowered.terms[tuple(e - 1 for e in ev)] = s
    acc = OuterSeries.zero(slotsw, wspec)
    un = Series.one(wspec)
    for n in range(1, wspec.dmax + 2):
        un = un * u
        if un.is_zero():
            break
        c = un.scale(QQ(1) / factorial(n))
        for split in itertools.product(*[range(n)] * (l - 1)):
            if sum(split) > n - 1:
                continue
            ev = split + (n - 1 - sum(split),)
            if any(e > order - 1 for e in ev):
                continue
            m = factorial(n - 1)
            for a in ev:
                m //= factorial(a)
            acc = acc + OuterSeries(slotsw, wspec, {ev: c.scale(m)})
    out["w_form"] = trimmed(lowered - _t0_derive(acc, l - 1), cut=d - l)
    return out


def genus0_correlator_polynomial_check(F: Series, l: int) -> list:
    """Compare genus-zero correlators with multinomial coefficients.

    For every tuple (n_1, ..., n_l) with sum n_j = l - 2 the correlator must
    equal (l-2)!/prod(n_j!).  Returns the offending tuples.
    """
    from .partition import CorrelatorKey, correlator

    spec = F.spec
    bad = []
    for combo in itertools.combinations_with_replacement(
        range(0, min(l - 1, spec.kmax + 1)), l
    ):
        if sum(combo) != l - 2:
            continue
        key = CorrelatorKey(tuple(sorted(combo)), 0)
        expected = QQ(factorial(l - 2))
        for n in combo:
            expected /= factorial(n)
        if correlator(key, F) != expected:
            bad.append(combo)
    return bad


# ---------------------------------------------------------------------------
# partition-sum and recursion identities in arbitrary genus
# ---------------------------------------------------------------------------


def _set_partitions(items):
    items = list(items)
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in _set_partitions(rest):
        for i in range(len(part)):
            yield part[:i] + [[first] + part[i]] + part[i + 1 :]
        yield [[first]] + part


def hat_partition_residual(spec: TruncationSpec, l: int, order: int, F=None):
    """Residual of the shifted w-form l-point series against the partition sum
    over products of merged one-point series.

    Uses the cumulant normalization (-1)^(k-1) (k-1)! over unordered
    partitions into k blocks.
    """
    wspec = widened(spec)
    if F is None:
        F = free_energy(closed_form_Z(wspec))
    slots = wslots(l, order)
    Wlh = multi_point(wspec, l, order, F=F, hat=True)
    W1h_big = multi_point(wspec, 1, l * order, F=F, hat=True)
    acc = OuterSeries.zero(slots, wspec)
    dcut = spec.dmax - l
    for part in _set_partitions(range(l)):
        k = len(part)
        c = QQ((-1) ** (k - 1) * factorial(k - 1))
        term = None
        for block in part:
            merged = merge_exponential(W1h_big, wslots(len(block), order))
            emb = _slot_subset(slots, merged, block)
            # factor terms beyond the residual degree cut cannot contribute
            emb = emb.map_coefficients(lambda s: s.truncate_tdegree(dcut))
            term = emb if term is None else term * emb
        acc = acc + term.scale(c)
    diff = trimmed(Wlh.lshift(l - 1) - acc, cut=spec.dmax - l)
    # merged blocks need couplings up to (sum of block exponents) - 1
    diff.terms = {
        ev: s for ev, s in diff.terms.items() if sum(ev) <= spec.kmax + 1
    }
    return diff


def recursion_checks(spec: TruncationSpec, order: int, F=None) -> dict:
    """Three-point recursion residuals for the z-form series.

    ``asymmetric``: the pairing identity with the new variable in the first
    slot, exactly as produced by one more variable insertion;
    ``symmetric``: the fully symmetrized binomial-weighted recursion over
    ordered pairs of nonempty blocks, where the outer derivative of a block is
    realized as (|I|-1)! times the sum of the single-variable derivatives and
    each block carries one grade shift per extra point.
    """
    l = 3
    d = spec.dmax
    # the graded residual cut keeps grades below dmax, so a narrow grade
    # window suffices and keeps the intermediate products small
    wspec = TruncationSpec(spec.kmax, d, min(spec.lmin, -2) - 1, d - 1)
    if F is not None:
        F = F.restrict(wspec)
    else:
        F = free_energy(closed_form_Z(wspec))
    slots = zslots(l, order)
    kcap = min(wspec.lmax, d)
    keep = lambda da, la, k: da <= d - max(3, la + k + 1)

    W1 = multi_point(wspec, 1, order, F=F)
    W2 = multi_point(wspec, 2, order, F=F)
    W3 = multi_point(wspec, 3, order, F=F)

    gcut = lambda ev, lg: d - max(3, lg + 1)

    # Only two pairing shapes occur; all block choices are slot relabelings
    # of these because the multi-point series are symmetric in their slots.
    # shape A: single-point block derived at slot 0, two-point block at (1,2)
    rep_a = _pairing_sum(
        slots,
        wspec,
        _slot_subset(slots, W1, [0]),
        0,
        _slot_subset(slots, W2.lshift(1), [1, 2]),
        kcap,
        keep=keep,
    )
    # shape B: two-point block at (0,1) derived at slot 0, single block at 2
    rep_b = _pairing_sum(
        slots,
        wspec,
        _slot_subset(slots, W2.lshift(1), [0, 1]),
        0,
        _slot_subset(slots, W1, [2]),
        kcap,
        keep=keep,
    )

    out = {}
    # lambda^4 W_3 = sum_k c_k [d_{z2}^k (lambda^2 W_2(z1,z2)) d_t0^k W_1(z3)
    #                           + d_{z2}^k W_1(z2) d_t0^k (lambda^2 W_2(z1,z3))]
    rhs = _permute_slots(rep_b, (1, 0, 2)) + _permute_slots(rep_a, (1, 0, 2))
    out["asymmetric"] = trimmed(W3.lshift(2) - rhs, graded_cut_fn=gcut)

    # fully symmetrized recursion
    acc = OuterSeries.zero(slots, wspec)
    items = list(range(l))
    for r in range(1, l):
        for I in itertools.combinations(items, r):
            J = [i for i in items if i not in I]
            cfac = QQ(comb(l - 2, r - 1) * factorial(r - 1) * factorial(len(J)))
            for i in I:
                rest = [x for x in I if x != i]
                perm = [0] * l
                if r == 1:
                    rep = rep_a
                    roles = [i] + J
                else:
                    rep = rep_b
                    roles = [i] + rest + J
                for p, target in enumerate(roles):
                    perm[p] = target
                acc = acc + _permute_slots(rep, tuple(perm)).scale(cfac)
    acc = acc.scale(QQ(1, factorial(l)))
    out["symmetric"] = trimmed(W3.lshift(2) - acc, graded_cut_fn=gcut)
    return out


# ---------------------------------------------------------------------------
# marked-tree expansions
# ---------------------------------------------------------------------------


def _prufer_trees(m: int):
    """All labeled trees on m vertices as edge lists."""
    if m == 1:
        yield []
        return
    if m == 2:
        yield [(0, 1)]
        return
    for seq in itertools.product(range(m), repeat=m - 2):
        degree = [1] * m
        for v in seq:
            degree[v] += 1
        heap = [i for i in range(m) if degree[i] == 1]
        heapq.heapify(heap)
        edges = []
        for v in seq:
            leaf = heapq.heappop(heap)
            edges.append((leaf, v))
            degree[v] -= 1
            if degree[v] == 1:
                heapq.heappush(heap, v)
        edges.append((heapq.heappop(heap), heapq.heappop(heap)))
        yield edges


def marked_tree_genus0(spec: TruncationSpec, n: int, order: int, F=None):
    """Genus-zero n-point series as a sum over marked trees.

    Trees have n external chain vertices (one per outer variable, each also
    carrying its outer leg) and optionally internal branch vertices of
    valence >= 3 that may only attach to chain vertices.  A chain vertex of
    tree-valence v contributes v!/(z_j - u)^{v+1}; a branch vertex of valence
    v contributes the v-th t_0-derivative of the genus-zero log-series; each
    chain-chain edge contributes its second t_0-derivative.  Branch vertices
    are unlabeled (division by s!).
    """
    wspec = spec if spec.lmax >= 2 else widened(spec)
    if F is None:
        F = free_energy(closed_form_Z(wspec))
    F0 = F.grade_slice(-1).lshift(1)
    u = F0.derive(0)
    derivs = [F0]
    for _ in range(2 * n + 2):
        derivs.append(derivs[-1].derive(0))
    P = derivs[2]
    slots = zslots(n, order)
    total = OuterSeries.zero(slots, wspec)
    for s in range(0, max(n - 2, 0) + 1):
        m = n + s
        for edges in _prufer_trees(m):
            val = [0] * m
            ok = True
            for a, b in edges:
                if a >= n and b >= n:
                    ok = False
                    break
                val[a] += 1
                val[b] += 1
            if not ok or any(val[v] < 3 for v in range(n, m)):
                continue
            coeff = Series.one(wspec)
            for v in range(n, m):
                coeff = coeff * derivs[val[v]]
            for a, b in edges:
                if a < n and b < n:
                    coeff = coeff * P
            term = None
            for j in range(n):
                geo = geometric_power(
                    slots,
                    wspec,
                    j,
                    u,
                    val[j] + 1,
                    coeff=Series.const(wspec, QQ(factorial(val[j]))),
                )
                term = geo if term is None else term * geo
            total = total + (term * coeff).scale(QQ(1, factorial(s)))
    return total


def genus1_one_point_form(spec: TruncationSpec, order: int, F=None):
    """Genus-one one-point series from genus-zero data:
    (1/2) (z-u)^{-2} P^{-1} Q + (z-u)^{-3} P, with u, P, Q the first three
    t_0-derivatives of the genus-zero log-series."""
    if F is None:
        F = free_energy(closed_form_Z(spec))
    F0 = F.grade_slice(-1).lshift(1)
    u = F0.derive(0)
    P = u.derive(0)
    Q = P.derive(0)
    slots = zslots(1, order)
    Pinv = P.invert_unit()
    a = geometric_power(slots, spec, 0, u, 2, coeff=(Pinv * Q).scale(QQ(1, 2)))
    b = geometric_power(slots, spec, 0, u, 3, coeff=P)
    return a + b


def genus1_two_point_form(spec: TruncationSpec, order: int, F=None, seven_terms=True):
    """Genus-one two-point series from genus-zero data.

    ``seven_terms=True`` gives the expression obtained by inserting a second
    outer variable into the genus-one one-point series:

      2 (z1-u)^{-3} (z2-u)^{-2} Q + (1 <-> 2)
      + 3 (z1-u)^{-4} (z2-u)^{-2} P^2 + (1 <-> 2)
      + 2 (z1-u)^{-3} (z2-u)^{-3} P^2
      - (1/2) (z1-u)^{-2} (z2-u)^{-2} P^{-2} Q^2
      + (1/2) (z1-u)^{-2} (z2-u)^{-2} P^{-1} R.

    ``seven_terms=False`` returns a five-term variant that omits the
    mixed-cubic-pole and fourth-derivative terms and drops the inverse-square
    factor on the Q^2 term; it is kept for reference only and does not
    reproduce the two-point series.
    """
    if F is None:
        F = free_energy(closed_form_Z(spec))
    F0 = F.grade_slice(-1).lshift(1)
    u = F0.derive(0)
    P = u.derive(0)
    Q = P.derive(0)
    R = Q.derive(0)
    slots = zslots(2, order)
    Pinv = P.invert_unit()
    one = Series.one(spec)

    def geo(i, p, c):
        return geometric_power(slots, spec, i, u, p, coeff=c)

    total = OuterSeries.zero(slots, spec)
    total = total + geo(0, 3, Q.scale(2)) * geo(1, 2, one)
    total = total + geo(1, 3, Q.scale(2)) * geo(0, 2, one)
    total = total + geo(0, 4, (P * P).scale(3)) * geo(1, 2, one)
    total = total + geo(1, 4, (P * P).scale(3)) * geo(0, 2, one)
    if not seven_terms:
        return total + geo(0, 2, (Q * Q).scale(QQ(-1, 2))) * geo(1, 2, one)
    total = total + geo(0, 2, (Pinv * Pinv * Q * Q).scale(QQ(-1, 2))) * geo(1, 2, one)
    total = total + geo(0, 2, (Pinv * R).scale(QQ(1, 2))) * geo(1, 2, one)
    total = total + geo(0, 3, (P * P).scale(2)) * geo(1, 3, one)
    return total


def marked_tree_checks(spec: TruncationSpec, order: int, F=None) -> dict:
    """Residuals of the diagrammatic expansions against the insertion route."""
    wspec = widened(spec)
    if F is None:
        F = free_energy(closed_form_Z(wspec))
    d = spec.dmax
    out = {}
    for n in (3, 4):
        Wn = multi_point(wspec, n, order, F=F)
        tree = marked_tree_genus0(wspec, n, order, F=F)
        out[f"genus0_{n}pt"] = trimmed(genus_part(Wn, 0) - tree, cut=d - n)
    W1 = multi_point(wspec, 1, order, F=F)
    g1 = genus1_one_point_form(wspec, order, F=F).lshift(1)
    out["genus1_1pt"] = trimmed(genus_part(W1, 1) - g1, cut=d - 3)
    W2 = multi_point(wspec, 2, order, F=F)
    g2 = genus1_two_point_form(wspec, order, F=F).lshift(1)
    out["genus1_2pt"] = trimmed(genus_part(W2, 1) - g2, cut=d - 4)
    return out
