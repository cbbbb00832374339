"""Partition function and free energy of the coupling ring.

``closed_form_Z`` realizes the Gaussian-moment closed form

    Z = sum over multisets {m_j} with sum(j*m_j) = 2n of
        (2n-1)!!/prod((j!)^m_j m_j!) * L^(n - sum m_j) * prod t_{j-1}^{m_j}

where ``L`` denotes the square of the loop parameter.  ``free_energy`` is
its logarithm; correlators are its exactly-normalized Taylor coefficients.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import factorial

from .series import QQ, Series, TruncationSpec

__all__ = [
    "WindowOverflowError",
    "InsufficientTruncationError",
    "CorrelatorKey",
    "RestrictedForm",
    "recommended_spec",
    "closed_form_Z",
    "free_energy",
    "correlator",
    "admissible_keys",
    "restricted_form",
    "one_minus_t1_form",
    "double_factorial",
]


class WindowOverflowError(ValueError):
    pass


class InsufficientTruncationError(ValueError):
    pass


def double_factorial(n: int):
    """n!! with the empty-product convention (-1)!! = 1."""
    out = 1
    while n > 1:
        out *= n
        n -= 2
    return out


def recommended_spec(kmax: int, dmax: int, gmax: int) -> TruncationSpec:
    """A grade window wide enough that log/exp between Z and F are exact.

    Every monomial of Z or F satisfies (index sum) = 2l + degree, so its
    grade obeys -deg/2 <= l.  Products appearing in log Z can pair grades
    as high as (gmax-1) + dmax/2 with negative ones, so the internal
    window must extend that far for the genus <= gmax slices to be exact.
    """
    half = dmax // 2
    return TruncationSpec(kmax, dmax, lmin=-half - 1, lmax=(gmax - 1) + half + 1)


def _profiles(max_part: int, max_count: int):
    """Yield multisets {j: m_j} with parts j in 1..max_part, sum m_j <= max_count."""

    def rec(j, remaining, acc):
        if j > max_part:
            yield dict(acc)
            return
        for m in range(0, remaining + 1):
            if m:
                acc[j] = m
            yield from rec(j + 1, remaining - m, acc)
            acc.pop(j, None)

    yield from rec(1, max_count, {})


def closed_form_Z(spec: TruncationSpec) -> Series:
    terms = {}
    kmax = spec.kmax
    for prof in _profiles(kmax + 1, spec.dmax):
        s = sum(j * m for j, m in prof.items())
        if s % 2:
            continue
        n = s // 2
        deg = sum(prof.values())
        l = n - deg
        if l < spec.lmin:
            raise WindowOverflowError(
                f"grade window lmin={spec.lmin} cannot hold term with profile "
                f"{prof} at grade {l}"
            )
        if l > spec.lmax:
            continue  # deliberate genus cap
        denom = 1
        for j, m in prof.items():
            denom *= factorial(j) ** m * factorial(m)
        exps = [0] * (kmax + 1)
        for j, m in prof.items():
            exps[j - 1] = m
        terms[(tuple(exps), l)] = QQ(double_factorial(2 * n - 1)) / denom
    return Series(spec, terms)


def free_energy(Z: Series) -> Series:
    if Z.constant_term() != 1:
        raise ValueError("partition series must have constant term 1")
    return Z.log()


@dataclass(frozen=True)
class CorrelatorKey:
    indices: tuple
    genus: int

    def __post_init__(self):
        object.__setattr__(self, "indices", tuple(sorted(self.indices)))
        if self.genus < 0 or any(a < 0 for a in self.indices):
            raise ValueError(f"bad correlator key {self}")

    @property
    def npoints(self):
        return len(self.indices)

    def admissible(self):
        return sum(self.indices) == 2 * self.genus - 2 + self.npoints


def correlator(key: CorrelatorKey, F: Series):
    """The n-fold derivative of the genus-`g` slice of F at t = 0."""
    if not key.admissible():
        return QQ(0)
    spec = F.spec
    l = key.genus - 1
    if (
        (key.indices and max(key.indices) > spec.kmax)
        or key.npoints > spec.dmax
        or not (spec.lmin <= l <= spec.lmax)
    ):
        raise InsufficientTruncationError(f"{key} does not fit {spec}")
    powers: dict = {}
    for a in key.indices:
        powers[a] = powers.get(a, 0) + 1
    c = F.coefficient(powers, l)
    for m in powers.values():
        c *= factorial(m)
    return c


def admissible_keys(kmax: int, dmax: int, gmax: int):
    """All admissible correlator keys within the bounds, canonically sorted."""
    out = []

    def rec(lo, acc, total):
        n = len(acc)
        if n:
            g2 = total - n + 2
            if g2 >= 0 and g2 % 2 == 0 and g2 // 2 <= gmax:
                out.append(CorrelatorKey(tuple(acc), g2 // 2))
        if n == dmax:
            return
        for a in range(lo, kmax + 1):
            if total + a > 2 * gmax - 2 + dmax:
                break
            acc.append(a)
            rec(a, acc, total + a)
            acc.pop()

    rec(0, [], 0)
    out.sort(key=lambda k: (k.genus, k.npoints, k.indices))
    return out


@dataclass(frozen=True)
class RestrictedForm:
    name: str
    k: int | None = None


def restricted_form(form: RestrictedForm, order: int) -> dict:
    """Closed-form coefficient tables for the single/double-coupling slices."""
    name = form.name
    if name == "Z_t0":
        # exp of (t_0^2/2) * L^-1: coefficient of t_0^(2n) L^-n
        return {"coeffs": [QQ(1) / (2**n * factorial(n)) for n in range(order + 1)]}
    if name == "Z_t0t1":
        # closed form exp(t_0^2/(2 L (1-t_1)) + (1/2) log 1/(1-t_1)), returned
        # as a Series over a 2-coupling spec
        spec = TruncationSpec(1, 2 * order, -order, 0)
        t0 = Series.coupling(spec, 0)
        one_minus_t1 = Series.one(spec) - Series.coupling(spec, 1)
        inv = one_minus_t1.invert_unit()
        arg = (t0 * t0 * inv).scale(QQ(1, 2)).lshift(-1)
        half_log = inv.log().scale(QQ(1, 2))
        return {"series": (arg + half_log).exp()}
    if name == "Z_t2":
        zc = [
            QQ(double_factorial(6 * n - 1)) / (6** (2 * n) * factorial(2 * n))
            for n in range(order + 1)
        ]
        return {"Z": zc, "F": _log_sequence(zc)}
    if name == "Z_t0t2":
        a = {1: QQ(1, 2)}
        for g in range(2, order + 1):
            a[g] = (
                sum(a[h] * a[g - h] for h in range(1, g)) + (3 * g - 4) * a[g - 1]
            ) * QQ(1, 2)
        b = {g: a[g] / (3 * g - 3) for g in range(2, order + 1)}
        return {"a": a, "b": b}
    if name == "Z_odd":
        k = form.k
        if not k or k < 1:
            raise ValueError("Z_odd needs parameter k >= 1")
        return {
            "coeffs": [
                QQ(double_factorial(2 * n * k - 1))
                / (factorial(2 * k) ** n * factorial(n))
                for n in range(order + 1)
            ]
        }
    if name == "Z_even":
        k = form.k
        if not k or k < 1:
            raise ValueError("Z_even needs parameter k >= 1")
        return {
            "coeffs": [
                QQ(double_factorial(2 * n * (2 * k + 1) - 1))
                / (factorial(2 * k + 1) ** (2 * n) * factorial(2 * n))
                for n in range(order + 1)
            ]
        }
    raise ValueError(f"unknown restricted form {name!r}")


def _log_sequence(c):
    """Coefficients of log of a power series given by coefficients c, c[0]=1."""
    assert c[0] == 1
    n = len(c)
    f = [QQ(0)] * n
    # c' = f' * c  (logarithmic derivative), solved triangularly
    for m in range(1, n):
        s = QQ(m) * c[m]
        for j in range(1, m):
            s -= QQ(j) * f[j] * c[m - j]
        f[m] = s / m
    return f


def one_minus_t1_form(F: Series) -> Series:
    """Difference between F and its (1-t_1)-resummed reconstruction (contract: 0)."""
    spec = F.spec
    one = Series.one(spec)
    inv = (one - Series.coupling(spec, 1)).invert_unit()
    inv_pows = [one]
    for _ in range(spec.dmax + abs(spec.lmin) + spec.lmax + 2):
        inv_pows.append(inv_pows[-1] * inv)
    recon = inv.log().scale(QQ(1, 2))  # the genus-one log piece, grade 0
    indices = [a for a in range(spec.kmax + 1) if a != 1]

    def rec(lo_idx, acc, total):
        n = len(acc)
        if n:
            g2 = total - n + 2
            if g2 >= 0 and g2 % 2 == 0:
                yield list(acc), g2 // 2
        if n == spec.dmax:
            return
        for i in range(lo_idx, len(indices)):
            acc.append(indices[i])
            yield from rec(i, acc, total + indices[i])
            acc.pop()

    out = recon
    for A, g in rec(0, [], 0):
        l = g - 1
        if not (spec.lmin <= l <= spec.lmax):
            continue
        key = CorrelatorKey(tuple(A), g)
        c = correlator(key, F)
        if not c:
            continue
        powers: dict = {}
        for a in A:
            powers[a] = powers.get(a, 0) + 1
        for m in powers.values():
            c /= factorial(m)
        p = g - 1 + len(A)
        if p >= len(inv_pows):
            continue
        mono = Series.monomial(spec, powers, l, c)
        out = out + mono * inv_pows[p]
    return F - out
