"""Exact truncated formal power series in the couplings t_0..t_K.

Every series is a finite map from monomials to rational coefficients.  A
monomial is a dense exponent tuple over the couplings together with an
integer grade ``l`` (the power of the square of the loop-counting
parameter; ``l`` may be negative).  A :class:`TruncationSpec` bounds the
total t-degree and the grade window; all operations re-truncate to the
spec, so equality of two series always means equality within the spec.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction

try:  # gmpy2 rationals are drop-in and considerably faster
    from gmpy2 import mpq as QQ
except ImportError:  # pragma: no cover
    QQ = Fraction

__all__ = [
    "QQ",
    "rat",
    "rat_str",
    "TruncationSpec",
    "SpecMismatchError",
    "NotAUnitError",
    "DomainError",
    "Series",
    "Slot",
    "OuterSeries",
]


def rat(x, y=None):
    """Build an exact rational from ints, strings like ``"3/4"``, or rationals."""
    if y is not None:
        return QQ(x) / QQ(y)
    if isinstance(x, str):
        if "/" in x:
            n, d = x.split("/")
            return QQ(int(n)) / QQ(int(d))
        return QQ(int(x))
    return QQ(x)


def rat_str(q) -> str:
    """Canonical ``num/den`` rendering (denominator always present)."""
    q = QQ(q)
    return f"{q.numerator}/{q.denominator}"


class SpecMismatchError(ValueError):
    pass


class NotAUnitError(ValueError):
    pass


class DomainError(ValueError):
    pass


@dataclass(frozen=True)
class TruncationSpec:
    kmax: int
    dmax: int
    lmin: int
    lmax: int

    def __post_init__(self):
        if self.kmax < 0 or self.dmax < 0 or self.lmin > self.lmax:
            raise ValueError(f"bad truncation spec {self}")

    def contains(self, exps, l) -> bool:
        return sum(exps) <= self.dmax and self.lmin <= l <= self.lmax

    def widens(self, other: "TruncationSpec") -> bool:
        """True if self holds at least everything `other` holds."""
        return (
            self.kmax >= other.kmax
            and self.dmax >= other.dmax
            and self.lmin <= other.lmin
            and self.lmax >= other.lmax
        )


def _zero_exps(kmax):
    return (0,) * (kmax + 1)


def mono_key(exps, l):
    """Canonical sort key: graded lex by (t-degree, l, exponent vector)."""
    return (sum(exps), l, exps)


class Series:
    """Sparse truncated series; immutable by convention (never mutate .terms)."""

    __slots__ = ("spec", "terms")

    def __init__(self, spec: TruncationSpec, terms=None):
        self.spec = spec
        self.terms = {}
        if terms:
            for (exps, l), c in terms.items():
                if c and spec.contains(exps, l):
                    self.terms[(exps, l)] = QQ(c)

    # ----- constructors -------------------------------------------------
    @classmethod
    def zero(cls, spec):
        return cls(spec)

    @classmethod
    def const(cls, spec, c, l=0):
        c = rat(c)
        if not c:
            return cls(spec)
        return cls(spec, {(_zero_exps(spec.kmax), l): c})

    @classmethod
    def one(cls, spec):
        return cls.const(spec, 1)

    @classmethod
    def coupling(cls, spec, k):
        if not (0 <= k <= spec.kmax):
            raise IndexError(f"coupling index {k} outside 0..{spec.kmax}")
        exps = tuple(1 if i == k else 0 for i in range(spec.kmax + 1))
        return cls(spec, {(exps, 0): QQ(1)})

    @classmethod
    def monomial(cls, spec, powers: dict, l=0, c=1):
        """powers: map coupling index -> exponent."""
        exps = list(_zero_exps(spec.kmax))
        for k, e in powers.items():
            if not (0 <= k <= spec.kmax):
                raise IndexError(f"coupling index {k} outside 0..{spec.kmax}")
            exps[k] += e
        return cls(spec, {(tuple(exps), l): rat(c)})

    # ----- inspection ---------------------------------------------------
    def coefficient(self, powers: dict, l=0):
        exps = list(_zero_exps(self.spec.kmax))
        for k, e in powers.items():
            exps[k] += e
        return self.terms.get((tuple(exps), l), QQ(0))

    def constant_term(self, l=0):
        return self.terms.get((_zero_exps(self.spec.kmax), l), QQ(0))

    def is_zero(self):
        return not self.terms

    def min_tdegree(self):
        return min((sum(e) for (e, _l) in self.terms), default=None)

    def grade_slice(self, l):
        """The sub-series of terms at grade exactly l."""
        return Series(self.spec, {k: c for k, c in self.terms.items() if k[1] == l})

    def restrict(self, spec: TruncationSpec):
        """Re-truncate into a (typically smaller) spec.  Narrowing kmax drops
        every monomial that involves a discarded coupling."""
        if spec.kmax > self.spec.kmax:
            raise SpecMismatchError("restrict cannot widen kmax")
        if spec.kmax == self.spec.kmax:
            return Series(spec, self.terms)
        cut = spec.kmax + 1
        terms = {}
        for (e, l), c in self.terms.items():
            if any(e[cut:]):
                continue
            terms[(e[:cut], l)] = c
        return Series(spec, terms)

    def support_grades(self):
        return sorted({l for (_e, l) in self.terms})

    def truncate_tdegree(self, d: int):
        """Drop all terms of total t-degree above d (same spec)."""
        return Series(
            self.spec, {k: c for k, c in self.terms.items() if sum(k[0]) <= d}
        )

    # ----- ring operations ----------------------------------------------
    def _check(self, other):
        if self.spec != other.spec:
            raise SpecMismatchError(f"{self.spec} vs {other.spec}")

    def __eq__(self, other):
        if not isinstance(other, Series):
            return NotImplemented
        return self.spec == other.spec and self.terms == other.terms

    def __hash__(self):
        return hash((self.spec, frozenset(self.terms.items())))

    def __add__(self, other):
        if not isinstance(other, Series):
            other = Series.const(self.spec, other)
        self._check(other)
        terms = dict(self.terms)
        for k, c in other.terms.items():
            s = terms.get(k, QQ(0)) + c
            if s:
                terms[k] = s
            else:
                terms.pop(k, None)
        out = Series(self.spec)
        out.terms = terms
        return out

    __radd__ = __add__

    def __neg__(self):
        out = Series(self.spec)
        out.terms = {k: -c for k, c in self.terms.items()}
        return out

    def __sub__(self, other):
        if not isinstance(other, Series):
            other = Series.const(self.spec, other)
        return self + (-other)

    def __rsub__(self, other):
        return Series.const(self.spec, other) - self

    def scale(self, c):
        c = rat(c)
        if not c:
            return Series(self.spec)
        out = Series(self.spec)
        out.terms = {k: c * v for k, v in self.terms.items()}
        return out

    def __mul__(self, other):
        if not isinstance(other, Series):
            return self.scale(other)
        self._check(other)
        spec = self.spec
        dmax, lmin, lmax = spec.dmax, spec.lmin, spec.lmax
        # bucket by total t-degree so high-degree x high-degree pairs are skipped
        buckets_a: dict[int, list] = {}
        for (e, l), c in self.terms.items():
            buckets_a.setdefault(sum(e), []).append((e, l, c))
        buckets_b: dict[int, list] = {}
        for (e, l), c in other.terms.items():
            buckets_b.setdefault(sum(e), []).append((e, l, c))
        terms: dict = {}
        for da, ta in buckets_a.items():
            for db, tb in buckets_b.items():
                if da + db > dmax:
                    continue
                for ea, la, ca in ta:
                    for eb, lb, cb in tb:
                        l = la + lb
                        if l < lmin or l > lmax:
                            continue
                        key = (tuple(map(int.__add__, ea, eb)), l)
                        c = ca * cb
                        s = terms.get(key)
                        if s is None:
                            terms[key] = c
                        else:
                            s = s + c
                            if s:
                                terms[key] = s
                            else:
                                del terms[key]
        out = Series(spec)
        out.terms = terms
        return out

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if n < 0:
            raise DomainError("negative powers: use invert_unit")
        result = Series.one(self.spec)
        base = self
        while n:
            if n & 1:
                result = result * base
            base_needed = n >> 1
            if base_needed:
                base = base * base
            n >>= 1
        return result

    def lshift(self, dl: int):
        """Multiply by the dl-th power of the grade unit (lambda^2)."""
        out = Series(self.spec)
        lmin, lmax = self.spec.lmin, self.spec.lmax
        out.terms = {
            (e, l + dl): c for (e, l), c in self.terms.items() if lmin <= l + dl <= lmax
        }
        return out

    # ----- calculus -----------------------------------------------------
    def derive(self, k: int):
        if not (0 <= k <= self.spec.kmax):
            raise IndexError(f"coupling index {k} outside 0..{self.spec.kmax}")
        terms = {}
        for (e, l), c in self.terms.items():
            ek = e[k]
            if not ek:
                continue
            ne = e[:k] + (ek - 1,) + e[k + 1 :]
            key = (ne, l)
            v = terms.get(key, QQ(0)) + c * ek
            if v:
                terms[key] = v
            else:
                terms.pop(key, None)
        out = Series(self.spec)
        out.terms = terms
        return out

    def _nilpotent(self):
        """True if all terms die under repeated multiplication (deg>=1 or l!=0)."""
        return all(sum(e) >= 1 or l != 0 for (e, l) in self.terms)

    def _nilpotency_bound(self):
        return self.spec.dmax + (self.spec.lmax - self.spec.lmin) + 2

    def exp(self):
        if not self._nilpotent():
            raise DomainError("exp requires a series with no pure-constant part")
        result = Series.one(self.spec)
        p = Series.one(self.spec)
        for n in range(1, self._nilpotency_bound()):
            p = p * self
            if p.is_zero():
                break
            result = result + p.scale(QQ(1) / _factorial(n))
        return result

    def log(self):
        x = self - Series.one(self.spec)
        if not x._nilpotent():
            raise DomainError("log requires constant term exactly 1")
        result = Series.zero(self.spec)
        p = Series.one(self.spec)
        for n in range(1, self._nilpotency_bound()):
            p = p * x
            if p.is_zero():
                break
            sign = 1 if n % 2 else -1
            result = result + p.scale(QQ(sign) / n)
        return result

    def invert_unit(self):
        c = self.constant_term()
        if not c:
            raise NotAUnitError("zero constant term")
        r = Series.one(self.spec) - self.scale(QQ(1) / c)
        if not r._nilpotent():
            raise NotAUnitError("non-nilpotent remainder; cannot invert")
        result = Series.one(self.spec)
        p = Series.one(self.spec)
        for _ in range(self._nilpotency_bound()):
            p = p * r
            if p.is_zero():
                break
            result = result + p
        return result.scale(QQ(1) / c)

    # ----- serialization ------------------------------------------------
    def sorted_terms(self):
        return sorted(self.terms.items(), key=lambda kv: mono_key(*kv[0]))

    def to_dict(self):
        return {
            "trunc": {
                "kmax": self.spec.kmax,
                "dmax": self.spec.dmax,
                "lmin": self.spec.lmin,
                "lmax": self.spec.lmax,
            },
            "terms": [
                {
                    "t": [[i, e] for i, e in enumerate(exps) if e],
                    "l": l,
                    "c": rat_str(c),
                }
                for (exps, l), c in self.sorted_terms()
            ],
        }

    def to_json(self):
        return json.dumps(self.to_dict(), separators=(",", ":"))

    @classmethod
    def from_dict(cls, d):
        tr = d["trunc"]
        spec = TruncationSpec(tr["kmax"], tr["dmax"], tr["lmin"], tr["lmax"])
        terms = {}
        for item in d["terms"]:
            exps = list(_zero_exps(spec.kmax))
            for i, e in item["t"]:
                exps[i] = e
            terms[(tuple(exps), item["l"])] = rat(item["c"])
        return cls(spec, terms)

    @classmethod
    def from_json(cls, s):
        return cls.from_dict(json.loads(s))

    def __repr__(self):
        if self.is_zero():
            return "Series(0)"
        bits = []
        for (exps, l), c in self.sorted_terms()[:12]:
            mono = "".join(
                f"t{i}" + (f"^{e}" if e > 1 else "") for i, e in enumerate(exps) if e
            )
            grade = f"L^{l}" if l else ""
            bits.append(f"{rat_str(c)}{mono}{grade}")
        tail = " + ..." if len(self.terms) > 12 else ""
        return "Series(" + " + ".join(bits) + tail + ")"


_FACT = [1]


def _factorial(n):
    while len(_FACT) <= n:
        _FACT.append(_FACT[-1] * len(_FACT))
    return _FACT[n]


# ---------------------------------------------------------------------------
# Outer series: expansions in auxiliary slot variables with Series coefficients
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Slot:
    name: str
    emin: int
    emax: int

    def __post_init__(self):
        if self.emin > self.emax:
            raise ValueError(f"bad slot range {self}")


class OuterSeries:
    """Finite expansion in slot variables; coefficients are Series sharing one spec."""

    __slots__ = ("slots", "spec", "terms")

    def __init__(self, slots, spec, terms=None):
        self.slots = tuple(slots)
        self.spec = spec
        self.terms = {}
        if terms:
            for ev, s in terms.items():
                self._set(ev, s)

    def _in_range(self, ev):
        return all(sl.emin <= e <= sl.emax for sl, e in zip(self.slots, ev))

    def _set(self, ev, s):
        ev = tuple(ev)
        if len(ev) != len(self.slots):
            raise ValueError("slot exponent arity mismatch")
        if s.spec != self.spec:
            raise SpecMismatchError("inner series spec mismatch")
        if not s.is_zero() and self._in_range(ev):
            self.terms[ev] = s

    def _check(self, other):
        if self.slots != other.slots or self.spec != other.spec:
            raise SpecMismatchError("outer series slot/spec mismatch")

    @classmethod
    def zero(cls, slots, spec):
        return cls(slots, spec)

    def coefficient(self, ev):
        return self.terms.get(tuple(ev), Series.zero(self.spec))

    def is_zero(self):
        return not self.terms

    def __eq__(self, other):
        if not isinstance(other, OuterSeries):
            return NotImplemented
        return (
            self.slots == other.slots
            and self.spec == other.spec
            and self.terms == other.terms
        )

    def __add__(self, other):
        self._check(other)
        out = OuterSeries(self.slots, self.spec, self.terms)
        for ev, s in other.terms.items():
            v = out.terms.get(ev)
            v = s if v is None else v + s
            if v.is_zero():
                out.terms.pop(ev, None)
            else:
                out.terms[ev] = v
        return out

    def __neg__(self):
        return OuterSeries(
            self.slots, self.spec, {ev: -s for ev, s in self.terms.items()}
        )

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, Series):
            return OuterSeries(
                self.slots, self.spec, {ev: s * other for ev, s in self.terms.items()}
            )
        if not isinstance(other, OuterSeries):
            return self.scale(other)
        self._check(other)
        out = OuterSeries(self.slots, self.spec)
        for ev1, s1 in self.terms.items():
            for ev2, s2 in other.terms.items():
                ev = tuple(a + b for a, b in zip(ev1, ev2))
                if not self._in_range(ev):
                    continue
                p = s1 * s2
                v = out.terms.get(ev)
                v = p if v is None else v + p
                if v.is_zero():
                    out.terms.pop(ev, None)
                else:
                    out.terms[ev] = v
        return out

    __rmul__ = __mul__

    def scale(self, c):
        return OuterSeries(
            self.slots, self.spec, {ev: s.scale(c) for ev, s in self.terms.items()}
        )

    def lshift(self, dl):
        out = OuterSeries(self.slots, self.spec)
        for ev, s in self.terms.items():
            v = s.lshift(dl)
            if not v.is_zero():
                out.terms[ev] = v
        return out

    def minus_part(self, slot_index=None):
        """Keep only strictly negative exponents (in all slots, or one slot)."""
        out = OuterSeries(self.slots, self.spec)
        for ev, s in self.terms.items():
            if slot_index is None:
                keep = all(e < 0 for e in ev)
            else:
                keep = ev[slot_index] < 0
            if keep:
                out.terms[ev] = s
        return out

    def plus_part(self, slot_index=None):
        out = OuterSeries(self.slots, self.spec)
        for ev, s in self.terms.items():
            if slot_index is None:
                keep = all(e >= 0 for e in ev)
            else:
                keep = ev[slot_index] >= 0
            if keep:
                out.terms[ev] = s
        return out

    def slot_derive(self, slot_index):
        """d/d(slot variable): e -> e-1 with factor e."""
        out = OuterSeries(self.slots, self.spec)
        for ev, s in self.terms.items():
            e = ev[slot_index]
            if e == 0:
                continue
            nev = ev[:slot_index] + (e - 1,) + ev[slot_index + 1 :]
            if not self._in_range(nev):
                continue
            v = s.scale(e)
            cur = out.terms.get(nev)
            cur = v if cur is None else cur + v
            if cur.is_zero():
                out.terms.pop(nev, None)
            else:
                out.terms[nev] = cur
        return out

    def map_coefficients(self, fn):
        out = OuterSeries(self.slots, self.spec)
        for ev, s in self.terms.items():
            v = fn(s)
            if not v.is_zero():
                out.terms[ev] = v
        return out

    def to_dict(self):
        return {
            "slots": [
                {"name": sl.name, "emin": sl.emin, "emax": sl.emax} for sl in self.slots
            ],
            "trunc": {
                "kmax": self.spec.kmax,
                "dmax": self.spec.dmax,
                "lmin": self.spec.lmin,
                "lmax": self.spec.lmax,
            },
            "terms": [
                {"e": list(ev), "series": self.terms[ev].to_dict()["terms"]}
                for ev in sorted(self.terms)
            ],
        }

    def __repr__(self):
        names = ",".join(sl.name for sl in self.slots)
        return f"OuterSeries[{names}]({len(self.terms)} slot terms)"
