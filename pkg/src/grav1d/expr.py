"""A minimal symbolic layer: polynomials/reciprocals over named symbols.

Just enough structure to state closed formulas abstractly (e.g. the free
energies in the triangular coordinates) and evaluate them into truncated
:class:`~grav1d.series.Series` by binding each symbol to a series.
"""

from __future__ import annotations

from .series import DomainError, QQ, Series, rat

__all__ = ["Expr", "Sym", "Num", "Inv", "Log", "substitute"]


class Expr:
    def __add__(self, other):
        return Add((self, _wrap(other)))

    __radd__ = __add__

    def __sub__(self, other):
        return Add((self, Mul((_wrap(other), Num(-1)))))

    def __rsub__(self, other):
        return Add((_wrap(other), Mul((self, Num(-1)))))

    def __mul__(self, other):
        return Mul((self, _wrap(other)))

    __rmul__ = __mul__

    def __neg__(self):
        return Mul((self, Num(-1)))

    def __pow__(self, n):
        if not isinstance(n, int) or n < 0:
            raise ValueError("only non-negative integer powers")
        return Pow(self, n)

    def __truediv__(self, other):
        other = _wrap(other)
        if isinstance(other, Num):
            return Mul((self, Num(QQ(1) / other.value)))
        return Mul((self, Inv(other)))

    def __rtruediv__(self, other):
        return Mul((_wrap(other), Inv(self)))

    def evaluate(self, env, spec) -> Series:
        raise NotImplementedError


def _wrap(x):
    if isinstance(x, Expr):
        return x
    return Num(x)


class Sym(Expr):
    def __init__(self, name):
        self.name = name

    def evaluate(self, env, spec):
        if self.name not in env:
            raise DomainError(f"unbound symbol {self.name!r}")
        return env[self.name]

    def __repr__(self):
        return self.name


class Num(Expr):
    def __init__(self, value):
        self.value = rat(value)

    def evaluate(self, env, spec):
        return Series.const(spec, self.value)

    def __repr__(self):
        return str(self.value)


class Add(Expr):
    def __init__(self, args):
        self.args = tuple(args)

    def evaluate(self, env, spec):
        out = Series.zero(spec)
        for a in self.args:
            out = out + a.evaluate(env, spec)
        return out

    def __repr__(self):
        return "(" + " + ".join(map(repr, self.args)) + ")"


class Mul(Expr):
    def __init__(self, args):
        self.args = tuple(args)

    def evaluate(self, env, spec):
        out = Series.one(spec)
        for a in self.args:
            out = out * a.evaluate(env, spec)
        return out

    def __repr__(self):
        return "(" + "*".join(map(repr, self.args)) + ")"


class Pow(Expr):
    def __init__(self, base, n):
        self.base = base
        self.n = n

    def evaluate(self, env, spec):
        return self.base.evaluate(env, spec) ** self.n

    def __repr__(self):
        return f"{self.base!r}^{self.n}"


class Inv(Expr):
    """Formal reciprocal; the argument must evaluate to a unit series."""

    def __init__(self, arg):
        self.arg = arg

    def evaluate(self, env, spec):
        return self.arg.evaluate(env, spec).invert_unit()

    def __repr__(self):
        return f"1/({self.arg!r})"


class Log(Expr):
    def __init__(self, arg):
        self.arg = arg

    def evaluate(self, env, spec):
        return self.arg.evaluate(env, spec).log()

    def __repr__(self):
        return f"log({self.arg!r})"


def substitute(template: Expr, bindings: dict, spec) -> Series:
    """Evaluate `template` with each symbol bound to a Series (or rational)."""
    env = {}
    for name, v in bindings.items():
        env[name] = v if isinstance(v, Series) else Series.const(spec, v)
    return template.evaluate(env, spec)
