"""Verification-suite registry.

Every residual identity implemented by the library is collected here into
named suites.  A suite run produces a machine-readable report: one entry per
check, each either exactly zero (ok) or carrying the first offending monomial.
The service and the command-line front end both consume this module.

Worker parallelism across independent checks is capped by the
``GRAV1D_THREADS`` environment variable (default 1; checks are pure and
independent, so any ordering is safe — the report order is deterministic).
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from .series import Series, OuterSeries, TruncationSpec, rat_str
from .partition import (
    recommended_spec,
    closed_form_Z,
    free_energy,
    one_minus_t1_form,
    RestrictedForm,
    restricted_form,
)
from . import constraints, icoords, graphs, npoint, spectral

__all__ = [
    "SUITES",
    "VerifyConfig",
    "CheckResult",
    "first_monomial",
    "run_suites",
    "report_to_dict",
]


def _monomial_str(exps, l) -> str:
    bits = [f"t{i}^{e}" if e > 1 else f"t{i}" for i, e in enumerate(exps) if e]
    if l:
        bits.append(f"L^{l}")
    return "*".join(bits) if bits else "1"


def first_monomial(residual) -> str:
    """Human-readable first nonzero monomial of a Series/OuterSeries residual."""
    if isinstance(residual, OuterSeries):
        for ev in sorted(residual.terms):
            inner = first_monomial(residual.terms[ev])
            slot_bits = [
                f"{sl.name}{i}^{e}" if e != 1 else f"{sl.name}{i}"
                for i, (sl, e) in enumerate(zip(residual.slots, ev))
                if e
            ]
            return "*".join(slot_bits + [inner]) if slot_bits else inner
        return ""
    if isinstance(residual, Series):
        terms = residual.sorted_terms()
        if not terms:
            return ""
        (exps, l), c = terms[0]
        return f"{rat_str(c)}*{_monomial_str(exps, l)}"
    return str(residual)


@dataclass
class VerifyConfig:
    kmax: int = 6
    dmax: int = 6
    gmax: int = 3
    suites: tuple = ()  # empty means all

    @property
    def spec(self) -> TruncationSpec:
        return recommended_spec(self.kmax, self.dmax, self.gmax)


@dataclass
class CheckResult:
    suite: str
    name: str
    ok: bool
    detail: str = ""


@dataclass
class _Context:
    cfg: VerifyConfig
    _cache: dict = field(default_factory=dict)

    @property
    def spec(self):
        return self.cfg.spec

    def Z(self):
        if "Z" not in self._cache:
            self._cache["Z"] = closed_form_Z(self.spec)
        return self._cache["Z"]

    def F(self):
        if "F" not in self._cache:
            self._cache["F"] = free_energy(self.Z())
        return self._cache["F"]

    def wide_F(self):
        """Free energy over the widened ring used by the n-point routines."""
        if "wide_F" not in self._cache:
            self._cache["wide_F"] = free_energy(
                closed_form_Z(npoint.widened(self.spec))
            )
        return self._cache["wide_F"]

    def bundle(self):
        if "bundle" not in self._cache:
            self._cache["bundle"] = icoords.compute_I(self.spec)
        return self._cache["bundle"]


# each suite: list of (name, fn(ctx) -> residual-or-bool) pairs built lazily


def _suite_partition(ctx):
    spec, Z, F = ctx.spec, ctx.Z(), ctx.F()
    # exp is window-exact only below the top grade (grade-(lmax+1) content of
    # F can wrap down one step through the grade -1 part)
    narrowed = TruncationSpec(spec.kmax, spec.dmax, spec.lmin, spec.lmax - 1)
    yield "log_exp_roundtrip", (F.exp() - Z).restrict(narrowed)
    yield "resummed_reconstruction", one_minus_t1_form(F)
    # coefficient of t_2^{2n} in Z against the closed-form single-coupling table
    nmax = min(spec.dmax // 2, spec.lmax, 4)
    t2 = restricted_form(RestrictedForm("Z_t2"), nmax)
    ok = True
    for n in range(0, nmax + 1):
        exps = [0] * (spec.kmax + 1)
        exps[2] = 2 * n
        got = Z.terms.get((tuple(exps), n), 0)
        if got != t2["Z"][n]:
            ok = False
    yield "single_coupling_slice", ok


def _suite_flow(ctx):
    spec, Z = ctx.spec, ctx.Z()
    nmax = min(6, spec.kmax)
    for name, res in constraints.flow_polymer_check(Z, nmax).items():
        yield name, res
    for ns in ((1, 1), (1, 2), (2, 3), (1, 1, 2)):
        if sum(ns) - 1 <= spec.kmax:
            yield "join_" + "".join(map(str, ns)), constraints.join_check(Z, ns)


def _suite_virasoro(ctx):
    spec = ctx.spec
    for family in ("L", "Ltilde"):
        for m in range(-1, 6):
            yield f"{family}_{m}_on_Z", constraints.virasoro_z_residual(
                spec, m, family
            )
    pairs = [(m, n) for m in range(-1, 3) for n in range(m + 1, 3)]
    yield "L_commutators_on_basis", constraints.commutator_residual_on_basis(
        spec, pairs, "L"
    )


def _suite_icoords(ctx):
    spec, bundle = ctx.spec, ctx.bundle()
    ts = icoords.t_from_I(bundle)
    for k in range(spec.kmax + 1):
        yield f"roundtrip_t{k}", ts[k] - Series.coupling(spec, k)
    for name, res in icoords.jacobian_identities(bundle).items():
        yield name, res
    for name, res in icoords.dI0_duality(bundle, min(4, spec.dmax)).items():
        yield name, res
    F = ctx.F()
    for g in range(0, min(3, ctx.cfg.gmax) + 1):
        _, res = icoords.F_in_I(g, F, bundle)
        yield f"F{g}_in_I", res
    yield "F0_composition", (
        icoords.F0_composition_sum(spec) - F.grade_slice(-1)
    )
    limit = icoords.renorm_limit(spec)
    yield "renorm_limit_t1", limit.couplings[1] - bundle.I[1]


def _suite_graphs(ctx):
    for name, res in graphs.oracle_compare(
        ctx.spec, max_edges=4, tree_degree=5
    ).items():
        yield name, res


def _suite_npoint(ctx):
    spec, F = ctx.spec, ctx.wide_F()
    for name, res in npoint.one_point_checks(spec, 4, F=F).items():
        yield f"one_point_{name}", res
    for name, res in npoint.two_point_checks(spec, 3, F=F).items():
        yield f"two_point_{name}", res
    for l in (3, 4):
        for name, res in npoint.l_point_genus0_checks(spec, l, 3, F=F).items():
            yield f"{l}_point_{name}", res
    yield "partition_formula_3", npoint.hat_partition_residual(spec, 3, 2, F=F)
    for name, res in npoint.recursion_checks(spec, 4, F=F).items():
        yield f"recursion_{name}", res
    for name, res in npoint.marked_tree_checks(spec, 3, F=F).items():
        yield f"tree_{name}", res


def _suite_spectral(ctx):
    spec = ctx.spec
    yield "squared_deformation", spectral.deformation_residual(spec)
    for m, res in spectral.uniqueness_residuals(spec, min(4, spec.kmax)).items():
        yield f"uniqueness_w{m}", res
    got = spectral.catalan_reversion(6)
    yield "catalan_reversion", got == spectral.signed_catalan_coefficients(6)
    for m in range(-1, 5):
        yield f"quadratic_field_op_{m}", spectral.normalization_residual(spec, m)
        yield f"quadratic_field_on_Z_{m}", spectral.quantized_z_residual(spec, m)
    ok = all(
        spectral.propagator_coefficient(spec, n, m)
        == ((n + 1) if n == m else 0)
        for n in range(3)
        for m in range(3)
    )
    yield "ladder_contraction", ok


SUITES = {
    "partition": _suite_partition,
    "flow": _suite_flow,
    "virasoro": _suite_virasoro,
    "icoords": _suite_icoords,
    "graphs": _suite_graphs,
    "npoint": _suite_npoint,
    "spectral": _suite_spectral,
}


def _evaluate(suite, name, value) -> CheckResult:
    if isinstance(value, bool):
        return CheckResult(suite, name, value, "" if value else "mismatch")
    if isinstance(value, list):
        ok = not value
        return CheckResult(suite, name, ok, "" if ok else str(value[0]))
    ok = value.is_zero()
    return CheckResult(suite, name, ok, "" if ok else first_monomial(value))


def run_suites(cfg: VerifyConfig) -> list:
    """Run the selected suites; returns CheckResults in deterministic order."""
    names = cfg.suites or tuple(SUITES)
    unknown = [n for n in names if n not in SUITES]
    if unknown:
        raise KeyError(f"unknown suite(s): {', '.join(unknown)}")
    ctx = _Context(cfg)
    jobs = []  # (order, suite, name, thunk)
    for sname in names:
        for cname, value in SUITES[sname](ctx):
            jobs.append((sname, cname, value))
    workers = max(1, int(os.environ.get("GRAV1D_THREADS", "1")))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(
                pool.map(lambda j: _evaluate(*j), jobs)
            )
    else:
        results = [_evaluate(*j) for j in jobs]
    return results


def report_to_dict(cfg: VerifyConfig, results: list) -> dict:
    return {
        "config": {"kmax": cfg.kmax, "dmax": cfg.dmax, "gmax": cfg.gmax},
        "suites": list(cfg.suites or tuple(SUITES)),
        "ok": all(r.ok for r in results),
        "checks": [
            {"suite": r.suite, "name": r.name, "ok": r.ok, "detail": r.detail}
            for r in results
        ],
    }
