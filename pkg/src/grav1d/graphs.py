"""Feynman multigraph enumeration with exact automorphism orders.

Graphs are built from half-edge pairings: a degree profile fixes the vertex
set, and every fixed-point-free pairing of half-edges yields a multigraph.
Automorphism orders come from orbit counting: the group of half-edge
relabelings (size ``prod valence! * prod class-multiplicity!``) acts on
pairings, and a class realized by ``c`` pairings has
``aut_order = group_size // c``.

This gives an oracle route to the partition function (all graphs), the free
energy (connected graphs), the I-series (rooted/decorated/plain trees), and
the genus-graded free energy in the I-coordinates (valence >= 3 multigraphs
with propagator 1/(1 - I_1)).
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import permutations
from math import factorial

from .icoords import ICoordBundle, F_in_I_formula, _symbol_ring_env, compute_I
from .expr import substitute
from .partition import closed_form_Z, free_energy
from .series import QQ, Series, TruncationSpec

__all__ = [
    "PLAIN",
    "ROOT",
    "GraphClass",
    "classes_for_profile",
    "enumerate_classes",
    "enumerate_rooted_trees",
    "enumerate_unrooted_trees",
    "feynman_sum",
    "t_rule",
    "i_rule",
    "tree_rule",
    "edge_filter",
    "oracle_compare",
    "pairing_count",
]

# vertex colors
PLAIN = 0
ROOT = 1  # the degree-1 root of a rooted tree; weight 1


class SizeLimitError(ValueError):
    pass


# ---------------------------------------------------------------------------
# pairings of half-edges
# ---------------------------------------------------------------------------


def pairing_count(nhalf: int) -> int:
    """(nhalf - 1)!! — the number of fixed-point-free pairings."""
    out = 1
    for m in range(nhalf - 1, 1, -2):
        out *= m
    return out


def _pairings(owner):
    """Yield each pairing as an adjacency matrix (loops counted once on the
    diagonal).  ``owner[h]`` is the vertex of half-edge h."""
    nh = len(owner)
    nv = max(owner) + 1 if owner else 0
    used = [False] * nh
    mat = [[0] * nv for _ in range(nv)]

    def rec(start):
        i = start
        while i < nh and used[i]:
            i += 1
        if i == nh:
            yield tuple(tuple(r) for r in mat)
            return
        used[i] = True
        a = owner[i]
        for j in range(i + 1, nh):
            if used[j]:
                continue
            used[j] = True
            b = owner[j]
            if a == b:
                mat[a][a] += 1
            else:
                mat[a][b] += 1
                mat[b][a] += 1
            yield from rec(i + 1)
            if a == b:
                mat[a][a] -= 1
            else:
                mat[a][b] -= 1
                mat[b][a] -= 1
            used[j] = False
        used[i] = False

    yield from rec(0)


def _components(mat):
    """Connected components of an adjacency matrix, as sorted vertex tuples."""
    nv = len(mat)
    seen = [False] * nv
    comps = []
    for s in range(nv):
        if seen[s]:
            continue
        stack, comp = [s], []
        seen[s] = True
        while stack:
            v = stack.pop()
            comp.append(v)
            for w in range(nv):
                if mat[v][w] and not seen[w]:
                    seen[w] = True
                    stack.append(w)
        comps.append(tuple(sorted(comp)))
    return comps


def _component_code(vertices, mat, comp):
    """Minimal code of one component over vertex orderings that preserve
    (color, valence).  Components are small (<= edges + 1 vertices), so the
    brute-force minimum is affordable."""
    vs = sorted(comp, key=lambda v: vertices[v])
    labels = tuple(vertices[v] for v in vs)
    # group positions holding identical (color, valence)
    groups = []
    i = 0
    while i < len(vs):
        j = i
        while j < len(vs) and labels[j] == labels[i]:
            j += 1
        groups.append(list(range(i, j)))
        i = j
    best = None
    for perm_parts in _group_perms(groups):
        order = [0] * len(vs)
        for pos, target in perm_parts:
            order[target] = vs[pos]
        code = tuple(
            mat[order[a]][order[b]] for a in range(len(vs)) for b in range(a, len(vs))
        )
        if best is None or code < best:
            best = code
    return labels, best


def _group_perms(groups):
    """All position assignments that permute each group within itself."""

    def rec(gi, acc):
        if gi == len(groups):
            yield acc
            return
        g = groups[gi]
        for perm in permutations(g):
            yield from rec(gi + 1, acc + list(zip(g, perm)))

    yield from rec(0, [])


def _canonical_code(vertices, mat):
    """Isomorphism-invariant code: sorted multiset of component codes."""
    return tuple(sorted(_component_code(vertices, mat, c) for c in _components(mat)))


# ---------------------------------------------------------------------------
# isomorphism classes with exact automorphism orders
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GraphClass:
    vertices: tuple  # per-vertex (color, valence), sorted
    matrix: tuple  # a representative adjacency matrix (loops once on diagonal)
    canonical_code: tuple
    aut_order: int
    n_edges: int
    connected: bool

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def degree_profile(self):
        return tuple(sorted(v for _, v in self.vertices))

    @property
    def loops(self):
        """First Betti number E - V + (number of components)."""
        return self.n_edges - self.n_vertices + len(_components(self.matrix))

    def dump_line(self):
        prof = ",".join(str(v) for v in self.degree_profile)
        return f"{self.canonical_code} {self.aut_order} {prof} {self.loops}"


def classes_for_profile(vertices, max_half_edges=24):
    """All isomorphism classes of multigraphs on the given colored degree
    profile, with exact automorphism orders via orbit counting."""
    vertices = tuple(sorted(vertices))
    owner = []
    for i, (_c, val) in enumerate(vertices):
        owner.extend([i] * val)
    if len(owner) % 2:
        return []
    if len(owner) > max_half_edges:
        raise SizeLimitError(f"{len(owner)} half-edges exceeds {max_half_edges}")
    group_size = 1
    for _c, val in vertices:
        group_size *= factorial(val)
    run = 1
    for i in range(1, len(vertices) + 1):
        if i < len(vertices) and vertices[i] == vertices[i - 1]:
            run += 1
        else:
            group_size *= factorial(run)
            run = 1
    counts: dict = {}
    reps: dict = {}
    seen_mats: dict = {}
    for mat in _pairings(owner):
        code = seen_mats.get(mat)
        if code is None:
            code = _canonical_code(vertices, mat)
            seen_mats[mat] = code
            reps.setdefault(code, mat)
        counts[code] = counts.get(code, 0) + 1
    out = []
    nedges = len(owner) // 2
    for code, c in sorted(counts.items()):
        if group_size % c:
            raise AssertionError("orbit size does not divide the group order")
        mat = reps[code]
        out.append(
            GraphClass(
                vertices=vertices,
                matrix=mat,
                canonical_code=code,
                aut_order=group_size // c,
                n_edges=nedges,
                connected=len(_components(mat)) == 1,
            )
        )
    return out


# ---------------------------------------------------------------------------
# profile generators
# ---------------------------------------------------------------------------


def _valence_multisets(total, min_valence, max_valence, max_count=None):
    """Multisets of valences (each in [min_valence, max_valence]) summing to
    ``total``; yielded as sorted tuples."""

    def rec(lo, remaining, acc):
        if remaining == 0:
            yield tuple(acc)
            return
        if max_count is not None and len(acc) == max_count:
            return
        for v in range(lo, min(remaining, max_valence) + 1):
            acc.append(v)
            yield from rec(v, remaining - v, acc)
            acc.pop()

    yield from rec(min_valence, total, [])


def enumerate_classes(
    max_edges,
    *,
    connected=None,
    min_valence=1,
    max_valence=None,
    min_edges=1,
):
    """Isomorphism classes of multigraphs with between ``min_edges`` and
    ``max_edges`` edges.  ``connected`` filters when not None."""
    if max_valence is None:
        max_valence = 2 * max_edges
    out = []
    for ne in range(min_edges, max_edges + 1):
        for prof in _valence_multisets(2 * ne, min_valence, max_valence):
            for gc in classes_for_profile([(PLAIN, v) for v in prof]):
                if connected is not None and gc.connected != connected:
                    continue
                out.append(gc)
    out.sort(key=lambda g: (g.n_edges, g.vertices, g.canonical_code))
    return out


def enumerate_rooted_trees(max_internal, max_valence):
    """Trees with one degree-1 root and 1..max_internal internal vertices."""
    out = []
    for nv in range(1, max_internal + 1):
        # internal valences sum to 2*(nv + 1) - 2 - 1 = 2 nv - 1
        for prof in _valence_multisets(2 * nv - 1, 1, max_valence, max_count=nv):
            if len(prof) != nv:
                continue
            verts = [(ROOT, 1)] + [(PLAIN, v) for v in prof]
            for gc in classes_for_profile(verts):
                if gc.connected and gc.n_edges == nv:
                    out.append(gc)
    return out


def enumerate_unrooted_trees(max_vertices, max_valence):
    """Trees with at least one edge (2..max_vertices vertices)."""
    out = []
    for nv in range(2, max_vertices + 1):
        for prof in _valence_multisets(2 * nv - 2, 1, max_valence, max_count=nv):
            if len(prof) != nv:
                continue
            for gc in classes_for_profile([(PLAIN, v) for v in prof]):
                if gc.connected and gc.n_edges == nv - 1:
                    out.append(gc)
    return out


# ---------------------------------------------------------------------------
# Feynman rules
# ---------------------------------------------------------------------------


def feynman_sum(classes, rule, spec: TruncationSpec) -> Series:
    """sum over classes of rule(class)/aut_order."""
    out = Series.zero(spec)
    for gc in classes:
        w = rule(gc)
        if w is not None:
            out = out + w.scale(QQ(1, gc.aut_order))
    return out


def t_rule(spec: TruncationSpec):
    """Vertex of valence v carries t_{v-1} and a loop-parameter factor; a
    graph lands at grade E - V."""

    def rule(gc: GraphClass):
        powers: dict = {}
        for _c, val in gc.vertices:
            if val - 1 > spec.kmax:
                return None
            powers[val - 1] = powers.get(val - 1, 0) + 1
        l = gc.n_edges - gc.n_vertices
        if not (spec.lmin <= l <= spec.lmax) or gc.n_vertices > spec.dmax:
            return None
        return Series.monomial(spec, powers, l, QQ(1))

    return rule


def i_rule(env: dict, spec: TruncationSpec):
    """Vertex of valence v carries I_{v-1}; every edge carries 1/(1 - I_1).
    ``env`` maps "I{k}" to the Series standing for I_k."""
    one = Series.one(spec)
    inv = (one - env["I1"]).invert_unit()

    def rule(gc: GraphClass):
        w = one
        for _c, val in gc.vertices:
            s = env.get(f"I{val - 1}")
            if s is None:
                return None
            w = w * s
        for _ in range(gc.n_edges):
            w = w * inv
        return w

    return rule


def tree_rule(spec: TruncationSpec, shift=0):
    """Rooted-tree rule: the root carries weight 1, an internal vertex of
    valence v carries t_{v-1}, except the root's neighbor which carries
    t_{v-1+shift} (shift = k gives the decorated trees summing to I_k)."""

    def rule(gc: GraphClass):
        root = next(
            (i for i, (c, _v) in enumerate(gc.vertices) if c == ROOT), None
        )
        neighbor = None
        if root is not None:
            neighbor = next(
                j for j in range(gc.n_vertices) if j != root and gc.matrix[root][j]
            )
        powers: dict = {}
        for i, (c, val) in enumerate(gc.vertices):
            if c == ROOT:
                continue
            idx = val - 1 + (shift if i == neighbor else 0)
            if idx > spec.kmax:
                return None
            powers[idx] = powers.get(idx, 0) + 1
        return Series.monomial(spec, powers, 0, QQ(1))

    return rule


# ---------------------------------------------------------------------------
# oracles
# ---------------------------------------------------------------------------


def edge_filter(s: Series, max_edges: int) -> Series:
    """Keep the monomials whose index bookkeeping corresponds to at most
    ``max_edges`` Gaussian pairings: sum (j+1) e_j = 2n with n <= max_edges."""
    terms = {}
    for (e, l), c in s.terms.items():
        n2 = sum((j + 1) * ej for j, ej in enumerate(e))
        if n2 % 2 == 0 and n2 // 2 <= max_edges:
            terms[(e, l)] = c
    return Series(s.spec, terms)


def oracle_compare(spec: TruncationSpec, max_edges=4, tree_degree=5) -> dict:
    """Residuals of every graph-sum identity; each value should be zero.

    Keys: "Z" (all graphs vs the closed form), "F" (connected graphs vs
    log Z), "exp" (exp of the connected sum vs the all-graph sum), "I0",
    "I1", "I2" (tree sums vs the I-series), "Iminus1" (plain trees vs
    I_{-1} - I_0^2/2), "F2_in_I", "F3_in_I" (valence >= 3 multigraph sums
    vs the genus slices of F in the I-coordinates).
    """
    out = {}
    Z = closed_form_Z(spec)
    F = free_energy(Z)
    all_classes = enumerate_classes(max_edges, max_valence=spec.kmax + 1)
    connected = [g for g in all_classes if g.connected]
    rule = t_rule(spec)
    sum_all = feynman_sum(all_classes, rule, spec)
    sum_conn = feynman_sum(connected, rule, spec)
    out["Z"] = Series.one(spec) + sum_all - edge_filter(Z, max_edges)
    out["F"] = sum_conn - edge_filter(F, max_edges)
    out["exp"] = edge_filter(sum_conn.exp(), max_edges) - (
        Series.one(spec) + sum_all
    )

    bundle = compute_I(spec)
    trule = tree_rule(spec)
    rooted = enumerate_rooted_trees(tree_degree, spec.kmax + 1)
    out["I0"] = feynman_sum(rooted, trule, spec) - bundle.I[0].truncate_tdegree(
        tree_degree
    )
    for k in (1, 2):
        if k > spec.kmax:
            continue
        out[f"I{k}"] = feynman_sum(
            rooted, tree_rule(spec, shift=k), spec
        ) - bundle.I[k].truncate_tdegree(tree_degree)
    plain = enumerate_unrooted_trees(tree_degree, spec.kmax + 1)
    shifted_target = bundle.Iminus1 - (bundle.I[0] * bundle.I[0]).scale(QQ(1, 2))
    out["Iminus1"] = feynman_sum(plain, tree_rule(spec), spec) - (
        shifted_target.truncate_tdegree(tree_degree)
    )

    # genus slices of F in the I-coordinates, in the symbol ring
    env = _symbol_ring_env(spec)
    for g in (2, 3):
        # the genus-g formula needs one-point insertions up to index 2g-1
        if 2 * g - 1 > spec.kmax or g - 1 > spec.lmax:
            continue
        classes = [
            gc
            for gc in enumerate_classes(
                3 * (g - 1), connected=True, min_valence=3, max_valence=spec.kmax + 1
            )
            if gc.loops == g
        ]
        lhs = feynman_sum(classes, i_rule(env, spec), spec)
        rhs = substitute(F_in_I_formula(g, F), env, spec)
        out[f"F{g}_in_I"] = lhs - rhs
    return out
