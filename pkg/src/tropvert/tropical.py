"""Rational tropical curves behind scattered rays, and their counts.

Every ray produced by the collision cascade encodes a rational tropical
curve: vertices sit at the Init points of the ray's ancestors, bounded
edges join a ray's Init to its child's Init, and leaf lines contribute
unbounded ends.  The curve is a balanced trivalent tree whose
multiplicity (product of vertex multiplicities w1 w2 |m1 ^ m2|)
reproduces the ray's coefficient.

``ntrop`` counts such curves with fixed leaf data by colliding one
binomial line per leaf over square-zero variables and reading the total
coefficient of the full-leaf rays; ``aggregate_log_f`` assembles the log
of a scattered ray function for a standard diagram as a weighted sum of
these counts over all admissible weight and multiplicity vectors.
"""

from __future__ import annotations

import functools
import math
import random
from collections import Counter
from dataclasses import dataclass
from typing import Callable, Sequence

from tropvert.series import (
    RingContext,
    TruncatedSeries,
    index,
    is_primitive,
    primitive,
    rat,
    rat_str,
    wedge,
)
from tropvert.scattering import (
    GenericityError,
    MAX_SEED_RETRIES,
    ScatteringDiagram,
    Wall,
    _binomial_data,
    _collision_rounds,
    _direction_cmp,
    _GenericityViolation,
    taylor_coefficients,
)


class WeightData:
    """Primitive directions m_1..m_n with ascending weight vectors w_i."""

    __slots__ = ("m", "w")

    def __init__(self, m: Sequence, w: Sequence):
        m = tuple((int(a), int(b)) for a, b in m)
        w = tuple(tuple(int(x) for x in wi) for wi in w)
        if len(m) != len(w):
            raise ValueError("need one weight vector per direction")
        for mi in m:
            if not is_primitive(mi):
                raise ValueError(f"direction {mi} is not primitive")
        for wi in w:
            if any(x < 1 for x in wi):
                raise ValueError("weights must be positive")
            if list(wi) != sorted(wi):
                raise ValueError("weight vectors must be ascending")
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "w", w)
        if self.m_out() == (0, 0):
            raise ValueError("degenerate weight data: sum |w_i| m_i = 0")

    def __setattr__(self, name, value):
        raise AttributeError("WeightData is immutable")

    def sizes(self) -> tuple:
        return tuple(sum(wi) for wi in self.w)

    def m_out(self) -> tuple:
        a = sum(s * mi[0] for s, mi in zip(self.sizes(), self.m))
        b = sum(s * mi[1] for s, mi in zip(self.sizes(), self.m))
        return (a, b)

    def w_out(self) -> int:
        return index(self.m_out())

    def out_direction(self) -> tuple:
        return primitive(self.m_out())

    def total_length(self) -> int:
        return sum(len(wi) for wi in self.w)

    def __repr__(self):
        return f"WeightData(m={self.m}, w={self.w})"


# ---------------------------------------------------------------------------
# curve records


@dataclass(frozen=True)
class CurveEdge:
    direction: tuple          # primitive travel direction from tail to head
    weight: int
    bounded: bool
    tail: tuple | None        # None for incoming unbounded (leaf) edges
    head: tuple | None        # None for the outgoing unbounded edge


@dataclass(frozen=True)
class TropicalCurve:
    """A balanced trivalent tree mapped to the rational plane."""

    vertices: tuple           # rational points, in creation (round) order
    edges: tuple              # CurveEdge
    leaves: tuple             # (i, J, w) labels of the leaf lines, if known
    out_direction: tuple
    out_weight: int
    multiplicity: int

    def validate(self):
        """Balancing at each vertex; trivalence; tree topology."""
        incident: dict = {v: [] for v in self.vertices}
        bounded_count = 0
        for e in self.edges:
            bounded_count += e.bounded
            if e.head is not None:
                incident[e.head].append((e.direction, e.weight))   # incoming
            if e.tail is not None:
                incident[e.tail].append(((-e.direction[0], -e.direction[1]),
                                         e.weight))                # outgoing
        for v, around in incident.items():
            if len(around) != 3:
                raise ValueError(f"vertex {v} is not trivalent")
            sx = sum(w * d[0] for d, w in around)
            sy = sum(w * d[1] for d, w in around)
            if (sx, sy) != (0, 0):
                raise ValueError(f"balancing fails at vertex {v}")
        # a connected graph with V vertices is a tree iff it has V-1
        # bounded edges (unbounded ends are half-edges)
        if self.vertices and bounded_count != len(self.vertices) - 1:
            raise ValueError("curve graph is not a tree")

    def to_json(self) -> dict:
        def pt(p):
            return None if p is None else [rat_str(p[0]), rat_str(p[1])]
        return {
            "edges": [{"dir": list(e.direction), "w": e.weight,
                       "bounded": e.bounded, "from": pt(e.tail),
                       "to": pt(e.head)} for e in self.edges],
            "leaves": [{"i": i, "J": list(J), "w": w}
                       for (i, J, w) in self.leaves],
            "mult": self.multiplicity,
        }


def curve_from_ray(ray: Wall, perturbed: ScatteringDiagram | None = None) -> TropicalCurve:
    """Reconstruct the tropical curve encoded by a scattered ray.

    Vertices are the Init points of the ray and its ray ancestors, found
    through recorded parents; each leaf line contributes an unbounded end
    with the line's direction pointing into its collision vertex, and the
    ray itself contributes the unbounded outgoing end.
    """
    if ray.kind == "line":
        # degenerate case: the curve is the line itself, a single edge
        return TropicalCurve(
            vertices=(), edges=(
                CurveEdge(ray.direction, _wall_weight(ray), False, None,
                          ray.base),),
            leaves=(ray.leaf_label,) if ray.leaf_label else (),
            out_direction=ray.direction, out_weight=_wall_weight(ray),
            multiplicity=1)
    if ray.parents is None:
        raise ValueError("ray has no recorded parents")

    vertices, edges, leaves = [], [], []
    mult = 1

    def visit(w: Wall):
        nonlocal mult
        p1, p2 = w.parents
        vertices.append((w.round_no, w.direction, w.base))
        mult *= (_wall_weight(p1) * _wall_weight(p2)
                 * abs(wedge(p1.direction, p2.direction)))
        for p in (p1, p2):
            if p.kind == "line":
                leaves.append(p.leaf_label if p.leaf_label is not None else
                              (0, (), _wall_weight(p)))
                edges.append(CurveEdge(p.direction, _wall_weight(p),
                                       False, None, w.base))
            else:
                if p.parents is None:
                    raise ValueError("ancestor ray lacks parents")
                visit(p)
                edges.append(CurveEdge(p.direction, _wall_weight(p), True,
                                       p.base, w.base))

    visit(ray)
    edges.append(CurveEdge(ray.direction, _wall_weight(ray), False,
                           ray.base, None))
    dirkey = functools.cmp_to_key(_direction_cmp)
    vertices.sort(key=lambda t: (t[0], dirkey(t[1])))
    curve = TropicalCurve(
        vertices=tuple(v for _, _, v in vertices), edges=tuple(edges),
        leaves=tuple(leaves), out_direction=ray.direction,
        out_weight=_wall_weight(ray), multiplicity=mult)
    curve.validate()
    return curve


def _wall_weight(w: Wall) -> int:
    (wt,) = w.coeffs.keys()
    return wt


# ---------------------------------------------------------------------------
# tropical counts


def _offset(rng: random.Random):
    den = 1 << 31
    return (rat(rng.randrange(-den + 1, den), den),
            rat(rng.randrange(-den + 1, den), den))


def tropical_lines(data: WeightData, seed: int = 0):
    """One line per (i, j): generic translate of R m_i carrying
    1 + u_{ij} z^{w_{ij} m_i} over square-zero variables u_{ij}."""
    names = [f"u{i + 1}_{j + 1}"
             for i, wi in enumerate(data.w) for j in range(len(wi))]
    uctx = RingContext.nilpotent_ring(names, max(len(names), 1))
    rng = random.Random(seed)
    walls = []
    pos = 0
    for i, wi in enumerate(data.w):
        for j, wij in enumerate(wi):
            exps = [0] * len(names)
            exps[pos] = 1
            coef = TruncatedSeries(uctx, {((0, 0), tuple(exps)): rat(1)})
            walls.append(Wall(uctx, "line", _offset(rng), data.m[i],
                              {wij: coef}, wall_id=pos, round_no=0,
                              leaf_label=(i + 1, (j + 1,), wij)))
            pos += 1
    return uctx, walls


def ntrop(data: WeightData, k_order: int | None = None, seed: int = 0,
          with_curves: bool = False):
    """Count of rational tropical curves with ends of weight w_{ij} on
    generic translates of R m_i and one outgoing end along m_out, each
    counted with its vertex multiplicity.

    Computed by colliding the translated binomial lines: every ray whose
    index set uses all leaves and whose direction is m_out contributes
    its coefficient, and the total equals w_out * ntrop.  The value is
    independent of the seed; non-generic offsets are retried internally.
    """
    total_lines = data.total_length()
    last = None
    for attempt in range(MAX_SEED_RETRIES):
        try:
            uctx, walls = tropical_lines(data, seed + attempt)
            walls = _collision_rounds(walls, total_lines + 1)
            break
        except _GenericityViolation as exc:
            last = exc
    else:
        raise GenericityError(
            f"no generic offsets in {MAX_SEED_RETRIES} attempts (last: {last})")

    dvec = data.out_direction()
    wout = data.w_out()
    full = frozenset(range(total_lines))
    prod_w = 1
    for wi in data.w:
        for wij in wi:
            prod_w *= wij
    total = rat(0)
    curves = []
    for w in walls:
        if w.kind != "ray" or w.direction != dvec:
            continue
        wt, c, iset = _binomial_data(w)
        if iset != full:
            continue
        if wt != wout:
            raise AssertionError(
                "full-leaf ray weight differs from index of m_out")
        total += c
        if with_curves:
            # each leaf line has coefficient 1, so the ray coefficient is
            # w_out Mult(h) / prod w_ij
            curve = curve_from_ray(w)
            if c * prod_w != wout * curve.multiplicity:
                raise AssertionError(
                    "ray coefficient disagrees with curve multiplicity")
            curves.append(curve)
    count = total * prod_w / wout
    if count.denominator != 1 or count < 0:
        raise AssertionError(f"tropical count {count} is not a positive integer")
    count = int(count)
    if with_curves:
        return count, curves
    return count


def aut_order(w: Sequence[int], kvec: Sequence[int]) -> int:
    """Order of the permutation stabilizer of the pairs ((w_j, k_j))."""
    if len(w) != len(kvec):
        raise ValueError("weight and multiplicity vectors differ in length")
    out = 1
    for n in Counter(zip(w, kvec)).values():
        out *= math.factorial(n)
    return out


# ---------------------------------------------------------------------------
# the aggregation formula


def _pair_multisets(pairs, budget):
    """Multisets of (w, k, a) triples with total k <= budget, as sorted
    tuples; includes the empty choice."""
    pairs = sorted(pairs)

    def rec(start, room):
        yield ()
        for idx in range(start, len(pairs)):
            w, k, a = pairs[idx]
            if k > room:
                continue
            for rest in rec(idx, room - k):
                yield ((w, k, a),) + rest

    return rec(0, budget)


def aggregate_log_f(D: ScatteringDiagram, ray_direction,
                    ntrop_supplier: Callable[[WeightData], int] | None = None,
                    seed: int = 0) -> TruncatedSeries:
    """Log of the scattered-ray function of a standard diagram in a given
    direction, assembled from tropical counts:

        log f = sum over (w, k) of  w_out(w) ntrop(w) / |Aut(w, k)|
                * prod_{ij} a_{i k_ij w_ij} t_i^{k_ij} * z^{sum |w_i| m_i}

    with one ascending weight vector w_i and multiplicity vector k_i per
    line, k_ij sorted within equal weights, and the sum restricted to
    weight data whose direction sum is a positive multiple of
    ``ray_direction``.  Returns 0 when nothing is admissible.
    """
    ray_direction = primitive((int(ray_direction[0]), int(ray_direction[1])))
    if ntrop_supplier is None:
        ntrop_supplier = lambda wd: ntrop(wd, seed=seed)
    data = taylor_coefficients(D)
    order = D.ctx.order
    per_line = []
    for m_i, vi, a in data:
        pairs = [(wt, j, c) for (j, wt), c in a.items() if c != 0]
        per_line.append((m_i, vi, pairs))

    cache: dict = {}
    terms: dict = {}

    def w_only(choice):
        return tuple(w for (w, _k, _a) in choice)

    def add_term(choices):
        msum = (sum(sum(w for (w, _, _) in ch) * m[0]
                    for ch, (m, _, _) in zip(choices, per_line)),
                sum(sum(w for (w, _, _) in ch) * m[1]
                    for ch, (m, _, _) in zip(choices, per_line)))
        if msum == (0, 0) or primitive(msum) != ray_direction:
            return
        wkey = tuple(w_only(ch) for ch in choices)
        if wkey not in cache:
            wd = WeightData(tuple(m for (m, _, _) in per_line), wkey)
            cache[wkey] = ntrop_supplier(wd)
        count = cache[wkey]
        if count == 0:
            return
        coef = rat(index(msum)) * count
        exps = [0] * D.ctx.nvars
        for ch, (_, vi, _) in zip(choices, per_line):
            coef /= aut_order([w for (w, _, _) in ch], [k for (_, k, _) in ch])
            for (_, k, a) in ch:
                coef *= a
                exps[vi] += k
        key = (msum, tuple(exps))
        terms[key] = terms.get(key, rat(0)) + coef

    def rec(i, budget, acc):
        if i == len(per_line):
            add_term(tuple(acc))
            return
        _, _, pairs = per_line[i]
        for choice in _pair_multisets(pairs, budget):
            used = sum(k for (_, k, _) in choice)
            rec(i + 1, budget - used, acc + [choice])

    rec(0, order, [])
    terms = {k: v for k, v in terms.items() if v != 0}
    return TruncatedSeries(D.ctx, terms)
