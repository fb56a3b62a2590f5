"""Scattering diagrams: walls, path-ordered products, and completions.

A wall is a ray or line in the rational plane carrying a function
f = 1 + sum_w c_w z^{w m0} attached to its primitive direction m0.  A
counterclockwise loop around a point composes one wall-crossing
automorphism per crossing, normals oriented positively against the loop
tangent.  Two completion algorithms make a diagram of lines through the
origin consistent (loop product = Id at the working order):

* :func:`scatter_at_origin` — the direct inductive algorithm: at stage j
  the loop log is a degree-j element of the tropical vertex algebra, and
  each of its terms is cancelled by a new ray.

* :func:`scatter_by_perturbation` — factor each line function into
  binomial walls over square-zero variables, translate them to generic
  parallel positions, and resolve all pairwise collisions with the
  nilpotent collision rule (:func:`collide`); the asymptotic diagram,
  with the square-zero substitution inverted, agrees with the direct
  algorithm.

All geometry is exact rational arithmetic: angular order is decided by
cross-product signs, intersections by 2x2 solves, never by floats.
"""

from __future__ import annotations

import functools
import itertools
import math
import random
from dataclasses import dataclass
from typing import Iterable, Sequence

from tropvert.series import (
    ContextMismatchError,
    RingContext,
    SchemaError,
    TruncatedSeries,
    context_from_json,
    context_to_json,
    exp_series,
    index,
    is_primitive,
    log_series,
    map_vars,
    normal,
    primitive,
    rat,
    rat_str,
    retruncate,
    series_from_terms,
    series_to_terms,
    wedge,
)
from tropvert.derivations import (
    DecompositionError,
    LogDerivation,
    WallCrossing,
    compose_and_log,
    compose_crossings,
)


class GenericityError(RuntimeError):
    """Perturbation offsets failed validation after bounded retries."""


class _GenericityViolation(Exception):
    """Internal: one offset draw was non-generic; retry with the next seed."""


MAX_SEED_RETRIES = 32


# ---------------------------------------------------------------------------
# walls


class Wall:
    """A ray or line with attached function 1 + sum_w c_w z^{w m0}.

    ``coeffs`` maps the positive integer w to the z-free coefficient
    series c_w.  ``base`` is Init for rays, any support point for lines.
    ``parents``/``round_no``/``leaf_label`` are in-memory provenance for
    scattered rays and factorization lines; they are never serialized.
    """

    __slots__ = ("ctx", "kind", "base", "direction", "coeffs", "wall_id",
                 "parents", "round_no", "leaf_label", "_cache")

    def __init__(self, ctx: RingContext, kind: str, base, direction, coeffs,
                 wall_id=None, parents=None, round_no=0, leaf_label=None):
        if kind not in ("line", "ray"):
            raise ValueError(f"wall kind must be 'line' or 'ray', got {kind!r}")
        direction = (int(direction[0]), int(direction[1]))
        if not is_primitive(direction):
            raise ValueError(f"wall direction must be primitive, got {direction}")
        base = (rat(base[0]), rat(base[1]))
        clean = {}
        for w, c in coeffs.items():
            w = int(w)
            if w < 1:
                raise ValueError(f"wall weight must be >= 1, got {w}")
            if not isinstance(c, TruncatedSeries) or c.ctx != ctx:
                raise ContextMismatchError("wall coefficient in wrong context")
            if c.is_zero():
                continue
            for (m, exps) in c.terms:
                if m != (0, 0):
                    raise ValueError("wall coefficients must be z-free")
                if sum(exps) < 1:
                    raise ValueError("wall function must be 1 mod the maximal ideal")
            clean[w] = c
        object.__setattr__(self, "ctx", ctx)
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "direction", direction)
        object.__setattr__(self, "coeffs", clean)
        object.__setattr__(self, "wall_id", wall_id)
        object.__setattr__(self, "parents", parents)
        object.__setattr__(self, "round_no", round_no)
        object.__setattr__(self, "leaf_label", leaf_label)
        object.__setattr__(self, "_cache", {})

    def __setattr__(self, name, value):
        raise AttributeError("Wall is immutable")

    @classmethod
    def from_function(cls, ctx: RingContext, kind: str, base, direction,
                      f: TruncatedSeries, **kw) -> "Wall":
        """Split f = 1 + sum c_w z^{w m0} into the coeffs map."""
        direction = (int(direction[0]), int(direction[1]))
        if f.constant_term() != 1:
            raise ValueError("wall function must have constant term 1")
        groups: dict = {}
        for (m, exps), c in f.terms.items():
            if m == (0, 0):
                if exps != f.ctx.zero_exps or c != 1:
                    raise ValueError("wall function must be 1 mod z^{m0}")
                continue
            if primitive(m) != direction or index(m) < 1:
                raise ValueError(
                    f"wall function term z^{m} not a positive power of {direction}")
            groups.setdefault(index(m), {})[((0, 0), exps)] = c
        coeffs = {w: TruncatedSeries(ctx, t, _raw=True) for w, t in groups.items()}
        return cls(ctx, kind, base, direction, coeffs, **kw)

    def function(self) -> TruncatedSeries:
        f = self._cache.get("f")
        if f is None:
            terms = {((0, 0), self.ctx.zero_exps): rat(1)}
            d = self.direction
            for w, c in self.coeffs.items():
                m = (w * d[0], w * d[1])
                for (_, exps), co in c.terms.items():
                    terms[(m, exps)] = co
            f = TruncatedSeries(self.ctx, terms, _raw=True)
            self._cache["f"] = f
        return f

    def logf(self) -> TruncatedSeries:
        lf = self._cache.get("logf")
        if lf is None:
            lf = log_series(self.function())
            self._cache["logf"] = lf
        return lf

    def is_trivial(self) -> bool:
        return not self.coeffs

    def locate(self, p) -> str | None:
        """'interior', 'boundary' (= Init of a ray), or None if off-support."""
        v = (rat(p[0]) - self.base[0], rat(p[1]) - self.base[1])
        d = self.direction
        if v[0] * d[1] - v[1] * d[0] != 0:
            return None
        if self.kind == "line":
            return "interior"
        t = v[0] / d[0] if d[0] else v[1] / d[1]
        if t > 0:
            return "interior"
        if t == 0:
            return "boundary"
        return None

    def translated_to_origin(self) -> "Wall":
        return Wall(self.ctx, self.kind, (0, 0), self.direction, self.coeffs,
                    wall_id=self.wall_id, parents=self.parents,
                    round_no=self.round_no, leaf_label=self.leaf_label)

    def __repr__(self):
        return (f"<{self.kind} base=({rat_str(self.base[0])},{rat_str(self.base[1])}) "
                f"dir={self.direction} f={self.function()!s}>")


def wall_intersection(w1: Wall, w2: Wall):
    """Single intersection point of two wall supports, or None.

    Returns (point, status1, status2) with status 'interior'/'boundary';
    parallel supports give None (overlapping parallel supports included:
    they never meet in a *single* point).
    """
    d1, d2 = w1.direction, w2.direction
    den = wedge(d1, d2)
    if den == 0:
        return None
    rhs = (w2.base[0] - w1.base[0], w2.base[1] - w1.base[1])
    s = (rhs[0] * d2[1] - rhs[1] * d2[0]) / den
    t = (rhs[0] * d1[1] - rhs[1] * d1[0]) / den
    if w1.kind == "ray" and s < 0:
        return None
    if w2.kind == "ray" and t < 0:
        return None
    p = (w1.base[0] + s * d1[0], w1.base[1] + s * d1[1])
    st1 = "boundary" if (w1.kind == "ray" and s == 0) else "interior"
    st2 = "boundary" if (w2.kind == "ray" and t == 0) else "interior"
    return p, st1, st2


# ---------------------------------------------------------------------------
# diagrams


class ScatteringDiagram:
    __slots__ = ("ctx", "walls")

    def __init__(self, ctx: RingContext, walls: Iterable[Wall]):
        walls = tuple(walls)
        for w in walls:
            if w.ctx != ctx:
                raise ContextMismatchError("wall context differs from diagram")
        object.__setattr__(self, "ctx", ctx)
        object.__setattr__(self, "walls", walls)

    def __setattr__(self, name, value):
        raise AttributeError("ScatteringDiagram is immutable")

    def __repr__(self):
        return f"<diagram order={self.ctx.order} walls={len(self.walls)}>"

    def rays(self) -> list:
        return [w for w in self.walls if w.kind == "ray"]

    def lines(self) -> list:
        return [w for w in self.walls if w.kind == "line"]

    def wall_with_direction(self, d, kind="ray") -> Wall | None:
        d = primitive((int(d[0]), int(d[1])))
        hits = [w for w in self.walls if w.kind == kind and w.direction == d]
        if not hits:
            return None
        if len(hits) > 1:
            raise ValueError(f"multiple {kind}s with direction {d}; minimalize first")
        return hits[0]


def _support_key(w: Wall):
    if w.kind == "line":
        # lines are equal iff same direction and base difference parallel to it
        return ("line", w.direction, wedge(w.direction, w.base))
    return ("ray", w.direction, w.base)


def _angle_bucket(d) -> int:
    """0..7 counterclockwise from the positive x-axis."""
    a, b = d
    if b == 0:
        return 0 if a > 0 else 4
    if a == 0:
        return 2 if b > 0 else 6
    if b > 0:
        return 1 if a > 0 else 3
    return 5 if a < 0 else 7


def _direction_cmp(d1, d2) -> int:
    b1, b2 = _angle_bucket(d1), _angle_bucket(d2)
    if b1 != b2:
        return -1 if b1 < b2 else 1
    w = wedge(d1, d2)
    if w:
        return -1 if w > 0 else 1
    return 0


def minimalize(D: ScatteringDiagram) -> ScatteringDiagram:
    """Merge equal-support walls (same kind and direction) by multiplying
    functions, drop trivial walls, and order canonically by angle, kind,
    then base."""
    merged: dict = {}
    for w in D.walls:
        key = _support_key(w)
        if key in merged:
            prev = merged[key]
            f = prev.function() * w.function()
            merged[key] = Wall.from_function(
                D.ctx, w.kind, prev.base, w.direction, f,
                wall_id=prev.wall_id, parents=prev.parents,
                round_no=prev.round_no, leaf_label=prev.leaf_label)
        else:
            merged[key] = w
    walls = [w for w in merged.values() if not w.is_trivial()]
    walls.sort(key=lambda w: (
        functools.cmp_to_key(_direction_cmp)(w.direction),
        w.kind, w.base))
    return ScatteringDiagram(D.ctx, walls)


def same_diagram(d1: ScatteringDiagram, d2: ScatteringDiagram) -> bool:
    """Equality as minimal diagrams (canonical serialized form)."""
    return diagram_to_json(minimalize(d1)) == diagram_to_json(minimalize(d2))


def map_diagram_vars(D: ScatteringDiagram, target: RingContext,
                     mapping=None) -> ScatteringDiagram:
    """Apply a variable-specialization homomorphism to every wall function."""
    walls = []
    for w in D.walls:
        f = map_vars(w.function(), target, mapping)
        walls.append(Wall.from_function(target, w.kind, w.base, w.direction, f,
                                        wall_id=w.wall_id, parents=w.parents,
                                        round_no=w.round_no,
                                        leaf_label=w.leaf_label))
    return ScatteringDiagram(target, walls)


# ---------------------------------------------------------------------------
# serialization


def diagram_to_json(D: ScatteringDiagram) -> dict:
    return {"ring": context_to_json(D.ctx),
            "walls": [_wall_to_json(w) for w in D.walls]}


def _wall_to_json(w: Wall) -> dict:
    return {
        "kind": w.kind,
        "base": [rat_str(w.base[0]), rat_str(w.base[1])],
        "direction": [w.direction[0], w.direction[1]],
        "f": [{"w": wt, "coef_terms": series_to_terms(c)}
              for wt, c in sorted(w.coeffs.items())],
    }


def diagram_from_json(data) -> ScatteringDiagram:
    if not isinstance(data, dict) or set(data) - {"ring", "walls"}:
        raise SchemaError("diagram object must have exactly 'ring' and 'walls'")
    try:
        ctx = context_from_json(data["ring"])
        raw_walls = data["walls"]
    except KeyError as exc:
        raise SchemaError(f"missing diagram field: {exc}") from exc
    if not isinstance(raw_walls, list):
        raise SchemaError("'walls' must be a list")
    walls = []
    for i, obj in enumerate(raw_walls):
        if not isinstance(obj, dict) or set(obj) - {"kind", "base", "direction", "f"}:
            raise SchemaError(f"bad wall object at index {i}: {obj!r}")
        try:
            kind = obj["kind"]
            base = (rat(obj["base"][0]), rat(obj["base"][1]))
            direction = (int(obj["direction"][0]), int(obj["direction"][1]))
            fspec = obj["f"]
        except (KeyError, IndexError, TypeError, SchemaError) as exc:
            raise SchemaError(f"bad wall fields at index {i}: {exc}") from exc
        coeffs = {}
        if not isinstance(fspec, list):
            raise SchemaError(f"wall 'f' must be a list at index {i}")
        for part in fspec:
            if not isinstance(part, dict) or set(part) - {"w", "coef_terms"}:
                raise SchemaError(f"bad wall function part: {part!r}")
            wt = part.get("w")
            if not isinstance(wt, int) or wt < 1:
                raise SchemaError(f"bad wall weight: {wt!r}")
            if wt in coeffs:
                raise SchemaError(f"duplicate weight {wt} in wall {i}")
            coeffs[wt] = series_from_terms(ctx, part.get("coef_terms", []))
        try:
            walls.append(Wall(ctx, kind, base, direction, coeffs, wall_id=i))
        except (ValueError, ContextMismatchError) as exc:
            raise SchemaError(f"invalid wall at index {i}: {exc}") from exc
    return ScatteringDiagram(ctx, walls)


# ---------------------------------------------------------------------------
# path-ordered products


@dataclass(frozen=True)
class LoopSpec:
    """A small counterclockwise loop around ``center``, starting just after
    the angle of ``start_direction``."""
    center: tuple
    start_direction: tuple

    def __post_init__(self):
        if tuple(self.start_direction) == (0, 0):
            raise ValueError("start_direction must be nonzero")
        object.__setattr__(self, "center",
                           (rat(self.center[0]), rat(self.center[1])))
        object.__setattr__(self, "start_direction",
                           (int(self.start_direction[0]), int(self.start_direction[1])))


class PathOrderedProduct:
    """Ordered crossing list (first crossed first) and its composite action."""

    __slots__ = ("ctx", "crossings", "crossed_walls", "crossing_directions")

    def __init__(self, ctx, crossings, crossed_walls, crossing_directions):
        object.__setattr__(self, "ctx", ctx)
        object.__setattr__(self, "crossings", tuple(crossings))
        object.__setattr__(self, "crossed_walls", tuple(crossed_walls))
        object.__setattr__(self, "crossing_directions", tuple(crossing_directions))

    def __setattr__(self, name, value):
        raise AttributeError("PathOrderedProduct is immutable")

    def act(self, g: TruncatedSeries) -> TruncatedSeries:
        return compose_crossings(self.crossings, g)

    def act_on_generators(self):
        x = TruncatedSeries.monomial(self.ctx, 1, (1, 0))
        y = TruncatedSeries.monomial(self.ctx, 1, (0, 1))
        return self.act(x), self.act(y)

    def is_identity(self) -> bool:
        gx, gy = self.act_on_generators()
        return (gx == TruncatedSeries.monomial(self.ctx, 1, (1, 0))
                and gy == TruncatedSeries.monomial(self.ctx, 1, (0, 1)))

    def log(self) -> LogDerivation:
        return compose_and_log(self.crossings, self.ctx)


def path_ordered_product(D: ScatteringDiagram, loop: LoopSpec) -> PathOrderedProduct:
    """Enumerate crossings of an infinitesimal counterclockwise loop.

    A line, or a ray whose interior contains the center, is crossed at
    both of its direction angles; a ray with Init at the center is
    crossed once.  The crossing at angle d gets normal n0 = normal(d),
    which pairs positively with the counterclockwise tangent there.
    """
    s = loop.start_direction
    hits = []  # (crossing direction, wall)
    for wall in D.walls:
        status = wall.locate(loop.center)
        if status is None:
            continue
        if wedge(s, wall.direction) == 0:
            raise ValueError(
                f"start_direction {s} is parallel to a crossed wall "
                f"(direction {wall.direction})")
        d = wall.direction
        if wall.kind == "line" or status == "interior":
            hits.append((d, wall))
            hits.append(((-d[0], -d[1]), wall))
        else:
            hits.append((d, wall))

    def bucket(d):
        w = wedge(s, d)
        if w > 0:
            return 0
        if w == 0:
            return 1  # angle exactly pi (parallel case was rejected above)
        return 2

    def cmp(h1, h2):
        (d1, _, i1), (d2, _, i2) = h1, h2
        b1, b2 = bucket(d1), bucket(d2)
        if b1 != b2:
            return -1 if b1 < b2 else 1
        w = wedge(d1, d2)
        if w:
            return -1 if w > 0 else 1
        return i1 - i2  # simultaneous parallel crossings: stable, they commute

    indexed = [(d, wall, i) for i, (d, wall) in enumerate(hits)]
    indexed.sort(key=functools.cmp_to_key(cmp))
    crossings, walls, dirs = [], [], []
    for d, wall, _ in indexed:
        crossings.append(WallCrossing(wall.logf(), normal(d)))
        walls.append(wall)
        dirs.append(d)
    return PathOrderedProduct(D.ctx, crossings, walls, dirs)


def _primitive_directions():
    r = 1
    while True:
        for a in range(-r, r + 1):
            b = r - abs(a)
            for bb in ((b,) if b == 0 else (b, -b)):
                if math.gcd(abs(a), abs(bb)) == 1:
                    yield (a, bb)
        r += 1


def pick_start_direction(directions) -> tuple:
    """First primitive vector (by |a|+|b|, then lex-ish spiral) not parallel
    to any of the given directions."""
    dirs = list(directions)
    for s in _primitive_directions():
        if all(wedge(s, d) != 0 for d in dirs):
            return s
    raise AssertionError("unreachable: finitely many directions")  # pragma: no cover


def origin_loop(D: ScatteringDiagram) -> LoopSpec:
    return LoopSpec((0, 0), pick_start_direction(w.direction for w in D.walls))


def loop_is_identity(D: ScatteringDiagram, loop: LoopSpec | None = None) -> bool:
    if loop is None:
        loop = origin_loop(D)
    return path_ordered_product(D, loop).is_identity()


# ---------------------------------------------------------------------------
# direct completion (inductive algorithm)


def scatter_at_origin(D: ScatteringDiagram) -> ScatteringDiagram:
    """Complete a diagram of lines through the origin to a consistent one.

    For j = 1..order: compute the origin loop product of the current
    diagram at order j; its log is a sum of degree-j terms c z^m d_{n(m)},
    and appending for each the ray (R>=0 primitive(m), exp(-sigma c z^m))
    cancels it (sigma = +1 when the ray's single-crossing normal is n(m),
    which is always the case for counterclockwise origin loops).  The
    result is minimal and its full loop product is the identity at the
    working order.
    """
    ctx = D.ctx
    for w in D.walls:
        if w.kind != "line":
            raise ValueError("scatter_at_origin input must consist of lines")
        if w.locate((0, 0)) is None:
            raise ValueError("input lines must pass through the origin")

    base_lines = [w.translated_to_origin() for w in D.walls]
    ray_logs: dict = {}  # primitive direction -> accumulated log f (full ctx)

    for j in range(1, ctx.order + 1):
        sub = ctx.truncated(j)
        walls_j = [Wall(sub, "line", (0, 0), w.direction,
                        {wt: retruncate(c, sub) for wt, c in w.coeffs.items()})
                   for w in base_lines]
        for d, lf in ray_logs.items():
            f = exp_series(retruncate(lf, sub))
            if not f.is_one():
                walls_j.append(Wall.from_function(sub, "ray", (0, 0), d, f))
        loop = LoopSpec((0, 0), pick_start_direction(w.direction for w in walls_j))
        xi = path_ordered_product(ScatteringDiagram(sub, walls_j), loop).log()
        if xi.is_zero():
            continue
        for (m, n), coef in xi.terms.items():
            if any(sum(exps) != j for (_, exps) in coef.terms):
                raise DecompositionError(
                    f"stage {j} produced terms of the wrong degree at z^{m}")
            # single crossing of the new ray on a ccw origin loop has
            # n0 = normal(m); the decomposition yields exactly that n,
            # so the cancelling sign is always -1 on the log
            if n != normal(m):
                raise DecompositionError(
                    f"unexpected normal {n} for direction {m}")  # pragma: no cover
            d = primitive(m)
            contribution = TruncatedSeries(ctx, {
                (m, exps): -c for ((_, exps), c) in coef.terms.items()})
            prev = ray_logs.get(d)
            ray_logs[d] = contribution if prev is None else prev + contribution

    rays = []
    for d, lf in ray_logs.items():
        f = exp_series(lf)
        if not f.is_one():
            rays.append(Wall.from_function(ctx, "ray", (0, 0), d, f))
    return minimalize(ScatteringDiagram(ctx, list(D.walls) + rays))


# ---------------------------------------------------------------------------
# the nilpotent collision rule


def _binomial_data(w: Wall):
    """(weight, rational coefficient, index set of square-zero variables)."""
    if len(w.coeffs) != 1:
        raise ValueError(f"wall is not binomial: weights {sorted(w.coeffs)}")
    (wt, c), = w.coeffs.items()
    if len(c.terms) != 1:
        raise ValueError("wall is not binomial: several coefficient terms")
    ((_, exps), co), = c.terms.items()
    iset = frozenset(i for i, e in enumerate(exps) if e)
    for i in iset:
        if not w.ctx.square_zero[i] or exps[i] != 1:
            raise ValueError("binomial coefficient must be a square-zero monomial")
    return wt, co, iset


def _collision(m1, w1, m2, w2):
    """Direction data of the ray from a transverse collision, or None."""
    mvec = (w1 * m1[0] + w2 * m2[0], w1 * m1[1] + w2 * m2[1])
    if mvec == (0, 0):
        return None
    wout = index(mvec)
    return primitive(mvec), wout, wout * abs(wedge(m1, m2))


def collide(w1: Wall, w2: Wall) -> Wall | None:
    """Resolve the collision of two binomial walls with disjoint index sets.

    Returns the new ray from their intersection point in direction
    w1 m1 + w2 m2 with function 1 + c1 c2 u_{I1 u I2} w_out |m1 ^ m2|
    z^{w1 m1 + w2 m2}, or None when the direction sum vanishes.
    """
    wt1, c1, i1 = _binomial_data(w1)
    wt2, c2, i2 = _binomial_data(w2)
    if i1 & i2:
        raise ValueError(f"index sets overlap: {sorted(i1 & i2)}")
    out = _collision(w1.direction, wt1, w2.direction, wt2)
    if out is None:
        return None
    hit = wall_intersection(w1, w2)
    if hit is None:
        raise ValueError("wall supports do not meet in a single point")
    p, st1, st2 = hit
    if st1 != "interior" or st2 != "interior":
        raise ValueError("intersection point must be interior to both walls")
    d, wout, mult = out
    ctx = w1.ctx
    exps = list(ctx.zero_exps)
    for i in i1 | i2:
        exps[i] = 1
    coef = TruncatedSeries(ctx, {((0, 0), tuple(exps)): c1 * c2 * mult})
    if coef.is_zero():
        return None
    return Wall(ctx, "ray", p, d, {wout: coef}, parents=(w1, w2),
                round_no=max(w1.round_no, w2.round_no) + 1)


def _collision_rounds(walls: list, max_rounds: int) -> list:
    """Run pairwise collision rounds until stable; mutates and returns walls.

    A pair is eligible in round r when at least one member was created in
    round r-1, index sets are disjoint, and supports meet in one point
    interior to both.  Non-generic incidences (a disjoint pair meeting at
    a ray's Init; a third pairwise-disjoint wall through a collision
    point) raise _GenericityViolation.
    """
    bins = [_binomial_data(w) for w in walls]
    prev_start, prev_end = 0, len(walls)
    for rnd in range(1, max_rounds + 2):
        new = []
        pairs = itertools.chain(
            itertools.product(range(prev_start, prev_end), range(prev_start)),
            itertools.combinations(range(prev_start, prev_end), 2))
        for ia, ib in pairs:
            a, b = walls[ia], walls[ib]
            wt_a, c_a, i_a = bins[ia]
            wt_b, c_b, i_b = bins[ib]
            if i_a & i_b:
                continue
            hit = wall_intersection(a, b)
            if hit is None:
                continue
            p, st1, st2 = hit
            if st1 == "boundary" or st2 == "boundary":
                raise _GenericityViolation(
                    f"disjoint walls {a.wall_id} and {b.wall_id} meet at a ray origin")
            for ic, c in enumerate(walls):
                if ic == ia or ic == ib:
                    continue
                i_c = bins[ic][2]
                if (i_c & i_a) or (i_c & i_b):
                    continue
                if c.locate(p) is not None:
                    raise _GenericityViolation(
                        f"three pairwise-disjoint walls through one point "
                        f"({a.wall_id}, {b.wall_id}, {c.wall_id})")
            out = _collision(a.direction, wt_a, b.direction, wt_b)
            if out is None:
                continue
            d, wout, mult = out
            ctx = a.ctx
            exps = list(ctx.zero_exps)
            for i in i_a | i_b:
                exps[i] = 1
            co = c_a * c_b * mult
            coef = TruncatedSeries(ctx, {((0, 0), tuple(exps)): co})
            if coef.is_zero():
                continue
            new.append((Wall(ctx, "ray", p, d, {wout: coef},
                             wall_id=len(walls) + len(new),
                             parents=(a, b), round_no=rnd),
                        (wout, co, i_a | i_b)))
        if not new:
            return walls
        if rnd > max_rounds:
            raise DecompositionError(
                f"collision cascade did not stabilize within {max_rounds} rounds")
        prev_start, prev_end = len(walls), len(walls) + len(new)
        for w, bd in new:
            walls.append(w)
            bins.append(bd)
    return walls  # pragma: no cover


# ---------------------------------------------------------------------------
# perturbation algorithm


def standard_lines(D: ScatteringDiagram) -> list:
    """Validate that D is standard and return [(wall, variable index)].

    Standard: every wall a line through the origin whose function involves
    exactly one formal variable, no variable shared between lines, and no
    square-zero variables.
    """
    seen = {}
    out = []
    for w in D.walls:
        if w.kind != "line" or w.locate((0, 0)) is None:
            raise ValueError("standard diagram needs lines through the origin")
        used = set()
        for c in w.coeffs.values():
            for (_, exps) in c.terms:
                used.update(i for i, e in enumerate(exps) if e)
        if len(used) != 1:
            raise ValueError(
                f"standard line must use exactly one variable, got "
                f"{[D.ctx.variables[i] for i in sorted(used)]}")
        (vi,) = used
        if D.ctx.square_zero[vi]:
            raise ValueError("standard line variable must be a power-series variable")
        if vi in seen:
            raise ValueError(
                f"variable {D.ctx.variables[vi]!r} used by two lines")
        seen[vi] = w
        out.append((w, vi))
    return out


def taylor_coefficients(D: ScatteringDiagram) -> list:
    """Per line i: (direction m_i, var index, {(j, w): a_ijw}) with
    log f_i = sum_{j,w} w a_ijw z^{w m_i} t_i^j."""
    data = []
    for w, vi in standard_lines(D):
        lf = w.logf()
        a = {}
        for (m, exps), c in lf.terms.items():
            wt = index(m)
            j = exps[vi]
            assert primitive(m) == w.direction and j == sum(exps)
            a[(j, wt)] = c / wt
        data.append((w.direction, vi, a))
    return data


def _offset_point(rng: random.Random):
    den = 1 << 31
    return (rat(rng.randrange(-den + 1, den), den),
            rat(rng.randrange(-den + 1, den), den))


def _perturbed_walls(D: ScatteringDiagram, k: int, seed: int):
    """Factor each line over square-zero u_{i,j} at seeded generic offsets."""
    data = taylor_coefficients(D)
    n = len(data)
    names = [f"u{i + 1}_{j + 1}" for i in range(n) for j in range(k)]
    uctx = RingContext.nilpotent_ring(names, n * k)
    rng = random.Random(seed)
    walls = []
    for i, (m_i, _vi, a) in enumerate(data):
        uvars = [uctx.var_index[f"u{i + 1}_{j + 1}"] for j in range(k)]
        for (j, wt), a_val in sorted(a.items()):
            if j > k:
                continue
            scale = rat(math.factorial(j)) * wt * a_val
            for J in itertools.combinations(range(k), j):
                exps = list(uctx.zero_exps)
                for l in J:
                    exps[uvars[l]] = 1
                coef = TruncatedSeries(uctx, {((0, 0), tuple(exps)): scale})
                walls.append(Wall(
                    uctx, "line", _offset_point(rng), m_i, {wt: coef},
                    wall_id=len(walls), round_no=0,
                    leaf_label=(i + 1, tuple(l + 1 for l in J), wt)))
    return uctx, walls


def _invert_substitution(ctx: RingContext, line_vars: Sequence[int], k: int,
                         ray_walls: Sequence[Wall]) -> dict:
    """Collect asymptotic ray logs and invert t_i -> sum_j u_{ij}.

    Each binomial ray has log f = c u_I z^{w m} exactly.  Grouping the
    total per direction by (lattice exponent, per-line subset sizes), the
    coefficients must agree across subset choices and all C(k, alpha_i)
    choices must be present; the t-coefficient is then c / prod alpha_i!.
    """
    n = len(line_vars)
    uvar_line = []  # var position -> (line index, slot)
    for i in range(n):
        for j in range(k):
            uvar_line.append((i, j))
    per_direction: dict = {}
    for w in ray_walls:
        wt, c, iset = _binomial_data(w)
        m = (wt * w.direction[0], wt * w.direction[1])
        groups = per_direction.setdefault(w.direction, {})
        key = (m, frozenset(iset))
        groups[key] = groups.get(key, rat(0)) + c
    out = {}
    for d, groups in per_direction.items():
        profile: dict = {}
        for (m, iset), c in groups.items():
            if c == 0:
                continue
            alpha = [0] * n
            for pos in iset:
                alpha[uvar_line[pos][0]] += 1
            profile.setdefault((m, tuple(alpha)), []).append(c)
        terms = {}
        for (m, alpha), cs in profile.items():
            expected = 1
            for a_i in alpha:
                expected *= math.comb(k, a_i)
            if len(cs) != expected or any(c != cs[0] for c in cs):
                raise _GenericityViolation(
                    f"direction {d}: asymptotic coefficients not symmetric "
                    f"under slot permutation (profile {alpha})")
            div = 1
            for a_i in alpha:
                div *= math.factorial(a_i)
            exps = list(ctx.zero_exps)
            for i, a_i in enumerate(alpha):
                exps[line_vars[i]] = a_i
            terms[(m, tuple(exps))] = cs[0] / div
        out[d] = terms
    return out


def scatter_by_perturbation(D: ScatteringDiagram, k: int | None = None,
                            seed: int = 0):
    """Perturbation completion of a standard diagram.

    Returns (perturbed, asymptotic): the full diagram of factor lines and
    collision rays over the square-zero ring, and its asymptotic form
    translated to the origin and re-expressed over D's own ring (original
    lines plus scattered rays).  Offsets are drawn deterministically from
    ``seed``; detected genericity violations retry with seed+1, at most
    MAX_SEED_RETRIES times.
    """
    ctx = D.ctx
    if k is None:
        k = ctx.order
    if not 1 <= k <= ctx.order:
        raise ValueError(f"perturbation order {k} outside 1..{ctx.order}")
    data = taylor_coefficients(D)
    n = len(data)
    line_vars = [vi for (_m, vi, _a) in data]

    last_error = None
    for attempt in range(MAX_SEED_RETRIES):
        try:
            uctx, walls = _perturbed_walls(D, k, seed + attempt)
            walls = _collision_rounds(walls, n * k)
            rays = [w for w in walls if w.kind == "ray"]
            ray_logs = _invert_substitution(ctx, line_vars, k, rays)
            break
        except _GenericityViolation as exc:
            last_error = exc
    else:
        raise GenericityError(
            f"no generic offset configuration found in {MAX_SEED_RETRIES} "
            f"attempts (last: {last_error})")

    perturbed = ScatteringDiagram(uctx, walls)
    out_rays = []
    for d, terms in sorted(ray_logs.items()):
        lf = TruncatedSeries(ctx, terms)
        if lf.is_zero():
            continue
        f = exp_series(lf)
        if not f.is_one():
            out_rays.append(Wall.from_function(ctx, "ray", (0, 0), d, f))
    asymptotic = minimalize(ScatteringDiagram(
        ctx, [w.translated_to_origin() for w in D.walls] + out_rays))
    return perturbed, asymptotic
