"""Enumerative invariants behind commutator functions, and BPS counts.

The scattered ray functions of a two-line diagram with
f_i = prod (1 + s_xi z^{m_i}) encode genus-zero relative Gromov-Witten
invariants of open toric blow-ups: the log of the outgoing ray function
is  sum_k sum_P k N[P] s^{P_1} t^{P_2} z^{k m_out}  over ordered
partitions of fixed lengths.  This module extracts those tables from
scattering output, computes the commutator coefficients c^k they refine,
evaluates the closed-form multiple-cover contributions R_d, R^r_d and
M_P[d], reruns the degeneration formula as an independent path to N[P],
and inverts the multiple-cover series to conjecturally integral BPS
state counts.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Callable, Sequence

from tropvert.series import (
    RingContext,
    TruncatedSeries,
    index,
    is_primitive,
    log_series,
    primitive,
    rat,
    rat_str,
    wedge,
)
from tropvert.scattering import ScatteringDiagram, Wall, scatter_at_origin
from tropvert.tropical import WeightData, ntrop


class InsufficientOrderError(ValueError):
    """A requested extraction needs a deeper truncation than computed."""

    def __init__(self, minimal_order: int, requested=None):
        self.minimal_order = int(minimal_order)
        what = f" for {requested}" if requested is not None else ""
        super().__init__(
            f"insufficient series order{what}: need order >= "
            f"{self.minimal_order}")


# ---------------------------------------------------------------------------
# partitions


@dataclass(frozen=True)
class OrderedPartition:
    """Non-negative integer parts; order matters, zeros allowed."""

    parts: tuple

    def __post_init__(self):
        parts = tuple(int(p) for p in self.parts)
        if any(p < 0 for p in parts):
            raise ValueError("parts must be non-negative")
        object.__setattr__(self, "parts", parts)

    @property
    def size(self) -> int:
        return sum(self.parts)

    @property
    def length(self) -> int:
        return len(self.parts)

    def key(self) -> str:
        return "+".join(str(p) for p in self.parts)

    @classmethod
    def from_key(cls, key: str) -> "OrderedPartition":
        return cls(tuple(int(p) for p in key.split("+")))

    def __str__(self):
        return self.key()


def ordered_partitions(size: int, length: int):
    """All ordered partitions of `size` into `length` non-negative parts,
    lexicographically (stars and bars)."""
    if length == 0:
        if size == 0:
            yield OrderedPartition(())
        return

    def rec(remaining, slots):
        if slots == 1:
            yield (remaining,)
            return
        for first in range(remaining + 1):
            for rest in rec(remaining - first, slots - 1):
                yield (first,) + rest

    for parts in rec(size, length):
        yield OrderedPartition(parts)


@dataclass(frozen=True)
class GradedPartition:
    """One ordered partition per level r = 1..d; level-r parts are
    divisible by r."""

    levels: tuple

    def __post_init__(self):
        levels = tuple(
            p if isinstance(p, OrderedPartition) else OrderedPartition(p)
            for p in self.levels)
        for r, p in enumerate(levels, start=1):
            if any(part % r for part in p.parts):
                raise ValueError(
                    f"level {r} parts must be divisible by {r}: {p}")
        object.__setattr__(self, "levels", levels)

    @property
    def size(self) -> int:
        return sum(p.size for p in self.levels)

    def key(self) -> str:
        return ";".join(f"{r}:{p.key()}"
                        for r, p in enumerate(self.levels, start=1)
                        if p.length > 0)

    def __str__(self):
        return self.key()


def partition_pair_key(*partitions) -> str:
    """Canonical table key: per-line keys joined by '|'."""
    return "|".join(p.key() for p in partitions)


def key_sizes(key: str) -> tuple:
    """Sizes (|P_1|, ..., |P_n|) of a canonical table key."""
    out = []
    for block in key.split("|"):
        total = 0
        for piece in block.split(";"):
            body = piece.split(":", 1)[1] if ":" in piece else piece
            total += sum(int(p) for p in body.split("+"))
        out.append(total)
    return tuple(out)


# ---------------------------------------------------------------------------
# tables


class InvariantTable:
    """Ordered map from canonical string keys to exact rationals."""

    def __init__(self, kind: str, entries=None, meta=None):
        self.kind = str(kind)
        self.entries = dict(entries or {})
        self.meta = dict(meta or {})

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __getitem__(self, key):
        return self.entries[self._key(key)]

    def get(self, key, default=rat(0)):
        return self.entries.get(self._key(key), default)

    @staticmethod
    def _key(key) -> str:
        if isinstance(key, str):
            return key
        if isinstance(key, (OrderedPartition, GradedPartition)):
            return key.key()
        if isinstance(key, (tuple, list)):
            return partition_pair_key(*(
                p if isinstance(p, (OrderedPartition, GradedPartition))
                else OrderedPartition(p) for p in key))
        raise TypeError(f"bad table key: {key!r}")

    def items(self):
        return self.entries.items()

    def __eq__(self, other):
        return (isinstance(other, InvariantTable)
                and self.kind == other.kind and self.entries == other.entries)

    def __repr__(self):
        return f"InvariantTable({self.kind!r}, {len(self.entries)} entries)"

    def to_csv(self) -> str:
        lines = ["key,value"]
        for k, v in self.entries.items():
            lines.append(f"{k},{rat_str(v)}")
        return "\n".join(lines) + "\n"

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "meta": self.meta,
            "entries": {k: rat_str(v) for k, v in self.entries.items()},
        }


# ---------------------------------------------------------------------------
# commutator coefficients (two lines, one variable each)


def _power_line(ctx: RingContext, direction, var: str, ell: int) -> Wall:
    unit = TruncatedSeries.one(ctx)
    f = (unit + TruncatedSeries.monomial(ctx, 1, direction, {var: 1})) ** ell
    return Wall.from_function(ctx, "line", (0, 0), direction, f)


def commutator_coeffs(l1: int, l2: int, direction, order: int,
                      k_max: int | None = None) -> InvariantTable:
    """Coefficients c^k of the commutator ray in a given direction:

        log f_{(a,b)} = sum_k  k c^k (t1 x)^{ak} (t2 y)^{bk},

    for the diagram {(R(1,0), (1+t1 x)^l1), (R(0,1), (1+t2 y)^l2)}.
    Directions outside the open first quadrant are rejected.
    """
    a, b = int(direction[0]), int(direction[1])
    if a <= 0 or b <= 0:
        raise ValueError(
            f"direction {direction} is not strictly inside the first quadrant")
    if not is_primitive((a, b)):
        raise ValueError(f"direction {direction} is not primitive")
    cap = order // (a + b)
    if k_max is None:
        k_max = cap
    if k_max > cap:
        raise InsufficientOrderError((a + b) * k_max, f"c^{k_max}")
    if k_max < 1:
        raise InsufficientOrderError(a + b, "c^1")

    ctx = RingContext.power_ring(("t1", "t2"), order)
    D = ScatteringDiagram(ctx, [
        _power_line(ctx, (1, 0), "t1", l1),
        _power_line(ctx, (0, 1), "t2", l2),
    ])
    S = scatter_at_origin(D)
    lf = TruncatedSeries(ctx, {})
    for w in S.rays():
        if w.direction == (a, b):
            lf = w.logf()
    entries = {}
    for k in range(1, k_max + 1):
        coef = lf.terms.get(((a * k, b * k), (a * k, b * k)), rat(0))
        entries[f"c^{k}"] = coef / k
    return InvariantTable("commutator", entries, {
        "l1": l1, "l2": l2, "direction": [a, b], "order": order})


# ---------------------------------------------------------------------------
# Gromov-Witten tables from scattering


def _cone_coordinates(m1, m2, out):
    den = wedge(m1, m2)
    if den == 0:
        raise ValueError("line directions are parallel")
    alpha = rat(wedge(out, m2), den)
    beta = rat(wedge(m1, out), den)
    return alpha, beta


def _direction_function(S: ScatteringDiagram, out) -> TruncatedSeries:
    """Product of the functions of every wall supported on direction
    `out` (the scattered ray, plus the input line in the degenerate
    case)."""
    f = TruncatedSeries.one(S.ctx)
    hit = False
    for w in S.walls:
        if w.direction == tuple(out):
            f = f * w.function()
            hit = True
    return f if hit else TruncatedSeries.one(S.ctx)


def gw_from_scattering(m1, m2, l1: int, l2: int, out, order: int,
                       p_sizes=None) -> InvariantTable:
    """Table of relative invariants N[(P_1, P_2)] for the diagram with
    f_1 = prod_xi (1 + s_xi z^{m1}) and f_2 = prod_xi (1 + t_xi z^{m2}):

        log f_out = sum_k sum_P  k N[P] s^{P_1} t^{P_2} z^{k out}.

    Ordered partitions P_i have length l_i (zeros allowed) and satisfy
    |P_1| m1 + |P_2| m2 = k out.  Only nonzero entries are stored; use
    ``get`` for absent keys.  Directions outside the closed cone spanned
    by m1, m2 give an empty table; out = m1 or m2 reads the input line
    function itself.
    """
    m1, m2, out = tuple(m1), tuple(m2), tuple(out)
    for d in (m1, m2, out):
        if not is_primitive(d):
            raise ValueError(f"direction {d} is not primitive")
    alpha, beta = _cone_coordinates(m1, m2, out)
    if p_sizes is not None:
        needed = sum(p_sizes)
        if needed > order:
            raise InsufficientOrderError(needed, f"|P| = {tuple(p_sizes)}")
    meta = {"m1": list(m1), "m2": list(m2), "out": list(out),
            "l1": l1, "l2": l2, "order": order}
    if (alpha < 0 or beta < 0) or (alpha == 0 and beta == 0):
        return InvariantTable("gw", {}, meta)  # case (i): f_out = 1

    names = tuple(f"s{i + 1}" for i in range(l1)) + tuple(
        f"t{i + 1}" for i in range(l2))
    ctx = RingContext.power_ring(names, order)
    unit = TruncatedSeries.one(ctx)
    f1, f2 = unit, unit
    for i in range(l1):
        f1 = f1 * (unit + TruncatedSeries.monomial(ctx, 1, m1,
                                                   {f"s{i + 1}": 1}))
    for i in range(l2):
        f2 = f2 * (unit + TruncatedSeries.monomial(ctx, 1, m2,
                                                   {f"t{i + 1}": 1}))
    D = ScatteringDiagram(ctx, [
        Wall.from_function(ctx, "line", (0, 0), m1, f1),
        Wall.from_function(ctx, "line", (0, 0), m2, f2),
    ])
    S = scatter_at_origin(D)
    lf = log_series(_direction_function(S, out))

    rows = []
    for (m, exps), coef in lf.terms.items():
        if primitive(m) != out:
            raise AssertionError(f"direction-{out} function carries {m}")
        k = index(m)
        p1 = OrderedPartition(exps[:l1])
        p2 = OrderedPartition(exps[l1:])
        rows.append((k, partition_pair_key(p1, p2), coef / k))
    rows.sort(key=lambda r: (r[0], r[1]))
    entries = {key: val for _k, key, val in rows if val != 0}
    return InvariantTable("gw", entries, meta)


def gw_graded(directions: Sequence, levels: Sequence, out, order: int,
              var_bases: Sequence[str] = ("s", "t", "u", "v", "w")
              ) -> InvariantTable:
    """Table of orbifold invariants N[G] for n lines with functions

        f_i = prod_r prod_xi (1 + {base_i}{r}_{xi} z^{r m_i}),

    where ``levels[i]`` lists the level r of each factor of line i (e.g.
    [1, 1, 2] gives two level-1 factors and one level-2 factor).  The
    extraction reads

        log f_out = sum_k sum_G  k N[G] prod_i x_i^{G_i} z^{k out},

    with x^G = prod (x^r_xi)^{p/r}; level-r parts are r times the
    variable exponents.  Keys are per-line graded keys 'r:p+p;...'
    joined by '|'.
    """
    directions = [tuple(d) for d in directions]
    out = tuple(out)
    if len(directions) != len(levels):
        raise ValueError("need one level list per line")
    if len(directions) > len(var_bases):
        raise ValueError("too many lines for the available variable bases")
    if not is_primitive(out):
        raise ValueError(f"direction {out} is not primitive")

    # variable layout: per line, factors grouped by level, slot-numbered
    names, layout = [], []   # layout[i] = list of (name, r, level_slot)
    for i, rs in enumerate(levels):
        per_level: dict = {}
        mine = []
        for r in rs:
            r = int(r)
            if r < 1:
                raise ValueError(f"factor level must be >= 1, got {r}")
            per_level[r] = per_level.get(r, 0) + 1
            name = f"{var_bases[i]}{r}_{per_level[r]}"
            names.append(name)
            mine.append((name, r, per_level[r]))
        layout.append(mine)

    ctx = RingContext.power_ring(tuple(names), order)
    unit = TruncatedSeries.one(ctx)
    walls = []
    for i, d in enumerate(directions):
        if not is_primitive(d):
            raise ValueError(f"direction {d} is not primitive")
        f = unit
        for (name, r, _slot) in layout[i]:
            f = f * (unit + TruncatedSeries.monomial(
                ctx, 1, (r * d[0], r * d[1]), {name: 1}))
        walls.append(Wall.from_function(ctx, "line", (0, 0), d, f))
    S = scatter_at_origin(ScatteringDiagram(ctx, walls))
    lf = log_series(_direction_function(S, out))

    var_pos = {n: i for i, n in enumerate(names)}
    rows = []
    for (m, exps), coef in lf.terms.items():
        if primitive(m) != out:
            raise AssertionError(f"direction-{out} function carries {m}")
        k = index(m)
        gps = []
        for mine in layout:
            gmax = max((r for (_n, r, _s) in mine), default=0)
            level_parts = [[] for _ in range(gmax)]
            for (name, r, _slot) in mine:
                level_parts[r - 1].append(r * exps[var_pos[name]])
            gps.append(GradedPartition(tuple(
                OrderedPartition(tuple(parts)) for parts in level_parts)))
        rows.append((k, partition_pair_key(*gps), coef / k))
    rows.sort(key=lambda r: (r[0], r[1]))
    entries = {key: val for _k, key, val in rows if val != 0}
    return InvariantTable("gw-graded", entries, {
        "directions": [list(d) for d in directions],
        "levels": [list(map(int, rs)) for rs in levels],
        "out": list(out), "order": order})


# ---------------------------------------------------------------------------
# multiple-cover contributions


def generalized_binomial(x: int, j: int):
    """binom(x, j) = x(x-1)...(x-j+1)/j! for any integer x, j >= 0."""
    if j < 0:
        raise ValueError("lower index must be non-negative")
    num = rat(1)
    for i in range(j):
        num *= rat(x - i)
    return num / math.factorial(j)


def r_d(d: int):
    """Multiple-cover contribution R_d = (-1)^(d-1)/d^2."""
    if d < 1:
        raise ValueError("d must be >= 1")
    return rat((-1) ** (d - 1), d * d)


def r_rd(r: int, d: int):
    """Orbifold multiple-cover contribution R^r_d = (-1)^(d-1)/(r d^2)."""
    if r < 1 or d < 1:
        raise ValueError("r and d must be >= 1")
    return rat((-1) ** (d - 1), r * d * d)


def m_p_d(w: int, d: int):
    """Contribution of d-fold covers of a rigid curve with tangency w:
    M_P[d] = (1/d^2) binom(d(w-1)-1, d-1)."""
    if w < 1 or d < 1:
        raise ValueError("w and d must be >= 1")
    return generalized_binomial(d * (w - 1) - 1, d - 1) / (d * d)


# ---------------------------------------------------------------------------
# degeneration formula (independent path to N[P])


def r_partition_weight(P, w: Sequence[int]):
    """R_{P|w}: sum over set partitions of the weight indices compatible
    with P (one block per nonzero part, block sums equal the parts) of
    prod_j R_{w_j}."""
    if not isinstance(P, OrderedPartition):
        P = OrderedPartition(P)
    w = tuple(int(x) for x in w)
    targets = [p for p in P.parts if p > 0]
    if sum(targets) != sum(w):
        return rat(0)

    def assignments(idx, remaining):
        if idx == len(w):
            return 1 if all(r == 0 for r in remaining) else 0
        total = 0
        seen = set()
        for b, room in enumerate(remaining):
            if room >= w[idx] and (b, room) not in seen:
                seen.add((b, room))
                remaining[b] -= w[idx]
                total += assignments(idx + 1, remaining)
                remaining[b] += w[idx]
        return total

    count = assignments(0, list(targets))
    value = rat(count)
    for wj in w:
        value *= r_d(wj)
    return value


def _aut_weights(w: Sequence[int]) -> int:
    out = 1
    for n in Counter(w).values():
        out *= math.factorial(n)
    return out


def _ascending_partitions(size: int):
    """Ascending positive partitions of `size` (empty tuple for 0)."""
    if size == 0:
        yield ()
        return

    def rec(remaining, minimum):
        if remaining == 0:
            yield ()
            return
        for first in range(minimum, remaining + 1):
            for rest in rec(remaining - first, first):
                yield (first,) + rest

    yield from rec(size, 1)


def degeneration_check(m: Sequence, partitions: Sequence,
                       ntrop_supplier: Callable | None = None):
    """N[P] via the degeneration formula:

        N[P] = sum_w  N^rel(w) prod_i (prod_j w_ij / |Aut(w_i)|) R_{P_i|w_i}

    with N^rel = N^trop / prod w_ij, summed over weight vectors of the
    same type as P (|w_i| = |P_i|).  An independent second path to the
    values of :func:`gw_from_scattering`.

    Only interior outgoing directions qualify: every P_i must have
    positive size, otherwise the multiple-cover terms invisible to
    tropical counts would be dropped.
    """
    m = tuple(tuple(d) for d in m)
    ps = [p if isinstance(p, OrderedPartition) else OrderedPartition(p)
          for p in partitions]
    if len(m) != len(ps):
        raise ValueError("need one partition per direction")
    if any(p.size == 0 for p in ps):
        raise ValueError(
            "degeneration formula needs positive size on every line "
            "(interior outgoing direction)")
    if ntrop_supplier is None:
        ntrop_supplier = ntrop

    total = rat(0)
    choices = [list(_ascending_partitions(p.size)) for p in ps]

    def rec(i, acc):
        nonlocal total
        if i == len(ps):
            term = rat(1)
            for p, wi in zip(ps, acc):
                term *= r_partition_weight(p, wi) / _aut_weights(wi)
            if term == 0:
                return
            count = ntrop_supplier(WeightData(m, tuple(acc)))
            total += term * count
            return
        for wi in choices[i]:
            rec(i + 1, acc + [wi])

    rec(0, [])
    return total


# ---------------------------------------------------------------------------
# BPS state counts


@dataclass(frozen=True)
class BPSReport:
    """Result of inverting a multiple-cover series."""

    n: tuple                 # BPS counts n[1..K]
    integral: tuple          # per-k integrality
    all_integral: bool

    def to_json(self) -> dict:
        return {
            "n": [rat_str(v) for v in self.n],
            "integral": list(self.integral),
            "all_integral": self.all_integral,
        }


def _cover_kernel(w: int, k_prime: int, d: int):
    """Contribution of d-fold covers of a class-(k'w) curve to N[d k' w]."""
    return generalized_binomial(d * (k_prime * w - 1) - 1, d - 1) / (d * d)


def bps_invert(N: Sequence, w: int, graded=None) -> BPSReport:
    """Extract BPS counts n[kw] from the genus-zero series N[kw]:

        N[k] = sum_{d | k}  n[k/d] (1/d^2) binom(d((k/d)w - 1) - 1, d - 1)

    solved triangularly for n.  Integrality of the n[k] is conjectural
    and reported, not asserted.  Graded (orbifold) series are refused:
    the orbifold multiple-cover kernel is an open question.
    """
    if graded is not None:
        raise ValueError(
            "graded series are not invertible here: the orbifold "
            "multiple-cover contributions are not known; aggregate the "
            "series to level 1 first")
    if w < 1:
        raise ValueError("w must be >= 1")
    N = [rat(v) for v in N]
    n: list = []
    for k in range(1, len(N) + 1):
        val = N[k - 1]
        for d in range(2, k + 1):
            if k % d == 0:
                val -= n[k // d - 1] * _cover_kernel(w, k // d, d)
        n.append(val)
    integral = tuple(v.denominator == 1 for v in n)
    return BPSReport(tuple(n), integral, all(integral))


def bps_aggregate(n: Sequence, w: int, k_max: int | None = None) -> tuple:
    """Re-aggregate BPS counts through the multiple-cover kernel; the
    round-trip inverse of :func:`bps_invert`."""
    if w < 1:
        raise ValueError("w must be >= 1")
    n = [rat(v) for v in n]
    if k_max is None:
        k_max = len(n)
    out = []
    for k in range(1, k_max + 1):
        val = rat(0)
        for d in range(1, k + 1):
            if k % d == 0 and k // d <= len(n):
                val += n[k // d - 1] * _cover_kernel(w, k // d, d)
        out.append(val)
    return tuple(out)
