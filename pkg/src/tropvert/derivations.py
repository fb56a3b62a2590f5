"""Log derivations of the torus algebra and wall-crossing automorphisms.

A log derivation is a finite sum  xi = sum_i c_i z^{m_i} d_{n_i}  acting on
series by  (c z^m d_n)(z^{m'} u) = c <m', n> z^{m+m'} u,  formal variables
being constants.  The tropical vertex group sits inside: terms with m != 0
and <m, n> = 0.

A wall-crossing automorphism is exp(log(f) d_{n0}) for a function f
supported on powers of a single lattice direction m0 with <m0, n0> = 0.
Its action has the closed form

    z^m * u  |->  f^{<m, n0>} * z^m * u,

which is what :meth:`WallCrossing.act` computes (grouping terms by the
pairing value so each needed power of f is formed once).
"""

from __future__ import annotations

from typing import Iterable, Sequence

from tropvert.series import (
    ContextMismatchError,
    RingContext,
    TruncatedSeries,
    exp_series,
    index,
    log_series,
    normal,
    primitive,
    rat,
    rat_str,
    series_to_terms,
)


class DecompositionError(ValueError):
    """A group element failed to decompose into canonical ray terms."""


def _pair(m, n) -> int:
    return m[0] * n[0] + m[1] * n[1]


class LogDerivation:
    """Sum of c * z^m * d_n terms; c a z-free coefficient series.

    Terms are keyed by (m, n) exactly as constructed; :meth:`canonical`
    folds the index and sign of n into the coefficient for equality tests.
    """

    __slots__ = ("ctx", "terms")

    def __init__(self, ctx: RingContext, terms=None):
        object.__setattr__(self, "ctx", ctx)
        clean = {}
        for (m, n), coef in (terms or {}).items():
            m = (int(m[0]), int(m[1]))
            n = (int(n[0]), int(n[1]))
            if not isinstance(coef, TruncatedSeries):
                coef = TruncatedSeries.monomial(ctx, coef)
            if coef.ctx != ctx:
                raise ContextMismatchError("coefficient context mismatch")
            if any(k[0] != (0, 0) for k in coef.terms):
                raise ValueError("derivation coefficients must be z-free")
            if coef.is_zero() or n == (0, 0):
                continue
            key = (m, n)
            clean[key] = clean.get(key, TruncatedSeries.zero(ctx)) + coef
        object.__setattr__(
            self, "terms", {k: v for k, v in clean.items() if not v.is_zero()})

    def __setattr__(self, name, value):
        raise AttributeError("LogDerivation is immutable")

    @classmethod
    def zero(cls, ctx: RingContext) -> "LogDerivation":
        return cls(ctx, {})

    @classmethod
    def from_terms(cls, ctx: RingContext, triples: Iterable) -> "LogDerivation":
        """Build from (coef, m, n) triples; coef a rational or z-free series."""
        terms = {}
        for coef, m, n in triples:
            if not isinstance(coef, TruncatedSeries):
                coef = TruncatedSeries.monomial(ctx, coef)
            key = ((int(m[0]), int(m[1])), (int(n[0]), int(n[1])))
            terms[key] = terms.get(key, TruncatedSeries.zero(ctx)) + coef
        return cls(ctx, terms)

    def is_zero(self) -> bool:
        return not self.terms

    def in_tropical_vertex_algebra(self) -> bool:
        """True when every term has m != 0 and <m, n> = 0."""
        return all(m != (0, 0) and _pair(m, n) == 0 for (m, n) in self.terms)

    def in_maximal_ideal(self) -> bool:
        return all(c.min_formal_degree() >= 1 for c in self.terms.values())

    def apply(self, f: TruncatedSeries) -> TruncatedSeries:
        """The derivation action: z^{m'} u  ->  sum_i c_i <m', n_i> z^{m_i+m'} u."""
        if f.ctx != self.ctx:
            raise ContextMismatchError("derivation and series contexts differ")
        out = TruncatedSeries.zero(self.ctx)
        for (m, n), coef in self.terms.items():
            shifted = {}
            for (mf, exps), c in f.terms.items():
                w = mf[0] * n[0] + mf[1] * n[1]
                if w:
                    shifted[((mf[0] + m[0], mf[1] + m[1]), exps)] = c * w
            if shifted:
                out = out + coef * TruncatedSeries(self.ctx, shifted, _raw=True)
        return out

    def bracket(self, other: "LogDerivation") -> "LogDerivation":
        """[z^m d_n, z^{m'} d_{n'}] = z^{m+m'} d_{<m',n> n' - <m,n'> n}."""
        if other.ctx != self.ctx:
            raise ContextMismatchError("bracket of derivations in different contexts")
        terms = {}
        for (m1, n1), c1 in self.terms.items():
            for (m2, n2), c2 in other.terms.items():
                a = _pair(m2, n1)
                b = _pair(m1, n2)
                n = (a * n2[0] - b * n1[0], a * n2[1] - b * n1[1])
                if n == (0, 0):
                    continue
                c = c1 * c2
                if c.is_zero():
                    continue
                key = ((m1[0] + m2[0], m1[1] + m2[1]), n)
                prev = terms.get(key)
                terms[key] = c if prev is None else prev + c
        return LogDerivation(self.ctx, terms)

    def scale(self, c) -> "LogDerivation":
        return LogDerivation(self.ctx, {k: v.scale(c) for k, v in self.terms.items()})

    def __add__(self, other: "LogDerivation") -> "LogDerivation":
        if other.ctx != self.ctx:
            raise ContextMismatchError("sum of derivations in different contexts")
        terms = dict(self.terms)
        for k, v in other.terms.items():
            terms[k] = terms.get(k, TruncatedSeries.zero(self.ctx)) + v
        return LogDerivation(self.ctx, terms)

    def __sub__(self, other):
        return self + other.scale(-1)

    def canonical(self) -> "LogDerivation":
        """Fold index/sign of each n into the coefficient: n primitive with
        (b > 0) or (b = 0 and a > 0); merge resulting keys."""
        terms = {}
        for (m, n), coef in self.terms.items():
            g = index(n)
            p = primitive(n)
            if p[1] < 0 or (p[1] == 0 and p[0] < 0):
                p = (-p[0], -p[1])
                g = -g
            key = (m, p)
            add = coef.scale(g)
            prev = terms.get(key)
            terms[key] = add if prev is None else prev + add
        return LogDerivation(self.ctx, terms)

    def __eq__(self, other):
        if not isinstance(other, LogDerivation):
            return NotImplemented
        return (self.ctx == other.ctx
                and self.canonical().terms == other.canonical().terms)

    __hash__ = None

    def __repr__(self):
        bits = [f"({coef})*z^{m}*d_{n}" for (m, n), coef in self.terms.items()]
        return "<derivation " + (" + ".join(bits) if bits else "0") + ">"

    def to_terms(self) -> list:
        """Canonical JSON-ready term list (series schema plus "n")."""
        rows = []
        for (m, n), coef in self.terms.items():
            for item in series_to_terms(coef):
                rows.append({"m": [m[0], m[1]], "vars": item["vars"],
                             "coef": item["coef"], "n": [n[0], n[1]]})
        rows.sort(key=lambda r: (r["m"], r["n"], sorted(r["vars"].items())))
        return rows


def apply_derivation(xi: LogDerivation, f: TruncatedSeries) -> TruncatedSeries:
    return xi.apply(f)


def bracket(x1: LogDerivation, x2: LogDerivation) -> LogDerivation:
    return x1.bracket(x2)


def exp_action(xi: LogDerivation, f: TruncatedSeries) -> TruncatedSeries:
    """exp(xi)(f) = f + sum_{i>=1} xi^i(f)/i!.

    Requires xi's coefficients in the maximal ideal so the sum terminates.
    """
    if not xi.in_maximal_ideal():
        raise ValueError("exp_action needs coefficients of degree >= 1")
    acc = f
    cur = xi.apply(f)
    i = 1
    while not cur.is_zero():
        acc = acc + cur
        i += 1
        cur = xi.apply(cur).scale(rat(1, i))
    return acc


class WallCrossing:
    """exp(log(f) d_{n0}) acting as z^m u -> f^{<m,n0>} z^m u."""

    __slots__ = ("ctx", "logf", "n0", "direction", "_powers")

    def __init__(self, logf: TruncatedSeries, n0):
        n0 = (int(n0[0]), int(n0[1]))
        if n0 == (0, 0) or index(n0) != 1:
            raise ValueError(f"normal vector must be primitive, got {n0}")
        direction = None
        for (m, exps) in logf.terms:
            if sum(exps) < 1:
                raise ValueError("wall function must be 1 mod the maximal ideal")
            if m == (0, 0):
                raise ValueError("wall function supported on z^0")
            p = primitive(m)
            if direction is None:
                direction = p
            elif direction != p:
                raise ValueError(
                    f"wall function mixes directions {direction} and {p}")
            if _pair(p, n0) != 0:
                raise ValueError(f"normal {n0} not orthogonal to direction {p}")
        object.__setattr__(self, "ctx", logf.ctx)
        object.__setattr__(self, "logf", logf)
        object.__setattr__(self, "n0", n0)
        object.__setattr__(self, "direction", direction)
        object.__setattr__(self, "_powers", {})

    def __setattr__(self, name, value):
        raise AttributeError("WallCrossing is immutable")

    @classmethod
    def from_function(cls, f: TruncatedSeries, n0) -> "WallCrossing":
        return cls(log_series(f), n0)

    def function(self) -> TruncatedSeries:
        return self.power(1)

    def power(self, e: int) -> TruncatedSeries:
        """f^e, computed as exp(e * log f) and cached."""
        cached = self._powers.get(e)
        if cached is None:
            cached = exp_series(self.logf.scale(e))
            self._powers[e] = cached
        return cached

    def inverse(self) -> "WallCrossing":
        return WallCrossing(-self.logf, self.n0)

    def derivation(self) -> LogDerivation:
        """log(f) d_{n0} as a LogDerivation (one term per lattice power)."""
        by_m = {}
        for (m, exps), c in self.logf.terms.items():
            by_m.setdefault(m, {})[((0, 0), exps)] = c
        return LogDerivation(self.ctx, {
            (m, self.n0): TruncatedSeries(self.ctx, t, _raw=True)
            for m, t in by_m.items()})

    def act(self, g: TruncatedSeries) -> TruncatedSeries:
        if g.ctx != self.ctx:
            raise ContextMismatchError("series context differs from wall crossing")
        n0a, n0b = self.n0
        buckets = {}
        for key, c in g.terms.items():
            e = key[0][0] * n0a + key[0][1] * n0b
            buckets.setdefault(e, {})[key] = c
        out = {}
        for e, sub in buckets.items():
            if e:
                sub = (TruncatedSeries(self.ctx, sub, _raw=True) * self.power(e)).terms
            for key, c in sub.items():
                prev = out.get(key)
                if prev is None:
                    out[key] = c
                else:
                    s = prev + c
                    if s == 0:
                        del out[key]
                    else:
                        out[key] = s
        return TruncatedSeries(self.ctx, out, _raw=True)

    def __repr__(self):
        return f"<crossing n0={self.n0} f={self.function()!r}>"


WallCrossingAutomorphism = WallCrossing


def act(theta: WallCrossing, f: TruncatedSeries) -> TruncatedSeries:
    return theta.act(f)


def compose_crossings(thetas: Sequence[WallCrossing],
                      g: TruncatedSeries) -> TruncatedSeries:
    """Apply the composite of an ordered crossing list (first element first)."""
    for th in thetas:
        g = th.act(g)
    return g


def compose_and_log(thetas: Sequence[WallCrossing],
                    ctx: RingContext | None = None) -> LogDerivation:
    """Operator logarithm of a composite of wall crossings.

    The composite theta is evaluated on the generators x, y; its log is
      xi(g) = sum_{i>=1} (-1)^{i+1} (theta - Id)^i(g) / i,
    which terminates because theta - Id raises formal degree.  The two
    component series are then solved uniquely for terms c z^m d_{n(m)}
    with the convention n(m) = rot90(primitive(m)): the coefficient of
    z^{m+e1} u in xi(x) must be c * n(m)[0] and of z^{m+e2} u in xi(y)
    must be c * n(m)[1].  Any residue means the composite was not in the
    tropical vertex group (or not Id mod the ideal) and raises.
    """
    if ctx is None:
        if not thetas:
            raise ValueError("empty composite needs an explicit context")
        ctx = thetas[0].ctx
    for th in thetas:
        if th.ctx != ctx:
            raise ContextMismatchError("mixed contexts in composite")

    def operator_log(gen: TruncatedSeries) -> TruncatedSeries:
        acc = TruncatedSeries.zero(ctx)
        cur = compose_crossings(thetas, gen) - gen
        i = 1
        while not cur.is_zero():
            acc = acc + cur.scale(rat((-1) ** (i + 1), i))
            cur = compose_crossings(thetas, cur) - cur
            i += 1
            if i > ctx.order + 2:  # pragma: no cover - safety net
                raise DecompositionError("operator log did not terminate")
        return acc

    xi_x = operator_log(TruncatedSeries.monomial(ctx, 1, (1, 0)))
    xi_y = operator_log(TruncatedSeries.monomial(ctx, 1, (0, 1)))

    candidates = {}
    for (m, exps), c in xi_x.terms.items():
        candidates.setdefault(((m[0] - 1, m[1]), exps), [None, None])[0] = c
    for (m, exps), c in xi_y.terms.items():
        candidates.setdefault(((m[0], m[1] - 1), exps), [None, None])[1] = c

    grouped = {}
    zero = rat(0)
    for (m, exps), (cx, cy) in candidates.items():
        cx = zero if cx is None else cx
        cy = zero if cy is None else cy
        if m == (0, 0):
            raise DecompositionError(
                f"lattice-trivial term (coefficients {rat_str(cx)}, {rat_str(cy)}) "
                "in operator log")
        n = normal(m)
        c = cx / n[0] if n[0] else cy / n[1]
        if c * n[0] != cx or c * n[1] != cy:
            raise DecompositionError(
                f"residue at z^{m}: ({rat_str(cx)}, {rat_str(cy)}) is not a "
                f"multiple of n(m) = {n}")
        if c != 0:
            grouped.setdefault((m, n), {})[((0, 0), exps)] = c

    return LogDerivation(ctx, {
        key: TruncatedSeries(ctx, t, _raw=True) for key, t in grouped.items()})
