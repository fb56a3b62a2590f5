"""Exact truncated series over the group ring of a rank-2 lattice.

Elements live in k[M] < - > R where M = Z^2 and R is an Artin local
Q-algebra cut out of a polynomial ring: R = Q[[t_1, ..., t_n]] truncated
beyond a fixed total order, with any subset of the variables declared
square-zero (u^2 = 0).  A series is a finite sum

    sum_i  c_i * t^{e_i} * z^{m_i},        c_i in Q,  m_i in Z^2,

stored sparsely as {((a, b), exps): coef}.  Lattice monomials z^m are
Laurent (negative exponents fine) and carry no degree: truncation counts
formal-variable exponents only, each variable having weight 1.

Everything is exact rational arithmetic; there is no floating point in
this module or anywhere downstream of it.  Values are immutable after
construction and safe to share.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Mapping, Sequence

try:  # gmpy2.mpq is ~10x faster than Fraction; Fraction is the fallback.
    from gmpy2 import mpq as _RAT
except ImportError:  # pragma: no cover - exercised only without gmpy2
    from fractions import Fraction as _RAT

Vec = tuple  # lattice vectors are plain (a, b) int pairs throughout


class ContextMismatchError(ValueError):
    """Two series from different ring contexts were combined."""


class SchemaError(ValueError):
    """Serialized data does not match the documented JSON schema."""


# ---------------------------------------------------------------------------
# rationals


def rat(x, y=None):
    """Coerce to an exact rational.  Accepts int, rational, or 'p/q' string."""
    if y is not None:
        return _RAT(x) / _RAT(y)
    if isinstance(x, str):
        return parse_rational(x)
    return _RAT(x)


def parse_rational(s: str):
    """Parse a decimal-free rational string 'p' or 'p/q'."""
    s = s.strip()
    if not s or any(ch in s for ch in ".eE "):
        raise SchemaError(f"not a decimal-free rational: {s!r}")
    try:
        if "/" in s:
            p, q = s.split("/")
            den = int(q)
            if den <= 0:
                raise SchemaError(f"denominator must be positive: {s!r}")
            return _RAT(int(p)) / _RAT(den)
        return _RAT(int(s))
    except ValueError as exc:
        raise SchemaError(f"not a rational: {s!r}") from exc


def rat_str(c) -> str:
    """Canonical string: bare 'p' for integers, 'p/q' otherwise (q>0, reduced)."""
    return str(_RAT(c))


# ---------------------------------------------------------------------------
# lattice utilities


def wedge(m1: Vec, m2: Vec) -> int:
    """Determinant m1 ∧ m2 = a1*b2 - a2*b1."""
    return m1[0] * m2[1] - m1[1] * m2[0]


def dot(m1: Vec, m2: Vec) -> int:
    return m1[0] * m2[0] + m1[1] * m2[1]


def index(m: Vec) -> int:
    """The positive integer d with m = d * primitive(m)."""
    if m[0] == 0 and m[1] == 0:
        raise ValueError("zero vector has no index")
    return math.gcd(m[0], m[1])


def primitive(m: Vec) -> Vec:
    d = index(m)
    return (m[0] // d, m[1] // d)


def is_primitive(m: Vec) -> bool:
    return (m[0] or m[1]) != 0 and math.gcd(m[0], m[1]) == 1


def rot90(m: Vec) -> Vec:
    """Counterclockwise quarter turn (-b, a)."""
    return (-m[1], m[0])


def normal(m: Vec) -> Vec:
    """Primitive normal to m, oriented so a counterclockwise loop crossing
    the ray R>=0 * m has positive pairing with the loop tangent there."""
    return rot90(primitive(m))


# ---------------------------------------------------------------------------
# ring context


@dataclass(frozen=True)
class RingContext:
    """A truncated polynomial coefficient ring Q[vars]/(order, square-zeros).

    ``variables`` and ``square_zero`` are parallel tuples; ``order`` is the
    total-degree cutoff across all formal variables (lattice monomials are
    degree 0).  Square-zero variables additionally satisfy u^2 = 0.
    """

    variables: tuple
    square_zero: tuple
    order: int

    def __post_init__(self):
        if len(self.variables) != len(set(self.variables)):
            raise ValueError(f"duplicate variable names: {self.variables}")
        if len(self.variables) != len(self.square_zero):
            raise ValueError("variables and square_zero must be parallel")
        if self.order < 0:
            raise ValueError(f"order must be >= 0, got {self.order}")

    @classmethod
    def make(cls, variables: Iterable, order: int) -> "RingContext":
        """Build from an iterable of names or (name, square_zero) pairs."""
        names, flags = [], []
        for v in variables:
            if isinstance(v, str):
                names.append(v)
                flags.append(False)
            else:
                name, flag = v
                names.append(name)
                flags.append(bool(flag))
        return cls(tuple(names), tuple(flags), order)

    @classmethod
    def power_ring(cls, names: Iterable[str], order: int) -> "RingContext":
        names = tuple(names)
        return cls(names, (False,) * len(names), order)

    @classmethod
    def nilpotent_ring(cls, names: Iterable[str], order: int | None = None) -> "RingContext":
        """All-square-zero ring; order defaults to len(names) (no extra cut)."""
        names = tuple(names)
        if order is None:
            order = len(names)
        return cls(names, (True,) * len(names), order)

    @cached_property
    def nvars(self) -> int:
        return len(self.variables)

    @cached_property
    def var_index(self) -> dict:
        return {name: i for i, name in enumerate(self.variables)}

    @cached_property
    def sq_indices(self) -> tuple:
        return tuple(i for i, f in enumerate(self.square_zero) if f)

    @cached_property
    def zero_exps(self) -> tuple:
        return (0,) * len(self.variables)

    def unit_exps(self, i: int, e: int = 1) -> tuple:
        z = list(self.zero_exps)
        z[i] = e
        return tuple(z)

    def admissible(self, exps: Sequence[int]) -> bool:
        if sum(exps) > self.order:
            return False
        return all(exps[i] <= 1 for i in self.sq_indices)

    def truncated(self, order: int) -> "RingContext":
        return RingContext(self.variables, self.square_zero, order)


# ---------------------------------------------------------------------------
# series


class TruncatedSeries:
    """Immutable sparse series; see module docstring for the ring."""

    __slots__ = ("ctx", "terms")

    def __init__(self, ctx: RingContext, terms: Mapping | None = None, _raw: bool = False):
        object.__setattr__(self, "ctx", ctx)
        if terms is None:
            terms = {}
        if not _raw:
            clean = {}
            for (m, exps), c in terms.items():
                m = (int(m[0]), int(m[1]))
                exps = tuple(int(e) for e in exps)
                if len(exps) != ctx.nvars:
                    raise ValueError(f"exponent tuple {exps} does not fit {ctx.variables}")
                if any(e < 0 for e in exps):
                    raise ValueError(f"negative variable exponent in {exps}")
                c = rat(c)
                if c == 0 or not ctx.admissible(exps):
                    continue
                key = (m, exps)
                clean[key] = clean.get(key, _RAT(0)) + c
            terms = {k: v for k, v in clean.items() if v != 0}
        object.__setattr__(self, "terms", terms)

    def __setattr__(self, name, value):
        raise AttributeError("TruncatedSeries is immutable")

    # -- constructors -------------------------------------------------------

    @classmethod
    def zero(cls, ctx: RingContext) -> "TruncatedSeries":
        return cls(ctx, {}, _raw=True)

    @classmethod
    def one(cls, ctx: RingContext) -> "TruncatedSeries":
        return cls.monomial(ctx, 1)

    @classmethod
    def monomial(cls, ctx: RingContext, coef=1, m: Vec = (0, 0),
                 variables: Mapping[str, int] | None = None) -> "TruncatedSeries":
        """The single term coef * z^m * prod(var^exp)."""
        exps = list(ctx.zero_exps)
        for name, e in (variables or {}).items():
            if name not in ctx.var_index:
                raise ValueError(f"unknown variable {name!r} in context {ctx.variables}")
            exps[ctx.var_index[name]] = int(e)
        return cls(ctx, {((int(m[0]), int(m[1])), tuple(exps)): rat(coef)})

    # -- queries -------------------------------------------------------------

    def coefficient(self, m: Vec = (0, 0), variables: Mapping[str, int] | None = None):
        exps = list(self.ctx.zero_exps)
        for name, e in (variables or {}).items():
            exps[self.ctx.var_index[name]] = int(e)
        return self.terms.get(((int(m[0]), int(m[1])), tuple(exps)), _RAT(0))

    def constant_term(self):
        return self.terms.get(((0, 0), self.ctx.zero_exps), _RAT(0))

    def is_zero(self) -> bool:
        return not self.terms

    def is_one(self) -> bool:
        return len(self.terms) == 1 and self.constant_term() == 1

    def min_formal_degree(self) -> int:
        """Smallest total variable degree among terms; ctx.order+1 if zero."""
        if not self.terms:
            return self.ctx.order + 1
        return min(sum(exps) for (_, exps) in self.terms)

    def __bool__(self) -> bool:
        return bool(self.terms)

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, type(_RAT(0)))):
            other = TruncatedSeries.monomial(self.ctx, other)
        if not isinstance(other, TruncatedSeries):
            return NotImplemented
        return self.ctx == other.ctx and self.terms == other.terms

    __hash__ = None

    # -- arithmetic ----------------------------------------------------------

    def _check(self, other: "TruncatedSeries"):
        if self.ctx != other.ctx:
            raise ContextMismatchError(
                f"context mismatch: {self.ctx.variables}@{self.ctx.order} vs "
                f"{other.ctx.variables}@{other.ctx.order}")

    def __add__(self, other):
        if isinstance(other, (int, type(_RAT(0)))):
            other = TruncatedSeries.monomial(self.ctx, other)
        self._check(other)
        out = dict(self.terms)
        for k, c in other.terms.items():
            s = out.get(k)
            s = c if s is None else s + c
            if s == 0:
                out.pop(k, None)
            else:
                out[k] = s
        return TruncatedSeries(self.ctx, out, _raw=True)

    __radd__ = __add__

    def __neg__(self):
        return TruncatedSeries(self.ctx, {k: -c for k, c in self.terms.items()}, _raw=True)

    def __sub__(self, other):
        if isinstance(other, (int, type(_RAT(0)))):
            other = TruncatedSeries.monomial(self.ctx, other)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, c) -> "TruncatedSeries":
        c = rat(c)
        if c == 0:
            return TruncatedSeries.zero(self.ctx)
        return TruncatedSeries(self.ctx, {k: c * v for k, v in self.terms.items()}, _raw=True)

    def __mul__(self, other):
        if isinstance(other, (int, type(_RAT(0)))):
            return self.scale(other)
        self._check(other)
        ctx = self.ctx
        order = ctx.order
        sq = ctx.sq_indices
        out = {}
        left = [(k[0], k[1], sum(k[1]), v) for k, v in self.terms.items()]
        for (m2, e2), c2 in other.terms.items():
            d2 = sum(e2)
            m2a, m2b = m2
            for m1, e1, d1, c1 in left:
                if d1 + d2 > order:
                    continue
                e = tuple(x + y for x, y in zip(e1, e2))
                if sq and any(e[i] > 1 for i in sq):
                    continue
                key = ((m1[0] + m2a, m1[1] + m2b), e)
                prod = c1 * c2
                prev = out.get(key)
                if prev is None:
                    out[key] = prod
                else:
                    s = prev + prod
                    if s == 0:
                        del out[key]
                    else:
                        out[key] = s
        return TruncatedSeries(ctx, out, _raw=True)

    __rmul__ = __mul__

    def int_pow(self, e: int) -> "TruncatedSeries":
        """f**e for integer e; negative powers need constant term 1."""
        e = int(e)
        if e < 0:
            if self.constant_term() != 1:
                raise ValueError(f"negative power needs constant term 1, got {self.constant_term()}")
            return self._inverse().int_pow(-e)
        result = TruncatedSeries.one(self.ctx)
        base = self
        while e:
            if e & 1:
                result = result * base
            e >>= 1
            if e:
                base = base * base
        return result

    __pow__ = int_pow

    def _inverse(self) -> "TruncatedSeries":
        # 1/(1-g) = sum g^i; terminates because g has positive degree.
        one = TruncatedSeries.one(self.ctx)
        g = one - self
        assert g.min_formal_degree() >= 1
        acc, p = one, g
        while p:
            acc = acc + p
            p = p * g
        return acc

    # -- display -------------------------------------------------------------

    def __repr__(self):
        s = str(self)
        if len(s) > 120:
            s = s[:117] + "..."
        return f"<series {s}>"

    def __str__(self):
        if not self.terms:
            return "0"
        bits = []
        for (m, exps), c in sorted(self.terms.items(), key=_term_sort_key):
            factors = []
            for base, e in (("x", m[0]), ("y", m[1])):
                if e == 1:
                    factors.append(base)
                elif e != 0:
                    factors.append(f"{base}^{e}")
            for name, e in zip(self.ctx.variables, exps):
                if e == 1:
                    factors.append(name)
                elif e > 1:
                    factors.append(f"{name}^{e}")
            body = "*".join(factors)
            if not body:
                bits.append(rat_str(c))
            elif c == 1:
                bits.append(body)
            elif c == -1:
                bits.append(f"-{body}")
            else:
                bits.append(f"{rat_str(c)}*{body}")
        out = " + ".join(bits)
        return out.replace("+ -", "- ")


def _term_sort_key(item):
    (m, exps), _ = item
    return (m[0], m[1], exps)


# ---------------------------------------------------------------------------
# transcendental-style operations (still exact: everything truncates)


def log_one_plus(g: TruncatedSeries) -> TruncatedSeries:
    """log(1+g) = sum_{i>=1} (-1)^{i+1} g^i / i.

    Every term of g must have formal-variable degree >= 1 (so g is in the
    maximal ideal and the sum truncates).
    """
    if g.min_formal_degree() < 1:
        raise ValueError("log_one_plus needs every term in the maximal ideal "
                         f"(degree >= 1); got constant/lattice part in {g!r}")
    acc = TruncatedSeries.zero(g.ctx)
    p = g
    i = 1
    while p:
        acc = acc + p.scale(rat((-1) ** (i + 1), i))
        p = p * g
        i += 1
    return acc


def log_series(f: TruncatedSeries) -> TruncatedSeries:
    """log f for f with constant term exactly 1."""
    one = TruncatedSeries.one(f.ctx)
    return log_one_plus(f - one)


def exp_series(h: TruncatedSeries) -> TruncatedSeries:
    """exp(h) = sum_{i>=0} h^i / i!, for h in the maximal ideal."""
    if h.min_formal_degree() < 1:
        raise ValueError("exp_series needs every term in the maximal ideal "
                         f"(degree >= 1); got constant/lattice part in {h!r}")
    acc = TruncatedSeries.one(h.ctx)
    p = h
    i = 1
    while p:
        acc = acc + p
        i += 1
        p = (p * h).scale(rat(1, i))
    return acc


def int_pow(f: TruncatedSeries, e: int) -> TruncatedSeries:
    return f.int_pow(e)


def mul(a: TruncatedSeries, b: TruncatedSeries) -> TruncatedSeries:
    return a * b


# ---------------------------------------------------------------------------
# substitution homomorphisms


def substitute_sum(f: TruncatedSeries, var: str, replacements: Sequence[str],
                   target: RingContext | None = None) -> TruncatedSeries:
    """Apply the ring map  var -> sum(replacements)  with square-zero targets.

    Since the replacements square to zero, var^e maps to the elementary
    symmetric image e! * sigma_e(replacements); in particular e ->
    0 once e exceeds len(replacements).  All other variables of f must
    exist (same name) in the target context.  When ``target`` is omitted,
    it is built from f's context by replacing ``var`` with the square-zero
    replacement variables, keeping the order.
    """
    src = f.ctx
    if var not in src.var_index:
        raise ValueError(f"unknown variable {var!r} in context {src.variables}")
    if target is None:
        pairs = []
        for name, flag in zip(src.variables, src.square_zero):
            if name == var:
                pairs.extend((r, True) for r in replacements)
            else:
                pairs.append((name, flag))
        target = RingContext.make(pairs, src.order)
    for r in replacements:
        i = target.var_index.get(r)
        if i is None:
            raise ValueError(f"replacement {r!r} missing from target context")
        if not target.square_zero[i]:
            raise ValueError(f"replacement {r!r} must be square-zero")
    vi = src.var_index[var]
    repl_idx = [target.var_index[r] for r in replacements]

    def image_of_power(e: int) -> TruncatedSeries:
        # (u_1 + ... + u_r)^e = e! * sum over e-subsets of the product.
        terms = {}
        fact = math.factorial(e)
        for subset in _combinations(repl_idx, e):
            exps = list(target.zero_exps)
            for i in subset:
                exps[i] = 1
            terms[((0, 0), tuple(exps))] = rat(fact)
        return TruncatedSeries(target, terms)

    images = {}
    out = TruncatedSeries.zero(target)
    for (m, exps), c in f.terms.items():
        e = exps[vi]
        if e not in images:
            images[e] = image_of_power(e)
        img = images[e]
        if img.is_zero():
            continue
        texps = list(target.zero_exps)
        for name, ex in zip(src.variables, exps):
            if name == var or ex == 0:
                continue
            j = target.var_index.get(name)
            if j is None:
                raise ValueError(f"variable {name!r} missing from target context")
            texps[j] = ex
        out = out + TruncatedSeries(target, {(m, tuple(texps)): c}) * img
    return out


def _combinations(items, r):
    import itertools
    return itertools.combinations(items, r)


def map_vars(f: TruncatedSeries, target: RingContext,
             mapping: Mapping[str, str] | None = None) -> TruncatedSeries:
    """Ring map sending each variable to a (same-flag-or-looser) target
    variable by name; several sources may share a target (exponents add).
    Unmapped names must exist verbatim in the target."""
    mapping = dict(mapping or {})
    src = f.ctx
    cols = []
    for name in src.variables:
        tgt = mapping.get(name, name)
        j = target.var_index.get(tgt)
        if j is None:
            raise ValueError(f"variable {tgt!r} missing from target context")
        cols.append(j)
    terms = {}
    for (m, exps), c in f.terms.items():
        texps = list(target.zero_exps)
        for i, e in enumerate(exps):
            texps[cols[i]] += e
        key = (m, tuple(texps))
        terms[key] = terms.get(key, _RAT(0)) + c
    return TruncatedSeries(target, terms)


def retruncate(f: TruncatedSeries, ctx: RingContext) -> TruncatedSeries:
    """Reinterpret f in a context with the same variables, other order."""
    if ctx.variables != f.ctx.variables or ctx.square_zero != f.ctx.square_zero:
        raise ContextMismatchError("retruncate only changes the order")
    return TruncatedSeries(ctx, f.terms)


# ---------------------------------------------------------------------------
# serialization


def series_to_terms(f: TruncatedSeries) -> list:
    """Canonical JSON-ready term list, sorted by (m.a, m.b, exponents)."""
    out = []
    for (m, exps), c in sorted(f.terms.items(), key=_term_sort_key):
        vars_obj = {name: e for name, e in zip(f.ctx.variables, exps) if e}
        out.append({"m": [m[0], m[1]], "vars": vars_obj, "coef": rat_str(c)})
    return out


def series_from_terms(ctx: RingContext, data) -> TruncatedSeries:
    if not isinstance(data, list):
        raise SchemaError(f"term list expected, got {type(data).__name__}")
    terms = {}
    for item in data:
        if not isinstance(item, dict) or set(item) - {"m", "vars", "coef"}:
            raise SchemaError(f"bad term object: {item!r}")
        try:
            m = (int(item["m"][0]), int(item["m"][1]))
        except (KeyError, IndexError, TypeError, ValueError) as exc:
            raise SchemaError(f"bad lattice vector in term: {item!r}") from exc
        exps = list(ctx.zero_exps)
        for name, e in item.get("vars", {}).items():
            if name not in ctx.var_index:
                raise SchemaError(f"unknown variable {name!r} in term {item!r}")
            if not isinstance(e, int) or e < 0:
                raise SchemaError(f"bad exponent for {name!r}: {e!r}")
            exps[ctx.var_index[name]] = e
        if not ctx.admissible(exps):
            raise SchemaError(f"term exceeds ring truncation/square-zero: {item!r}")
        key = (m, tuple(exps))
        c = parse_rational(item.get("coef", ""))
        terms[key] = terms.get(key, _RAT(0)) + c
    return TruncatedSeries(ctx, terms)


def context_to_json(ctx: RingContext) -> dict:
    return {
        "variables": [
            {"name": n, "square_zero": bool(f)}
            for n, f in zip(ctx.variables, ctx.square_zero)
        ],
        "order": ctx.order,
    }


def context_from_json(data) -> RingContext:
    try:
        pairs = [(v["name"], bool(v["square_zero"])) for v in data["variables"]]
        order = data["order"]
    except (KeyError, TypeError) as exc:
        raise SchemaError(f"bad ring context object: {data!r}") from exc
    if not isinstance(order, int) or order < 0:
        raise SchemaError(f"bad order: {order!r}")
    if not all(isinstance(p[0], str) for p in pairs):
        raise SchemaError("variable names must be strings")
    try:
        return RingContext.make(pairs, order)
    except ValueError as exc:
        raise SchemaError(str(exc)) from exc
