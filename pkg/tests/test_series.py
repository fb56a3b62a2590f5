import json

import pytest
from hypothesis import given, settings

from conftest import series_in, unit_series_in
from tropvert.series import (
    ContextMismatchError,
    RingContext,
    SchemaError,
    TruncatedSeries,
    exp_series,
    index,
    int_pow,
    is_primitive,
    log_one_plus,
    log_series,
    normal,
    parse_rational,
    primitive,
    rat,
    rat_str,
    retruncate,
    series_from_terms,
    series_to_terms,
    substitute_sum,
    wedge,
)

T2 = RingContext.power_ring(["t1", "t2"], 6)
T1 = RingContext.power_ring(["t"], 3)
U2 = RingContext.nilpotent_ring(["u1", "u2"])


def mono(ctx, coef=1, m=(0, 0), **vars):
    return TruncatedSeries.monomial(ctx, coef, m, vars)


class TestLattice:
    def test_wedge(self):
        assert wedge((1, 0), (0, 1)) == 1
        assert wedge((2, 1), (1, 2)) == 3
        assert wedge((1, 1), (2, 2)) == 0
        assert wedge((0, 1), (1, 0)) == -1

    def test_index_primitive(self):
        assert index((2, 4)) == 2
        assert primitive((2, 4)) == (1, 2)
        assert primitive((-2, -4)) == (-1, -2)
        assert index((0, -3)) == 3
        assert index((5, 0)) == 5
        for m in [(2, 4), (-3, 6), (1, 1), (0, 7)]:
            assert index(m) * primitive(m)[0] == m[0]
            assert index(m) * primitive(m)[1] == m[1]
            assert is_primitive(primitive(m))

    def test_zero_vector_rejected(self):
        with pytest.raises(ValueError):
            index((0, 0))
        with pytest.raises(ValueError):
            primitive((0, 0))
        assert not is_primitive((0, 0))

    def test_normal_is_ccw(self):
        # normal(m) pairs positively with the counterclockwise tangent rot90(m)
        for m in [(1, 0), (0, 1), (-1, 2), (3, -2), (2, 2)]:
            n = normal(m)
            tangent = (-m[1], m[0])
            assert tangent[0] * n[0] + tangent[1] * n[1] > 0


class TestRationals:
    def test_round_trip(self):
        assert rat_str(rat("3/4")) == "3/4"
        assert rat_str(rat(18)) == "18"
        assert rat_str(rat(-4095, 16)) == "-4095/16"
        assert parse_rational("63/4") == rat(63, 4)
        assert parse_rational("-7") == -7

    def test_rejects_decimals(self):
        for bad in ["0.5", "1e3", "3/0", "3/-2", "", "x"]:
            with pytest.raises(SchemaError):
                parse_rational(bad)


class TestMul:
    def test_two_lines(self):
        f = 1 + mono(T2, 1, (1, 0), t1=1)
        g = 1 + mono(T2, 1, (0, 1), t2=1)
        expect = (1 + mono(T2, 1, (1, 0), t1=1) + mono(T2, 1, (0, 1), t2=1)
                  + mono(T2, 1, (1, 1), t1=1, t2=1))
        assert f * g == expect

    def test_identity(self):
        f = 1 + mono(T2, rat(2, 3), (1, -1), t1=2)
        assert TruncatedSeries.one(T2) * f == f

    def test_square_zero(self):
        f = 1 + mono(U2, 1, (1, 0), u1=1)
        assert f * f == 1 + mono(U2, 2, (1, 0), u1=1)

    def test_context_mismatch(self):
        with pytest.raises(ContextMismatchError):
            TruncatedSeries.one(T2) * TruncatedSeries.one(T1)

    def test_truncation(self):
        t = mono(T1, 1, (0, 0), t=1)
        assert (t ** 3) * t == TruncatedSeries.zero(T1)


class TestLogExp:
    def test_mercator(self):
        g = mono(T1, 1, (1, 0), t=1)
        expect = (mono(T1, 1, (1, 0), t=1) + mono(T1, rat(-1, 2), (2, 0), t=2)
                  + mono(T1, rat(1, 3), (3, 0), t=3))
        assert log_one_plus(g) == expect

    def test_log_zero(self):
        assert log_one_plus(TruncatedSeries.zero(T2)).is_zero()

    def test_log_inverse_fourth_power(self):
        ctx = RingContext.power_ring(["t1", "t2"], 3)
        q = mono(ctx, 1, (1, 1), t1=1, t2=1)
        # truncation in this ring counts t-degree, so only q^1 survives;
        # redo at order 6 where q^3 is still alive
        q6 = mono(T2, 1, (1, 1), t1=1, t2=1)
        f = (1 - q6 + TruncatedSeries.zero(T2)).int_pow(-4)
        assert log_series(f) == 4 * q6 + 2 * q6 * q6 + rat(4, 3) * q6 * q6 * q6

    def test_exp_of_zero(self):
        assert exp_series(TruncatedSeries.zero(T2)).is_one()

    def test_exp_monomial(self):
        ctx = RingContext.power_ring(["t"], 4)
        h = mono(ctx, rat(3, 2), (1, 2), t=1)
        f = exp_series(h)
        assert f.coefficient((2, 4), {"t": 2}) == rat(9, 8)
        assert f.coefficient((3, 6), {"t": 3}) == rat(9, 16)

    def test_round_trip(self):
        f = 1 + mono(T2, 1, (1, 1), t1=1, t2=1)
        assert exp_series(log_series(f)) == f

    def test_degree_zero_rejected(self):
        with pytest.raises(ValueError):
            log_one_plus(mono(T2, 1, (1, 0)))
        with pytest.raises(ValueError):
            exp_series(TruncatedSeries.one(T2))


class TestIntPow:
    def test_geometric(self):
        ctx = RingContext.power_ring(["q"], 3)
        f = 1 + mono(ctx, 1, (0, 0), q=1)
        inv = f.int_pow(-1)
        assert inv == (1 - mono(ctx, 1, (0, 0), q=1) + mono(ctx, 1, (0, 0), q=2)
                       - mono(ctx, 1, (0, 0), q=3))

    def test_binomial(self):
        ctx = RingContext.power_ring(["t1", "t2"], 4)
        q = mono(ctx, 1, (1, 1), t1=1, t2=1)
        f = (1 - q + TruncatedSeries.zero(ctx)).int_pow(-4)
        assert f == 1 + 4 * q + 10 * q * q

    def test_power_zero(self):
        f = 1 + mono(T2, 7, (1, 0), t1=1)
        assert f.int_pow(0).is_one()

    def test_negative_power_needs_unit(self):
        with pytest.raises(ValueError):
            mono(T2, 2).int_pow(-1)


class TestSubstituteSum:
    def test_linear(self):
        f = 1 + mono(T1, 1, (1, 0), t=1)
        g = substitute_sum(f, "t", ["u1", "u2"])
        assert g.coefficient((1, 0), {"u1": 1}) == 1
        assert g.coefficient((1, 0), {"u2": 1}) == 1
        assert g.coefficient((1, 0), {"u1": 1, "u2": 1}) == 0

    def test_square(self):
        f = mono(T1, 1, (0, 0), t=2)
        g = substitute_sum(f, "t", ["u1", "u2"])
        assert g == mono(g.ctx, 2, (0, 0), u1=1, u2=1)

    def test_log_factorization(self):
        # log(1+tx) at order 2 maps to u1 x + u2 x - u1 u2 x^2, i.e. the
        # same thing as log((1+u1 x)(1+u2 x)(1 - u1 u2 x^2)) term by term
        ctx = RingContext.power_ring(["t"], 2)
        lf = log_series(1 + mono(ctx, 1, (1, 0), t=1))
        g = substitute_sum(lf, "t", ["u1", "u2"])
        tgt = g.ctx
        expect = (TruncatedSeries.monomial(tgt, 1, (1, 0), {"u1": 1})
                  + TruncatedSeries.monomial(tgt, 1, (1, 0), {"u2": 1})
                  + TruncatedSeries.monomial(tgt, -1, (2, 0), {"u1": 1, "u2": 1}))
        assert g == expect
        product = ((1 + TruncatedSeries.monomial(tgt, 1, (1, 0), {"u1": 1}))
                   * (1 + TruncatedSeries.monomial(tgt, 1, (1, 0), {"u2": 1}))
                   * (1 - TruncatedSeries.monomial(tgt, 1, (2, 0), {"u1": 1, "u2": 1})))
        assert log_series(product) == g

    def test_power_beyond_replacements_dies(self):
        f = mono(T1, 1, (0, 0), t=3)
        assert substitute_sum(f, "t", ["u1", "u2"]).is_zero()

    def test_unknown_names(self):
        with pytest.raises(ValueError):
            substitute_sum(TruncatedSeries.one(T1), "nope", ["u1"])


class TestSerialization:
    def test_canonical_order_and_strings(self):
        f = (mono(T2, rat(1, 2), (1, 1), t1=1, t2=1) + mono(T2, -3, (-1, 0), t1=2)
             + mono(T2, 5))
        terms = series_to_terms(f)
        assert terms == [
            {"m": [-1, 0], "vars": {"t1": 2}, "coef": "-3"},
            {"m": [0, 0], "vars": {}, "coef": "5"},
            {"m": [1, 1], "vars": {"t1": 1, "t2": 1}, "coef": "1/2"},
        ]
        assert series_from_terms(T2, terms) == f
        # byte-stable under json round trip
        blob = json.dumps(terms, sort_keys=True)
        assert json.dumps(series_to_terms(series_from_terms(T2, json.loads(blob))),
                          sort_keys=True) == blob

    def test_schema_violations(self):
        with pytest.raises(SchemaError):
            series_from_terms(T2, [{"m": [0, 0], "vars": {"zz": 1}, "coef": "1"}])
        with pytest.raises(SchemaError):
            series_from_terms(T2, [{"m": [0], "vars": {}, "coef": "1"}])
        with pytest.raises(SchemaError):
            series_from_terms(T2, [{"m": [0, 0], "vars": {}, "coef": "0.5"}])
        with pytest.raises(SchemaError):
            series_from_terms(T2, {"not": "a list"})


SMALL = RingContext.power_ring(["t1", "t2"], 4)
MIXED = RingContext.make([("t", False), ("u", True)], 4)


class TestProperties:
    @settings(max_examples=60, deadline=None)
    @given(series_in(SMALL), series_in(SMALL), series_in(SMALL))
    def test_ring_axioms(self, a, b, c):
        assert (a * b) * c == a * (b * c)
        assert a * (b + c) == a * b + a * c
        assert a * b == b * a
        assert a + (b + c) == (a + b) + c

    @settings(max_examples=60, deadline=None)
    @given(series_in(MIXED), series_in(MIXED))
    def test_ring_axioms_square_zero(self, a, b):
        assert a * b == b * a
        assert (a - a).is_zero()

    @settings(max_examples=40, deadline=None)
    @given(unit_series_in(RingContext.power_ring(["t1", "t2"], 6), max_terms=3))
    def test_exp_log_round_trip(self, f):
        assert exp_series(log_series(f)) == f

    @settings(max_examples=40, deadline=None)
    @given(series_in(RingContext.power_ring(["t1", "t2"], 6), min_degree=1, max_terms=3))
    def test_log_exp_round_trip(self, h):
        assert log_series(exp_series(h)) == h

    @settings(max_examples=30, deadline=None)
    @given(unit_series_in(SMALL, max_terms=3))
    def test_int_pow_inverse(self, f):
        for e in (1, 2, 3):
            assert f.int_pow(e) * f.int_pow(-e) == TruncatedSeries.one(SMALL)

    @settings(max_examples=30, deadline=None)
    @given(series_in(RingContext.power_ring(["t"], 3), max_terms=3, m_range=1),
           series_in(RingContext.power_ring(["t"], 3), max_terms=3, m_range=1))
    def test_substitute_commutes_with_mul(self, a, b):
        sub = lambda f: substitute_sum(f, "t", ["u1", "u2", "u3"])
        assert sub(a * b) == sub(a) * sub(b)

    @settings(max_examples=30, deadline=None)
    @given(series_in(RingContext.power_ring(["t"], 3), min_degree=1, max_terms=2))
    def test_substitute_commutes_with_log(self, g):
        sub = lambda f: substitute_sum(f, "t", ["u1", "u2", "u3"])
        assert sub(log_one_plus(g)) == log_one_plus(sub(g))

    @settings(max_examples=40, deadline=None)
    @given(series_in(RingContext.power_ring(["t1", "t2"], 6), max_terms=4),
           series_in(RingContext.power_ring(["t1", "t2"], 6), max_terms=4))
    def test_truncation_coherence(self, a, b):
        low = RingContext.power_ring(["t1", "t2"], 3)
        assert retruncate(a * b, low) == retruncate(a, low) * retruncate(b, low)
