import pytest
from hypothesis import given, settings, strategies as st

from conftest import series_in, unit_series_in
from tropvert.series import (
    ContextMismatchError,
    RingContext,
    TruncatedSeries,
    primitive,
    rat,
)
from tropvert.derivations import (
    DecompositionError,
    LogDerivation,
    WallCrossing,
    act,
    apply_derivation,
    bracket,
    compose_and_log,
    compose_crossings,
    exp_action,
)

CTX = RingContext.power_ring(["t"], 3)
X = TruncatedSeries.monomial(CTX, 1, (1, 0))
Y = TruncatedSeries.monomial(CTX, 1, (0, 1))


def mono(ctx, coef=1, m=(0, 0), **vars):
    return TruncatedSeries.monomial(ctx, coef, m, vars)


class TestApplyDerivation:
    def test_pairing_scalars(self):
        d = LogDerivation.from_terms(CTX, [(1, (0, 0), (0, 1))])
        assert apply_derivation(d, Y) == Y
        assert apply_derivation(d, X).is_zero()

    def test_monomial_coefficient(self):
        d = LogDerivation.from_terms(
            CTX, [(mono(CTX, 1, t=1), (1, 0), (0, 1))])  # t x d_(0,1)
        assert apply_derivation(d, Y) == mono(CTX, 1, (1, 1), t=1)

    def test_linearity(self):
        d = LogDerivation.from_terms(CTX, [(1, (1, 0), (0, 1))])
        f = 3 * Y + mono(CTX, rat(1, 2), (0, 2), t=1)
        assert apply_derivation(d, f) == 3 * mono(CTX, 1, (1, 1)) + mono(
            CTX, 1, (1, 2), t=1)

    def test_context_mismatch(self):
        other = RingContext.power_ring(["s"], 3)
        d = LogDerivation.from_terms(other, [(1, (1, 0), (0, 1))])
        with pytest.raises(ContextMismatchError):
            apply_derivation(d, X)


class TestBracket:
    def test_basic(self):
        d1 = LogDerivation.from_terms(CTX, [(1, (1, 0), (0, 1))])  # x d_(0,1)
        d2 = LogDerivation.from_terms(CTX, [(1, (0, 1), (1, 0))])  # y d_(1,0)
        expect = LogDerivation.from_terms(CTX, [(1, (1, 1), (1, -1))])
        assert bracket(d1, d2) == expect

    def test_antisymmetry_diagonal(self):
        d = LogDerivation.from_terms(
            CTX, [(mono(CTX, 2, t=1), (1, 2), (-2, 1))])
        assert bracket(d, d).is_zero()

    def test_parallel_h_elements_commute(self):
        # both m parallel, n = n' orthogonal to them: Eq (3) pairings vanish
        d1 = LogDerivation.from_terms(CTX, [(mono(CTX, 1, t=1), (1, 1), (-1, 1))])
        d2 = LogDerivation.from_terms(CTX, [(mono(CTX, 5, t=1), (2, 2), (-1, 1))])
        assert bracket(d1, d2).is_zero()

    def test_h_closure(self):
        d1 = LogDerivation.from_terms(CTX, [(mono(CTX, 1, t=1), (1, 0), (0, -1))])
        d2 = LogDerivation.from_terms(CTX, [(mono(CTX, 1, t=1), (0, 1), (1, 0))])
        br = bracket(d1, d2)
        assert br.in_tropical_vertex_algebra()


class TestAct:
    def test_closed_form_given_normal(self):
        f = 1 + mono(CTX, 1, (1, 0), t=1)
        th = WallCrossing.from_function(f, (0, -1))
        assert th.act(X) == X
        assert th.act(Y) == f.int_pow(-1) * Y

    def test_inverse_round_trip(self):
        f = 1 + mono(CTX, rat(2, 3), (1, 1), t=1)
        th = WallCrossing.from_function(f, (-1, 1))
        g = X + 2 * Y + mono(CTX, 1, (1, -1), t=1)
        assert th.act(th.inverse().act(g)) == g
        assert th.inverse().act(th.act(g)) == g

    def test_generator_consistency(self):
        # m0 = (a, b), n0 = (-b, a): x -> f^{-b} x, y -> f^{a} y
        for m0 in [(1, 0), (0, 1), (1, 1), (2, 1), (-1, 2), (1, -3)]:
            p = primitive(m0)
            f = 1 + mono(CTX, 2, m0, t=1)
            th = WallCrossing.from_function(f, (-p[1], p[0]))
            assert th.act(X) == f.int_pow(-p[1]) * X
            assert th.act(Y) == f.int_pow(p[0]) * Y

    def test_rejects_mixed_support(self):
        bad = mono(CTX, 1, (1, 0), t=1) + mono(CTX, 1, (0, 1), t=1)
        with pytest.raises(ValueError):
            WallCrossing(bad, (0, 1))

    def test_rejects_non_orthogonal_normal(self):
        with pytest.raises(ValueError):
            WallCrossing(mono(CTX, 1, (1, 0), t=1), (1, 1))


class TestComposeAndLog:
    def test_single_round_trip(self):
        f = 1 + mono(CTX, 3, (2, 0), t=1)
        th = WallCrossing.from_function(f, (0, 1))
        assert compose_and_log([th]) == th.derivation()

    def test_identity_composite(self):
        f = 1 + mono(CTX, 1, (1, 1), t=1)
        th = WallCrossing.from_function(f, (1, -1))
        assert compose_and_log([th, th.inverse()]).is_zero()

    def test_commutator_is_bracket(self):
        # with square-zero scalars the four-fold commutator is exactly
        # exp([xi2, xi1]); check coefficient, direction and normal
        ctx = RingContext.nilpotent_ring(["t1", "t2"], 2)
        c1, c2, w1, w2 = rat(3), rat(-2), 2, 1
        f1 = 1 + TruncatedSeries.monomial(ctx, c1, (w1, 0), {"t1": 1})
        f2 = 1 + TruncatedSeries.monomial(ctx, c2, (0, w2), {"t2": 1})
        t1 = WallCrossing.from_function(f1, (0, -1))
        t2 = WallCrossing.from_function(f2, (1, 0))
        xi = compose_and_log([t1, t2, t1.inverse(), t2.inverse()])
        assert xi == t2.derivation().bracket(t1.derivation())
        assert xi.in_tropical_vertex_algebra()
        ((m, n),) = xi.terms.keys()
        assert m == (w1, w2)
        assert n == (-1, 2)  # rot90(primitive((2,1)))
        assert xi.terms[(m, n)] == TruncatedSeries.monomial(
            ctx, 6, (0, 0), {"t1": 1, "t2": 1})

    def test_non_h_input_raises(self):
        # a derivation with <m, n> != 0 exponentiates to something whose
        # log has a residue off the n(m) pattern
        ctx = RingContext.power_ring(["t"], 4)
        d = LogDerivation.from_terms(
            ctx, [(TruncatedSeries.monomial(ctx, 1, (0, 0), {"t": 1}), (1, 0), (1, 0))])
        x = TruncatedSeries.monomial(ctx, 1, (1, 0))
        y = TruncatedSeries.monomial(ctx, 1, (0, 1))

        class FakeCrossing:
            def __init__(self):
                self.ctx = ctx

            def act(self, g):
                return exp_action(d, g)

        with pytest.raises(DecompositionError):
            compose_and_log([FakeCrossing()])

    def test_serialization_terms(self):
        f = 1 + mono(CTX, rat(1, 2), (1, 1), t=1)
        th = WallCrossing.from_function(f, (-1, 1))
        rows = th.derivation().to_terms()
        assert rows[0] == {"m": [1, 1], "vars": {"t": 1}, "coef": "1/2",
                           "n": [-1, 1]}


SQ = RingContext.nilpotent_ring(["u1", "u2", "u3"], 3)


def crossing_strategy(ctx, m0s):
    def build(m0, coef, var_i):
        p = primitive(m0)
        f = 1 + TruncatedSeries.monomial(
            ctx, coef, m0, {ctx.variables[var_i]: 1})
        return WallCrossing.from_function(f, (-p[1], p[0]))
    return st.builds(build, st.sampled_from(m0s),
                     st.integers(-3, 3).filter(lambda c: c != 0),
                     st.integers(0, len(SQ.variables) - 1))


class TestGroupProperties:
    @settings(max_examples=30, deadline=None)
    @given(st.lists(crossing_strategy(SQ, [(1, 0), (0, 1), (1, 1), (1, -1)]),
                    min_size=1, max_size=4),
           series_in(SQ, max_terms=3))
    def test_group_property(self, thetas, g):
        # exp(compose_and_log(thetas)) acts like the composite itself
        xi = compose_and_log(thetas, SQ)
        assert exp_action(xi, g) == compose_crossings(thetas, g)

    @settings(max_examples=30, deadline=None)
    @given(st.lists(crossing_strategy(SQ, [(1, 0), (0, 1), (2, 1), (-1, 1)]),
                    min_size=1, max_size=4))
    def test_h_closure_and_ideal(self, thetas):
        xi = compose_and_log(thetas, SQ)
        assert xi.in_tropical_vertex_algebra()
        assert xi.in_maximal_ideal()
