"""Acceptance gate: one test per stated criterion, at stated tolerance.

Every check here is exact rational arithmetic; "tolerance" only ever
means a wall-clock budget.  Each test prints its own PASS line so a
verbose run reads as a checklist.
"""

import math
import random
import time
from functools import lru_cache

import pytest

from tropvert.invariants import (
    bps_aggregate,
    bps_invert,
    commutator_coeffs,
    degeneration_check,
    gw_from_scattering,
    key_sizes,
    m_p_d,
    ordered_partitions,
    r_d,
    r_rd,
)
from tropvert.scattering import (
    ScatteringDiagram,
    Wall,
    loop_is_identity,
    minimalize,
    same_diagram,
    scatter_at_origin,
    scatter_by_perturbation,
)
from tropvert.series import (
    RingContext,
    TruncatedSeries,
    log_series,
    primitive,
    rat,
)
from tropvert.tropical import WeightData, aggregate_log_f, ntrop


def _standard(l1, l2, order):
    ctx = RingContext.power_ring(("t1", "t2"), order)
    one = TruncatedSeries.one(ctx)

    def line(d, var, power):
        return Wall.from_function(
            ctx, "line", (0, 0), d,
            (one + TruncatedSeries.monomial(ctx, 1, d, {var: 1})) ** power)

    return ScatteringDiagram(ctx, [line((1, 0), "t1", l1),
                                   line((0, 1), "t2", l2)])


def _random_standard(rng, order, n_lines):
    pool = [(a, b) for a in range(-3, 4) for b in range(-3, 4)
            if (a, b) != (0, 0) and primitive((a, b)) == (a, b)]
    dirs = rng.sample(pool, n_lines)
    ctx = RingContext.power_ring(
        tuple(f"t{i + 1}" for i in range(n_lines)), order)
    one = TruncatedSeries.one(ctx)
    walls = []
    for i, d in enumerate(dirs):
        c = rat(rng.choice([-3, -2, -1, 1, 2, 3]), rng.randint(1, 3))
        f = (one + TruncatedSeries.monomial(ctx, c, d, {f"t{i + 1}": 1})
             ) ** rng.randint(1, 2)
        walls.append(Wall.from_function(ctx, "line", (0, 0), d, f))
    return ScatteringDiagram(ctx, walls)


def _report(name, detail=""):
    print(f"PASS {name}" + (f": {detail}" if detail else ""))


@pytest.fixture(scope="module")
def gw33():
    return gw_from_scattering((1, 0), (0, 1), 3, 3, (1, 1), 6)


def test_criterion_01_single_factor_all_orders():
    start = time.monotonic()
    for order in range(1, 11):
        S = scatter_at_origin(_standard(1, 1, order))
        rays = S.rays()
        ctx = S.ctx
        expected = TruncatedSeries.one(ctx) + TruncatedSeries.monomial(
            ctx, 1, (1, 1), {"t1": 1, "t2": 1})
        if order == 1:
            # 1 + t1 t2 xy is trivial mod m^2, so the minimal diagram
            # carries no ray at all
            assert expected.is_one() and rays == []
            continue
        assert len(rays) == 1
        ray = rays[0]
        assert ray.direction == (1, 1)
        assert ray.function() == expected
    elapsed = time.monotonic() - start
    assert elapsed < 1.0
    _report("criterion 1", f"single ray (1,1), orders 2..10 in {elapsed:.2f}s")


def test_criterion_02_squared_lines_order_six():
    start = time.monotonic()
    S = scatter_at_origin(_standard(2, 2, 6))
    ctx = S.ctx
    one = TruncatedSeries.one(ctx)

    def q(a, b):
        return TruncatedSeries.monomial(ctx, 1, (a, b),
                                        {"t1": a, "t2": b})

    expected = {}
    for n in range(1, 6):
        if 2 * n + 1 <= 6:
            expected[(n + 1, n)] = (one + q(n + 1, n)) ** 2
            expected[(n, n + 1)] = (one + q(n, n + 1)) ** 2
    expected[(1, 1)] = (one - q(1, 1)) ** -4

    rays = {w.direction: w.function() for w in S.rays()}
    assert rays == expected
    elapsed = time.monotonic() - start
    assert elapsed < 10.0
    _report("criterion 2",
            f"{len(expected)} rays match closed forms in {elapsed:.2f}s")


def test_criterion_03_cubed_lines_depth_five():
    start = time.monotonic()
    table = commutator_coeffs(3, 3, (1, 1), 10)
    elapsed = time.monotonic() - start
    assert elapsed < 300.0
    stated = {1: rat(9), 2: rat(63, 2), 3: rat(165), 4: rat(4095, 4),
              5: rat(100947, 5)}
    for k, want in stated.items():
        got = k * table[f"c^{k}"]
        assert got == want, (
            f"k = {k}: computed k*c^k = {got}, stated value {want}")
    _report("criterion 3", f"k*c^k matches for k=1..5 in {elapsed:.2f}s")


def test_criterion_04_gw_table_depth_three(gw33):
    assert gw33["1+1+1|1+1+1"] == 18
    assert gw33["2+1+0|1+1+1"] == 3
    sums = {s: sum(v for key, v in gw33.items() if key_sizes(key) == (s, s))
            for s in (1, 2, 3)}
    assert sums == {1: rat(9), 2: rat(63, 4), 3: rat(55)}
    assert rat(55) - rat(9, 9) == \
        gw33["1+1+1|1+1+1"] + 12 * gw33["2+1+0|1+1+1"]
    _report("criterion 4", "N[1+1+1|1+1+1]=18, N[2+1+0|1+1+1]=3, sums "
            "9, 63/4, 55, and 55-1 = 18+36")


def test_criterion_05_loop_consistency_suite():
    rng = random.Random(20260815)
    count = 0
    for _ in range(20):
        D = _random_standard(rng, rng.randint(2, 4), rng.randint(2, 3))
        S = scatter_at_origin(D)
        assert loop_is_identity(S)
        count += 1
    _report("criterion 5", f"{count} random diagrams, loop product = Id")


def test_criterion_06_perturbation_oracle():
    rng = random.Random(20260815)
    count = 0
    for _ in range(20):
        k = rng.randint(2, 3)
        D = _random_standard(rng, k, 2)
        _, asym = scatter_by_perturbation(D, k=k, seed=rng.randint(0, 999))
        assert same_diagram(asym, minimalize(scatter_at_origin(D)))
        count += 1

    # the factored basic commutator at k = 2
    D = _standard(1, 1, 2)
    pert, _ = scatter_by_perturbation(D, k=2, seed=0)
    uctx = pert.ctx
    by_slope = {}
    for w in pert.walls:
        if w.kind == "ray":
            by_slope.setdefault(w.direction, []).append(w)
    products = {}
    for d, walls in by_slope.items():
        prod = TruncatedSeries.one(uctx)
        for w in walls:
            prod = prod * w.function()
        products[d] = prod
    assert products[(1, 2)].is_one()
    assert products[(2, 1)].is_one()
    slope_one = TruncatedSeries.one(uctx)
    for i in ("u1_1", "u1_2"):
        for j in ("u2_1", "u2_2"):
            slope_one = slope_one + TruncatedSeries.monomial(
                uctx, 1, (1, 1), {i: 1, j: 1})
    assert products[(1, 1)] == slope_one
    _report("criterion 6", f"{count} diagrams match direct; factored "
            "commutator reproduces 1+(u11+u12)(u21+u22)xy")


def test_criterion_07_tropical_aggregation():
    for (l1, l2) in ((1, 1), (1, 2), (2, 2)):
        D = _standard(l1, l2, 3)
        S = scatter_at_origin(D)
        for ray in S.rays():
            assert aggregate_log_f(D, ray.direction) == ray.logf()
    _report("criterion 7", "aggregate_log_f = direct log f on every ray, "
            "l_i <= 2, order 3")


@lru_cache(maxsize=None)
def _nt(m, w):
    return ntrop(WeightData(m, w))


def test_criterion_08_degeneration_two_path():
    m1, m2 = (1, 0), (0, 1)
    supplier = lambda data: _nt(data.m, data.w)
    tables = {}
    checked = 0
    for ell in (1, 2, 3):
        for s1 in range(1, 4):
            for s2 in range(1, 4):
                out = primitive((s1, s2))
                key = (ell, out)
                if key not in tables:
                    tables[key] = gw_from_scattering(m1, m2, ell, ell, out,
                                                     6)
                table = tables[key]
                for p1 in ordered_partitions(s1, ell):
                    for p2 in ordered_partitions(s2, ell):
                        assert degeneration_check(
                            (m1, m2), (p1, p2), supplier
                        ) == table.get((p1, p2))
                        checked += 1
    _report("criterion 8", f"{checked} partition pairs agree across the "
            "two paths")


def test_criterion_09_multiple_covers():
    assert [r_d(d) for d in (1, 2, 3, 4)] == [
        rat(1), rat(-1, 4), rat(1, 9), rat(-1, 16)]
    for r in range(1, 6):
        for d in range(1, 6):
            assert r_rd(r, d) == rat((-1) ** (d - 1), r * d * d)
    for d in range(1, 11):
        assert m_p_d(1, d) == r_d(d)
    table = commutator_coeffs(1, 1, (1, 1), 12)
    for k in range(1, 7):
        assert table[f"c^{k}"] == rat((-1) ** (k - 1), k * k)
    _report("criterion 9", "R_d, R^r_d, M_P[d], and c^k_{1,1} all match "
            "closed forms")


def test_criterion_10_bps():
    report = bps_invert((rat(9), rat(63, 4), rat(55)), 1)
    assert report.n == (rat(9), rat(18), rat(54))
    assert report.all_integral
    assert bps_aggregate(report.n, 1) == (rat(9), rat(63, 4), rat(55))

    table = commutator_coeffs(2, 2, (1, 1), 10)
    conjectural = bps_invert([table[f"c^{k}"] for k in range(1, 6)], 1)
    # conjectural integrality: reported, not asserted fatal
    detail = ("integral" if conjectural.all_integral else
              f"NOT integral: {conjectural.n}")
    _report("criterion 10", f"(9,63/4,55) -> (9,18,54); round trip exact; "
            f"l=2 series k<=5 {detail}")


def test_criterion_11_conjecture_probes():
    # slope-1 function vs the hypergeometric ninth power, through order 4
    table = commutator_coeffs(3, 3, (1, 1), 4)
    logf = [k * table[f"c^{k}"] for k in (1, 2)]
    f = [rat(1), logf[0], logf[1] + logf[0] ** 2 / 2]
    base = [rat(math.comb(4 * n, n), 3 * n + 1) for n in (0, 1, 2)]
    ninth = [rat(1), 9 * base[1],
             9 * base[2] + rat(math.comb(9, 2)) * base[1] ** 2]
    assert f == ninth

    # periodicity (m1, m2) -> (3 m1 - m2, m1): ray (2,1) data maps to (5,2)
    S = scatter_at_origin(_standard(3, 3, 10))

    def coefs(a, b):
        ray = S.wall_with_direction((a, b))
        out = []
        k = 1
        while k * (a + b) <= 10:
            out.append(ray.logf().terms.get(
                ((a * k, b * k), (a * k, b * k)), rat(0)))
            k += 1
        return out

    c21, c52 = coefs(2, 1), coefs(5, 2)
    overlap = min(len(c21), len(c52))
    assert overlap >= 1
    assert c21[:overlap] == c52[:overlap]
    _report("criterion 11", "hypergeometric ninth power matches through "
            f"order 4; periodicity holds through k={overlap} (soft checks)")
