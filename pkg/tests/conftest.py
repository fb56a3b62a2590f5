"""Shared strategies and fixtures for the test suite."""

from __future__ import annotations

import itertools

from hypothesis import strategies as st

from tropvert.series import RingContext, TruncatedSeries, rat


def admissible_keys(ctx: RingContext, m_range=1, min_degree=0):
    """All (m, exps) keys within the ring truncation and a small lattice box."""
    ms = [(a, b) for a in range(-m_range, m_range + 1)
          for b in range(-m_range, m_range + 1)]
    keys = []
    for exps in itertools.product(*(range(0, 2 if sq else ctx.order + 1)
                                    for sq in ctx.square_zero)):
        if not (min_degree <= sum(exps) <= ctx.order):
            continue
        for m in ms:
            keys.append((m, exps))
    return keys


def coefficients():
    return st.builds(lambda p, q: rat(p) / rat(q),
                     st.integers(-6, 6), st.integers(1, 4))


def series_in(ctx: RingContext, min_degree=0, max_terms=4, m_range=1):
    keys = admissible_keys(ctx, m_range=m_range, min_degree=min_degree)
    return st.dictionaries(st.sampled_from(keys), coefficients(),
                           max_size=max_terms).map(
        lambda terms: TruncatedSeries(ctx, terms))


def unit_series_in(ctx: RingContext, max_terms=4, m_range=1):
    """Series of the form 1 + (maximal-ideal part)."""
    return series_in(ctx, min_degree=1, max_terms=max_terms, m_range=m_range).map(
        lambda g: TruncatedSeries.one(ctx) + g)
