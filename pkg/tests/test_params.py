import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fdss.errors import (
    DegenerateL,
    MOutOfRange,
    NOutOfRange,
    POutOfRange,
    SigmaOutOfRange,
)
from fdss.params import (
    MRange,
    TemporalKind,
    classify_m,
    critical_exponents,
    m_c,
    m_s,
    p_c,
    p_L,
    p_s,
    sample_admissible,
    similarity_exponents,
    validate_params,
)

unit = st.floats(0.0, 1.0)


def test_reference_exponents(p_star):
    ce = critical_exponents(p_star)
    assert ce.m_c == pytest.approx(1 / 3, abs=1e-15)
    assert ce.m_s == pytest.approx(0.2, abs=1e-15)
    assert ce.p_L == 1.0
    assert ce.p_F == pytest.approx(11 / 12, abs=1e-15)
    assert ce.p_c == pytest.approx(0.75, abs=1e-15)
    assert ce.p_s == pytest.approx(1.25, abs=1e-15)
    assert ce.L == pytest.approx(0.4, abs=1e-15)
    assert ce.sigma_L == pytest.approx(0.4 / 0.75, abs=1e-15)


def test_reference_similarity(p_star):
    se = similarity_exponents(p_star, -1)
    assert (se.alpha, se.beta) == pytest.approx((5.0, 2.375), abs=1e-13)
    assert se.temporal_kind is TemporalKind.BLOWUP
    assert not se.is_forward
    assert similarity_exponents(p_star, 1).temporal_kind is TemporalKind.GLOBAL_DECAY


def test_negative_L_kinds():
    ps = validate_params(3, 0.25, 1.05, 1.0)
    assert ps.L < 0
    assert similarity_exponents(ps, 1).temporal_kind is TemporalKind.EXTINCTION
    assert similarity_exponents(ps, -1).temporal_kind is TemporalKind.GROWUP


@pytest.mark.parametrize("args, err", [
    ((2.0, 0.5, 1.2, 0), NOutOfRange),
    ((3, 0.0, 1.2, 0), MOutOfRange),
    ((3, 1.0, 1.2, 0), MOutOfRange),
    ((3, 0.5, 1.2, -2.0), SigmaOutOfRange),
    ((3, 0.5, 0.5, 0), POutOfRange),
    ((3, 0.5, math.nan, 0), POutOfRange),
    ((math.inf, 0.5, 1.2, 0), NOutOfRange),
])
def test_validation_errors(args, err):
    with pytest.raises(err):
        validate_params(*args)


def test_errors_are_value_errors():
    with pytest.raises(ValueError):
        validate_params(1, 0.5, 1.2, 0)


def test_degenerate_L():
    with pytest.raises(DegenerateL):
        similarity_exponents(validate_params(3, 0.25, 1.0, 0), 1)


def test_bad_sign():
    with pytest.raises(ValueError):
        similarity_exponents(validate_params(*(3, 0.25, 1.2, 0)), 0)


@pytest.mark.parametrize("m, expect", [(0.1, MRange.BELOW_SOBOLEV), (0.25, MRange.SUBCRITICAL),
                                       (0.5, MRange.SUPERCRITICAL), (0.2, MRange.BELOW_SOBOLEV),
                                       (1 / 3, MRange.SUPERCRITICAL)])
def test_classify_m(m, expect):
    mc = classify_m(validate_params(3, m, 1.5, 0))
    assert mc.range is expect
    assert mc.at_m_s == (m == 0.2)


@given(st.floats(2.01, 50.0), unit, st.floats(-1.99, 20.0), st.floats(0.01, 10.0))
def test_exponent_orderings(N, mfrac, sigma, dp):
    m = 0.001 + 0.998 * mfrac
    assert m_s(N) < m_c(N)
    gap_c = p_L(m, sigma) - p_c(N, m, sigma)
    gap_s = p_L(m, sigma) - p_s(N, m, sigma)
    # strict comparisons only away from the boundaries
    if abs(m - m_c(N)) > 1e-9:
        assert (gap_c > 0) == (m < m_c(N))
    if abs(m - m_s(N)) > 1e-9:
        assert (gap_s > 0) == (m < m_s(N))


@given(st.floats(2.01, 50.0), unit, st.floats(-1.99, 20.0), st.floats(-5.0, 5.0))
def test_L_sign_matches_p_minus_pL(N, mfrac, sigma, dp):
    m = 0.001 + 0.998 * mfrac
    p = p_L(m, sigma) + dp
    if p <= m or abs(dp) < 1e-9:
        return
    ps = validate_params(N, m, p, sigma)
    assert np.sign(ps.L) == np.sign(p - p_L(m, sigma))


@given(st.floats(2.01, 50.0), unit, st.floats(-1.99, 20.0), st.floats(0.01, 5.0),
       st.booleans())
def test_similarity_sign_covariance(N, mfrac, sigma, dp, above):
    m = 0.001 + 0.998 * mfrac
    p = p_L(m, sigma) + (dp if above else -dp)
    if p <= m:
        return
    ps = validate_params(N, m, p, sigma)
    a, b = similarity_exponents(ps, 1), similarity_exponents(ps, -1)
    assert (a.alpha, a.beta) == (b.alpha, b.beta)
    assert a.alpha > 0 and a.beta > 0
    assert a.temporal_kind != b.temporal_kind
    pair = {TemporalKind.GLOBAL_DECAY, TemporalKind.BLOWUP} if ps.L > 0 else \
        {TemporalKind.EXTINCTION, TemporalKind.GROWUP}
    assert {a.temporal_kind, b.temporal_kind} == pair


def test_sample_admissible(rng):
    N, m, p, sigma = sample_admissible(rng, 500)
    assert np.all((N > 2.1) & (N < 10))
    assert np.all(m < m_c(N))
    assert np.all(p > np.maximum(1.0, p_L(m, sigma)))
