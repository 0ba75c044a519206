import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from fdss.errors import InsufficientTail
from fdss.params import ParameterSet, m_c, m_s, p_c, p_F, p_L, p_s, similarity_exponents, validate_params
from fdss.profiles import ProfileODE, TailKind, integrate_profile
from fdss.regions import (
    REGION_TAGS,
    Behavior,
    classify_region,
    hotspot_diagnostics,
    hotspot_exponents,
    region_grid,
)


@pytest.mark.parametrize("q, tag", [
    ((3, 0.25, 1.2, 0), "E"),
    ((3, 0.25, 1.3, 0), "F"),
    ((3, 0.25, 0.98, 0), "UndeterminedBand"),
    ((3, 0.1, 1.2, 1.0), "C"),
    ((3, 0.15, 1.2, 2.0), "I"),
    ((3, 0.1, 1.5, 0.0), "G"),
    ((3, 0.6, 1.1, 0.0), "A"),
    ((3, 0.6, 2.5, 0.0), "D"),
    ((3, 0.6, 3.5, 0.0), "F"),
    ((3, 0.25, 1.25, 0), "Boundary_pS"),
    ((3, 0.2, 1.2, 0), "Boundary_mS"),
])
def test_reference_labels(q, tag):
    assert classify_region(validate_params(*q)).tag == tag


def test_labels_carry_predicates():
    lab = classify_region(validate_params(3, 0.25, 1.2, 0))
    assert "p_L < p < p_s" in lab.predicate
    assert lab.behaviors == {Behavior.GLOBAL_DECAY_FAST, Behavior.GLOBAL_DECAY_SLOW}
    assert lab.to_dict()["tag"] == "E"


def test_negative_sigma_has_no_tag():
    lab = classify_region(validate_params(3, 0.25, 1.2, -0.5))
    assert lab.tag is None
    assert lab.behaviors


def test_partial_flag_on_A():
    assert classify_region(validate_params(3, 0.6, 1.1, 0.0)).partial


def test_hotspot_reference(p_star):
    h = hotspot_exponents(*p_star.as_tuple())
    assert h[TailKind.FAST_DECAY] == pytest.approx(4.5, abs=1e-12)
    assert h[TailKind.CRITICAL_DECAY] == pytest.approx(4 / 3, abs=1e-12)
    assert h[TailKind.SLOW_DECAY] == pytest.approx(0.0, abs=1e-12)


@given(st.floats(2.1, 10.0), st.floats(0.0, 1.0), st.floats(0.0, 10.0), st.floats(0.01, 3.0))
def test_hotspot_sign(N, mfrac, sigma, dp):
    # below m_c every p > p_L also exceeds p_c
    m = 0.01 + (m_c(N) - 0.02) * mfrac
    p = p_L(m, sigma) + dp
    h = hotspot_exponents(N, m, p, sigma)
    assert abs(h[TailKind.SLOW_DECAY]) <= 1e-10
    assert h[TailKind.CRITICAL_DECAY] == pytest.approx(1 / (1 - m), rel=1e-12)
    assert h[TailKind.FAST_DECAY] >= -1e-10
    if abs(p - p_c(N, m, sigma)) > 1e-6:
        assert h[TailKind.FAST_DECAY] > 1e-10


def test_hotspot_fast_exponent_negative_between_pL_and_pc():
    # above m_c the ordering flips to p_L < p_c and the fast exponent changes sign
    N, m, sigma = 3.0, 0.6, 0.0
    p = 1.5
    assert p_L(m, sigma) < p < p_c(N, m, sigma)
    h = hotspot_exponents(N, m, p, sigma)
    assert h[TailKind.FAST_DECAY] == pytest.approx((N - 2) * (p - p_c(N, m, sigma)) / (m * 1.0), rel=1e-12)
    assert h[TailKind.FAST_DECAY] < 0


def _boundaries(N, m, sigma):
    return (p_L(m, sigma), p_F(N, m, sigma), p_c(N, m, sigma), p_s(N, m, sigma), 1.0)


@given(st.floats(2.1, 10.0), st.floats(0.01, 0.99), st.floats(-1.9, 10.0), st.floats(0.0, 5.0),
       st.sampled_from([-1.0, 1.0]))
def test_label_stable_under_tiny_perturbation(N, m, sigma, dp, sign):
    p = m + 0.01 + dp
    assume(min(abs(p - b) for b in _boundaries(N, m, sigma)) > 1e-9)
    assume(min(abs(m - m_s(N)), abs(m - m_c(N))) > 1e-9)
    a = classify_region(ParameterSet(N, m, p, sigma))
    b = classify_region(ParameterSet(N, m, p + sign * 5e-14, sigma))
    assert a == b


@pytest.mark.parametrize("sigma", [0.0, 2.0])
def test_grid_coverage(sigma):
    grid = region_grid(3.0, sigma, resolution=(40, 30))
    cells = list(grid.cells())
    assert len(cells) == 1200
    assert all(lab.tag in REGION_TAGS for _, _, lab in cells)
    rows = grid.to_csv().splitlines()
    assert rows[0] == "p,m,tag,behaviors"
    assert len(rows) == 1201


def test_grid_curves_and_resolution():
    grid = region_grid(3.0, 0.0, resolution=5, curve_points=11)
    assert grid.p.size == 5 and grid.m.size == 5
    cd = grid.curves_dict()
    assert len(cd["m"]) == 11 and cd["m_s"] == pytest.approx(0.2)
    with pytest.raises(ValueError):
        region_grid(3.0, 0.0, resolution=(1, 5))


def test_hotspot_diagnostics_on_slow_profile(p_star):
    ode = ProfileODE.from_params(p_star, 1)
    prof = integrate_profile(ode, 1.0)
    rep = hotspot_diagnostics(p_star, prof, similarity_exponents(p_star, 1))
    assert rep.gamma == pytest.approx(-2 / 0.95)
    assert rep.fixed_point_exponent == pytest.approx(0.0, abs=1e-12)
    assert not rep.blowup_set_origin
    assert rep.hotspot_location == 0.0
    with pytest.raises(InsufficientTail):
        hotspot_diagnostics(p_star, integrate_profile(ode, 1e-10), similarity_exponents(p_star, 1))
