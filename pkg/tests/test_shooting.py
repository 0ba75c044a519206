import math

import pytest

from fdss.errors import BracketInvalid, NonMonotoneBoundary
from fdss.params import validate_params
from fdss.profiles import ProfileODE, TailKind, integrate_profile, ode_residual
from fdss.shooting import (
    SWEEP_COLUMNS,
    default_workers,
    divergence_point,
    estimate_critical_p,
    find_fast_decay,
    scan_outcomes,
    shoot,
    slow_decay_family,
    sweep_p,
    sweep_to_csv,
)

# frozen from a run at the default tolerances on D in [1e-12, 1e4]
D_STAR_REF = 1.5777674529793865e-07


@pytest.fixture(scope="module")
def reference_search():
    ode = ProfileODE.from_params(validate_params(3, 0.25, 1.2, 0), 1)
    return ode, find_fast_decay(ode, (1e-12, 1e4))


def test_reference_fast_decay(reference_search):
    ode, res = reference_search
    assert res.found
    assert res.D_star == pytest.approx(D_STAR_REF, rel=1e-9)
    assert res.tail.kind is TailKind.FAST_DECAY
    assert res.tail.fitted_exponent == pytest.approx(-4.0, rel=0.05)
    assert ode_residual(ode, res.profile).max_relative <= 1e-6


def test_every_bisected_candidate_is_reported(reference_search):
    _, res = reference_search
    assert any(c.D_star is not None for c in res.candidates)
    for c in res.candidates:
        assert c.D_lo < c.D_hi
    d = res.to_dict()
    assert d["found"] is True and d["D_star"] == res.D_star


def test_search_is_deterministic(reference_search):
    ode, res = reference_search
    again = find_fast_decay(ode, (1e-12, 1e4))
    assert again.D_star == res.D_star
    assert again.scan == res.scan


def test_default_range_misses_the_reference_connection():
    ode = ProfileODE.from_params(validate_params(3, 0.25, 1.2, 0), 1)
    assert not find_fast_decay(ode).found


def test_strict_mode_raises_on_repeated_changes():
    ode = ProfileODE.from_params(validate_params(3, 0.25, 1.3, 0), -1)
    _, classes = scan_outcomes(ode, (1e-16, 1e4), 32)
    changes = sum(a != b for a, b in zip(classes, classes[1:]))
    assert changes > 1
    with pytest.raises(NonMonotoneBoundary) as info:
        find_fast_decay(ode, (1e-16, 1e4), n_scan=32, strict=True)
    assert len(info.value.intervals) == changes


def test_shoot_outcome_classes():
    ode = ProfileODE.from_params(validate_params(3, 0.25, 1.2, 0), 1)
    assert shoot(ode, 1e-10).outcome_class == "HitZero"
    assert shoot(ode, 1.0).outcome_class == "SlowDecay"


def test_slow_decay_family_rejects_other_outcomes():
    ode = ProfileODE.from_params(validate_params(3, 0.25, 1.2, 0), 1)
    fam = slow_decay_family(ode, [1.0, 10.0])
    assert fam[0][1] != fam[1][1]
    with pytest.raises(ValueError):
        slow_decay_family(ode, [1e-10])


def test_divergence_point():
    ode = ProfileODE.from_params(validate_params(3, 0.25, 1.2, 0), 1)
    a = integrate_profile(ode, 1.0)
    b = integrate_profile(ode, 1.0 + 1e-6)
    x = divergence_point(a, b)
    assert a.xi[0] <= x <= a.xi[-1]
    assert divergence_point(a, a) == pytest.approx(a.xi[-1])


@pytest.mark.parametrize("kwargs", [
    dict(kind="p3", p_bracket=(1.1, 1.2)),
    dict(kind="p0", p_bracket=(1.2, 1.3)),
    dict(kind="p0", p_bracket=(1.2, 1.1)),
])
def test_estimate_critical_p_bracket_checks(kwargs):
    with pytest.raises(BracketInvalid):
        estimate_critical_p(3, 0.25, 0.0, 1, **kwargs)


def test_estimate_critical_p_needs_subcritical_m():
    with pytest.raises(BracketInvalid):
        estimate_critical_p(3, 0.1, 0.0, 1, "p0", (1.05, 1.1))


def test_sweep_excludes_p_s():
    rows = sweep_p(3, 0.25, 0.0, 1, [1.25], D_range=(1e-2, 1e2), n_scan=4)
    assert rows[0].outcome == "Excluded"
    assert math.isnan(rows[0].D_star)
    text = sweep_to_csv(rows)
    assert text.splitlines()[0] == ",".join(SWEEP_COLUMNS)
    assert text.splitlines()[1].startswith("1.25,NaN,Excluded")


def test_threads_env(monkeypatch):
    monkeypatch.setenv("FDSS_THREADS", "3")
    assert default_workers() == 3
    monkeypatch.delenv("FDSS_THREADS")
    assert default_workers() == 1
