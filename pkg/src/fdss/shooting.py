"""Shooting on the origin parameter D.

A shot integrates one profile and sorts it into an outcome class. Scans over
log-spaced D locate class changes; bisection on a change isolates the
separatrix, which is where fast-decay profiles live.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .errors import (
    BracketInvalid,
    InsufficientTail,
    NonMonotoneBoundary,
)
from .params import m_c, m_s, p_s, validate_params
from .profiles import (
    IntegrationOptions,
    Profile,
    ProfileODE,
    TailBehavior,
    TailKind,
    Termination,
    classify_tail,
    integrate_profile,
    ode_residual,
)
from .serialization import rows_to_csv

DEFAULT_D_RANGE = (1e-4, 1e4)
SCAN_POINTS = 64
D_REL_TOL = 1e-10
P_ABS_TOL = 1e-3
#: bisection integrates this much further than the scan
BISECT_XI_FACTOR = 1e3
#: relative gap between the two bisection profiles that ends the shared stretch
DIVERGENCE_TOL = 1e-3
#: tolerance factor for the run that checks where a separatrix stays resolved
TIGHTEN = 1e-2
MIN_REL_TOL = 1e-13
#: neighbourhood of p_s excluded from p scans
P_S_EXCLUSION = 1e-6

ZERO = "HitZero"
UNBOUNDED = "Unbounded"
STIFF = "StiffFailure"


@dataclass
class ShotOutcome:
    D: float
    termination: Termination
    tail: Optional[TailBehavior]
    profile: Optional[Profile] = field(default=None, repr=False)

    @property
    def outcome_class(self) -> str:
        """``HitZero``, ``StiffFailure``, ``Unbounded`` or the tail kind at xi_max."""
        if self.termination is Termination.HIT_ZERO:
            return ZERO
        if self.termination is Termination.STIFF_FAILURE:
            return STIFF
        if self.tail is None:
            return UNBOUNDED
        if self.tail.kind is TailKind.UNBOUNDED:
            return UNBOUNDED
        return self.tail.kind.value

    def to_dict(self):
        return {
            "D": self.D,
            "termination": self.termination.value,
            "outcome": self.outcome_class,
            "tail": None if self.tail is None else self.tail.to_dict(),
        }


def shoot(ode: ProfileODE, D: float, opts: Optional[IntegrationOptions] = None,
          keep_profile: bool = True) -> ShotOutcome:
    prof = integrate_profile(ode, D, opts)
    tail = None
    if prof.termination is Termination.REACHED_XI_MAX:
        try:
            tail = classify_tail(ode, prof)
        except InsufficientTail:
            tail = None
    return ShotOutcome(float(D), prof.termination, tail, prof if keep_profile else None)


def _shoot_class(args):
    ode, D, opts = args
    return shoot(ode, D, opts, keep_profile=False).outcome_class


def scan_outcomes(ode: ProfileODE, D_range=DEFAULT_D_RANGE, n: int = SCAN_POINTS,
                  opts: Optional[IntegrationOptions] = None, workers: Optional[int] = None):
    """Outcome classes on ``n`` log-spaced D values; returns ``(D, classes)``.

    ``workers`` defaults to the ``FDSS_THREADS`` environment variable (1 if
    unset). Results are ordered by D regardless of the worker count.
    """
    lo, hi = D_range
    if not 0 < lo < hi:
        raise ValueError("need 0 < D_lo < D_hi")
    Ds = np.geomspace(lo, hi, n)
    workers = default_workers() if workers is None else int(workers)
    jobs = [(ode, float(D), opts) for D in Ds]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            classes = list(ex.map(_shoot_class, jobs))
    else:
        classes = [_shoot_class(j) for j in jobs]
    return Ds, classes


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get("FDSS_THREADS", "1")))
    except ValueError:
        return 1


# ---------------------------------------------------------------------------
# fast decay


@dataclass
class Candidate:
    D_lo: float
    D_hi: float
    class_lo: str
    class_hi: str
    D_star: Optional[float] = None
    tail: Optional[TailBehavior] = None
    window: Optional[tuple] = None
    residual: Optional[float] = None
    profile: Optional[Profile] = field(default=None, repr=False)

    @property
    def is_fast_decay(self) -> bool:
        return self.tail is not None and self.tail.kind is TailKind.FAST_DECAY

    def to_dict(self):
        return {
            "D_lo": self.D_lo, "D_hi": self.D_hi,
            "class_lo": self.class_lo, "class_hi": self.class_hi,
            "D_star": self.D_star,
            "tail": None if self.tail is None else self.tail.to_dict(),
            "window": None if self.window is None else list(self.window),
            "residual": self.residual,
        }


@dataclass
class FastDecayResult:
    """Outcome of :func:`find_fast_decay`.

    ``found`` is False for the NotFound outcome; ``scan`` always holds the
    scan record and ``candidates`` every bisected class change.
    """

    found: bool
    D_star: Optional[float]
    profile: Optional[Profile] = field(repr=False)
    tail: Optional[TailBehavior]
    candidates: list
    scan: list
    non_monotone: bool

    def to_dict(self):
        return {
            "found": self.found,
            "D_star": self.D_star,
            "tail": None if self.tail is None else self.tail.to_dict(),
            "non_monotone": self.non_monotone,
            "candidates": [c.to_dict() for c in self.candidates],
            "scan": [{"D": D, "outcome": c} for D, c in self.scan],
        }


def _bisect(ode, D_lo, D_hi, zero_lo, opts, rel_tol):
    # geometric bisection on whether the shot vanishes at finite xi
    while D_hi / D_lo - 1.0 > rel_tol:
        mid = math.sqrt(D_lo * D_hi)
        if mid <= D_lo or mid >= D_hi:
            break
        c = shoot(ode, mid, opts, keep_profile=False).outcome_class
        if c == STIFF:
            # the integrator cannot follow shots this close to the separatrix
            break
        if (c == ZERO) == zero_lo:
            D_lo = mid
        else:
            D_hi = mid
    return D_lo, D_hi


def divergence_point(a: Profile, b: Profile, tol: float = DIVERGENCE_TOL) -> float:
    """First node where two profiles on the same lattice differ by ``tol`` relative."""
    n = min(a.xi.size, b.xi.size)
    if a.xi[0] != b.xi[0]:
        raise ValueError("profiles do not share a grid")
    fa, fb = a.f[:n], b.f[:n]
    gap = np.abs(fa - fb) / np.maximum(np.abs(fa), np.abs(fb))
    bad = np.flatnonzero(~(gap <= tol))
    return float(a.xi[bad[0]] if bad.size else a.xi[n - 1])


def _resolve(ode, D_lo, D_hi, opts):
    """Classify the separatrix between two bisected shots."""
    o = opts or IntegrationOptions()
    pa = integrate_profile(ode, D_lo, o)
    pb = integrate_profile(ode, D_hi, o)
    if pa.xi[0] != pb.xi[0]:
        # restart both from the smaller handoff so they share the lattice
        x0 = min(pa.xi[0], pb.xi[0]) * (1.0 + 1e-12)
        pa = integrate_profile(ode, D_lo, o, xi0=x0)
        pb = integrate_profile(ode, D_hi, o, xi0=x0)
    x_div = divergence_point(pa, pb)
    D_mid = math.sqrt(D_lo * D_hi)
    pm = integrate_profile(ode, D_mid, o, xi0=pa.xi[0] * (1.0 + 1e-12))
    # past the point where a tighter tolerance changes the answer, the shot
    # follows integration error rather than the separatrix
    tight = integrate_profile(ode, D_mid, o, xi0=pa.xi[0] * (1.0 + 1e-12),
                              rel_tol=max(o.rel_tol * TIGHTEN, MIN_REL_TOL))
    x_div = min(x_div, divergence_point(pm, tight))
    hi = x_div / math.sqrt(10.0)
    lo = hi / 10.0
    tail = None
    if lo > pm.xi[0]:
        try:
            tail = classify_tail(ode, pm, window=(lo, hi))
        except InsufficientTail:
            tail = None
    clean = pm.restrict(hi=x_div)
    res = None
    if clean.xi.size >= 9:
        res = ode_residual(ode, clean).max_relative
    return D_mid, tail, (lo, hi), res, clean


def find_fast_decay(ode: ProfileODE, D_bracket=DEFAULT_D_RANGE, *,
                    n_scan: int = SCAN_POINTS, rel_tol: float = D_REL_TOL,
                    opts: Optional[IntegrationOptions] = None,
                    xi_factor: float = BISECT_XI_FACTOR, exhaustive: bool = True,
                    strict: bool = False, workers: Optional[int] = None) -> FastDecayResult:
    """Scan, bisect the edges of the vanishing set and test each for fast decay.

    A fast-decay profile is the limit of profiles that vanish at finite xi,
    so the bisection predicate is ``HitZero`` or not. Both ends of every
    class change are re-shot with ``xi_max`` enlarged by ``xi_factor``;
    a change is bisected (to relative width ``rel_tol``, at the enlarged
    horizon) only if exactly one end vanishes there. Other changes stay in
    ``candidates`` with no ``D_star``. The two end profiles agree up to a divergence point;
    the midpoint profile is classified on the decade ending half a decade
    before it. The divergence point is also capped where a rerun at a
    hundredfold tighter tolerance departs from the midpoint profile. The first candidate that snaps to FastDecay gives ``D_star``.

    With ``exhaustive=False`` the search stops at the first FastDecay
    candidate; later changes are listed unbisected.

    More than one class change in the scan sets ``non_monotone``; with
    ``strict=True`` that raises :class:`NonMonotoneBoundary` instead.
    """
    opts = opts or IntegrationOptions()
    Ds, classes = scan_outcomes(ode, D_bracket, n_scan, opts, workers)
    changes = [i for i in range(len(Ds) - 1) if classes[i] != classes[i + 1]]
    intervals = [(float(Ds[i]), float(Ds[i + 1])) for i in changes]
    non_mono = len(changes) > 1
    if non_mono and strict:
        raise NonMonotoneBoundary(
            f"outcome class changes {len(changes)} times across the scan", intervals)
    far = replace(opts, xi_max=opts.xi_max * xi_factor)
    cands = []
    for i in changes:
        lo, hi = float(Ds[i]), float(Ds[i + 1])
        c = Candidate(lo, hi, classes[i], classes[i + 1])
        cands.append(c)
        if not exhaustive and any(x.is_fast_decay for x in cands):
            continue
        z_lo = shoot(ode, lo, far, keep_profile=False).outcome_class == ZERO
        z_hi = shoot(ode, hi, far, keep_profile=False).outcome_class == ZERO
        if z_lo == z_hi:
            continue
        c.D_lo, c.D_hi = _bisect(ode, lo, hi, z_lo, far, rel_tol)
        c.D_star, c.tail, c.window, c.residual, c.profile = _resolve(ode, c.D_lo, c.D_hi, far)
    scan = list(zip((float(D) for D in Ds), classes))
    best = next((c for c in cands if c.is_fast_decay), None)
    if best is None:
        return FastDecayResult(False, None, None, None, cands, scan, non_mono)
    return FastDecayResult(True, best.D_star, best.profile, best.tail, cands, scan, non_mono)


# ---------------------------------------------------------------------------
# slow decay families


def slow_decay_family(ode: ProfileODE, D_list: Sequence[float],
                      opts: Optional[IntegrationOptions] = None):
    """``[(D, K), ...]`` with K the fitted slow-decay constant.

    Raises ``ValueError`` if some D does not produce a SlowDecay tail.
    """
    out = []
    for D in D_list:
        shot = shoot(ode, D, opts, keep_profile=False)
        if shot.tail is None or shot.tail.kind is not TailKind.SLOW_DECAY:
            raise ValueError(f"D={D:g} gives {shot.outcome_class}, not SlowDecay")
        out.append((float(D), shot.tail.fitted_constant))
    return out


# ---------------------------------------------------------------------------
# critical exponents p0, p1, p2


@dataclass
class CriticalPEstimate:
    sigma: float
    kind: str
    bracket: tuple
    outcome_lo: bool
    outcome_hi: bool
    notes: str = ""
    history: list = field(default_factory=list)

    def to_dict(self):
        return {"sigma": self.sigma, "kind": self.kind, "bracket": list(self.bracket),
                "exists_at_lo": self.outcome_lo, "exists_at_hi": self.outcome_hi,
                "notes": self.notes, "history": self.history}


def _critical_decay_exists(ode, D_range, opts, n_scan):
    Ds, classes = scan_outcomes(ode, D_range, n_scan, opts)
    return any(c == TailKind.CRITICAL_DECAY.value for c in classes)


def connection_exists(N, m, p, sigma, s, kind="p0", D_range=DEFAULT_D_RANGE,
                      opts=None, n_scan=SCAN_POINTS) -> bool:
    ps = validate_params(N, m, p, sigma)
    ode = ProfileODE.from_params(ps, s)
    if kind in ("p0", "p2"):
        return find_fast_decay(ode, D_range, n_scan=n_scan, opts=opts, exhaustive=False).found
    return _critical_decay_exists(ode, D_range, opts, n_scan)


def estimate_critical_p(N, m, sigma, s, kind, p_bracket, *, D_range=DEFAULT_D_RANGE,
                        p_tol: float = P_ABS_TOL, opts=None,
                        n_scan: int = SCAN_POINTS) -> CriticalPEstimate:
    """Bisect ``p`` on the existence of a connection; a bracket, never a point.

    ``kind`` is ``p0`` or ``p2`` (fast decay) or ``p1`` (critical decay).
    The bracket ends must have opposite outcomes and must not contain p_s.
    """
    if kind not in ("p0", "p1", "p2"):
        raise BracketInvalid(f"unknown kind {kind!r}")
    if not m_s(N) < m < m_c(N):
        raise BracketInvalid(
            f"m={m} outside (m_s, m_c)=({m_s(N):g}, {m_c(N):g}): no existence region to bracket")
    lo, hi = (float(v) for v in p_bracket)
    if not lo < hi:
        raise BracketInvalid("need p_lo < p_hi")
    ps_val = p_s(N, m, sigma)
    if lo - P_S_EXCLUSION <= ps_val <= hi + P_S_EXCLUSION:
        raise BracketInvalid(f"bracket contains p_s={ps_val:g}")

    def exists(p):
        return connection_exists(N, m, p, sigma, s, kind, D_range, opts, n_scan)

    e_lo, e_hi = exists(lo), exists(hi)
    history = [(lo, e_lo), (hi, e_hi)]
    if e_lo == e_hi:
        raise BracketInvalid(
            f"both ends give exists={e_lo}; the bracket does not straddle a change")
    while hi - lo > p_tol:
        mid = 0.5 * (lo + hi)
        e = exists(mid)
        history.append((mid, e))
        if e == e_lo:
            lo = mid
        else:
            hi = mid
    return CriticalPEstimate(float(sigma), kind, (lo, hi), e_lo, e_hi,
                             notes=f"{kind}: bisection on existence, tol {p_tol:g}, "
                                   f"{n_scan}-point D scan over {tuple(D_range)}",
                             history=history)


# ---------------------------------------------------------------------------
# sweeps


@dataclass
class SweepRow:
    p: float
    D_star: float
    outcome: str
    slope: float
    constant: float


def sweep_p(N, m, sigma, s, p_values, D_range=DEFAULT_D_RANGE, opts=None,
            n_scan: int = SCAN_POINTS):
    rows = []
    for p in p_values:
        ps = validate_params(N, m, p, sigma)
        if abs(p - p_s(N, m, sigma)) <= P_S_EXCLUSION:
            rows.append(SweepRow(float(p), math.nan, "Excluded", math.nan, math.nan))
            continue
        res = find_fast_decay(ProfileODE.from_params(ps, s), D_range, n_scan=n_scan, opts=opts)
        if res.found:
            rows.append(SweepRow(float(p), res.D_star, "FastDecay",
                                 res.tail.fitted_exponent, res.tail.fitted_constant))
        else:
            rows.append(SweepRow(float(p), math.nan, "NotFound", math.nan, math.nan))
    return rows


SWEEP_COLUMNS = ("p", "D_star_or_nan", "outcome", "slope", "constant")


def sweep_to_csv(rows) -> str:
    return rows_to_csv(SWEEP_COLUMNS, ((r.p, r.D_star, r.outcome, r.slope, r.constant)
                                       for r in rows))
