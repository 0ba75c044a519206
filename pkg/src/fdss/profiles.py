"""Self-similar profile ODE: right-hand side, origin series, integration,
tail classification and residual evaluation.

Both orientations are handled by one equation::

    (f^m)'' + (N-1)/xi (f^m)' + s (alpha f + beta xi f') + xi^sigma f^p = 0

with ``alpha, beta > 0`` and ``s = +1`` or ``-1``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy.integrate import solve_ivp

from .errors import (
    BranchUnavailable,
    GridTooCoarse,
    InsufficientTail,
    NonPositiveF,
    OutOfRange,
)
from .params import (
    BOUNDARY_TOL,
    ParameterSet,
    SimilarityExponents,
    m_c,
    similarity_exponents,
)

#: relative size allowed for the xi-dependent series term at the handoff point
SERIES_TERM_BOUND = 1e-4
#: relative distance for snapping a fitted slope to a dictionary exponent
SNAP_TOL = 0.05
#: stencil round-off scale (64 machine epsilons) used to floor residual denominators
ROUNDOFF_FLOOR = 64.0 * np.finfo(float).eps


@dataclass(frozen=True)
class ProfileODE:
    ps: ParameterSet
    s: int
    alpha: float
    beta: float

    @classmethod
    def from_params(cls, ps: ParameterSet, s: int) -> "ProfileODE":
        se = similarity_exponents(ps, s)
        return cls(ps, se.equation_sign, se.alpha, se.beta)

    @property
    def exponents(self) -> SimilarityExponents:
        return SimilarityExponents(self.alpha, self.beta, self.s,
                                   1 if self.ps.L > 0 else -1)

    def flipped(self) -> "ProfileODE":
        return replace(self, s=-self.s)


# ---------------------------------------------------------------------------
# right-hand side


def ode_rhs(ode: ProfileODE, xi: float, state):
    """Return ``(f', h')`` for the state ``(f, h)`` with ``h = (f^m)'``."""
    f, h = state
    if not f > 0:
        raise NonPositiveF(f"f={f} must be positive")
    if not xi > 0:
        raise ValueError(f"xi={xi} must be positive")
    N, m, p, sigma = ode.ps.as_tuple()
    fp = h * f ** (1.0 - m) / m
    hp = (-(N - 1.0) * h / xi - ode.s * (ode.alpha * f + ode.beta * xi * fp)
          - xi ** sigma * f ** p)
    return fp, hp


def _spow(x, e):
    # odd extension of |x|**e so that trajectories can cross zero smoothly
    return math.copysign(abs(x) ** e, x)


def _make_log_rhs(ode: ProfileODE):
    # state (w, g) = (f^m, xi h) in the variable t = ln xi
    N, m, p, sigma = ode.ps.as_tuple()
    s_alpha = ode.s * ode.alpha
    s_beta = ode.s * ode.beta
    inv_m = 1.0 / m
    e_fp = (1.0 - m) / m
    sig2 = sigma + 2.0
    two_minus_N = 2.0 - N
    exp = math.exp

    def rhs(t, y):
        w, g = y
        aw = abs(w)
        f = math.copysign(aw ** inv_m, w)
        xi_f_prime = g * math.copysign(aw ** e_fp, w) * inv_m
        x2 = exp(2.0 * t)
        fp_ = math.copysign(abs(f) ** p, f)
        dg = (two_minus_N * g - x2 * (s_alpha * f + s_beta * xi_f_prime)
              - exp(sig2 * t) * fp_)
        return (g, dg)

    return rhs


# ---------------------------------------------------------------------------
# origin series


@dataclass(frozen=True)
class OriginSeries:
    """Two-term expansion ``f = (D + c xi^k)^(-q)`` near the origin."""

    D: float
    c: float
    k: float
    q: float
    branch: str

    @property
    def f0(self) -> float:
        return self.D ** (-self.q)

    def handoff_bound(self, bound: float = SERIES_TERM_BOUND) -> float:
        """Largest xi at which ``|c| xi^k <= bound * D``."""
        if self.c == 0.0:
            return math.inf
        return (bound * self.D / abs(self.c)) ** (1.0 / self.k)

    def state(self, xi: float, m: float):
        B = self.D + self.c * xi ** self.k
        f = B ** (-self.q)
        h = -m * self.q * B ** (-m * self.q - 1.0) * self.c * self.k * xi ** (self.k - 1.0)
        return f, h


def series_coefficients(ode: ProfileODE, D: float, printed: bool = False) -> OriginSeries:
    """Coefficients of the two-term origin expansion for shooting parameter D.

    With ``printed=False`` (default) the xi-dependent coefficient comes from
    balancing the equation at xi -> 0, which covers both orientations and
    every sigma branch. ``printed=True`` reproduces the displayed formulas
    verbatim; these exist only for the global-decay (s=+1) and blow-up
    (s=-1) orientations with L > 0.
    """
    if not D > 0:
        raise ValueError(f"D={D} must be positive")
    N, m, p, sigma = ode.ps.as_tuple()
    a, s = ode.alpha, ode.s
    if printed and ode.ps.L <= 0:
        raise BranchUnavailable(
            f"no printed origin expansion for the {ode.exponents.temporal_kind.value} orientation")
    if abs(sigma) <= BOUNDARY_TOL:
        f0 = D ** (-1.0 / (1.0 - m))
        if printed:
            c = s * (1.0 - m) * a * (1.0 + s * a * D ** ((p - 1.0) / (m - 1.0))) / (2.0 * m * N)
        else:
            c = (1.0 - m) * (s * a + f0 ** (p - 1.0)) / (2.0 * m * N)
        return OriginSeries(D, c, 2.0, 1.0 / (1.0 - m), "sigma=0")
    if sigma > 0:
        c = s * a * (1.0 - m) / (2.0 * m * N)
        return OriginSeries(D, c, 2.0, 1.0 / (1.0 - m), "sigma>0")
    c = (p - m) / (m * (N + sigma) * (sigma + 2.0))
    return OriginSeries(D, c, sigma + 2.0, 1.0 / (p - m), "sigma<0")


def origin_series(ode: ProfileODE, D: float, xi0: float, printed: bool = False):
    """State ``(f, h)`` at ``xi0`` from the origin expansion.

    ``xi0`` must be small enough that the second series term stays below
    ``1e-4`` relative to ``D``.
    """
    ser = series_coefficients(ode, D, printed=printed)
    if xi0 > ser.handoff_bound() * (1.0 + 1e-12):
        raise OutOfRange(
            f"xi0={xi0:g} exceeds the series validity bound {ser.handoff_bound():g}")
    return ser.state(xi0, ode.ps.m)


# ---------------------------------------------------------------------------
# integration


class Termination(str, enum.Enum):
    REACHED_XI_MAX = "ReachedXiMax"
    HIT_ZERO = "HitZero"
    EXCEEDED_CAP = "ExceededCap"
    STIFF_FAILURE = "StiffFailure"


@dataclass
class IntegrationOptions:
    xi0: float = 1e-4
    xi_max: float = 1e3
    rel_tol: float = 1e-10
    cap: float = 1e12
    points_per_decade: int = 400
    #: right-hand-side evaluations before a run is abandoned as stiff
    max_nfev: int = 200_000

    def __post_init__(self):
        if not 0 < self.xi0 < self.xi_max:
            raise ValueError("need 0 < xi0 < xi_max")
        if not (self.rel_tol > 0 and self.cap > 0 and self.points_per_decade > 0
                and self.max_nfev > 0):
            raise ValueError("tolerances, cap, grid density and budget must be positive")


@dataclass
class Profile:
    ode: ProfileODE
    D: float
    xi: np.ndarray
    f: np.ndarray
    h: np.ndarray
    termination: Termination
    xi_star: Optional[float] = None
    xi0: Optional[float] = None
    meta: dict = field(default_factory=dict)

    @property
    def xi_end(self) -> float:
        return float(self.xi[-1])

    def restrict(self, lo: float = 0.0, hi: float = math.inf) -> "Profile":
        sel = (self.xi >= lo) & (self.xi <= hi)
        return replace(self, xi=self.xi[sel], f=self.f[sel], h=self.h[sel])

    def interior(self, margin: float = 1.0) -> "Profile":
        """Drop nodes within ``margin`` of the end in ``ln xi`` if the run
        stopped at a zero or a blow-up; otherwise return ``self``."""
        if self.termination is Termination.REACHED_XI_MAX:
            return self
        return self.restrict(hi=self.xi_end * math.exp(-margin))

    def positive_part(self) -> "Profile":
        """Restrict to the leading stretch where ``f > 0``."""
        bad = np.flatnonzero(~(self.f > 0))
        if bad.size == 0:
            return self
        n = bad[0]
        return replace(self, xi=self.xi[:n], f=self.f[:n], h=self.h[:n])


def integrate_profile(ode: ProfileODE, D: float,
                      opts: Optional[IntegrationOptions] = None, **kw) -> Profile:
    """Integrate from the origin series handoff outwards.

    The run stops at ``xi_max``, when ``f`` reaches zero, when ``f`` exceeds
    ``cap`` times its handoff value, or as ``StiffFailure`` when the step
    size collapses or ``max_nfev`` evaluations are spent. Keyword
    arguments override fields of ``opts``.

    Output nodes lie on the lattice ``xi_max * 10^(-k/points_per_decade)``;
    the handoff point ``xi0`` is the largest node not above ``opts.xi0`` or
    the series validity bound.
    """
    opts = replace(opts or IntegrationOptions(), **kw)
    m = ode.ps.m
    ser = series_coefficients(ode, D)
    # output lattice t_k = ln(xi_max) - k dt; xi0 snaps down onto it so runs
    # with different D share nodes
    dt = math.log(10.0) / opts.points_per_decade
    t1 = math.log(opts.xi_max)
    k0 = math.ceil((t1 - math.log(min(opts.xi0, ser.handoff_bound()))) / dt - 1e-9)
    xi0 = math.exp(t1 - k0 * dt)
    f0, h0 = ser.state(xi0, m)
    cap_f = opts.cap * max(1.0, f0)
    cap_w = cap_f ** m

    def hit_zero(t, y):
        return y[0]

    hit_zero.terminal = True
    hit_zero.direction = -1

    def over_cap(t, y):
        return y[0] - cap_w

    over_cap.terminal = True
    over_cap.direction = 1

    t0 = t1 - k0 * dt
    rhs = _make_log_rhs(ode)
    calls = [0]

    def counted(t, y):
        calls[0] += 1
        return rhs(t, y)

    last = {"t": None, "stop": None}

    def budget(t, y):
        # positive until the budget is spent, then a line through zero inside
        # the current step so that the event root finder has a sign change
        if last["stop"] is None:
            if calls[0] <= opts.max_nfev:
                last["t"] = t
                return 1.0
            last["stop"] = 0.5 * (t + (t0 if last["t"] is None else last["t"]))
        return last["stop"] - t

    budget.terminal = True

    sol = solve_ivp(counted, (t0, t1), [f0 ** m, xi0 * h0],
                    method="DOP853", rtol=opts.rel_tol, atol=1e-300,
                    events=(hit_zero, over_cap, budget), dense_output=True)

    xi_star = None
    if sol.status == 1 and sol.t_events[2].size:
        term = Termination.STIFF_FAILURE
    elif sol.status == 1 and sol.t_events[0].size:
        term = Termination.HIT_ZERO
        xi_star = float(math.exp(sol.t_events[0][0]))
    elif sol.status == 1:
        term = Termination.EXCEEDED_CAP
    elif sol.status == 0:
        term = Termination.REACHED_XI_MAX
    elif sol.y[1, -1] > 0:
        # step size collapsed while f was growing: a blow-up at finite xi
        # that outran the cap
        term = Termination.EXCEEDED_CAP
    else:
        term = Termination.STIFF_FAILURE

    t_end = float(sol.t[-1])
    t = t1 - dt * np.arange(k0, -1, -1)
    t = t[t <= t_end + 1e-12 * max(1.0, abs(t_end))]
    t[0], t[-1] = t0, min(t[-1], t_end)
    if sol.t.size < 2:
        # stopped on the first step: only the handoff node is known
        t = t[:1]
        w, g = np.array([f0 ** m]), np.array([xi0 * h0])
    else:
        w, g = sol.sol(t)
    w[0], g[0] = f0 ** m, xi0 * h0
    xi = np.exp(t)
    f = np.sign(w) * np.abs(w) ** (1.0 / m)
    prof = Profile(ode, float(D), xi, f, g / xi, term, xi_star, xi0,
                   meta={"nfev": int(sol.nfev), "rel_tol": opts.rel_tol,
                         "message": sol.message})
    if term in (Termination.HIT_ZERO,):
        prof = prof.positive_part()
    return prof


# ---------------------------------------------------------------------------
# tails


class TailKind(str, enum.Enum):
    FAST_DECAY = "FastDecay"
    SLOW_DECAY = "SlowDecay"
    CRITICAL_DECAY = "CriticalDecay"
    BOUNDED_POSITIVE_AT_ORIGIN = "BoundedPositiveAtOrigin"
    FINITE_EXTINCTION_POINT = "FiniteExtinctionPoint"
    UNBOUNDED = "Unbounded"
    UNRESOLVED = "Unresolved"


class End(str, enum.Enum):
    ORIGIN = "origin"
    INFINITY = "infinity"

    def opposite(self) -> "End":
        return End.INFINITY if self is End.ORIGIN else End.ORIGIN


@dataclass(frozen=True)
class TailBehavior:
    kind: TailKind
    fitted_exponent: float
    fitted_constant: float
    end: End = End.INFINITY

    def to_dict(self):
        return {"kind": self.kind.value, "fitted_exponent": self.fitted_exponent,
                "fitted_constant": self.fitted_constant, "end": self.end.value}


def tail_dictionary(ps: ParameterSet) -> dict:
    """Power-law exponents of the three named decay rates at infinity."""
    N, m, p, sigma = ps.as_tuple()
    return {
        TailKind.FAST_DECAY: -(N - 2.0) / m,
        TailKind.SLOW_DECAY: -(sigma + 2.0) / (p - m),
        TailKind.CRITICAL_DECAY: -2.0 / (1.0 - m),
    }


def fit_power_law(xi, f):
    """Least-squares slope and intercept of log f against log xi."""
    lx, lf = np.log(xi), np.log(f)
    slope, intercept = np.polyfit(lx, lf, 1)
    return float(slope), float(intercept)


def snap_exponent(ps: ParameterSet, slope: float, tol: float = SNAP_TOL):
    """Nearest dictionary kind within ``tol`` relative, or ``None``."""
    best, best_err = None, math.inf
    for kind, gamma in tail_dictionary(ps).items():
        err = abs(slope - gamma) / abs(gamma)
        if err < best_err:
            best, best_err = kind, err
    return best if best_err <= tol else None


def classify_tail(ode: ProfileODE, prof: Profile, window=None,
                  tol: float = SNAP_TOL) -> TailBehavior:
    """Classify the decay at infinity from the last decade of the grid.

    ``window=(lo, hi)`` overrides the default fit window ``[xi_end/10, xi_end]``.
    """
    if prof.termination is not Termination.REACHED_XI_MAX and window is None:
        raise InsufficientTail(f"profile terminated with {prof.termination.value}")
    hi = prof.xi_end if window is None else float(window[1])
    lo = hi / 10.0 if window is None else float(window[0])
    if prof.xi[0] > lo * (1.0 + 1e-12) or hi > prof.xi_end * (1.0 + 1e-12):
        raise InsufficientTail("the grid does not cover the requested fit window")
    sel = (prof.xi >= lo * (1.0 - 1e-12)) & (prof.xi <= hi * (1.0 + 1e-12))
    xi, f = prof.xi[sel], prof.f[sel]
    if xi.size < 3:
        raise InsufficientTail("fewer than three grid points in the fit window")
    if np.any(f <= 0):
        raise InsufficientTail("profile is not positive on the fit window")
    slope, _ = fit_power_law(xi, f)
    kind = snap_exponent(ode.ps, slope, tol)
    if kind is None:
        kind = TailKind.UNBOUNDED if slope > 0 else TailKind.UNRESOLVED
        gamma = slope
    else:
        gamma = tail_dictionary(ode.ps)[kind]
    const = float(np.exp(np.mean(np.log(f) - gamma * np.log(xi))))
    return TailBehavior(kind, slope, const, End.INFINITY)


# ---------------------------------------------------------------------------
# critical decay constant


def critical_decay_constant(ps: ParameterSet) -> float:
    """Constant A in ``f ~ A xi^(-2/(1-m))`` for the blow-up orientation.

    Obtained from the dominant balance of the diffusion and drift groups;
    the base ``2m(N-2-mN)/(1-m)`` is positive for every m < m_c.
    """
    N, m = ps.N, ps.m
    if not 0 < m < m_c(N):
        raise OutOfRange(f"m={m} outside (0, m_c={m_c(N):g})")
    if not ps.L > 0:
        raise OutOfRange("critical decay needs L > 0")
    return (2.0 * m * (N - 2.0 - m * N) / (1.0 - m)) ** (1.0 / (1.0 - m))


def printed_critical_decay_base(ps: ParameterSet) -> float:
    """Base of the displayed constant, ``2m(mN-N+2)/(1-m)`` (negative for m < m_c)."""
    N, m = ps.N, ps.m
    return 2.0 * m * (m * N - N + 2.0) / (1.0 - m)


def power_law_terms(ode: ProfileODE, A: float, gamma: float, xi):
    """Exact ODE terms for ``f = A xi^gamma``.

    Returns ``(diffusion, drift, source)`` arrays where diffusion is
    ``(f^m)'' + (N-1)/xi (f^m)'``, drift is ``s(alpha f + beta xi f')`` and
    source is ``xi^sigma f^p``.
    """
    N, m, p, sigma = ode.ps.as_tuple()
    xi = np.asarray(xi, dtype=float)
    mg = m * gamma
    diffusion = A ** m * mg * (mg + N - 2.0) * xi ** (mg - 2.0)
    drift = ode.s * (ode.alpha + ode.beta * gamma) * A * xi ** gamma
    source = A ** p * xi ** (sigma + p * gamma)
    return diffusion, drift, source


# ---------------------------------------------------------------------------
# residual


@dataclass
class ResidualReport:
    xi: np.ndarray
    residual: np.ndarray
    relative: np.ndarray
    flux_mismatch: np.ndarray
    max_relative: float


def _is_log_uniform(xi, rtol=1e-6):
    dt = np.diff(np.log(xi))
    return dt.size > 0 and np.all(dt > 0) and np.ptp(dt) <= rtol * abs(dt.mean())


def ode_residual(ode: ProfileODE, prof: Profile, max_step: float = 0.1) -> ResidualReport:
    """Pointwise residual of the profile ODE from fourth-order differences.

    Derivatives are taken in ``t = ln xi`` on a log-uniform grid. The
    diffusion group is written in divergence form and differentiated from
    the sampled flux ``h``; a second difference of ``f^m`` would lose most
    digits next to the origin, where ``f^m`` is nearly constant. The sampled
    flux is checked separately against a difference of ``f^m``.

    The relative residual at a node divides by the largest individual term
    there, floored at the round-off level of the stencils. The flux check is
    floored at the integrator tolerance (``prof.meta["rel_tol"]``) since the
    difference of ``f^m`` cannot resolve fluxes below that. ``max_relative``
    covers the ODE residual only.

    Near a blow-up or zero the grid stops resolving the solution; use
    :meth:`Profile.interior` to drop those nodes first.
    """
    xi, f = np.asarray(prof.xi, float), np.asarray(prof.f, float)
    if xi.size < 9:
        raise GridTooCoarse("need at least nine grid points")
    if not _is_log_uniform(xi):
        raise GridTooCoarse("grid must be uniform in log(xi)")
    dt = float(np.mean(np.diff(np.log(xi))))
    if dt > max_step:
        raise GridTooCoarse(f"log-spacing {dt:g} exceeds {max_step:g}")
    if np.any(f <= 0):
        raise ValueError("profile must be positive")
    N, m, p, sigma = ode.ps.as_tuple()
    w = f ** m

    def d1(y):
        return (y[:-4] - 8.0 * y[1:-3] + 8.0 * y[3:-1] - y[4:]) / (12.0 * dt)

    def d2(y):
        return (-y[:-4] + 16.0 * y[1:-3] - 30.0 * y[2:-2] + 16.0 * y[3:-1] - y[4:]) / (12.0 * dt * dt)

    g = xi * np.asarray(prof.h, float)
    x = xi[2:-2]
    fc, gc = f[2:-2], g[2:-2]
    # every term multiplied by xi^2: xi^(3-N) (xi^(N-2) g)_t = g_t + (N-2) g
    t_dd = d1(g)
    t_d = (N - 2.0) * gc
    t_a = ode.s * ode.alpha * fc * x * x
    t_b = ode.s * ode.beta * d1(f) * x * x
    t_src = x ** (sigma + 2.0) * fc ** p
    terms = np.vstack([t_dd, t_d, t_a, t_b, t_src])
    res = terms.sum(axis=0)
    # round-off level of the difference stencils
    noise = ROUNDOFF_FLOOR / dt
    scale = np.maximum(np.abs(terms).max(axis=0),
                       noise * (np.abs(gc) + ode.beta * x * x * fc))
    rel = np.abs(res) / scale
    dw = d1(w)
    state_tol = max(ROUNDOFF_FLOOR, float(prof.meta.get("rel_tol", 0.0)))
    flux = np.abs(dw - gc) / np.maximum.reduce(
        [np.abs(gc), np.abs(dw), state_tol / dt * np.abs(w[2:-2])])
    return ResidualReport(x, res / (x * x), rel, flux, float(rel.max()))
