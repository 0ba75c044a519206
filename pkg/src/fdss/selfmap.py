"""The radial inversion map between two parameter sets.

For ``m < m_c`` the substitution

    ubar(rbar, t) = u(r, t) r^((N-2)/m) / C1,    rbar = C2 r^theta

sends radial solutions at ``(N, m, p, sigma)`` to radial solutions at
``(Nbar, m, p, sigmabar)``. Because ``theta < 0`` the map swaps the origin
and infinity, and on self-similar profiles it flips the sign of the drift
term. The map is an involution on the parameters.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import (
    ConstantsOverflow,
    DegenerateL,
    NonPositiveProfile,
    OutOfRange,
    PaperConstantsDegenerate,
    SupercriticalM,
    UnsupportedBehavior,
)
from .params import (
    BOUNDARY_TOL,
    ParameterSet,
    SimilarityExponents,
    L_const,
    m_c,
    m_s,
    p_c,
    p_s,
    sigma_L,
)
from .profiles import (
    End,
    IntegrationOptions,
    Profile,
    ProfileODE,
    TailBehavior,
    TailKind,
    tail_dictionary,
)

#: tolerance of the manufactured-solution oracle run at build time
ORACLE_TOL = 1e-6


class ConstantsMode(str, enum.Enum):
    DERIVED = "DerivedConstants"
    PAPER = "PaperConstants"


class ConstantsWarning(UserWarning):
    """Emitted when a SelfMap's constants fail the residual oracle."""


# ---------------------------------------------------------------------------
# closed forms (array friendly)


def theta_exp(N, m):
    return (m * N - N + 2.0) / (2.0 * m)


def N_bar(N, m):
    return -2.0 * (N - 2.0 * m - 2.0) / (m * N - N + 2.0)


def sigma_bar(N, m, p, sigma):
    return -2.0 * ((N - 2.0) * (p - 1.0) - m * sigma) / (m * N - N + 2.0)


def _Q(N, m):
    return 4.0 * m * m / (m * N - N + 2.0) ** 2


def derived_constants(N, m, p, sigma):
    """``(C1, C2)`` solving ``theta^2 C1^(m-1) C2^2 = 1`` and ``C1^(p-1) = C2^sigmabar``."""
    sb = sigma_bar(N, m, p, sigma)
    th = theta_exp(N, m)
    if abs(sb) <= BOUNDARY_TOL:
        return 1.0, 1.0 / abs(th)
    log_c1 = math.log(_Q(N, m)) * sb / L_const(m, p, sb)
    return _exp_checked(log_c1), _exp_checked(log_c1 * (p - 1.0) / sb)


def _exp_checked(x):
    if not -745.0 < x < 709.0:
        raise ConstantsOverflow(f"constant exp({x:.4g}) is outside double precision")
    return math.exp(x)


def paper_constants(N, m, p, sigma):
    """The displayed ``C1 = Q^(sigma/L)``, ``C2 = C1^(-(p-1)/sigma)``."""
    if abs(sigma) <= BOUNDARY_TOL:
        raise PaperConstantsDegenerate(
            "printed C1, C2 involve sigma/L and (p-1)/sigma, which are 0/0 at sigma=0")
    log_c1 = math.log(_Q(N, m)) * sigma / L_const(m, p, sigma)
    return _exp_checked(log_c1), _exp_checked(-log_c1 * (p - 1.0) / sigma)


# ---------------------------------------------------------------------------
# types


@dataclass(frozen=True)
class RadialSnapshot:
    r: np.ndarray
    u: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.r, dtype=float)
        u = np.asarray(self.u, dtype=float)
        if r.ndim != 1 or r.shape != u.shape or r.size == 0:
            raise ValueError("r and u must be 1-d arrays of equal, nonzero length")
        if np.any(r <= 0) or np.any(np.diff(r) <= 0):
            raise ValueError("r must be positive and strictly increasing")
        if np.any(~(u > 0)):
            raise NonPositiveProfile("u must be positive")
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "u", u)


@dataclass(frozen=True)
class OracleReport:
    """Normalised mismatch of the two operator groups under the map."""

    diffusion: float
    source: float

    @property
    def worst(self) -> float:
        return max(self.diffusion, self.source)

    def passed(self, tol: float = ORACLE_TOL) -> bool:
        return self.worst <= tol


@dataclass(frozen=True)
class SelfMap:
    source: ParameterSet
    target: ParameterSet
    theta: float
    C1: float
    C2: float
    mode: ConstantsMode
    oracle: OracleReport = field(compare=False, default=None)

    @property
    def radial_exponent(self) -> float:
        """Power of ``r`` multiplying ``u``: ``(N-2)/m``."""
        return (self.source.N - 2.0) / self.source.m

    def inverse(self) -> "SelfMap":
        """Algebraic inverse, from ``target`` back to ``source``."""
        th = self.theta
        C2i = self.C2 ** (-1.0 / th)
        C1i = 1.0 / (self.C1 * self.C2 ** (self.radial_exponent / th))
        return SelfMap(self.target, self.source, 1.0 / th, C1i, C2i, self.mode, self.oracle)

    def to_dict(self):
        return {
            "source": self.source.to_dict(),
            "target": self.target.to_dict(),
            "theta": self.theta,
            "C1": self.C1,
            "C2": self.C2,
            "mode": self.mode.value,
        }


# ---------------------------------------------------------------------------
# construction


def _require_subcritical(ps: ParameterSet):
    if ps.m >= m_c(ps.N):
        raise SupercriticalM(
            f"m={ps.m} >= m_c={m_c(ps.N):g}: theta >= 0 and the map is not an inversion")


def map_params_only(ps: ParameterSet) -> ParameterSet:
    _require_subcritical(ps)
    N, m, p, sigma = ps.as_tuple()
    return ParameterSet(N_bar(N, m), m, p, sigma_bar(N, m, p, sigma))


def manufactured_oracle(source: ParameterSet, target: ParameterSet, theta: float,
                        C1: float, C2: float, q: float = 1.0,
                        r_range=(0.05, 20.0), n: int = 1201) -> OracleReport:
    """Push ``u = (1 + r^2)^(-q)`` through the map and compare operators.

    The identity checked is ``Rbar[ubar](rbar) = r^((N-2)/m) R[u](r) / C1``
    separately for the diffusion group ``Lap_N(u^m)`` (bar side by
    fourth-order differences in ``ln rbar``) and the source ``r^sigma u^p``.
    Each mismatch is normalised by the largest value of its group.
    """
    N, m, p, sigma = source.as_tuple()
    Nb, sb = target.N, target.sigma
    t = np.linspace(math.log(r_range[0]), math.log(r_range[1]), n)
    dt = t[1] - t[0]
    r = np.exp(t)
    k = q * m
    one = 1.0 + r * r
    lap_um = one ** (-k - 2.0) * (-2.0 * k * N * one + 4.0 * k * (k + 1.0) * r * r)
    u = one ** (-q)
    weight = r ** ((N - 2.0) / m) / C1
    ub = weight * u
    rb = C2 * r ** theta
    v = ub ** m
    # derivatives in tbar = ln rbar = ln C2 + theta t
    v1 = (v[:-4] - 8.0 * v[1:-3] + 8.0 * v[3:-1] - v[4:]) / (12.0 * dt * theta)
    v2 = (-v[:-4] + 16.0 * v[1:-3] - 30.0 * v[2:-2] + 16.0 * v[3:-1] - v[4:]) / (
        12.0 * (dt * theta) ** 2)
    sl = slice(2, -2)
    lap_bar = (v2 + (Nb - 2.0) * v1) / rb[sl] ** 2
    want_d = (weight * lap_um)[sl]
    src_bar = rb ** sb * ub ** p
    want_s = weight * r ** sigma * u ** p
    d_err = float(np.max(np.abs(lap_bar - want_d)) / np.max(np.abs(want_d)))
    s_err = float(np.max(np.abs(src_bar - want_s)) / np.max(np.abs(want_s)))
    return OracleReport(d_err, s_err)


def build_selfmap(ps: ParameterSet, mode=ConstantsMode.DERIVED,
                  check: bool = True) -> SelfMap:
    """Build the map for ``ps`` with constants from ``mode``.

    With ``check=True`` the constants are run through
    :func:`manufactured_oracle`; a failing oracle raises ``ArithmeticError``
    in derived mode and emits :class:`ConstantsWarning` in paper mode.
    """
    mode = ConstantsMode(mode)
    _require_subcritical(ps)
    if abs(ps.L) <= BOUNDARY_TOL:
        raise DegenerateL(f"L={ps.L:g}: the map needs L != 0")
    N, m, p, sigma = ps.as_tuple()
    target = map_params_only(ps)
    th = theta_exp(N, m)
    if mode is ConstantsMode.DERIVED:
        C1, C2 = derived_constants(N, m, p, sigma)
    else:
        C1, C2 = paper_constants(N, m, p, sigma)
    oracle = manufactured_oracle(ps, target, th, C1, C2) if check else None
    sm = SelfMap(ps, target, th, C1, C2, mode, oracle)
    if oracle is not None and not oracle.passed():
        msg = (f"{mode.value} constants C1={C1:.6g}, C2={C2:.6g} fail the residual oracle "
               f"(diffusion {oracle.diffusion:.2e}, source {oracle.source:.2e})")
        if mode is ConstantsMode.DERIVED:
            raise ArithmeticError(msg)
        warnings.warn(msg, ConstantsWarning, stacklevel=2)
    return sm


def constant_conditions(sm: SelfMap) -> dict:
    """Residuals of both pairs of constant conditions for ``sm``'s constants.

    ``matching_*`` are the coefficient-matching conditions; ``printed_*``
    are the two displayed equalities ``C1^(m-1) C2 = 1/theta^2`` and
    ``C1^(p-1) C2^sigma = 1``. Residuals are taken on the log scale.
    """
    N, m, p, sigma = sm.source.as_tuple()
    lc1, lc2, th = math.log(sm.C1), math.log(sm.C2), sm.theta
    return {
        "matching_diffusion": 2 * math.log(abs(th)) + (m - 1) * lc1 + 2 * lc2,
        "matching_source": (p - 1) * lc1 - sm.target.sigma * lc2,
        "printed_diffusion": (m - 1) * lc1 + lc2 + 2 * math.log(abs(th)),
        "printed_source": (p - 1) * lc1 + sigma * lc2,
    }


@dataclass(frozen=True)
class ConstantDiscrepancy:
    params: ParameterSet
    derived: tuple
    paper: tuple
    derived_oracle: OracleReport
    paper_oracle: OracleReport

    @property
    def modes_differ(self) -> bool:
        return not np.allclose(self.derived, self.paper, rtol=1e-9, atol=0.0)

    def to_dict(self):
        return {
            "params": self.params.to_dict(),
            "derived": {"C1": self.derived[0], "C2": self.derived[1],
                        "oracle": self.derived_oracle.worst,
                        "passes": self.derived_oracle.passed()},
            "paper": {"C1": self.paper[0], "C2": self.paper[1],
                      "oracle": self.paper_oracle.worst,
                      "passes": self.paper_oracle.passed()},
            "modes_differ": self.modes_differ,
        }


def constant_discrepancy(ps: ParameterSet) -> ConstantDiscrepancy:
    """Compare both constant modes at ``ps`` (needs ``sigma != 0``)."""
    d = build_selfmap(ps, ConstantsMode.DERIVED)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConstantsWarning)
        pm = build_selfmap(ps, ConstantsMode.PAPER)
    return ConstantDiscrepancy(ps, (d.C1, d.C2), (pm.C1, pm.C2), d.oracle, pm.oracle)


# ---------------------------------------------------------------------------
# transport


def map_radial_snapshot(sm: SelfMap, snap: RadialSnapshot) -> RadialSnapshot:
    rb = sm.C2 * snap.r ** sm.theta
    ub = snap.r ** sm.radial_exponent * snap.u / sm.C1
    order = np.argsort(rb)
    return RadialSnapshot(rb[order], ub[order])


def resample(x, y, x_new):
    """Monotone cubic interpolation in log-log space, no extrapolation.

    Raises :class:`OutOfRange` when ``x_new`` leaves ``[x[0], x[-1]]``.
    """
    x, y, x_new = (np.asarray(a, dtype=float) for a in (x, y, x_new))
    if np.any(y <= 0):
        raise NonPositiveProfile("log-log resampling needs positive values")
    lo, hi = x[0], x[-1]
    if np.any(x_new < lo * (1 - 1e-14)) or np.any(x_new > hi * (1 + 1e-14)):
        raise OutOfRange(f"resampling outside [{lo:g}, {hi:g}] would extrapolate")
    xn = np.clip(x_new, lo, hi)
    interp = PchipInterpolator(np.log(x), np.log(y), extrapolate=False)
    return np.exp(interp(np.log(xn)))


def matched_options(sm: SelfMap, opts: Optional[IntegrationOptions] = None) -> IntegrationOptions:
    """Options for a run in target parameters whose image under ``sm`` keeps
    ``opts.points_per_decade``.

    The map stretches ``ln xi`` by ``1/|theta|``; without the denser grid a
    finite-difference residual of the mapped profile measures stencil error.
    """
    opts = opts or IntegrationOptions()
    scale = max(1.0, 1.0 / abs(sm.theta))
    return replace(opts, points_per_decade=int(math.ceil(opts.points_per_decade * scale)))


def map_profile(sm: SelfMap, prof: Profile) -> Profile:
    """Map a profile in target parameters to one in source parameters.

    The drift sign flips. The flux ``h = (f^m)'`` is rebuilt with the chain
    rule from the bar flux; a log-uniform input grid stays log-uniform.
    ``meta["reversed"]`` records the order reversal.
    """
    f_bar = np.asarray(prof.f, dtype=float)
    if np.any(~(f_bar > 0)):
        raise NonPositiveProfile("profile must be positive on its grid")
    N, m = sm.source.N, sm.source.m
    th, C1, C2 = sm.theta, sm.C1, sm.C2
    # invert xi_bar = C2 xi^theta
    xi = (np.asarray(prof.xi, dtype=float) / C2) ** (1.0 / th)
    f = C1 * xi ** (-(N - 2.0) / m) * f_bar
    h = C1 ** m * (-(N - 2.0) * xi ** (1.0 - N) * f_bar ** m
                   + xi ** (2.0 - N) * np.asarray(prof.h, float) * C2 * th * xi ** (th - 1.0))
    order = np.argsort(xi)
    se = map_similarity_exponents(sm, prof.ode.exponents)
    ode = ProfileODE(sm.source, se.equation_sign, se.alpha, se.beta)
    meta = dict(prof.meta, reversed=True, mapped_from=prof.ode.ps.to_dict(),
                constants_mode=sm.mode.value)
    return Profile(ode, prof.D, xi[order], f[order], h[order], prof.termination,
                   prof.xi_star, prof.xi0, meta)


def map_similarity_exponents(sm: SelfMap, se: SimilarityExponents) -> SimilarityExponents:
    """Transport ``(alpha, beta)`` from the target orientation to the source one.

    With the signed pair ``(a, b)`` of the ansatz: ``b = bbar/theta`` and
    ``a = abar + (N-2) bbar / (m theta)``; the drift sign flips.
    """
    ab, bb = se.signed
    N, m = sm.source.N, sm.source.m
    b = bb / sm.theta
    a = ab + (N - 2.0) * bb / (m * sm.theta)
    sign_L = 1 if sm.source.L > 0 else -1
    # the signed pair carries sign_L; stored values stay positive
    return SimilarityExponents(abs(a), abs(b), -se.equation_sign, sign_L)


_TRANSPORTABLE = {
    (TailKind.FAST_DECAY, End.INFINITY): TailKind.BOUNDED_POSITIVE_AT_ORIGIN,
    (TailKind.BOUNDED_POSITIVE_AT_ORIGIN, End.ORIGIN): TailKind.FAST_DECAY,
    (TailKind.SLOW_DECAY, End.INFINITY): TailKind.SLOW_DECAY,
    (TailKind.SLOW_DECAY, End.ORIGIN): TailKind.SLOW_DECAY,
    (TailKind.CRITICAL_DECAY, End.ORIGIN): TailKind.CRITICAL_DECAY,
    (TailKind.CRITICAL_DECAY, End.INFINITY): TailKind.CRITICAL_DECAY,
}


def _exact_exponent(ps: ParameterSet, kind: TailKind):
    if kind is TailKind.BOUNDED_POSITIVE_AT_ORIGIN:
        return 0.0
    return tail_dictionary(ps)[kind]


def map_tail_behavior(sm: SelfMap, tb: TailBehavior) -> TailBehavior:
    """Carry a power-law behaviour ``fbar ~ C xibar^g`` to the opposite end.

    The image is ``f ~ C C1 C2^g xi^(-(N-2)/m + theta g)``. The constant uses
    the dictionary exponent of the input kind; the fitted exponent is
    transported by the same affine rule.
    """
    out_kind = _TRANSPORTABLE.get((tb.kind, tb.end))
    if out_kind is None:
        raise UnsupportedBehavior(f"{tb.kind.value} at {tb.end.value} has no image under the map")
    g_exact = _exact_exponent(sm.target, tb.kind)
    shift = -sm.radial_exponent
    fitted = shift + sm.theta * tb.fitted_exponent
    const = tb.fitted_constant * sm.C1 * sm.C2 ** g_exact
    return TailBehavior(out_kind, fitted, const, tb.end.opposite())


# ---------------------------------------------------------------------------
# identities


def identity_residuals(N, m, p, sigma) -> dict:
    """Closed-form identity residuals; accepts arrays of equal shape.

    Every entry is a residual that vanishes exactly, except
    ``sobolev_flip`` (boolean agreement of the two signs) and
    ``Nbar_gt_2``.
    """
    N, m, p, sigma = (np.asarray(v, dtype=float) for v in (N, m, p, sigma))
    Nb = N_bar(N, m)
    sb = sigma_bar(N, m, p, sigma)
    th = theta_exp(N, m)
    den = m * N - N + 2.0
    L = L_const(m, p, sigma)
    Lb = L_const(m, p, sb)
    N2 = N_bar(Nb, m)
    s2 = sigma_bar(Nb, m, p, sb)
    return {
        "symm": (p - p_s(Nb, m, sb)) - (p_s(N, m, sigma) - p),
        "Nbar_minus_2": (Nb - 2.0) - (-2.0 * m * (N - 2.0) / den),
        "sobolev_flip": np.sign(m - m_s(Nb)) == np.sign(m_s(N) - m),
        "sigma_bar_vs_sigma_L": (sb - sigma_L(m, p)) - (-2.0 * m * L / ((1.0 - m) * den)),
        "p_minus_p_c_bar": (p - p_c(Nb, m, sb)) - m * (sigma + 2.0) / (N - 2.0),
        "Lbar": Lb - 2.0 * m * L / den,
        "double_map_N": N2 - N,
        "double_map_sigma": s2 - sigma,
        "theta_bar": theta_exp(Nb, m) - 1.0 / th,
        "Nbar_gt_2": Nb > 2.0,
    }


_BOOL_KEYS = ("sobolev_flip", "Nbar_gt_2")


@dataclass(frozen=True)
class IdentityReport:
    params: ParameterSet
    residuals: dict
    sobolev_flip: bool
    Nbar_gt_2: bool
    sigma_bar_sign: int

    @property
    def max_abs_residual(self) -> float:
        return max(abs(v) for v in self.residuals.values())

    def passed(self, tol: float = 1e-9) -> bool:
        return self.max_abs_residual <= tol and self.sobolev_flip and self.Nbar_gt_2

    def to_dict(self):
        return {
            "residuals": dict(self.residuals),
            "sobolev_flip": self.sobolev_flip,
            "Nbar_gt_2": self.Nbar_gt_2,
            "sigma_bar_sign": self.sigma_bar_sign,
            "max_abs_residual": self.max_abs_residual,
        }


def verify_identities(ps: ParameterSet) -> IdentityReport:
    _require_subcritical(ps)
    if abs(ps.L) <= BOUNDARY_TOL:
        raise DegenerateL(f"L={ps.L:g}")
    raw = identity_residuals(*ps.as_tuple())
    res = {k: float(v) for k, v in raw.items() if k not in _BOOL_KEYS}
    sb = float(sigma_bar(*ps.as_tuple()))
    sign = 0 if abs(sb) <= BOUNDARY_TOL else (1 if sb > 0 else -1)
    return IdentityReport(ps, res, bool(raw["sobolev_flip"]), bool(raw["Nbar_gt_2"]), sign)


__all__ = [
    "ConstantsMode", "ConstantsWarning", "RadialSnapshot", "SelfMap", "OracleReport",
    "IdentityReport", "ConstantDiscrepancy", "build_selfmap", "map_params_only",
    "map_radial_snapshot", "map_profile", "matched_options", "map_similarity_exponents", "map_tail_behavior",
    "verify_identities", "identity_residuals", "constant_discrepancy", "constant_conditions",
    "manufactured_oracle", "derived_constants", "paper_constants", "theta_exp", "N_bar",
    "sigma_bar", "resample",
]
