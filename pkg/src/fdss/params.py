"""Parameter quadruples and the critical / similarity exponents.

The closed-form helpers at module level (``m_c``, ``p_s`` and friends) are
plain arithmetic and accept numpy arrays as well as floats, which is what the
vectorised identity checks rely on.
"""

from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import (
    DegenerateL,
    MOutOfRange,
    NOutOfRange,
    POutOfRange,
    SigmaOutOfRange,
)

#: absolute tolerance for boundary detection (m = m_s, p = p_L, ...)
BOUNDARY_TOL = 1e-12


def m_c(N):
    return (N - 2.0) / N


def m_s(N):
    return (N - 2.0) / (N + 2.0)


def p_L(m, sigma):
    return 1.0 + sigma * (1.0 - m) / 2.0


def p_F(N, m, sigma):
    return m + (sigma + 2.0) / N


def p_c(N, m, sigma):
    return m * (N + sigma) / (N - 2.0)


def p_s(N, m, sigma):
    return m * (N + 2.0 * sigma + 2.0) / (N - 2.0)


def L_const(m, p, sigma):
    return sigma * (m - 1.0) + 2.0 * (p - 1.0)


def sigma_L(m, p):
    return 2.0 * (p - 1.0) / (1.0 - m)


@dataclass(frozen=True)
class ParameterSet:
    """Coefficients (N, m, p, sigma) of the radial equation.

    ``N`` is a real coefficient, not necessarily an integer dimension.
    Construct through :func:`validate_params` to get the range checks.
    """

    N: float
    m: float
    p: float
    sigma: float

    @property
    def L(self) -> float:
        return L_const(self.m, self.p, self.sigma)

    def as_tuple(self):
        return (self.N, self.m, self.p, self.sigma)

    def to_dict(self):
        return asdict(self)


def validate_params(N, m, p, sigma) -> ParameterSet:
    """Check the admissible ranges and return a :class:`ParameterSet`.

    Raises the specific ``*OutOfRange`` error for the first violated bound.
    """
    N, m, p, sigma = (float(v) for v in (N, m, p, sigma))
    for name, v in (("N", N), ("m", m), ("p", p), ("sigma", sigma)):
        if not math.isfinite(v):
            raise {"N": NOutOfRange, "m": MOutOfRange, "p": POutOfRange,
                   "sigma": SigmaOutOfRange}[name](f"{name}={v} is not finite")
    if N <= 2.0:
        raise NOutOfRange(f"N={N} must be > 2")
    if not 0.0 < m < 1.0:
        raise MOutOfRange(f"m={m} must lie in (0, 1)")
    if sigma <= -2.0:
        raise SigmaOutOfRange(f"sigma={sigma} must be > -2")
    if p <= m:
        raise POutOfRange(f"p={p} must be > m={m}")
    return ParameterSet(N, m, p, sigma)


@dataclass(frozen=True)
class CriticalExponents:
    m_c: float
    m_s: float
    p_L: float
    p_F: float
    p_c: float
    p_s: float
    L: float
    sigma_L: float

    def to_dict(self):
        return asdict(self)


def critical_exponents(ps: ParameterSet) -> CriticalExponents:
    N, m, p, sigma = ps.as_tuple()
    return CriticalExponents(
        m_c=m_c(N),
        m_s=m_s(N),
        p_L=p_L(m, sigma),
        p_F=p_F(N, m, sigma),
        p_c=p_c(N, m, sigma),
        p_s=p_s(N, m, sigma),
        L=L_const(m, p, sigma),
        sigma_L=sigma_L(m, p),
    )


class TemporalKind(str, enum.Enum):
    GLOBAL_DECAY = "GlobalDecay"
    BLOWUP = "Blowup"
    EXTINCTION = "Extinction"
    GROWUP = "Growup"


_KIND_TABLE = {
    (1, 1): TemporalKind.GLOBAL_DECAY,
    (1, -1): TemporalKind.BLOWUP,
    (-1, 1): TemporalKind.EXTINCTION,
    (-1, -1): TemporalKind.GROWUP,
}


def temporal_kind(sign_L: int, s: int) -> TemporalKind:
    return _KIND_TABLE[(int(sign_L), int(s))]


def _check_sign(s) -> int:
    if s not in (1, -1):
        raise ValueError(f"equation sign must be +1 or -1, got {s!r}")
    return int(s)


@dataclass(frozen=True)
class SimilarityExponents:
    """Positive similarity exponents plus the orientation tags.

    ``alpha`` and ``beta`` are always stored positive; ``sign_L`` and
    ``equation_sign`` carry the orientation. The signed pair used by the
    ansatz ``u = tau**(-a) f(r tau**(-b))`` is exposed as :attr:`signed`.
    """

    alpha: float
    beta: float
    equation_sign: int
    sign_L: int

    @property
    def temporal_kind(self) -> TemporalKind:
        return temporal_kind(self.sign_L, self.equation_sign)

    @property
    def is_forward(self) -> bool:
        """True for the ``t**(-a)`` form, False for ``(T - t)**(-a)``."""
        return self.equation_sign * self.sign_L == 1

    @property
    def signed(self):
        return (self.sign_L * self.alpha, self.sign_L * self.beta)

    def to_dict(self):
        return {
            "alpha": self.alpha,
            "beta": self.beta,
            "equation_sign": self.equation_sign,
            "temporal_kind": self.temporal_kind.value,
        }


def similarity_exponents(ps: ParameterSet, s: int) -> SimilarityExponents:
    s = _check_sign(s)
    L = ps.L
    if abs(L) <= BOUNDARY_TOL:
        raise DegenerateL(
            f"L={L:g}: p={ps.p} is on p_L(sigma); self-similar exponents are undefined")
    return SimilarityExponents(
        alpha=abs(ps.sigma + 2.0) / abs(L),
        beta=abs(ps.p - ps.m) / abs(L),
        equation_sign=s,
        sign_L=1 if L > 0 else -1,
    )


class MRange(str, enum.Enum):
    BELOW_SOBOLEV = "BelowSobolev"
    SUBCRITICAL = "Subcritical"
    SUPERCRITICAL = "Supercritical"


@dataclass(frozen=True)
class MClassification:
    range: MRange
    at_m_s: bool
    at_m_c: bool


def classify_m(ps: ParameterSet, tol: float = BOUNDARY_TOL) -> MClassification:
    """Locate m relative to m_s and m_c, flagging the two boundaries.

    Boundary points are assigned to the interval Theorem-style statements use:
    m = m_s belongs to ``BelowSobolev`` (nonexistence holds on ``(0, m_s]``)
    and m = m_c to ``Supercritical`` (``[m_c, 1)``).
    """
    ms, mc = m_s(ps.N), m_c(ps.N)
    at_s = abs(ps.m - ms) <= tol
    at_c = abs(ps.m - mc) <= tol
    if at_c or ps.m > mc:
        r = MRange.SUPERCRITICAL
    elif at_s or ps.m < ms:
        r = MRange.BELOW_SOBOLEV
    else:
        r = MRange.SUBCRITICAL
    return MClassification(r, at_s, at_c)


def sample_admissible(rng: np.random.Generator, n: int, *, N_range=(2.1, 10.0),
                      m_margin=0.01, sigma_range=(-1.9, 10.0), p_margin=0.01,
                      p_span=5.0):
    """Draw ``n`` subcritical quadruples with p > max(1, p_L) + margin.

    Returns four arrays (N, m, p, sigma).
    """
    N = rng.uniform(*N_range, size=n)
    m = rng.uniform(m_margin, m_c(N) - m_margin)
    sigma = rng.uniform(*sigma_range, size=n)
    lo = np.maximum(1.0, p_L(m, sigma)) + p_margin
    p = lo + rng.uniform(0.0, p_span, size=n)
    return N, m, p, sigma
