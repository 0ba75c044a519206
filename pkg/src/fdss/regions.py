"""Behaviour catalogue over the (p, m) plane and hot-spot diagnostics.

Labels come from exact comparisons of (m, p) against m_s, m_c and the
critical curves p_L, p_F, p_c, p_s, with equality decided at
``BOUNDARY_TOL``. Every label carries the predicate that produced it.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import InsufficientTail
from .params import (
    BOUNDARY_TOL,
    ParameterSet,
    SimilarityExponents,
    TemporalKind,
    m_c,
    m_s,
    p_c,
    p_F,
    p_L,
    p_s,
)
from .profiles import (
    Profile,
    TailKind,
    Termination,
    classify_tail,
    tail_dictionary,
)
from .serialization import rows_to_csv


class Behavior(str, enum.Enum):
    BLOWUP = "Blowup"
    GLOBAL_DECAY_FAST = "GlobalDecayFast"
    GLOBAL_DECAY_SLOW = "GlobalDecaySlow"
    GROWUP = "Growup"
    EXTINCTION = "Extinction"
    ETERNAL = "Eternal"
    STATIONARY = "Stationary"
    NONEXISTENCE_ALL = "NonexistenceAll"


REGION_TAGS = ("A", "B", "C", "D", "E", "F", "G", "H", "I", "Boundary_pL", "Boundary_pS",
               "Boundary_mS", "Boundary_mC", "UndeterminedBand")

B = Behavior


@dataclass(frozen=True)
class RegionLabel:
    """``tag`` is ``None`` for sigma < 0, where only behaviours are reported.

    ``partial`` marks labels whose claim covers only part of the cell's
    range; ``undetermined_band`` marks the blow-up range whose inner
    structure between the unnamed exponents p0 <= p1 <= p2 is unknown.
    """

    tag: Optional[str]
    behaviors: frozenset
    predicate: str
    partial: bool = False
    undetermined_band: bool = False

    def to_dict(self):
        return {
            "tag": self.tag,
            "behaviors": sorted(b.value for b in self.behaviors),
            "predicate": self.predicate,
            "partial": self.partial,
            "undetermined_band": self.undetermined_band,
        }


def _eq(a, b):
    return abs(a - b) <= BOUNDARY_TOL


def _lt(a, b):
    return a < b and not _eq(a, b)


def _label(tag, behaviors, predicate, **kw):
    return RegionLabel(tag, frozenset(behaviors), predicate, **kw)


def _below_sobolev(m, p, pl, pc, pss):
    if not _lt(1.0, p):
        return _label("UndeterminedBand", (), "m < m_s and p <= 1")
    if _eq(p, pl):
        return _label("Boundary_pL", (B.ETERNAL,), "m < m_s and p = p_L")
    if _lt(pl, p):
        return _label("G", (B.NONEXISTENCE_ALL,), "m < m_s and p > p_L")
    # here 1 < p < p_L, and p_c < p_s < p_L always holds below m_s
    if _eq(p, pss):
        return _label("Boundary_pS", (B.STATIONARY,), "m < m_s and p = p_s")
    if _lt(pss, p):
        return _label("C", (B.GROWUP, B.EXTINCTION), "m < m_s and p_s < p < p_L")
    if _lt(pc, p):
        return _label("I", (B.EXTINCTION,), "m < m_s and max(1, p_c) < p < p_s",
                      partial=True)
    return _label("UndeterminedBand", (), "m < m_s and 1 < p <= p_c")


def _subcritical(m, p, pl, pss):
    if not _lt(1.0, p):
        return _label("UndeterminedBand", (), "m_s < m < m_c and p <= 1")
    if _eq(p, pl):
        return _label("Boundary_pL", (B.ETERNAL,), "m_s < m < m_c and p = p_L")
    if _lt(p, pl):
        return _label("H", (B.NONEXISTENCE_ALL,), "m_s < m < m_c and 1 < p < p_L")
    if _eq(p, pss):
        return _label("Boundary_pS", (B.STATIONARY,), "m_s < m < m_c and p = p_s")
    if _lt(p, pss):
        return _label("E", (B.GLOBAL_DECAY_FAST, B.GLOBAL_DECAY_SLOW),
                      "m_s < m < m_c and p_L < p < p_s")
    return _label("F", (B.BLOWUP,), "m_s < m < m_c and p > p_s", undetermined_band=True)


def _supercritical(m, p, pl, pf, pc, pss, prefix="m > m_c"):
    if not _lt(1.0, p):
        return _label("UndeterminedBand", (), f"{prefix} and p <= 1")
    if _eq(p, pl):
        return _label("Boundary_pL", (), f"{prefix} and p = p_L")
    if _lt(p, pl):
        return _label("H", (B.NONEXISTENCE_ALL,), f"{prefix} and 1 < p < p_L")
    if _eq(p, pss):
        return _label("Boundary_pS", (B.STATIONARY,), f"{prefix} and p = p_s")
    if _lt(pss, p):
        return _label("F", (B.BLOWUP,), f"{prefix} and p > p_s")
    if not _lt(pf, p):
        return _label("A", (B.NONEXISTENCE_ALL,), f"{prefix} and p_L < p <= p_F", partial=True)
    if not _lt(pc, p):
        return _label("B", (B.GLOBAL_DECAY_FAST,), f"{prefix} and p_F < p <= p_c")
    return _label("D", (B.GLOBAL_DECAY_SLOW,), f"{prefix} and p_c < p < p_s")


def classify_region(ps: ParameterSet) -> RegionLabel:
    """Catalogue label for ``ps``; letter tags only for sigma >= 0."""
    N, m, p, sigma = ps.as_tuple()
    ms, mc = m_s(N), m_c(N)
    pl, pf, pc, pss = p_L(m, sigma), p_F(N, m, sigma), p_c(N, m, sigma), p_s(N, m, sigma)
    if _eq(m, ms):
        nonex = _lt(max(1.0, pl), p)
        lab = _label("Boundary_mS", (B.NONEXISTENCE_ALL,) if nonex else (),
                     "m = m_s" + (" and p > max(1, p_L)" if nonex else ""))
    elif _eq(m, mc):
        inner = _supercritical(m, p, pl, pf, pc, pss, prefix="m = m_c")
        lab = _label("Boundary_mC", inner.behaviors, inner.predicate)
    elif m < ms:
        lab = _below_sobolev(m, p, pl, pc, pss)
    elif m < mc:
        lab = _subcritical(m, p, pl, pss)
    else:
        lab = _supercritical(m, p, pl, pf, pc, pss)
    if sigma < 0:
        return RegionLabel(None, lab.behaviors, lab.predicate, lab.partial,
                           lab.undetermined_band)
    return lab


# ---------------------------------------------------------------------------
# grids


@dataclass
class RegionGrid:
    N: float
    sigma: float
    p: np.ndarray
    m: np.ndarray
    labels: list  # row-major: labels[i][j] at (p[j], m[i])
    curves: dict = field(default_factory=dict)

    def cells(self):
        for i, m in enumerate(self.m):
            for j, p in enumerate(self.p):
                yield float(p), float(m), self.labels[i][j]

    def to_csv(self) -> str:
        return rows_to_csv(("p", "m", "tag", "behaviors"),
                           ((p, m, lab.tag or "", ";".join(sorted(b.value for b in lab.behaviors)))
                            for p, m, lab in self.cells()))

    def curves_dict(self):
        return {"N": self.N, "sigma": self.sigma,
                "m": self.curves["m"].tolist(),
                **{k: v.tolist() for k, v in self.curves.items() if k != "m"},
                "m_s": float(m_s(self.N)), "m_c": float(m_c(self.N))}


def region_grid(N: float, sigma: float, p_range=(1.0, 3.0), m_range=(0.01, 0.99),
                resolution=(100, 100), curve_points: int = 200) -> RegionGrid:
    """Label a ``resolution = (n_p, n_m)`` grid of cell centres.

    Also samples the curves p_L, p_F, p_c, p_s against m for overlays.
    Cells with p <= m fall outside the admissible set and are labelled
    ``UndeterminedBand`` with an explanatory predicate.
    """
    if np.isscalar(resolution):
        resolution = (int(resolution), int(resolution))
    n_p, n_m = (int(v) for v in resolution)
    if n_p < 2 or n_m < 2:
        raise ValueError("resolution must be at least 2 per axis")
    p = np.linspace(p_range[0], p_range[1], n_p)
    m = np.linspace(m_range[0], m_range[1], n_m)
    rows = []
    for mi in m:
        row = []
        for pj in p:
            if pj <= mi:
                row.append(_label("UndeterminedBand", (), "p <= m (inadmissible)"))
            else:
                row.append(classify_region(ParameterSet(float(N), float(mi), float(pj),
                                                        float(sigma))))
        rows.append(row)
    mm = np.linspace(m_range[0], m_range[1], curve_points)
    curves = {"m": mm, "p_L": p_L(mm, sigma) + 0 * mm, "p_F": p_F(N, mm, sigma),
              "p_c": p_c(N, mm, sigma), "p_s": p_s(N, mm, sigma)}
    return RegionGrid(float(N), float(sigma), p, m, rows, curves)


# ---------------------------------------------------------------------------
# hot spots


def hotspot_exponents(N, m, p, sigma):
    """``-alpha - beta*gamma`` for the fast, critical and slow tail exponents.

    Valid for L > 0 (the exponents are then ``alpha = (sigma+2)/L``,
    ``beta = (p-m)/L``). Array friendly; returns a dict keyed by tail kind.
    """
    N, m, p, sigma = (np.asarray(v, dtype=float) for v in (N, m, p, sigma))
    L = sigma * (m - 1.0) + 2.0 * (p - 1.0)
    a, b = (sigma + 2.0) / L, (p - m) / L
    return {
        TailKind.FAST_DECAY: -a + b * (N - 2.0) / m,
        TailKind.CRITICAL_DECAY: -a + 2.0 * b / (1.0 - m),
        TailKind.SLOW_DECAY: -a + b * (sigma + 2.0) / (p - m),
    }


@dataclass(frozen=True)
class BlowupReport:
    alpha: float
    beta: float
    hotspot_location: float
    gamma: float
    fixed_point_exponent: float
    blowup_set_origin: bool
    supnorm_law: str

    def to_dict(self):
        return {
            "alpha": self.alpha, "beta": self.beta,
            "hotspot_location": self.hotspot_location, "gamma": self.gamma,
            "fixed_point_exponent": self.fixed_point_exponent,
            "blowup_set_origin": self.blowup_set_origin,
            "supnorm_law": self.supnorm_law,
        }


_DICT_KINDS = (TailKind.FAST_DECAY, TailKind.SLOW_DECAY, TailKind.CRITICAL_DECAY)


def hotspot_diagnostics(ps: ParameterSet, prof: Profile, se: SimilarityExponents,
                        tail=None) -> BlowupReport:
    """Maximum point, decay rate at fixed points and blow-up set of a profile.

    ``tail`` defaults to :func:`classify_tail` on ``prof`` and must be one of
    the three dictionary kinds. The exponent ``-alpha - beta*gamma`` governs
    the time behaviour of ``u`` at a fixed ``x != 0``.
    """
    if tail is None:
        if prof.termination is not Termination.REACHED_XI_MAX:
            raise InsufficientTail(f"profile terminated with {prof.termination.value}")
        tail = classify_tail(prof.ode, prof)
    if tail.kind not in _DICT_KINDS:
        raise InsufficientTail(f"tail {tail.kind.value} is not a dictionary decay")
    gamma = tail_dictionary(ps)[tail.kind]
    k = int(np.argmax(prof.f))
    xi0 = float(prof.xi[k])
    if k == 0:
        # the grid starts at the handoff point; a maximum there is the origin
        xi0 = 0.0
    fixed = -se.alpha - se.beta * gamma
    kind = se.temporal_kind
    blowup = kind is TemporalKind.BLOWUP
    if se.is_forward:
        law = f"||u(t)||_inf = t^(-{se.alpha:.6g}) f({xi0:.6g})"
    else:
        law = f"||u(t)||_inf = (T-t)^(-{se.alpha:.6g}) f({xi0:.6g})"
    return BlowupReport(se.alpha, se.beta, xi0, gamma, fixed, blowup, law)
