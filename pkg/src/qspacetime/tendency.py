"""Tendency-postulate typicality conditions and the sector leakage report.

The four conditions pair "``p_connect`` is large" with a comparability
statement about the sector marginals:

* ``V``: the massive marginals are comparable;
* ``S``: the massless marginals are comparable;
* ``VS``: both are;
* ``VorS``: at least one is.

A model is typical when the two sides of the biconditional agree.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .capacity import DIRECTIONS, fit_harmonic, q_ent_closed_form
from .errors import DomainError, ModelClassError, NormError
from .process_core import ProcessMatrix
from .sectors import MASSIVE, MASSLESS, SECTORS, SectoredAmplitudes, marginal_probabilities, reduce_sector

NORM_TOL = 1e-10
COMPARABLE_FLOOR = 1e-300
DEFAULT_THETA = 0.9
DEFAULT_KAPPA = 2.0


class Condition(enum.Enum):
    V = "V"
    VS = "VS"
    S = "S"
    VorS = "VorS"

    @classmethod
    def parse(cls, value) -> "Condition":
        if isinstance(value, Condition):
            return value
        for c in cls:
            if c.value == value:
                return c
        raise ValueError(f"unknown condition {value!r}; expected one of V, VS, S, VorS")

    def rhs(self, massless_comparable: bool, massive_comparable: bool) -> bool:
        if self is Condition.V:
            return massive_comparable
        if self is Condition.S:
            return massless_comparable
        if self is Condition.VS:
            return massless_comparable and massive_comparable
        return massless_comparable or massive_comparable


@dataclass(frozen=True)
class TendencyThresholds:
    """What "large" and "comparable" mean; neither has a canonical value."""

    theta_connect: float = DEFAULT_THETA
    kappa_comparable: float = DEFAULT_KAPPA

    def __post_init__(self):
        if not (0 < self.theta_connect <= 1):
            raise DomainError(f"theta_connect must lie in (0, 1], got {self.theta_connect!r}")
        if not (self.kappa_comparable >= 1):
            raise DomainError(f"kappa_comparable must be >= 1, got {self.kappa_comparable!r}")


def _probability_vector(p) -> np.ndarray:
    if isinstance(p, (list, tuple)) and p and all(isinstance(x, (Fraction, int)) for x in p):
        if any(x < 0 for x in p) or sum(p) != 1:
            raise NormError(f"probabilities {p} do not form a distribution")
        return np.array([float(x) for x in p])
    arr = np.asarray(p, dtype=float)
    if arr.shape != (3,):
        raise NormError(f"expected a probability 3-vector, got shape {arr.shape}")
    if np.any(arr < -NORM_TOL) or abs(arr.sum() - 1) > NORM_TOL:
        raise NormError(f"probabilities {arr.tolist()} do not sum to 1")
    return arr


def p_connect(p_massless) -> float:
    """Weight of massless causal connection in either direction."""
    p = _probability_vector(p_massless)
    return float(p[0] + p[1])


def is_comparable(p, kappa: float = DEFAULT_KAPPA) -> bool:
    arr = np.asarray(p, dtype=float)
    hi, lo = float(arr.max()), float(arr.min())
    if hi == lo:
        return True
    return hi / max(lo, COMPARABLE_FLOOR) <= kappa


@dataclass(frozen=True)
class TypicalityVerdict:
    condition: Condition
    p_connect: float
    massless_comparable: bool
    massive_comparable: bool
    typical: bool
    biconditional_detail: str
    thresholds: TendencyThresholds
    p_massless: tuple[float, float, float]
    p_massive: tuple[float, float, float]

    @property
    def large(self) -> bool:
        return self.p_connect >= self.thresholds.theta_connect

    @property
    def rhs(self) -> bool:
        return self.condition.rhs(self.massless_comparable, self.massive_comparable)

    def lines(self) -> list[str]:
        fmt = lambda xs: ",".join(format(x, ".12g") for x in xs)
        return [
            f"condition: {self.condition.value}",
            f"theta_connect: {self.thresholds.theta_connect:.12g}",
            f"kappa_comparable: {self.thresholds.kappa_comparable:.12g}",
            "thresholds: artifact defaults; the postulate does not fix them"
            if self.thresholds == TendencyThresholds()
            else "thresholds: user supplied",
            f"p_massless: {fmt(self.p_massless)}",
            f"p_massive: {fmt(self.p_massive)}",
            f"p_connect: {self.p_connect:.12g}",
            f"large_p_connect: {str(self.large).lower()}",
            f"massless_comparable: {str(self.massless_comparable).lower()}",
            f"massive_comparable: {str(self.massive_comparable).lower()}",
            f"biconditional: {self.biconditional_detail}",
            f"typical: {str(self.typical).lower()}",
        ]


def classify(amps, cond="V", thr: TendencyThresholds | None = None) -> TypicalityVerdict:
    """Evaluate ``large(p_connect) <=> rhs(cond)`` from the sector marginals."""
    if not isinstance(amps, SectoredAmplitudes):
        amps = SectoredAmplitudes(amps)
    cond = Condition.parse(cond)
    thr = thr or TendencyThresholds()
    p_ml, p_mv = marginal_probabilities(amps)
    pc = p_connect(p_ml)
    ml_c = is_comparable(p_ml, thr.kappa_comparable)
    mv_c = is_comparable(p_mv, thr.kappa_comparable)
    large = pc >= thr.theta_connect
    rhs = cond.rhs(ml_c, mv_c)
    both = "both sides hold" if large and rhs else "neither side holds" if not (large or rhs) else None
    if both is None:
        both = "p_connect large but condition fails" if large else "condition holds but p_connect not large"
    return TypicalityVerdict(
        cond, pc, ml_c, mv_c, large == rhs, both, thr, tuple(map(float, p_ml)), tuple(map(float, p_mv))
    )


# -- leakage -------------------------------------------------------------------

LEAKAGE_EPS_MAX = 0.75
# fitted weights are recovered to about 1e-15; anything below this is zero
WEIGHT_FLOOR = 1e-11


@dataclass
class SectorCapacities:
    sector: str
    p: tuple[float, float, float]
    wire_dims: dict[str, int]
    capacities: dict[str, dict[float, float]] = field(default_factory=dict)


@dataclass
class LeakageReport:
    eps: float
    tested_eps: tuple[float, ...]
    sectors: dict[str, SectorCapacities]
    superluminal: dict[str, bool]

    @property
    def any_superluminal(self) -> bool:
        return any(self.superluminal.values())

    def lines(self) -> list[str]:
        out = [f"eps: {self.eps:.12g}", "tested_eps: " + ",".join(format(e, ".12g") for e in self.tested_eps)]
        for s in SECTORS:
            sc = self.sectors[s]
            out.append(f"{s}.p: " + ",".join(format(x, ".12g") for x in sc.p))
            for d in DIRECTIONS:
                out.append(f"{s}.{d}.wire_dim: {sc.wire_dims[d]}")
                out.append(f"{s}.{d}.capacity_at_eps: {sc.capacities[d][self.eps]:.12g}")
        for d in DIRECTIONS:
            out.append(f"superluminal.{d}: {str(self.superluminal[d]).lower()}")
        out.append(f"superluminal: {str(self.any_superluminal).lower()}")
        return out


def _witness_eps(p: float) -> float | None:
    """An imprecision below 3/4 at which weight ``p > 0`` already gives positive capacity."""
    if p <= WEIGHT_FLOOR:
        return None
    return LEAKAGE_EPS_MAX - 3 * p / 8


def leakage_report(w_ab: ProcessMatrix, eps: float) -> LeakageReport:
    """Per-sector capacities and the superluminal verdict.

    A direction is superluminal when the massive sector has positive capacity
    at some tested imprecision while the massless sector has zero capacity at
    every tested imprecision. Besides ``eps`` the tested set contains, for each
    positive sector weight, one imprecision just above that weight's zero
    threshold, so any non-zero connection weight is detected. Imprecisions of
    3/4 and above are excluded since there even a non-signalling wire of
    dimension 2 reaches one bit.
    """
    if not (0 <= eps < LEAKAGE_EPS_MAX):
        raise DomainError(f"leakage eps must lie in [0, 3/4), got {eps!r}")
    fits = {}
    for s in SECTORS:
        reduced = reduce_sector(w_ab, s)
        try:
            fit = fit_harmonic(reduced)
        except ModelClassError as exc:
            raise ModelClassError(f"{s} sector: {exc}") from None
        dims = {"forward": reduced.parties[0].d_out, "backward": reduced.parties[1].d_out}
        fits[s] = (fit, dims)
    tested = {float(eps)}
    for s in SECTORS:
        for k in (0, 1):
            w = _witness_eps(float(fits[s][0].p[k]))
            if w is not None:
                tested.add(w)
    tested_eps = tuple(sorted(tested))
    sectors = {}
    for s in SECTORS:
        fit, dims = fits[s]
        sc = SectorCapacities(s, tuple(float(x) for x in fit.p), dims)
        for k, d in enumerate(DIRECTIONS):
            p = min(max(float(fit.p[k]), 0.0), 1.0)
            p = 0.0 if p <= WEIGHT_FLOOR else p
            sc.capacities[d] = {e: q_ent_closed_form(p, e, dims[d]) for e in tested_eps}
        sectors[s] = sc
    verdict = {}
    for d in DIRECTIONS:
        massive_pos = any(c > 0 for c in sectors[MASSIVE].capacities[d].values())
        massless_zero = all(c == 0 for c in sectors[MASSLESS].capacities[d].values())
        verdict[d] = massive_pos and massless_zero
    return LeakageReport(float(eps), tested_eps, sectors, verdict)


__all__ = [
    "Condition",
    "TendencyThresholds",
    "TypicalityVerdict",
    "LeakageReport",
    "SectorCapacities",
    "p_connect",
    "is_comparable",
    "classify",
    "leakage_report",
]
