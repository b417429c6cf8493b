"""Capacity-based closeness of process matrices and typicality calibration.

Two processes on wires of equal dimension are close when, at each tested
imprecision, their one-shot entanglement capacities differ by at most a
threshold, separately in each direction. Harmonic-type processes use the
closed form; anything else uses the probe-fidelity staircase, and every
report says which one entered.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence


from .capacity import DIRECTIONS, q_ent, q_ent_closed_form, wire_dims
from .errors import DimError, DomainError
from .process_core import ProcessMatrix
from .sampling import random_sectored_amplitudes, rng_from
from .sectors import SECTORS, SectoredAmplitudes, marginal_probabilities, reduce_sector
from .tendency import Condition, TendencyThresholds, TypicalityVerdict, classify

NORMALIZATION_NOTE = "processes on unequal wire dimensions need a dimension normalization, which is not implemented"


@dataclass(frozen=True)
class ClosenessCriterion:
    eps_forward: tuple[float, ...] = (0.01,)
    eps_backward: tuple[float, ...] = (0.01,)
    d_forward: Mapping[float, float] | float = 2.0
    d_backward: Mapping[float, float] | float = 3.0

    def __post_init__(self):
        for name in ("eps_forward", "eps_backward"):
            values = tuple(float(e) for e in getattr(self, name))
            if not values:
                raise DomainError(f"{name} must not be empty")
            if any(not (0 <= e <= 1) for e in values):
                raise DomainError(f"{name} values must lie in [0, 1]")
            object.__setattr__(self, name, values)
        for name, eps in (("d_forward", self.eps_forward), ("d_backward", self.eps_backward)):
            raw = getattr(self, name)
            if isinstance(raw, Mapping):
                table = {float(k): float(v) for k, v in raw.items()}
                missing = [e for e in eps if e not in table]
                if missing:
                    raise DomainError(f"{name} has no threshold for eps {missing}")
            else:
                table = {e: float(raw) for e in eps}
            if any(v < 0 for v in table.values()):
                raise DomainError(f"{name} thresholds must be non-negative")
            object.__setattr__(self, name, dict(sorted(table.items())))

    def eps_for(self, direction: str) -> tuple[float, ...]:
        return self.eps_forward if direction == "forward" else self.eps_backward

    def threshold(self, direction: str, eps: float) -> float:
        table = self.d_forward if direction == "forward" else self.d_backward
        return table[eps]


@dataclass(frozen=True)
class Comparison:
    direction: str
    eps: float
    q_z: float
    q_w: float
    threshold: float
    method_z: str
    method_w: str

    @property
    def ok(self) -> bool:
        return abs(self.q_z - self.q_w) <= self.threshold + 1e-12


@dataclass
class ClosenessReport:
    comparisons: list[Comparison]
    sector: str | None = None
    notes: list[str] = field(default_factory=list)

    @property
    def close(self) -> bool:
        return all(c.ok for c in self.comparisons)

    def lines(self) -> list[str]:
        out = [f"sector: {self.sector or 'whole'}"]
        for c in self.comparisons:
            out.append(
                f"{c.direction} eps={c.eps:.12g}: Q_z={c.q_z:.12g} ({c.method_z}) Q_w={c.q_w:.12g} ({c.method_w})"
                f" |diff|={abs(c.q_z - c.q_w):.12g} threshold={c.threshold:.12g} {'ok' if c.ok else 'exceeds'}"
            )
        out += [f"note: {n}" for n in self.notes]
        out.append(f"close: {str(self.close).lower()}")
        return out


def are_close(
    z: ProcessMatrix,
    w: ProcessMatrix,
    c: ClosenessCriterion | None = None,
    sector: str | None = None,
    oracle: bool = True,
) -> ClosenessReport:
    c = c or ClosenessCriterion()
    if sector is not None:
        z, w = reduce_sector(z, sector), reduce_sector(w, sector)
    for direction in DIRECTIONS:
        dz, dw = wire_dims(z, direction), wire_dims(w, direction)
        if dz != dw:
            raise DimError(f"{direction} wire dimensions differ ({dz} vs {dw}); {NORMALIZATION_NOTE}")
    comparisons = []
    for direction in DIRECTIONS:
        for e in c.eps_for(direction):
            qz = q_ent(z, direction, e, oracle=oracle)
            qw = q_ent(w, direction, e, oracle=oracle)
            comparisons.append(
                Comparison(direction, e, qz.bits, qw.bits, c.threshold(direction, e), qz.method, qw.method)
            )
    notes = []
    if any("staircase" in m for cmp in comparisons for m in (cmp.method_z, cmp.method_w)):
        notes.append("non-harmonic capacities use the probe-fidelity staircase, a lower bound")
    return ClosenessReport(comparisons, sector, notes)


@dataclass
class CalibratedVerdict:
    status: str
    report: ClosenessReport
    provenance: str

    def lines(self) -> list[str]:
        return self.report.lines() + [f"provenance: {self.provenance}", f"verdict: {self.status}"]


def calibrate_typicality(
    general: ProcessMatrix,
    reference: ProcessMatrix,
    reference_verdict: TypicalityVerdict | bool,
    c: ClosenessCriterion | None = None,
    sector: str | None = None,
) -> CalibratedVerdict:
    """The general process inherits the reference's verdict when the two are close."""
    report = are_close(general, reference, c, sector)
    typical = reference_verdict.typical if isinstance(reference_verdict, TypicalityVerdict) else bool(reference_verdict)
    if not report.close:
        return CalibratedVerdict("uncalibrated", report, "not close to the reference")
    status = "typical" if typical else "atypical"
    cond = reference_verdict.condition.value if isinstance(reference_verdict, TypicalityVerdict) else "given"
    return CalibratedVerdict(status, report, f"inherited from reference ({cond} verdict)")


# -- threshold self-test ----------------------------------------------------

def sector_capacities(amps: SectoredAmplitudes, dims: Sequence[int], c: ClosenessCriterion) -> dict:
    """Closed-form capacities per sector and direction at the criterion's imprecisions."""
    p_ml, p_mv = marginal_probabilities(amps)
    out = {}
    for sector, p, d in zip(SECTORS, (p_ml, p_mv), dims):
        for k, direction in enumerate(DIRECTIONS):
            for e in c.eps_for(direction):
                out[(sector, direction, e)] = q_ent_closed_form(min(max(float(p[k]), 0.0), 1.0), e, d)
    return out


@dataclass
class SelfTestReport:
    samples: int
    close_to_reference: int
    violations: int

    @property
    def accepted(self) -> bool:
        return self.violations == 0

    def lines(self) -> list[str]:
        return [
            f"samples: {self.samples}",
            f"close_to_reference: {self.close_to_reference}",
            f"close_but_atypical: {self.violations}",
            f"accepted: {str(self.accepted).lower()}",
        ]


def threshold_self_test(
    c: ClosenessCriterion,
    reference: SectoredAmplitudes,
    condition="V",
    thresholds: TendencyThresholds | None = None,
    dims: Sequence[int] = (2, 2),
    samples: int = 100,
    seed=0,
) -> SelfTestReport:
    """Accept a criterion only if sampled models close to a typical reference are typical too."""
    cond = Condition.parse(condition)
    if not classify(reference, cond, thresholds).typical:
        raise DomainError("the self-test reference must itself be typical")
    ref_caps = sector_capacities(reference, dims, c)
    rng = rng_from(seed)
    close = bad = 0
    for _ in range(samples):
        amps = random_sectored_amplitudes(rng)
        caps = sector_capacities(amps, dims, c)
        if all(abs(caps[k] - ref_caps[k]) <= c.threshold(k[1], k[2]) + 1e-12 for k in caps):
            close += 1
            if not classify(amps, cond, thresholds).typical:
                bad += 1
    return SelfTestReport(samples, close, bad)


__all__ = [
    "ClosenessCriterion",
    "Comparison",
    "ClosenessReport",
    "CalibratedVerdict",
    "SelfTestReport",
    "NORMALIZATION_NOTE",
    "are_close",
    "calibrate_typicality",
    "sector_capacities",
    "threshold_self_test",
]
