"""One-shot entanglement-transmission capacities as causality measures.

Capacities are in bits. ``forward`` means A sends to B over (a2 -> b1) and
uses ``p1``; ``backward`` means B sends to A over (b2 -> a1) and uses ``p2``.

Two independent routes exist for harmonic clean models:

* :func:`q_ent_closed_form` evaluates the exact staircase formula;
* :func:`fidelity_oracle` computes the entanglement fidelity of the probe
  strategy purely through the Born rule, and :func:`staircase_capacity`
  turns it into a capacity.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import DimError, DomainError, InversionError, ModelClassError, PartyError
from .process_core import ProcessMatrix, born_value, can_signal
from .tensor_core import LabeledOperator

DIRECTIONS = ("forward", "backward")
TIE_SLACK = 1e-12
ORACLE_SLACK = 1e-9
FIT_TOL = 1e-8
CSV_HEADER = ("direction", "eps", "capacity_bits")


def _check_direction(direction: str) -> str:
    if direction not in DIRECTIONS:
        raise ValueError(f"direction must be 'forward' or 'backward', got {direction!r}")
    return direction


def _exact(*xs) -> bool:
    return all(isinstance(x, Rational) for x in xs)


# -- closed form ---------------------------------------------------------------

def max_code_dim(p, eps, wire_dim: int) -> int:
    """Largest ``m <= wire_dim`` with ``m <= sqrt(1 / (1 - eps/(1-p)))``, or ``wire_dim`` if ``p >= 1-eps``.

    The bound is evaluated as ``(1-p)(m^2-1) <= eps m^2``, which is the same
    inequality without the division. Rational inputs are compared exactly;
    floats get a ``1e-12`` slack so that exact ties count as admissible.
    """
    wire_dim = int(wire_dim)
    if wire_dim < 1:
        raise DomainError(f"wire dimension must be >= 1, got {wire_dim}")
    if not (0 <= p <= 1):
        raise DomainError(f"p must lie in [0, 1], got {p!r}")
    if not (0 <= eps <= 1):
        raise DomainError(f"eps must lie in [0, 1], got {eps!r}")
    slack = 0 if _exact(p, eps) else TIE_SLACK
    if p >= 1 - eps - slack:
        return wire_dim
    m = 1
    while m < wire_dim and (1 - p) * ((m + 1) ** 2 - 1) <= eps * (m + 1) ** 2 + slack:
        m += 1
    return m


@dataclass(frozen=True)
class CapacityQuery:
    """``p_forward`` is ``p1`` with ``wire_dim = |a2|`` forward, ``p2`` with ``|b2|`` backward."""

    p_forward: float
    eps: float
    wire_dim: int

    def __post_init__(self):
        max_code_dim(self.p_forward, self.eps, self.wire_dim)


def q_ent_closed_form(p, eps=None, wire_dim: int | None = None) -> float:
    """Capacity in bits; accepts a :class:`CapacityQuery` or ``(p, eps, wire_dim)``."""
    if isinstance(p, CapacityQuery):
        p, eps, wire_dim = p.p_forward, p.eps, p.wire_dim
    elif eps is None or wire_dim is None:
        raise TypeError("q_ent_closed_form needs a CapacityQuery or p, eps and wire_dim")
    return math.log2(max_code_dim(p, eps, wire_dim))


def q_ent_zero_threshold(eps):
    """``1 - 4 eps / 3``: below this ``p`` the capacity vanishes (for eps in [0, 3/4])."""
    if not (0 <= eps <= Fraction(3, 4)):
        raise DomainError(f"zero-capacity threshold needs eps in [0, 3/4], got {eps!r}")
    if _exact(eps):
        return 1 - Fraction(4, 3) * eps
    return 1 - 4 * eps / 3


def saturates(p, eps, wire_dim: int) -> bool:
    """``eps/(1-p) >= 1 - 1/d^2``."""
    if p >= 1:
        return True
    slack = 0 if _exact(p, eps) else TIE_SLACK
    return eps >= (1 - p) * (1 - Fraction(1, wire_dim * wire_dim)) - slack


# -- Born-rule oracle ----------------------------------------------------------

def _roles(w: ProcessMatrix, direction: str):
    _check_direction(direction)
    if len(w.parties) != 2:
        raise PartyError("capacities are defined for bipartite processes")
    first, second = w.parties
    return (first, second) if direction == "forward" else (second, first)


def wire_dims(w: ProcessMatrix, direction: str) -> tuple[int, int]:
    sender, receiver = _roles(w, direction)
    return sender.d_out, receiver.d_in


def _embed(k: int, l: int, d: int) -> np.ndarray:
    mat = np.zeros((d, d), dtype=complex)
    mat[k, l] = 1
    return mat


def fidelity_oracle(w: ProcessMatrix, direction: str, m: int) -> float:
    """Entanglement fidelity of the probe strategy, computed through the Born rule.

    The sender discards its input and feeds half of an ``m``-dimensional
    maximally entangled pair into the first ``m`` levels of its output; the
    receiver emits the maximally mixed state and projects its input, jointly
    with the reference, onto the same maximally entangled state. Expanding the
    reference gives ``(1/m^2) sum_kl Tr[|l><k| C(|k><l|)]`` where ``C`` is the
    effective channel, i.e. a sum of multilinear Born values.
    """
    sender, receiver = _roles(w, direction)
    d_send, d_recv = sender.d_out, receiver.d_in
    m = int(m)
    if m < 1 or m > min(d_send, d_recv):
        raise DimError(f"code dimension {m} exceeds the wire ({d_send} -> {d_recv})")
    eye_in = np.eye(sender.d_in)
    eye_out = np.eye(receiver.d_out)
    total = 0j
    for k in range(m):
        for l in range(m):
            prep = LabeledOperator(sender.choi_registry, d_send * np.kron(_embed(k, l, d_send), eye_in))
            test = LabeledOperator(receiver.choi_registry, np.kron(eye_out, _embed(l, k, d_recv).T))
            total += born_value(w, {sender.name: prep, receiver.name: test})
    return float(total.real) / (m * m)


def staircase_code_dim(w: ProcessMatrix, direction: str, eps: float) -> int:
    """Largest ``m`` whose probe fidelity is at least ``1 - eps``."""
    d = min(wire_dims(w, direction))
    best = 1
    for m in range(2, d + 1):
        if fidelity_oracle(w, direction, m) >= 1 - eps - ORACLE_SLACK:
            best = m
    return best


def staircase_capacity(w: ProcessMatrix, direction: str, eps: float) -> float:
    return math.log2(staircase_code_dim(w, direction, eps))


# -- harmonic fitting ----------------------------------------------------------

@dataclass(frozen=True)
class HarmonicFit:
    p: np.ndarray
    wire_dim: int
    rho_xy: np.ndarray
    residual: float


def _merged(w: ProcessMatrix) -> np.ndarray:
    a, b = w.parties
    order = list(a.input_names + a.output_names + b.input_names + b.output_names)
    mat = w.w.permute(order).matrix
    dims = (a.d_in, a.d_out, b.d_in, b.d_out)
    return mat, dims


def _harmonic_operator(p, rho_x, rho_y, rho_xy, d) -> np.ndarray:
    eye = np.eye(d)
    phi = np.eye(d).reshape(-1)
    phi = np.outer(phi, phi) / d
    t = phi.reshape(d, d, d, d)
    # term 1: rho(a1) Phi(a2 b1) pi(b2)
    w1 = np.einsum("ij,kalb,cd->ikacjlbd", rho_x, t, eye / d)
    # term 2: rho(b1) Phi(a1 b2) pi(a2)
    w2 = np.einsum("ab,icjd,kl->ikacjlbd", rho_y, t, eye / d)
    # term 3: rho(a1 b1) pi(a2) pi(b2)
    w3 = np.einsum("iajb,kl,cd->ikacjlbd", rho_xy.reshape(d, d, d, d), eye / d, eye / d)
    n = d**4
    return p[0] * w1.reshape(n, n) + p[1] * w2.reshape(n, n) + p[2] * w3.reshape(n, n)


def fit_harmonic(w: ProcessMatrix, tol: float = FIT_TOL) -> HarmonicFit:
    """Recover ``(p1, p2, p3)`` and the initial-state marginals of a harmonic-type process.

    ``p1`` and ``p2`` come from the full-wire probe fidelity, which for this
    family is ``p + (1-p)/d^2`` whatever the initial state. The remaining
    structure is then rebuilt and compared; a mismatch means the process is
    not of harmonic type.
    """
    if len(w.parties) != 2:
        raise ModelClassError("harmonic models are bipartite")
    mat, dims = _merged(w)
    if len(set(dims)) != 1:
        raise ModelClassError(f"harmonic models need equal wire dimensions, got {dims}")
    d = dims[0]
    if d == 1:
        return HarmonicFit(np.array([0.0, 0.0, 1.0]), 1, np.ones((1, 1)), 0.0)
    ps = []
    for direction in DIRECTIONS:
        f = fidelity_oracle(w, direction, d)
        ps.append((f - 1 / d**2) / (1 - 1 / d**2))
    p1, p2 = (min(max(x, 0.0), 1.0) for x in ps)
    p3 = 1 - p1 - p2
    if p3 < -tol:
        raise ModelClassError(f"fidelities imply p1 + p2 = {p1 + p2:.6g} > 1")
    p3 = max(p3, 0.0)
    t = mat.reshape(d, d, d, d, d, d, d, d)
    # Tr over a2, b2 -> operator on (a1, b1)
    t_ab1 = np.einsum("iakbjalb->ikjl", t).reshape(d * d, d * d)
    t4 = t_ab1.reshape(d, d, d, d)
    marg_x = np.einsum("iaja->ij", t4)
    marg_y = np.einsum("aiaj->ij", t4)
    pi = np.eye(d) / d
    rho_x = (marg_x - p2 * pi) / (1 - p2) if 1 - p2 > 1e-12 else pi
    rho_y = (marg_y - p1 * pi) / (1 - p1) if 1 - p1 > 1e-12 else pi
    if p3 > 1e-12:
        rho_xy = (t_ab1 - p1 * np.kron(rho_x, pi) - p2 * np.kron(pi, rho_y)) / p3
    else:
        rho_xy = np.kron(rho_x, rho_y)
    rebuilt = _harmonic_operator(np.array([p1, p2, p3]), rho_x, rho_y, rho_xy, d)
    residual = float(np.max(np.abs(rebuilt - mat)))
    if residual > tol:
        raise ModelClassError(f"process is not of harmonic clean type (residual {residual:.3g})")
    return HarmonicFit(np.array([p1, p2, p3]), d, rho_xy, residual)


@dataclass(frozen=True)
class CapacityValue:
    bits: float
    method: str


def capacity_profile(w: ProcessMatrix, direction: str, oracle: bool = True) -> Callable[[float], CapacityValue]:
    """Capacity as a function of ``eps`` for one process and direction.

    Harmonic-type processes use the closed form with fitted probabilities;
    anything else falls back to the probe staircase when ``oracle`` is set.
    The expensive part runs once, so evaluating many imprecisions is cheap.
    """
    _check_direction(direction)
    try:
        fit = fit_harmonic(w)
    except ModelClassError:
        if not oracle:
            raise
        d = min(wire_dims(w, direction))
        fids = [(m, fidelity_oracle(w, direction, m)) for m in range(2, d + 1)]

        def staircase(eps) -> CapacityValue:
            best = max((m for m, f in fids if f >= 1 - eps - ORACLE_SLACK), default=1)
            return CapacityValue(math.log2(best), "probe-staircase")

        return staircase
    p = float(fit.p[0] if direction == "forward" else fit.p[1])

    def closed(eps) -> CapacityValue:
        return CapacityValue(q_ent_closed_form(p, eps, fit.wire_dim), "closed-form")

    return closed


def q_ent(w: ProcessMatrix, direction: str, eps: float, oracle: bool = True) -> CapacityValue:
    """Capacity of an arbitrary bipartite process at one imprecision."""
    return capacity_profile(w, direction, oracle)(eps)


# -- curves ----------------------------------------------------------------------

@dataclass(frozen=True)
class CapacityCurve:
    direction: str
    points: tuple[tuple[float, float], ...]

    def __post_init__(self):
        _check_direction(self.direction)
        pts = tuple(sorted((float(e), float(c)) for e, c in self.points))
        object.__setattr__(self, "points", pts)

    @property
    def eps(self) -> np.ndarray:
        return np.array([e for e, _ in self.points])

    @property
    def capacities(self) -> np.ndarray:
        return np.array([c for _, c in self.points])

    def is_monotone(self, tol: float = 1e-12) -> bool:
        caps = self.capacities
        return bool(np.all(np.diff(caps) >= -tol))


def capacity_curve(p, wire_dim: int, eps_grid: Iterable, direction: str = "forward") -> CapacityCurve:
    return CapacityCurve(direction, tuple((float(e), q_ent_closed_form(p, e, wire_dim)) for e in eps_grid))


def eps_grid(start, stop, step) -> list[Fraction]:
    """Inclusive grid ``start, start+step, ..., <= stop`` in exact arithmetic."""
    start, stop, step = Fraction(str(start)), Fraction(str(stop)), Fraction(str(step))
    if step <= 0:
        raise ValueError("grid step must be positive")
    if stop < start:
        raise ValueError("grid stop must not be below start")
    n = int((stop - start) / step)
    return [start + k * step for k in range(n + 1)]


def _fmt(x: float) -> str:
    out = format(float(x), ".12g")
    return "0" if out == "-0" else out


def curves_to_csv(curves: Sequence[CapacityCurve]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for curve in curves:
        for e, c in curve.points:
            writer.writerow((curve.direction, _fmt(e), _fmt(c)))
    return buf.getvalue()


def read_curves_csv(text: str) -> dict[str, CapacityCurve]:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or tuple(r.strip() for r in rows[0]) != CSV_HEADER:
        raise InversionError(f"CSV must start with header {','.join(CSV_HEADER)}")
    points: dict[str, list] = {}
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != 3:
            raise InversionError(f"line {lineno}: expected 3 columns, got {len(row)}")
        direction = row[0].strip()
        if direction not in DIRECTIONS:
            raise InversionError(f"line {lineno}: unknown direction {direction!r}")
        try:
            e, c = float(row[1]), float(row[2])
        except ValueError as exc:
            raise InversionError(f"line {lineno}: {exc}") from None
        points.setdefault(direction, []).append((e, c))
    return {k: CapacityCurve(k, tuple(v)) for k, v in points.items()}


# -- inversion -------------------------------------------------------------------

@dataclass
class CurveInversion:
    p: float
    interval: tuple[float, float]
    wire_dim: int | None
    note: str = ""


def _levels(curve: CapacityCurve) -> list[int]:
    out = []
    for e, c in curve.points:
        m = int(round(2.0**c))
        if m < 1 or abs(math.log2(m) - c) > 1e-9:
            raise InversionError(f"capacity {c!r} at eps={e!r} is not log2 of an integer")
        out.append(m)
    return out


def invert_curve(curve: CapacityCurve) -> CurveInversion:
    """Bracket the step locations ``eps_m = (1-p)(1-1/m^2)`` and intersect the implied ``p`` ranges."""
    if not curve.points:
        raise InversionError(f"{curve.direction} curve is empty")
    if not curve.is_monotone():
        raise InversionError(f"{curve.direction} curve is not non-decreasing in eps")
    eps = [e for e, _ in curve.points]
    levels = _levels(curve)
    if eps[0] == 0 and levels[0] > 1:
        # only p = 1 gives a positive capacity at zero imprecision
        if any(lv != levels[0] for lv in levels):
            raise InversionError("capacity is saturated at eps=0 but changes later")
        return CurveInversion(1.0, (1.0, 1.0), levels[0], "saturated at eps=0")
    if levels[0] > 1:
        raise InversionError("curve must start at eps=0 or at zero capacity")
    lo, hi = 0.0, 1.0
    steps = 0
    for (e0, m0), (e1, m1) in zip(zip(eps, levels), zip(eps[1:], levels[1:])):
        for m in range(m0 + 1, m1 + 1):
            c = 1 - 1 / m**2
            lo = max(lo, 1 - e1 / c)
            hi = min(hi, 1 - e0 / c)
            steps += 1
    if lo > hi + 1e-12:
        raise InversionError(f"{curve.direction} step pattern is impossible for any p")
    if steps == 0:
        bound = max(0.0, 1 - eps[-1] / 0.75)
        return CurveInversion(0.0, (0.0, bound), None, f"no step observed; p < {bound:.6g}")
    p_hat = 0.5 * (lo + hi)
    if lo <= 0:
        p_hat = 0.0
    m_last = levels[-1]
    next_step = (1 - lo) * (1 - 1 / (m_last + 1) ** 2)
    dim = m_last if eps[-1] >= next_step else None
    note = "" if dim is not None else "grid ends before the saturation plateau is certain"
    return CurveInversion(p_hat, (lo, hi), dim, note)


@dataclass
class InversionResult:
    abs_alpha: np.ndarray
    p: np.ndarray
    dims: tuple[int, int] | None
    note: str = ""

    def lines(self) -> list[str]:
        out = [
            "abs_alpha: " + ",".join(_fmt(x) for x in self.abs_alpha),
            "p: " + ",".join(_fmt(x) for x in self.p),
        ]
        if self.dims is None:
            out.append("dims: undetermined")
        else:
            out.append(f"dims: a2={self.dims[0]} b2={self.dims[1]}")
        if self.note:
            out.append(f"note: {self.note}")
        return out


def invert_capacity_curves(fwd: CapacityCurve, bwd: CapacityCurve) -> InversionResult:
    if fwd.direction != "forward" or bwd.direction != "backward":
        raise InversionError("need one forward and one backward curve")
    f = invert_curve(fwd)
    b = invert_curve(bwd)
    if f.interval[0] + b.interval[0] > 1 + 1e-12:
        raise InversionError("forward and backward weights exceed 1")
    p1, p2 = f.p, b.p
    if p1 + p2 > 1:
        scale = 1 / (p1 + p2)
        p1, p2 = p1 * scale, p2 * scale
    p = np.array([p1, p2, max(0.0, 1 - p1 - p2)])
    notes = [n for n in (f.note, b.note) if n]
    if p[0] == 0 and p[1] == 0:
        dims = None
        notes.append("|alpha_3| = 1: subsystem dimensions are not determined")
    elif f.wire_dim is None or b.wire_dim is None:
        dims = None
    else:
        dims = (f.wire_dim, b.wire_dim)
    return InversionResult(np.sqrt(p), p, dims, "; ".join(notes))


# -- causality-measure axioms -------------------------------------------------

@dataclass(frozen=True)
class LocalOperation:
    """Channels a party applies around its own instrument.

    ``pre`` acts on what the party receives before its instrument, ``post``
    on what it sends after. Both are Kraus lists; ``None`` means identity.
    """

    party: str
    pre: tuple[np.ndarray, ...] | None = None
    post: tuple[np.ndarray, ...] | None = None


def _conjugate_on(op: LabeledOperator, names: Sequence[str], kraus: Sequence[np.ndarray]) -> LabeledOperator:
    rest = [n for n in op.names if n not in names]
    moved = op.permute(list(names) + rest)
    d_rest = moved.matrix.shape[0] // int(np.prod([op.dim_of(n) for n in names]))
    out = np.zeros_like(moved.matrix)
    for k in kraus:
        big = np.kron(np.asarray(k, dtype=complex), np.eye(d_rest))
        out += big @ moved.matrix @ big.conj().T
    return LabeledOperator(moved.labels, out).permute(op.names)


def apply_local_operation(w: ProcessMatrix, op: LocalOperation) -> ProcessMatrix:
    """Process seen by instruments ``M`` once the party wraps them as ``post . M . pre``."""
    party = w.party(op.party)
    out = w.w
    if op.pre is not None:
        for k in op.pre:
            if np.asarray(k).shape != (party.d_in, party.d_in):
                raise DimError("pre-processing channels must map the input space to itself")
        out = _conjugate_on(out, party.input_names, op.pre)
    if op.post is not None:
        for k in op.post:
            if np.asarray(k).shape != (party.d_out, party.d_out):
                raise DimError("post-processing channels must map the output space to itself")
        out = _conjugate_on(out, party.output_names, [np.asarray(k).T for k in op.post])
    return ProcessMatrix(w.parties, out)


def apply_local_operations(w: ProcessMatrix, ops: Iterable[LocalOperation]) -> ProcessMatrix:
    for op in ops:
        w = apply_local_operation(w, op)
    return w


# the closed form is a causality measure only below eps = 3/4; at 3/4 a
# non-signalling process already reaches one bit
AXIOM_EPS = tuple(k / 20 for k in range(15))


@dataclass
class AxiomReport:
    checks: int = 0
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def lines(self) -> list[str]:
        return [f"checks: {self.checks}", f"violations: {len(self.violations)}"] + [f"  {v}" for v in self.violations]


def axiom_suite(
    w: ProcessMatrix,
    local_ops: Sequence[Sequence[LocalOperation]] = (),
    measure: Callable[[ProcessMatrix, str, float], float] | None = None,
    eps_values: Sequence[float] = AXIOM_EPS,
    tol: float = 1e-9,
) -> AxiomReport:
    """Check the causality-measure axioms on ``w`` and its locally transformed versions.

    * the measure does not increase under any of the local operation pairs;
    * it is non-negative;
    * it is positive only in directions where signalling is possible;
    * it never exceeds ``log2`` of the wire dimension.

    The default measure is :func:`q_ent`.
    """
    report = AxiomReport()
    processes = [("base", w)] + [(f"local op #{k}", apply_local_operations(w, pair)) for k, pair in enumerate(local_ops)]
    for direction in DIRECTIONS:
        sender, receiver = _roles(w, direction)
        bound = math.log2(min(sender.d_out, receiver.d_in))
        values = {}
        for name, proc in processes:
            if measure is None:
                profile = capacity_profile(proc, direction)
                values[name] = [profile(e).bits for e in eps_values]
            else:
                values[name] = [measure(proc, direction, e) for e in eps_values]
            signals = None
            for e, v in zip(eps_values, values[name]):
                report.checks += 3
                where = f"{name} {direction} eps={e:g}"
                if v < -tol:
                    report.violations.append(f"{where}: negative measure {v:.6g}")
                if v > bound + tol:
                    report.violations.append(f"{where}: measure {v:.6g} above log2 wire dim {bound:.6g}")
                if v > tol:
                    if signals is None:
                        signals = can_signal(proc, sender.name, receiver.name)
                    if not signals:
                        report.violations.append(f"{where}: measure {v:.6g} > 0 without signalling")
        for name, _ in processes[1:]:
            for e, before, after in zip(eps_values, values["base"], values[name]):
                report.checks += 1
                if after > before + tol:
                    report.violations.append(f"{name} {direction} eps={e:g}: measure increased {before:.6g} -> {after:.6g}")
    return report


__all__ = [
    "DIRECTIONS",
    "CapacityQuery",
    "CapacityCurve",
    "CapacityValue",
    "HarmonicFit",
    "InversionResult",
    "LocalOperation",
    "AxiomReport",
    "max_code_dim",
    "q_ent_closed_form",
    "q_ent_zero_threshold",
    "saturates",
    "fidelity_oracle",
    "staircase_code_dim",
    "staircase_capacity",
    "fit_harmonic",
    "q_ent",
    "capacity_profile",
    "capacity_curve",
    "eps_grid",
    "curves_to_csv",
    "read_curves_csv",
    "invert_curve",
    "invert_capacity_curves",
    "apply_local_operation",
    "apply_local_operations",
    "axiom_suite",
    "wire_dims",
]
