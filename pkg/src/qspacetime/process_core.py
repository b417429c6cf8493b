"""Process matrices, instrument Choi operators and the generalized Born rule.

Conventions
-----------
* A party's Choi operator lives on ``outputs + inputs`` (in that label order)
  and carries the ``|in|*|out|`` factor, so a trace-preserving map has
  ``Tr_out M = |out| * 1_in`` and trace ``|in|*|out|``. Process matrices
  therefore have trace one.
* Joint probabilities are ``Tr[(M_1 x ... x M_n)^T W]`` with the transpose
  taken in the product basis of the registry.
* A process that is a channel ``C`` from inputs to outputs is represented as
  ``(1/|in|) sum_ij |i><j| x C(|i><j|)``; e.g. the identity wire from ``a2`` to
  ``b1`` is the normalized maximally entangled state on ``(a2, b1)``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import DimError, PartyError
from .tensor_core import (
    DEFAULT_TOL,
    LabeledOperator,
    Subsystem,
    as_registry,
    hermiticity_residue,
    identity,
    is_psd,
    min_eigenvalue,
    partial_trace,
    psd_scale,
)

SIGNAL_TOL = 1e-12
TRACE_TOL = 1e-9

SIGNALLING_FAMILY_NOTE = (
    "spectators closed by trace-input/emit-maximally-mixed; sender channels: replacement by each "
    "state of an informationally complete pure-state set, two-outcome measure-and-prepare for every "
    "(IC projector, IC state) pair, identity and completely depolarizing; the family affinely spans "
    "all trace-preserving maps of the sender"
)


@dataclass(frozen=True)
class PartySpec:
    """A local laboratory: the systems it receives and the systems it sends out."""

    name: str
    inputs: tuple[Subsystem, ...]
    outputs: tuple[Subsystem, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "inputs", _labels(self.inputs))
        object.__setattr__(self, "outputs", _labels(self.outputs))
        as_registry(self.inputs + self.outputs)

    @property
    def input_names(self) -> tuple[str, ...]:
        return tuple(s.name for s in self.inputs)

    @property
    def output_names(self) -> tuple[str, ...]:
        return tuple(s.name for s in self.outputs)

    @property
    def names(self) -> tuple[str, ...]:
        return self.output_names + self.input_names

    @property
    def d_in(self) -> int:
        return int(np.prod([s.dim for s in self.inputs], dtype=np.int64))

    @property
    def d_out(self) -> int:
        return int(np.prod([s.dim for s in self.outputs], dtype=np.int64))

    @property
    def choi_registry(self) -> tuple[Subsystem, ...]:
        return self.outputs + self.inputs


def _labels(value) -> tuple[Subsystem, ...]:
    if isinstance(value, Subsystem):
        return (value,)
    if isinstance(value, tuple) and len(value) == 2 and isinstance(value[0], str):
        return (Subsystem(value[0], int(value[1])),)
    return tuple(as_registry(value))


def simple_party(name: str, input_label: str, output_label: str, dim: int, out_dim: int | None = None) -> PartySpec:
    return PartySpec(name, ((input_label, dim),), ((output_label, dim if out_dim is None else out_dim),))


@dataclass(frozen=True)
class ProcessMatrix:
    parties: tuple[PartySpec, ...]
    w: LabeledOperator

    def __post_init__(self):
        parties = tuple(self.parties)
        object.__setattr__(self, "parties", parties)
        names = [p.name for p in parties]
        if len(set(names)) != len(names):
            raise PartyError(f"duplicate party names {names}")
        claimed = [s for p in parties for s in p.inputs + p.outputs]
        claimed_names = [s.name for s in claimed]
        if len(set(claimed_names)) != len(claimed_names):
            raise PartyError("a subsystem is claimed by two parties")
        if sorted(claimed_names) != sorted(self.w.names):
            raise PartyError(f"party systems {sorted(claimed_names)} do not cover the registry {sorted(self.w.names)}")
        for s in claimed:
            if self.w.dim_of(s.name) != s.dim:
                raise DimError(f"subsystem {s.name!r} has dim {self.w.dim_of(s.name)} in W but {s.dim} in its party")

    def party(self, name: str) -> PartySpec:
        for p in self.parties:
            if p.name == name:
                return p
        raise PartyError(f"no party named {name!r}; parties are {[p.name for p in self.parties]}")

    @property
    def party_names(self) -> tuple[str, ...]:
        return tuple(p.name for p in self.parties)

    def canonical(self) -> LabeledOperator:
        """W permuted to party order, each party as ``outputs + inputs``."""
        return self.w.permute([n for p in self.parties for n in p.names])


@dataclass(frozen=True)
class ChoiInstrument:
    party: PartySpec
    elements: tuple[LabeledOperator, ...]

    def __post_init__(self):
        elements = tuple(self.elements)
        object.__setattr__(self, "elements", elements)
        target = [s.name for s in self.party.choi_registry]
        for el in elements:
            if sorted(el.names) != sorted(target):
                raise DimError(f"instrument element on {el.names} does not match party systems {target}")

    def total(self) -> LabeledOperator:
        out = self.elements[0]
        for el in self.elements[1:]:
            out = out + el
        return out

    def check(self, tol: float = DEFAULT_TOL) -> bool:
        """CP elements summing to a trace-preserving map."""
        if not all(is_psd(el, tol) for el in self.elements):
            return False
        marg = partial_trace(self.total(), self.party.output_names).permute(self.party.input_names)
        target = self.party.d_out * np.eye(self.party.d_in)
        return float(np.max(np.abs(marg.matrix - target))) <= tol * max(1, self.party.d_out)


def choi_of_kraus(party: PartySpec, kraus: Sequence[np.ndarray]) -> LabeledOperator:
    """Choi operator ``|in||out| (M x id)(|Phi><Phi|)`` of ``M(X) = sum_k K X K^dag``."""
    d_in, d_out = party.d_in, party.d_out
    mat = np.zeros((d_in * d_out, d_in * d_out), dtype=complex)
    for k in kraus:
        k = np.asarray(k, dtype=complex)
        if k.shape != (d_out, d_in):
            raise DimError(f"Kraus operator of shape {k.shape}; party {party.name} needs ({d_out}, {d_in})")
        v = k.reshape(-1)
        mat += np.outer(v, v.conj())
    return LabeledOperator(party.choi_registry, d_out * mat)


def instrument_from_kraus(party: PartySpec, outcomes: Sequence[Sequence[np.ndarray]]) -> ChoiInstrument:
    return ChoiInstrument(party, tuple(choi_of_kraus(party, ks) for ks in outcomes))


def replacement_choi(party: PartySpec, state: np.ndarray) -> LabeledOperator:
    """Discard the input, prepare ``state`` on the output."""
    return LabeledOperator(party.choi_registry, party.d_out * np.kron(state, np.eye(party.d_in)))


def measure_prepare_choi(party: PartySpec, effects: Sequence[np.ndarray], states: Sequence[np.ndarray]) -> LabeledOperator:
    """Measure POVM ``effects`` on the input, prepare ``states[i]`` on outcome ``i``."""
    mat = sum(np.kron(s, np.asarray(e).T) for e, s in zip(effects, states))
    return LabeledOperator(party.choi_registry, party.d_out * mat)


def closing_choi(party: PartySpec) -> LabeledOperator:
    """Trace the input and emit the maximally mixed state."""
    return identity(party.choi_registry)


def _product_element(w: ProcessMatrix, elements: Mapping[str, LabeledOperator]) -> LabeledOperator:
    if sorted(elements) != sorted(w.party_names):
        raise PartyError(f"elements given for {sorted(elements)}, process has parties {sorted(w.party_names)}")
    mats = []
    for p in w.parties:
        el = elements[p.name]
        if sorted(el.names) != sorted(p.names):
            raise PartyError(f"element for {p.name} acts on {el.names}, expected {p.names}")
        mats.append(el.permute(p.names).matrix)
    out = mats[0]
    for m in mats[1:]:
        out = np.kron(out, m)
    return LabeledOperator(w.canonical().labels, out)


def born_value(w: ProcessMatrix, elements: Mapping[str, LabeledOperator]) -> complex:
    """The multilinear functional ``Tr[(x_p E_p)^T W]`` for arbitrary party operators."""
    x = _product_element(w, elements)
    return complex(np.sum(x.matrix * w.canonical().matrix))


def born_probability(
    w: ProcessMatrix,
    instruments: Mapping[str, ChoiInstrument] | Sequence[ChoiInstrument],
    outcome: Mapping[str, int] | Sequence[int],
) -> float:
    if not isinstance(instruments, Mapping):
        instruments = {ins.party.name: ins for ins in instruments}
    if not isinstance(outcome, Mapping):
        outcome = dict(zip([ins for ins in instruments], outcome))
    if sorted(instruments) != sorted(w.party_names):
        raise PartyError(f"instruments given for {sorted(instruments)}, process has parties {sorted(w.party_names)}")
    for name, ins in instruments.items():
        if ins.party.name != name:
            raise PartyError(f"instrument keyed {name!r} belongs to party {ins.party.name!r}")
    elements = {name: instruments[name].elements[outcome[name]] for name in instruments}
    val = born_value(w, elements)
    if abs(val.imag) > 1e-9:
        raise ValueError(f"Born value has imaginary residue {val.imag:.3e}; process or elements are not Hermitian")
    return float(val.real)


def contract(w: ProcessMatrix, party: str, element: LabeledOperator) -> ProcessMatrix:
    """Plug ``element`` into ``party``; returns the operator on the remaining parties."""
    p = w.party(party)
    rest = [q for q in w.parties if q.name != party]
    rest_names = [n for q in rest for n in q.names]
    if not rest:
        raise PartyError("cannot contract the last party; use born_value")
    arr = w.w.permute(list(p.names) + rest_names).matrix
    dp = p.d_in * p.d_out
    dr = arr.shape[0] // dp
    c = element.permute(p.names).matrix
    out = np.einsum("ji,jaib->ab", c, arr.reshape(dp, dr, dp, dr))
    labels = [w.w.labels[w.w.names.index(n)] for n in rest_names]
    return ProcessMatrix(tuple(rest), LabeledOperator(labels, out))


def close_party(w: ProcessMatrix, party: str) -> ProcessMatrix:
    p = w.party(party)
    rest = tuple(q for q in w.parties if q.name != party)
    return ProcessMatrix(rest, partial_trace(w.w, p.names))


def informationally_complete_states(d: int) -> list[np.ndarray]:
    """``d**2`` pure-state projectors spanning all ``d x d`` matrices."""
    vecs = []
    for k in range(d):
        v = np.zeros(d, dtype=complex)
        v[k] = 1
        vecs.append(v)
    for j, k in itertools.combinations(range(d), 2):
        for phase in (1, 1j):
            v = np.zeros(d, dtype=complex)
            v[j] = 1 / np.sqrt(2)
            v[k] = phase / np.sqrt(2)
            vecs.append(v)
    return [np.outer(v, v.conj()) for v in vecs]


def channel_family(party: PartySpec) -> list[LabeledOperator]:
    """Trace-preserving channels of ``party`` whose affine hull is every channel."""
    d_in, d_out = party.d_in, party.d_out
    states = informationally_complete_states(d_out)
    effects = informationally_complete_states(d_in)
    fixed = states[0]
    family = [replacement_choi(party, s) for s in states]
    for e in effects:
        for s in states[1:]:
            family.append(measure_prepare_choi(party, [e, np.eye(d_in) - e], [s, fixed]))
    family.append(replacement_choi(party, np.eye(d_out) / d_out))
    if d_in == d_out:
        family.append(choi_of_kraus(party, [np.eye(d_in)]))
    return family


def reduced_for(w: ProcessMatrix, keep: Sequence[str]) -> ProcessMatrix:
    """Close every party not in ``keep`` with the trace-and-emit-maximally-mixed channel."""
    out = w
    for p in w.parties:
        if p.name not in keep:
            out = close_party(out, p.name)
    return out


def signalling_residual(w: ProcessMatrix, sender: str, receiver: str) -> float:
    """Largest change of the receiver's reduced process over the sender's channel family."""
    w.party(sender)
    w.party(receiver)
    if sender == receiver:
        raise PartyError("sender and receiver must differ")
    pair = reduced_for(w, (sender, receiver))
    reduced = [contract(pair, sender, c).w.matrix for c in channel_family(pair.party(sender))]
    ref = reduced[0]
    return max(float(np.max(np.abs(r - ref))) for r in reduced)


def can_signal(w: ProcessMatrix, sender: str, receiver: str, tol: float = SIGNAL_TOL) -> bool:
    return signalling_residual(w, sender, receiver) > tol


@dataclass
class ValidationReport:
    trace: complex
    trace_ok: bool
    hermiticity_residue: float
    min_eigenvalue: float
    psd: bool
    signalling: dict[tuple[str, str], bool] = field(default_factory=dict)
    family_note: str = SIGNALLING_FAMILY_NOTE

    @property
    def valid(self) -> bool:
        return self.psd and self.trace_ok

    def lines(self) -> list[str]:
        out = [
            f"trace: {self.trace.real:.12g} ({'ok' if self.trace_ok else 'FAIL'})",
            f"hermiticity_residue: {self.hermiticity_residue:.3g}",
            f"min_eigenvalue: {self.min_eigenvalue:.12g} ({'ok' if self.psd else 'FAIL'})",
        ]
        for (a, b), val in self.signalling.items():
            out.append(f"signalling {a}->{b}: {str(val).lower()}")
        out.append(f"signalling_family: {self.family_note}")
        out.append(f"valid: {str(self.valid).lower()}")
        return out


def validate_process(w: ProcessMatrix, tol: float = DEFAULT_TOL, signal_tol: float = SIGNAL_TOL) -> ValidationReport:
    tr = w.w.trace()
    report = ValidationReport(
        trace=tr,
        trace_ok=abs(tr - 1) <= TRACE_TOL,
        hermiticity_residue=hermiticity_residue(w.w),
        min_eigenvalue=min_eigenvalue(w.w),
        psd=is_psd(w.w, tol),
    )
    for a, b in itertools.permutations(w.party_names, 2):
        report.signalling[(a, b)] = can_signal(w, a, b, signal_tol)
    return report


__all__ = [
    "PartySpec",
    "ProcessMatrix",
    "ChoiInstrument",
    "ValidationReport",
    "simple_party",
    "choi_of_kraus",
    "instrument_from_kraus",
    "replacement_choi",
    "measure_prepare_choi",
    "closing_choi",
    "born_value",
    "born_probability",
    "contract",
    "close_party",
    "channel_family",
    "reduced_for",
    "signalling_residual",
    "can_signal",
    "validate_process",
    "psd_scale",
]
