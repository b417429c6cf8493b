"""Builders for clean models, harmonic clean models and the partial-swap model.

Two-party processes use the registry order ``a1, a2, b1, b2``; party ``A``
receives on ``a1`` and sends on ``a2``, likewise for ``B``. The quantum
gravitational party ``G`` only receives, on ``g``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import BranchRelationError, DimError, NormError, PartyError
from .process_core import PartySpec, ProcessMatrix, can_signal, simple_party
from .tensor_core import (
    LabeledOperator,
    LabeledVector,
    basis_vector,
    is_psd,
    max_entangled,
    max_entangled_vector,
    maximally_mixed,
    tensor_all,
)

NORM_TOL = 1e-10
AB_ORDER = ("a1", "a2", "b1", "b2")


class Relation(enum.Enum):
    FORWARD = "A->B"
    BACKWARD = "A<-B"
    DISCONNECTED = "A-B"

    @property
    def index(self) -> int:
        return {Relation.FORWARD: 1, Relation.BACKWARD: 2, Relation.DISCONNECTED: 3}[self]

    @classmethod
    def parse(cls, value) -> "Relation":
        if isinstance(value, Relation):
            return value
        if isinstance(value, (int, np.integer)):
            return (cls.FORWARD, cls.BACKWARD, cls.DISCONNECTED)[int(value) - 1]
        text = str(value).replace(" ", "").replace("→", "->").replace("←", "<-").replace("−", "-")
        for rel in cls:
            if rel.value == text:
                return rel
        raise ValueError(f"unknown causal relation {value!r}")

    def signals(self) -> tuple[bool, bool]:
        """(first party signals to second, second signals to first)."""
        return {Relation.FORWARD: (True, False), Relation.BACKWARD: (False, True), Relation.DISCONNECTED: (False, False)}[self]


def ab_parties(d: int, suffix: str = "") -> tuple[PartySpec, PartySpec]:
    return (
        simple_party("A", "a1" + suffix, "a2" + suffix, d),
        simple_party("B", "b1" + suffix, "b2" + suffix, d),
    )


def gravity_party(labels=(("g", 3),)) -> PartySpec:
    return PartySpec("G", tuple(labels), ())


def normalized_amplitudes(alpha, n: int | None = None) -> np.ndarray:
    alpha = np.asarray(alpha, dtype=complex).reshape(-1)
    if n is not None and alpha.size != n:
        raise DimError(f"expected {n} amplitudes, got {alpha.size}")
    norm = float(np.sum(np.abs(alpha) ** 2))
    if abs(norm - 1) > NORM_TOL:
        raise NormError(f"squared amplitudes sum to {norm!r}, not 1")
    return alpha


def product_psi(d: int, e3_dim: int = 1) -> LabeledVector:
    """The default initial state |0>|0>|0> on ``(x, y, e3)``."""
    return tensor_all_vectors([basis_vector("x", d, 0), basis_vector("y", d, 0), basis_vector("e3", e3_dim, 0)])


def tensor_all_vectors(vecs: Sequence[LabeledVector]) -> LabeledVector:
    out = vecs[0]
    for v in vecs[1:]:
        out = out.tensor(v)
    return out


def _as_psi(psi, d: int, e3_dim: int) -> LabeledVector:
    if psi is None:
        return product_psi(d, e3_dim)
    if isinstance(psi, LabeledVector):
        if psi.names != ("x", "y", "e3"):
            raise DimError(f"initial state must live on (x, y, e3), got {psi.names}")
        vec = psi
    else:
        vec = LabeledVector([("x", d), ("y", d), ("e3", e3_dim)], psi)
    if vec.dims[:2] != (d, d):
        raise DimError(f"initial state has x, y dims {vec.dims[:2]}, wire dimension is {d}")
    if abs(vec.norm() - 1) > NORM_TOL:
        raise NormError(f"initial state has norm {vec.norm()!r}")
    return vec


@dataclass(frozen=True)
class HarmonicCleanModel:
    """Three-branch clean model mixing A->B, A<-B and A-B.

    All wires ``a1, a2, b1, b2, e1, e2`` share ``wire_dim``; ``e3`` purifies the
    initial state and defaults to a trivial system.
    """

    alpha: np.ndarray
    wire_dim: int = 2
    e3_dim: int = 1
    psi: LabeledVector | None = field(default=None)

    def __post_init__(self):
        if int(self.wire_dim) < 1 or int(self.e3_dim) < 1:
            raise DimError("dimensions must be positive")
        object.__setattr__(self, "alpha", normalized_amplitudes(self.alpha, 3))
        object.__setattr__(self, "psi", _as_psi(self.psi, int(self.wire_dim), int(self.e3_dim)))
        object.__setattr__(self, "e3_dim", self.psi.dims[2])

    @property
    def p(self) -> np.ndarray:
        return np.abs(self.alpha) ** 2


def _check_i(i) -> int:
    if i not in (1, 2, 3):
        raise ValueError(f"branch index must be 1, 2 or 3, got {i!r}")
    return int(i)


def build_w_i(i: int, psi: LabeledVector | None = None, d: int = 2, e3_dim: int = 1) -> ProcessMatrix:
    """The definite-order process of branch ``i`` (1: A->B, 2: A<-B, 3: A-B)."""
    i = _check_i(i)
    psi = _as_psi(psi, d, e3_dim)
    if i == 1:
        rho = psi.reduced(["x"]).relabel({"x": "a1"})
        parts = [rho, max_entangled("a2", "b1", d), maximally_mixed("b2", d)]
    elif i == 2:
        rho = psi.reduced(["y"]).relabel({"y": "b1"})
        parts = [rho, max_entangled("a1", "b2", d), maximally_mixed("a2", d)]
    else:
        rho = psi.reduced(["x", "y"]).relabel({"x": "a1", "y": "b1"})
        parts = [rho, maximally_mixed("a2", d), maximally_mixed("b2", d)]
    return ProcessMatrix(ab_parties(d), tensor_all(parts).permute(AB_ORDER))


def harmonic_branches(model: HarmonicCleanModel) -> list[LabeledVector]:
    """The three branch vectors on ``a1 a2 b1 b2 e1 e2 e3`` (without the G factor)."""
    d = model.wire_dim
    psi = model.psi
    iw = max_entangled_vector
    terms = [
        [psi.relabel({"x": "a1", "y": "e2"}), iw("a2", "b1", d), iw("b2", "e1", d)],
        [psi.relabel({"x": "e1", "y": "b1"}), iw("b2", "a1", d), iw("a2", "e2", d)],
        [psi.relabel({"x": "a1", "y": "b1"}), iw("a2", "e1", d), iw("b2", "e2", d)],
    ]
    order = list(AB_ORDER) + ["e1", "e2", "e3"]
    return [tensor_all_vectors(t).permute(order) for t in terms]


def harmonic_vector(model: HarmonicCleanModel) -> LabeledVector:
    """``sum_i alpha_i |i>^g |w_i>`` on ``g a1 a2 b1 b2 e1 e2 e3``, assembled term by term."""
    d = model.wire_dim
    psi = model.psi
    iw = max_entangled_vector
    g = [basis_vector("g", 3, k) for k in range(3)]
    terms = [
        [g[0], psi.relabel({"x": "a1", "y": "e2"}), iw("a2", "b1", d), iw("b2", "e1", d)],
        [g[1], psi.relabel({"x": "e1", "y": "b1"}), iw("b2", "a1", d), iw("a2", "e2", d)],
        [g[2], psi.relabel({"x": "a1", "y": "b1"}), iw("a2", "e1", d), iw("b2", "e2", d)],
    ]
    order = ["g", *AB_ORDER, "e1", "e2", "e3"]
    out = None
    for amp, t in zip(model.alpha, terms):
        vec = amp * tensor_all_vectors(t).permute(order)
        out = vec if out is None else out + vec
    return out


def build_harmonic_purified(model: HarmonicCleanModel) -> ProcessMatrix:
    """``W^{GAB} = Tr_E |w><w|``."""
    keep = ["g", *AB_ORDER]
    w = harmonic_vector(model).reduced(keep)
    return ProcessMatrix((gravity_party(),) + ab_parties(model.wire_dim), w)


def build_harmonic_reduced(model: HarmonicCleanModel) -> ProcessMatrix:
    """``sum_i p_i W_i`` built directly from the branch processes."""
    d = model.wire_dim
    total = None
    for i, p in enumerate(model.p, start=1):
        term = float(p) * build_w_i(i, model.psi, d).w
        total = term if total is None else total + term
    return ProcessMatrix(ab_parties(d), total)


def trace_gravity(w: ProcessMatrix) -> ProcessMatrix:
    grav = [p for p in w.parties if p.name == "G"]
    if not grav:
        raise PartyError("process has no gravitational party G")
    rest = tuple(p for p in w.parties if p.name != "G")
    return ProcessMatrix(rest, w.w.ptrace(grav[0].names))


@dataclass(frozen=True)
class CleanBranch:
    vector: LabeledVector
    relation: Relation

    def __post_init__(self):
        object.__setattr__(self, "relation", Relation.parse(self.relation))


def branch_process(branch: CleanBranch, parties: Sequence[PartySpec]) -> ProcessMatrix:
    keep = [n for p in parties for n in p.names]
    return ProcessMatrix(tuple(parties), branch.vector.reduced(keep))


def check_branch(branch: CleanBranch, parties: Sequence[PartySpec]) -> None:
    w = branch_process(branch, parties)
    first, second = parties[0], parties[1]
    got = (can_signal(w, first.name, second.name), can_signal(w, second.name, first.name))
    want = branch.relation.signals()
    # a one-dimensional wire cannot carry a signal, so only the forbidden directions are checkable
    possible = (first.d_out > 1 and second.d_in > 1, second.d_out > 1 and first.d_in > 1)
    want = tuple(w_ and p_ for w_, p_ in zip(want, possible))
    if got != want:
        raise BranchRelationError(
            f"branch declared {branch.relation.value} but signalling ({first.name}->{second.name}, "
            f"{second.name}->{first.name}) is {got}"
        )


def build_clean_general(
    amps,
    branches: Sequence[CleanBranch],
    parties: Sequence[PartySpec] | None = None,
    gravity_label: str = "g",
) -> ProcessMatrix:
    """``Tr_E |sum_i a_i |i>^G |w_i>><.|`` for branches with declared causal relations.

    Labels of the branch vectors that belong to no party form the environment.
    Each branch is checked against its declared relation before mixing.
    """
    if not branches:
        raise ValueError("need at least one branch")
    amps = normalized_amplitudes(amps, len(branches))
    branches = [b if isinstance(b, CleanBranch) else CleanBranch(*b) for b in branches]
    if parties is None:
        d = branches[0].vector.dim_of("a1")
        parties = ab_parties(d)
    if len(parties) != 2:
        raise PartyError("clean models here have exactly two non-gravitational parties")
    party_names = [n for p in parties for n in p.names]
    order = list(branches[0].vector.names)
    for n in party_names:
        branches[0].vector.dim_of(n)
    env = [n for n in order if n not in party_names]
    order = party_names + env
    for b in branches:
        check_branch(b, parties)
    n = len(branches)
    total = None
    for k, (a, b) in enumerate(zip(amps, branches)):
        vec = (a * basis_vector(gravity_label, n, k).tensor(b.vector.permute(order)))
        total = vec if total is None else total + vec
    grav = PartySpec("G", ((gravity_label, n),), ())
    return ProcessMatrix((grav,) + tuple(parties), total.reduced([gravity_label] + party_names))


# -- partial swap model -----------------------------------------------------

def partial_swap_unitary(p: float, d: int) -> np.ndarray:
    """``sqrt(1-p) 1 + i sqrt(p) SWAP`` on two ``d``-level systems."""
    swap = np.eye(d * d).reshape(d, d, d, d).transpose(0, 1, 3, 2).reshape(d * d, d * d)
    return np.sqrt(1 - p) * np.eye(d * d) + 1j * np.sqrt(p) * swap


@dataclass(frozen=True)
class PartialSwapModel:
    """Coherent mixture of a channel A->B and a shared state on (a1, b1).

    ``rho`` is a state on ``(a1, a1')``; ``channel_kraus`` maps A's output
    ``a2`` to the copy wire ``a2'``.
    """

    p: float
    wire_dim: int = 2
    rho: np.ndarray | None = None
    channel_kraus: tuple[np.ndarray, ...] | None = None

    def __post_init__(self):
        d = int(self.wire_dim)
        if not 0 <= self.p <= 1:
            raise ValueError(f"swap weight p must lie in [0, 1], got {self.p!r}")
        rho = max_entangled("a1", "a1p", d).matrix if self.rho is None else np.asarray(self.rho, dtype=complex)
        if rho.shape != (d * d, d * d):
            raise DimError(f"rho must be {d * d}x{d * d}, got {rho.shape}")
        op = LabeledOperator([("a1", d), ("a1p", d)], rho)
        if not is_psd(op) or abs(op.trace() - 1) > 1e-9:
            raise NormError("rho must be positive semidefinite with unit trace")
        kraus = (np.eye(d),) if self.channel_kraus is None else tuple(np.asarray(k, dtype=complex) for k in self.channel_kraus)
        for k in kraus:
            if k.shape != (d, d):
                raise DimError(f"Kraus operators must be {d}x{d}")
        if np.max(np.abs(sum(k.conj().T @ k for k in kraus) - np.eye(d))) > 1e-9:
            raise NormError("channel is not trace preserving")
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "channel_kraus", kraus)


def build_partial_swap(model: PartialSwapModel) -> ProcessMatrix:
    d = model.wire_dim
    # unnormalized Choi of the channel a2 -> a2'
    choi = sum(np.outer(k.T.reshape(-1), k.T.reshape(-1).conj()) for k in model.channel_kraus)
    joint = LabeledOperator([("a2", d), ("a2p", d)], choi).tensor(LabeledOperator([("a1", d), ("a1p", d)], model.rho))
    joint = joint.permute(["a2", "a1", "a1p", "a2p"])
    u = np.kron(np.eye(d * d), partial_swap_unitary(model.p, d))
    out = LabeledOperator([("a2", d), ("a1", d), ("b1", d), ("e", d)], u @ joint.matrix @ u.conj().T)
    w_ab1 = out.ptrace(["e"]) * (1 / d)
    w = w_ab1.tensor(maximally_mixed("b2", d)).permute(AB_ORDER)
    return ProcessMatrix(ab_parties(d), w)


__all__ = [
    "Relation",
    "HarmonicCleanModel",
    "CleanBranch",
    "PartialSwapModel",
    "ab_parties",
    "gravity_party",
    "normalized_amplitudes",
    "product_psi",
    "build_w_i",
    "harmonic_branches",
    "harmonic_vector",
    "build_harmonic_purified",
    "build_harmonic_reduced",
    "trace_gravity",
    "branch_process",
    "build_clean_general",
    "partial_swap_unitary",
    "build_partial_swap",
]
