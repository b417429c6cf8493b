"""Massless/massive sector factorization and sectored clean models.

Each party system ``s`` splits into ``s_massless`` and ``s_massive``. The
amplitude matrix ``a[i, j]`` couples massless relation ``i`` to massive
relation ``j`` (0-based rows/columns for relations 1, 2, 3); the entries
``a[0, 1]`` and ``a[1, 0]`` are forbidden because they would let the two
sectors signal in opposite directions.
"""
from __future__ import annotations

from fractions import Fraction
from typing import Sequence

import numpy as np

from .clean_models import (
    AB_ORDER,
    CleanBranch,
    HarmonicCleanModel,
    Relation,
    ab_parties,
    check_branch,
    harmonic_branches,
)
from .errors import ConstraintViolation, DimError, NormError, SectorError
from .process_core import PartySpec, ProcessMatrix
from .tensor_core import LabeledVector

MASSLESS = "massless"
MASSIVE = "massive"
SECTORS = (MASSLESS, MASSIVE)
NORM_TOL = 1e-10

_E = Fraction(1, 10**10)

# (row: massless relation, column: massive relation)
TYPICAL_EXAMPLE = (
    (Fraction(1, 3) - _E, Fraction(0), Fraction(1, 6) - _E),
    (Fraction(0), Fraction(1, 3) - _E, Fraction(1, 6) - _E),
    (_E, _E, 2 * _E),
)
ATYPICAL_EXAMPLE = (
    (_E, Fraction(0), Fraction(1, 2) - 3 * _E),
    (Fraction(0), _E, Fraction(1, 2) - 3 * _E),
    (_E, _E, 2 * _E),
)


def sector_label(name: str, sector: str) -> str:
    return f"{name}_{sector}"


class SectoredAmplitudes:
    """3x3 amplitudes with the (1,2) and (2,1) relation pairs forced to zero.

    ``exact`` optionally keeps the rational probabilities the amplitudes were
    built from, so marginals are computed without going through square roots.
    """

    __slots__ = ("matrix", "exact")

    def __init__(self, matrix, exact: Sequence[Sequence[Fraction]] | None = None):
        a = np.array(matrix, dtype=complex)
        if a.shape != (3, 3):
            raise DimError(f"sectored amplitudes must be 3x3, got {a.shape}")
        if a[0, 1] != 0 or a[1, 0] != 0:
            raise ConstraintViolation(
                "amplitudes for (massless A->B, massive A<-B) and (massless A<-B, massive A->B) must be exactly zero"
            )
        norm = float(np.sum(np.abs(a) ** 2))
        if abs(norm - 1) > NORM_TOL:
            raise NormError(f"squared amplitudes sum to {norm!r}, not 1")
        a.setflags(write=False)
        self.matrix = a
        self.exact = None if exact is None else tuple(tuple(Fraction(x) for x in row) for row in exact)

    @classmethod
    def from_probabilities(cls, probs) -> "SectoredAmplitudes":
        exact = [[Fraction(x) for x in row] for row in probs]
        if any(x < 0 for row in exact for x in row):
            raise NormError("probabilities must be non-negative")
        if exact[0][1] != 0 or exact[1][0] != 0:
            raise ConstraintViolation("probabilities p12 and p21 must be exactly zero")
        if sum(sum(row) for row in exact) != 1:
            raise NormError("probabilities must sum to exactly 1")
        amps = np.sqrt(np.array([[float(x) for x in row] for row in exact]))
        return cls(amps, exact)

    def probabilities(self) -> np.ndarray:
        if self.exact is not None:
            return np.array([[float(x) for x in row] for row in self.exact])
        return np.abs(self.matrix) ** 2

    def __repr__(self):
        return f"SectoredAmplitudes({self.probabilities().round(6).tolist()})"


def marginal_probabilities(amps: SectoredAmplitudes) -> tuple[np.ndarray, np.ndarray]:
    """``(p_massless, p_massive)``: row and column sums of ``|a_ij|^2``."""
    if amps.exact is not None:
        rows = [float(sum(row)) for row in amps.exact]
        cols = [float(sum(amps.exact[i][j] for i in range(3))) for j in range(3)]
        return np.array(rows), np.array(cols)
    p = amps.probabilities()
    return p.sum(axis=1), p.sum(axis=0)


def sectored_parties(d_massless: int, d_massive: int) -> tuple[PartySpec, PartySpec]:
    def party(name, i, o):
        return PartySpec(
            name,
            ((sector_label(i, MASSLESS), d_massless), (sector_label(i, MASSIVE), d_massive)),
            ((sector_label(o, MASSLESS), d_massless), (sector_label(o, MASSIVE), d_massive)),
        )

    return party("A", "a1", "a2"), party("B", "b1", "b2")


def default_sector_branches(d: int, sector: str) -> list[CleanBranch]:
    """Harmonic branch vectors with |000> initial state, relabeled into ``sector``."""
    model = HarmonicCleanModel(np.array([1, 0, 0]), d)
    out = []
    for rel, vec in zip(Relation, harmonic_branches(model)):
        mapping = {n: sector_label(n, sector) for n in vec.names}
        out.append(CleanBranch(vec.relabel(mapping), rel))
    return out


def _sector_parties(d: int, sector: str) -> tuple[PartySpec, PartySpec]:
    a, b = ab_parties(d, "_" + sector)
    return a, b


def _branch_dim(branches: Sequence[CleanBranch], sector: str) -> int:
    return branches[0].vector.dim_of(sector_label("a1", sector))


def build_sectored_noninteracting(
    amps: SectoredAmplitudes,
    massless_branches: Sequence[CleanBranch] | None = None,
    massive_branches: Sequence[CleanBranch] | None = None,
    dims: tuple[int, int] = (2, 2),
    keep_gravity: bool = False,
) -> ProcessMatrix:
    """``sum_ij a_ij |ij>^{g g'} |w_i>^{massless} |w_j>^{massive}``, traced over the environment.

    Without ``keep_gravity`` the gravitational systems are traced out as well
    and the result is the bipartite process on A and B.
    """
    if not isinstance(amps, SectoredAmplitudes):
        amps = SectoredAmplitudes(amps)
    branches = {
        MASSLESS: list(massless_branches) if massless_branches is not None else default_sector_branches(dims[0], MASSLESS),
        MASSIVE: list(massive_branches) if massive_branches is not None else default_sector_branches(dims[1], MASSIVE),
    }
    stacks = {}
    for sector, brs in branches.items():
        if len(brs) != 3:
            raise ValueError(f"{sector} sector needs exactly three branches")
        brs = [b if isinstance(b, CleanBranch) else CleanBranch(*b) for b in brs]
        if [b.relation for b in brs] != list(Relation):
            raise ValueError(f"{sector} branches must be ordered A->B, A<-B, A-B")
        d = _branch_dim(brs, sector)
        parties = _sector_parties(d, sector)
        for b in brs:
            check_branch(b, parties)
        party_names = [n for p in parties for n in p.names]
        order = party_names + [n for n in brs[0].vector.names if n not in party_names]
        vecs = [b.vector.permute(order) for b in brs]
        stacks[sector] = (d, vecs[0].labels, np.stack([v.vector for v in vecs]))
    d0, labels0, s0 = stacks[MASSLESS]
    d1, labels1, s1 = stacks[MASSIVE]
    g_labels = ((sector_label("g", MASSLESS), 3), (sector_label("g", MASSIVE), 3))
    full = np.einsum("ij,ia,jb->ijab", amps.matrix, s0, s1).reshape(-1)
    vec = LabeledVector(g_labels + labels0 + labels1, full)
    parties = sectored_parties(d0, d1)
    keep = [n for p in parties for n in p.names]
    if keep_gravity:
        grav = PartySpec("G", g_labels, ())
        return ProcessMatrix((grav,) + parties, vec.reduced([g[0] for g in g_labels] + keep))
    return ProcessMatrix(parties, vec.reduced(keep))


def split_sector_name(name: str) -> tuple[str, str]:
    base, _, sector = name.rpartition("_")
    if sector not in SECTORS or not base:
        raise SectorError(f"subsystem {name!r} is not sector-labeled")
    return base, sector


def _is_sectored(p: PartySpec) -> bool:
    for group in (p.input_names, p.output_names):
        try:
            found = sorted(split_sector_name(n)[1] for n in group)
        except SectorError:
            return False
        if found != sorted(SECTORS) or len({split_sector_name(n)[0] for n in group}) != 1:
            return False
    return True


def reduce_sector(w_ab: ProcessMatrix, keep: str) -> ProcessMatrix:
    """Trace out the other sector; parties keep only the ``keep`` systems.

    The surviving labels are renamed to the plain ``a1 a2 b1 b2`` form so the
    result can be handled like any harmonic-type process.
    """
    if keep not in SECTORS:
        raise SectorError(f"sector must be one of {SECTORS}, got {keep!r}")
    if not w_ab.parties or not all(_is_sectored(p) for p in w_ab.parties):
        raise SectorError("every party needs one massless and one massive input and output")
    drop = [n for n in w_ab.w.names if split_sector_name(n)[1] != keep]
    reduced = w_ab.w.ptrace(drop)
    mapping = {n: split_sector_name(n)[0] for n in reduced.names}
    reduced = reduced.relabel(mapping)
    parties = []
    for p in w_ab.parties:
        ins = tuple((split_sector_name(s.name)[0], s.dim) for s in p.inputs if split_sector_name(s.name)[1] == keep)
        outs = tuple((split_sector_name(s.name)[0], s.dim) for s in p.outputs if split_sector_name(s.name)[1] == keep)
        parties.append(PartySpec(p.name, ins, outs))
    order = [n for p in parties for n in (p.input_names + p.output_names)]
    if sorted(order) == sorted(AB_ORDER):
        order = list(AB_ORDER)
    return ProcessMatrix(tuple(parties), reduced.permute(order))


__all__ = [
    "MASSLESS",
    "MASSIVE",
    "SECTORS",
    "TYPICAL_EXAMPLE",
    "ATYPICAL_EXAMPLE",
    "SectoredAmplitudes",
    "marginal_probabilities",
    "sectored_parties",
    "sector_label",
    "default_sector_branches",
    "build_sectored_noninteracting",
    "reduce_sector",
]
