"""Dense operators and vectors on named tensor factors.

Every operator carries an ordered registry of :class:`Subsystem` labels. Flat
indices are mixed radix with the *first* label as the most significant digit,
which is the order produced by ``np.kron(first, second)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from string import ascii_letters
from typing import Iterable, Sequence

import numpy as np

from .errors import BadPermutation, DimError, DuplicateLabel, UnknownLabel

DEFAULT_TOL = 1e-9


@dataclass(frozen=True)
class Subsystem:
    name: str
    dim: int

    def __post_init__(self):
        if not isinstance(self.dim, (int, np.integer)) or self.dim < 1:
            raise DimError(f"subsystem {self.name!r} needs a positive integer dimension, got {self.dim!r}")


def as_registry(labels) -> tuple[Subsystem, ...]:
    """Normalize ``Subsystem`` objects or ``(name, dim)`` pairs into a checked registry."""
    out = []
    seen = set()
    for lab in labels:
        if not isinstance(lab, Subsystem):
            name, dim = lab
            lab = Subsystem(str(name), int(dim))
        if lab.name in seen:
            raise DuplicateLabel(f"subsystem name {lab.name!r} appears twice")
        seen.add(lab.name)
        out.append(lab)
    return tuple(out)


def _size(registry) -> int:
    return int(np.prod([lab.dim for lab in registry], dtype=np.int64))


class _Labeled:
    labels: tuple[Subsystem, ...]

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(lab.name for lab in self.labels)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(lab.dim for lab in self.labels)

    @property
    def size(self) -> int:
        return _size(self.labels)

    def dim_of(self, name: str) -> int:
        for lab in self.labels:
            if lab.name == name:
                return lab.dim
        raise UnknownLabel(f"no subsystem named {name!r} in {self.names}")

    def _order(self, new_order: Sequence[str]) -> list[int]:
        new_order = list(new_order)
        if sorted(new_order) != sorted(self.names) or len(set(new_order)) != len(new_order):
            raise BadPermutation(f"{new_order} is not a permutation of {list(self.names)}")
        return [self.names.index(n) for n in new_order]

    def _relabeled(self, mapping: dict[str, str]) -> tuple[Subsystem, ...]:
        for key in mapping:
            if key not in self.names:
                raise UnknownLabel(f"cannot relabel missing subsystem {key!r}")
        return as_registry(Subsystem(mapping.get(lab.name, lab.name), lab.dim) for lab in self.labels)


class LabeledOperator(_Labeled):
    """Square complex matrix acting on the tensor product of its registry."""

    __slots__ = ("labels", "matrix")

    def __init__(self, labels, matrix):
        self.labels = as_registry(labels)
        mat = np.array(matrix, dtype=complex)
        n = self.size
        if mat.shape != (n, n):
            raise DimError(f"matrix shape {mat.shape} does not match registry size {n}")
        mat.setflags(write=False)
        self.matrix = mat

    def __repr__(self):
        reg = ", ".join(f"{lab.name}:{lab.dim}" for lab in self.labels)
        return f"LabeledOperator([{reg}])"

    def __add__(self, other: "LabeledOperator") -> "LabeledOperator":
        other = other.permute(self.names) if other.names != self.names else other
        if other.dims != self.dims:
            raise DimError("cannot add operators on different registries")
        return LabeledOperator(self.labels, self.matrix + other.matrix)

    def __sub__(self, other: "LabeledOperator") -> "LabeledOperator":
        return self + (-1.0) * other

    def __mul__(self, scalar) -> "LabeledOperator":
        return LabeledOperator(self.labels, scalar * self.matrix)

    __rmul__ = __mul__

    def trace(self) -> complex:
        return complex(np.trace(self.matrix))

    def tensor_form(self) -> np.ndarray:
        """View as an array with one row axis then one column axis per label."""
        return self.matrix.reshape(self.dims + self.dims)

    def tensor(self, other: "LabeledOperator") -> "LabeledOperator":
        return tensor(self, other)

    def ptrace(self, over: Iterable[str]) -> "LabeledOperator":
        return partial_trace(self, over)

    def permute(self, new_order: Sequence[str]) -> "LabeledOperator":
        return permute(self, new_order)

    def relabel(self, mapping: dict[str, str]) -> "LabeledOperator":
        return LabeledOperator(self._relabeled(mapping), self.matrix)

    def max_abs_diff(self, other: "LabeledOperator") -> float:
        if sorted(other.names) != sorted(self.names):
            raise DimError(f"registries differ: {self.names} vs {other.names}")
        other = other.permute(self.names)
        return float(np.max(np.abs(self.matrix - other.matrix), initial=0.0))


class LabeledVector(_Labeled):
    """Complex vector (typically a pure state) on the tensor product of its registry."""

    __slots__ = ("labels", "vector")

    def __init__(self, labels, vector):
        self.labels = as_registry(labels)
        vec = np.array(vector, dtype=complex).reshape(-1)
        if vec.shape != (self.size,):
            raise DimError(f"vector length {vec.size} does not match registry size {self.size}")
        vec.setflags(write=False)
        self.vector = vec

    def __repr__(self):
        reg = ", ".join(f"{lab.name}:{lab.dim}" for lab in self.labels)
        return f"LabeledVector([{reg}])"

    def __add__(self, other: "LabeledVector") -> "LabeledVector":
        other = other.permute(self.names) if other.names != self.names else other
        if other.dims != self.dims:
            raise DimError("cannot add vectors on different registries")
        return LabeledVector(self.labels, self.vector + other.vector)

    def __mul__(self, scalar) -> "LabeledVector":
        return LabeledVector(self.labels, scalar * self.vector)

    __rmul__ = __mul__

    def norm(self) -> float:
        return float(np.linalg.norm(self.vector))

    def tensor(self, other: "LabeledVector") -> "LabeledVector":
        return LabeledVector(self.labels + other.labels, np.kron(self.vector, other.vector))

    def permute(self, new_order: Sequence[str]) -> "LabeledVector":
        perm = self._order(new_order)
        arr = self.vector.reshape(self.dims).transpose(perm)
        return LabeledVector([self.labels[i] for i in perm], arr.reshape(-1))

    def relabel(self, mapping: dict[str, str]) -> "LabeledVector":
        return LabeledVector(self._relabeled(mapping), self.vector)

    def projector(self) -> LabeledOperator:
        return LabeledOperator(self.labels, np.outer(self.vector, self.vector.conj()))

    def reduced(self, keep: Sequence[str]) -> LabeledOperator:
        """Reduced operator on ``keep`` (in that order), tracing out everything else.

        Works on the vector directly, so the full projector is never formed.
        """
        keep = list(keep)
        rest = [n for n in self.names if n not in keep]
        for n in keep:
            self.dim_of(n)
        moved = self.permute(keep + rest)
        d_keep = _size(moved.labels[: len(keep)])
        mat = moved.vector.reshape(d_keep, -1)
        return LabeledOperator(moved.labels[: len(keep)], mat @ mat.conj().T)


def tensor(a: LabeledOperator, b: LabeledOperator) -> LabeledOperator:
    """Kronecker product; the registry is ``a``'s labels followed by ``b``'s."""
    return LabeledOperator(a.labels + b.labels, np.kron(a.matrix, b.matrix))


def tensor_all(ops: Sequence[LabeledOperator]) -> LabeledOperator:
    out = ops[0]
    for op in ops[1:]:
        out = tensor(out, op)
    return out


def partial_trace(w: LabeledOperator, over: Iterable[str]) -> LabeledOperator:
    over = set(over)
    for name in over:
        w.dim_of(name)
    if not over:
        return w
    n = len(w.labels)
    if 2 * n > len(ascii_letters):
        raise DimError("too many subsystems for einsum-based partial trace")
    rows = list(ascii_letters[:n])
    cols = [rows[i] if w.labels[i].name in over else ascii_letters[n + i] for i in range(n)]
    keep = [i for i in range(n) if w.labels[i].name not in over]
    subscripts = "".join(rows) + "".join(cols) + "->" + "".join(rows[i] for i in keep) + "".join(cols[i] for i in keep)
    out = np.einsum(subscripts, w.tensor_form())
    labels = [w.labels[i] for i in keep]
    d = _size(labels)
    return LabeledOperator(labels, out.reshape(d, d))


def permute(w: LabeledOperator, new_order: Sequence[str]) -> LabeledOperator:
    perm = w._order(new_order)
    n = len(w.labels)
    arr = w.tensor_form().transpose(perm + [n + p for p in perm])
    labels = [w.labels[i] for i in perm]
    d = _size(labels)
    return LabeledOperator(labels, arr.reshape(d, d))


def hermiticity_residue(w: LabeledOperator) -> float:
    return float(np.max(np.abs(w.matrix - w.matrix.conj().T), initial=0.0))


def psd_scale(w: LabeledOperator) -> float:
    return max(1.0, float(np.max(np.abs(w.matrix), initial=0.0)))


def min_eigenvalue(w: LabeledOperator) -> float:
    herm = 0.5 * (w.matrix + w.matrix.conj().T)
    return float(np.linalg.eigvalsh(herm)[0])


def is_psd(w: LabeledOperator, tol: float = DEFAULT_TOL) -> bool:
    """Hermitian within ``tol*scale`` and no eigenvalue below ``-tol*scale``.

    ``scale`` is ``max(1, largest absolute entry)``.
    """
    scale = psd_scale(w)
    if hermiticity_residue(w) > tol * scale:
        return False
    return min_eigenvalue(w) >= -tol * scale


# -- common states ---------------------------------------------------------

def basis_vector(name: str, dim: int, k: int) -> LabeledVector:
    vec = np.zeros(dim, dtype=complex)
    vec[k] = 1.0
    return LabeledVector([(name, dim)], vec)


def max_entangled_vector(first: str, second: str, dim: int) -> LabeledVector:
    """Normalized ``sum_i |ii> / sqrt(dim)``."""
    return LabeledVector([(first, dim), (second, dim)], np.eye(dim).reshape(-1) / np.sqrt(dim))


def max_entangled(first: str, second: str, dim: int) -> LabeledOperator:
    return max_entangled_vector(first, second, dim).projector()


def maximally_mixed(name: str, dim: int) -> LabeledOperator:
    return LabeledOperator([(name, dim)], np.eye(dim) / dim)


def identity(labels) -> LabeledOperator:
    reg = as_registry(labels)
    return LabeledOperator(reg, np.eye(_size(reg)))
