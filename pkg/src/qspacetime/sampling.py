"""Seeded random objects for property tests and self-tests."""
from __future__ import annotations

import numpy as np

from .capacity import LocalOperation
from .sectors import SectoredAmplitudes


def rng_from(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def random_unitary(d: int, rng) -> np.ndarray:
    """Haar-distributed unitary via QR with phase correction."""
    rng = rng_from(rng)
    z = (rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_state_vector(d: int, rng) -> np.ndarray:
    rng = rng_from(rng)
    v = rng.normal(size=d) + 1j * rng.normal(size=d)
    return v / np.linalg.norm(v)


def random_density(d: int, rng, rank: int | None = None) -> np.ndarray:
    rng = rng_from(rng)
    rank = rank or d
    g = rng.normal(size=(d, rank)) + 1j * rng.normal(size=(d, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_channel_kraus(d_in: int, d_out: int, rng, n_kraus: int = 2) -> list[np.ndarray]:
    """Kraus operators of a random channel, from a random isometry into output and environment."""
    rng = rng_from(rng)
    u = random_unitary(d_out * n_kraus * max(1, -(-d_in // (d_out * n_kraus))), rng)
    iso = u[: d_out * n_kraus, :d_in]
    if iso.shape[0] < d_in:
        raise ValueError("environment too small for an isometry")
    return [iso[k * d_out : (k + 1) * d_out, :] for k in range(n_kraus)]


def random_amplitudes(rng, n: int = 3, complex_phases: bool = True) -> np.ndarray:
    rng = rng_from(rng)
    mags = rng.dirichlet(np.ones(n))
    phases = np.exp(2j * np.pi * rng.random(n)) if complex_phases else np.ones(n)
    return np.sqrt(mags) * phases


def random_sectored_amplitudes(rng, complex_phases: bool = True) -> SectoredAmplitudes:
    """Random 3x3 amplitudes with the forbidden entries exactly zero and all others non-zero."""
    rng = rng_from(rng)
    allowed = [(i, j) for i in range(3) for j in range(3) if (i, j) not in ((0, 1), (1, 0))]
    weights = rng.dirichlet(np.ones(len(allowed)))
    a = np.zeros((3, 3), dtype=complex)
    for (i, j), w in zip(allowed, weights):
        phase = np.exp(2j * np.pi * rng.random()) if complex_phases else 1.0
        a[i, j] = np.sqrt(w) * phase
    a /= np.sqrt(np.sum(np.abs(a) ** 2))
    return SectoredAmplitudes(a)


def random_local_operation_pair(party_a: str, party_b: str, d: int, rng) -> tuple[LocalOperation, LocalOperation]:
    """One local operation per party, each with random pre- and post-processing channels."""
    rng = rng_from(rng)
    ops = []
    for name in (party_a, party_b):
        ops.append(
            LocalOperation(
                name,
                pre=tuple(random_channel_kraus(d, d, rng)),
                post=tuple(random_channel_kraus(d, d, rng)),
            )
        )
    return ops[0], ops[1]


__all__ = [
    "rng_from",
    "random_unitary",
    "random_state_vector",
    "random_density",
    "random_channel_kraus",
    "random_amplitudes",
    "random_sectored_amplitudes",
    "random_local_operation_pair",
]
