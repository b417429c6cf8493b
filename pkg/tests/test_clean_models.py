import itertools

import numpy as np
import pytest

from qspacetime.clean_models import (
    CleanBranch,
    HarmonicCleanModel,
    PartialSwapModel,
    Relation,
    build_clean_general,
    build_harmonic_purified,
    build_harmonic_reduced,
    build_partial_swap,
    build_w_i,
    harmonic_branches,
    partial_swap_unitary,
    trace_gravity,
)
from qspacetime.errors import BranchRelationError, DimError, NormError
from qspacetime.process_core import can_signal, validate_process
from qspacetime.sampling import random_amplitudes, random_channel_kraus, random_density, random_state_vector
from qspacetime.tensor_core import LabeledOperator, LabeledVector, max_entangled, maximally_mixed, tensor


def psi_vec(d, e3, rng):
    return LabeledVector([("x", d), ("y", d), ("e3", e3)], random_state_vector(d * d * e3, rng))


def on(names_dims, mat):
    return LabeledOperator(names_dims, mat)


def test_w3_product_example():
    w = build_w_i(3, d=2)
    zero = np.diag([1, 0])
    expected = tensor(
        tensor(on([("a1", 2)], zero), on([("b1", 2)], zero)), tensor(maximally_mixed("a2", 2), maximally_mixed("b2", 2))
    )
    assert w.w.max_abs_diff(expected) < 1e-14


def test_w1_trace_b2(rng):
    psi = psi_vec(2, 2, rng)
    w = build_w_i(1, psi, 2)
    rho_x = psi.reduced(["x"]).relabel({"x": "a1"})
    expected = tensor(rho_x, max_entangled("a2", "b1", 2))
    assert w.w.ptrace(["b2"]).max_abs_diff(expected) < 1e-14


@pytest.mark.parametrize("d", [2, 3])
def test_w_i_valid_and_signalling(rng, d):
    psi = psi_vec(d, 1, rng)
    for i, want in ((1, (True, False)), (2, (False, True)), (3, (False, False))):
        w = build_w_i(i, psi, d)
        r = validate_process(w)
        assert r.valid
        assert (r.signalling[("A", "B")], r.signalling[("B", "A")]) == want


def test_w2_structure(rng):
    psi = psi_vec(2, 1, rng)
    w = build_w_i(2, psi, 2)
    rho_y = psi.reduced(["y"]).relabel({"y": "b1"})
    expected = tensor(tensor(rho_y, max_entangled("a1", "b2", 2)), maximally_mixed("a2", 2))
    assert w.w.max_abs_diff(expected) < 1e-14


def test_dim_mismatch():
    with pytest.raises(DimError):
        HarmonicCleanModel(np.array([1, 0, 0]), 2, 1, LabeledVector([("x", 3), ("y", 3), ("e3", 1)], np.eye(9)[0]))
    with pytest.raises(NormError):
        HarmonicCleanModel(np.array([1, 1, 0]), 2)


def test_purified_single_branch():
    m = HarmonicCleanModel(np.array([1, 0, 0]), 2)
    assert trace_gravity(build_harmonic_purified(m)).w.max_abs_diff(build_w_i(1, d=2).w) < 1e-14


def test_purified_uniform_example():
    m = HarmonicCleanModel(np.ones(3) / np.sqrt(3), 2)
    ws = [build_w_i(i, d=2).w for i in (1, 2, 3)]
    expected = (1 / 3) * (ws[0] + ws[1] + ws[2])
    w = build_harmonic_purified(m)
    assert trace_gravity(w).w.max_abs_diff(expected) < 1e-10
    r = validate_process(w)
    assert r.trace_ok and r.psd


def test_reduced_examples():
    assert build_harmonic_reduced(HarmonicCleanModel(np.array([0, 0, 1]), 2)).w.max_abs_diff(build_w_i(3, d=2).w) < 1e-14
    half = build_harmonic_reduced(HarmonicCleanModel(np.array([1, 1, 0]) / np.sqrt(2), 2))
    expected = 0.5 * (build_w_i(1, d=2).w + build_w_i(2, d=2).w)
    assert half.w.max_abs_diff(expected) < 1e-14


def test_purified_matches_reduced_random(rng):
    for _ in range(10):
        psi = psi_vec(2, 2, rng)
        m = HarmonicCleanModel(random_amplitudes(rng), 2, 2, psi)
        assert trace_gravity(build_harmonic_purified(m)).w.max_abs_diff(build_harmonic_reduced(m).w) <= 1e-10


def test_clean_general_reproduces_harmonic(rng):
    m = HarmonicCleanModel(random_amplitudes(rng), 2, 2, psi_vec(2, 2, rng))
    branches = [CleanBranch(v, r) for v, r in zip(harmonic_branches(m), Relation)]
    w = build_clean_general(m.alpha, branches)
    assert w.w.max_abs_diff(build_harmonic_purified(m).w) < 1e-12
    assert validate_process(w).valid


def test_clean_general_single_branch():
    m = HarmonicCleanModel(np.array([1, 0, 0]), 2)
    branch = CleanBranch(harmonic_branches(m)[2], "A-B")
    w = build_clean_general([1], [branch])
    assert trace_gravity(w).w.max_abs_diff(build_w_i(3, d=2).w) < 1e-14


def test_clean_general_rejects_wrong_relation():
    m = HarmonicCleanModel(np.array([1, 0, 0]), 2)
    wrong = CleanBranch(harmonic_branches(m)[0], "A-B")
    with pytest.raises(BranchRelationError):
        build_clean_general([1], [wrong])


def partial_swap_by_loops(p, d, rho, kraus):
    """Explicit composition: (1/d) sum_ij |i><j|^{a2} x Tr_e[V (rho x N(|i><j|)) V^dag] x pi^{b2}."""
    v = np.kron(np.eye(d), partial_swap_unitary(p, d))
    out = np.zeros((d**3, d**3), dtype=complex)
    for i, j in itertools.product(range(d), repeat=2):
        eij = np.zeros((d, d))
        eij[i, j] = 1
        n_eij = sum(k @ eij @ k.conj().T for k in kraus)
        joint = v @ np.kron(rho, n_eij) @ v.conj().T
        red = np.einsum("abecdf,ef->abcd", joint.reshape(d, d, d, d, d, d), np.eye(d)).reshape(d * d, d * d)
        out += np.kron(eij, red) / d
    w = on([("a2", d), ("a1", d), ("b1", d)], out).tensor(maximally_mixed("b2", d))
    return w.permute(["a1", "a2", "b1", "b2"])


def test_partial_swap_matches_explicit_composition(rng):
    d = 2
    for p in (0.0, 0.3, 1.0):
        rho = random_density(d * d, rng)
        kraus = random_channel_kraus(d, d, rng)
        w = build_partial_swap(PartialSwapModel(p, d, rho, kraus))
        assert w.w.max_abs_diff(partial_swap_by_loops(p, d, rho, kraus)) < 1e-12


def test_partial_swap_endpoints_analytic(rng):
    d = 2
    rho = random_density(d * d, rng)
    kraus = random_channel_kraus(d, d, rng)
    w0 = build_partial_swap(PartialSwapModel(0.0, d, rho, kraus)).w
    id_only = tensor(on([("a1", d), ("b1", d)], rho), tensor(maximally_mixed("a2", d), maximally_mixed("b2", d)))
    assert w0.max_abs_diff(id_only) < 1e-10
    w1 = build_partial_swap(PartialSwapModel(1.0, d, rho, kraus)).w
    rho_a1 = on([("a1", d), ("x", d)], rho).ptrace(["x"])
    choi = np.zeros((d * d, d * d), dtype=complex)
    for i, j in itertools.product(range(d), repeat=2):
        eij = np.zeros((d, d))
        eij[i, j] = 1
        choi += np.kron(eij, sum(k @ eij @ k.conj().T for k in kraus))
    swap_only = tensor(tensor(rho_a1, on([("a2", d), ("b1", d)], choi / d)), maximally_mixed("b2", d))
    assert w1.max_abs_diff(swap_only) < 1e-10


def test_partial_swap_half_example():
    w = build_partial_swap(PartialSwapModel(0.5))
    assert validate_process(w).valid
    assert can_signal(w, "A", "B")


def test_partial_swap_rejects_bad_inputs():
    with pytest.raises(NormError):
        PartialSwapModel(0.5, 2, np.eye(4))
    with pytest.raises(NormError):
        PartialSwapModel(0.5, 2, None, [np.eye(2) * 0.5])
    with pytest.raises(DimError):
        PartialSwapModel(0.5, 2, np.eye(9) / 9)


def test_complete_instruments_normalized_on_builders(rng):
    from tests.test_process_core import random_instrument

    models = [
        build_harmonic_reduced(HarmonicCleanModel(random_amplitudes(rng), 2)),
        build_harmonic_purified(HarmonicCleanModel(random_amplitudes(rng), 2)),
        build_partial_swap(PartialSwapModel(0.37)),
    ]
    from qspacetime.process_core import born_probability

    for w in models:
        ins = {p.name: random_instrument(p, rng) for p in w.parties}
        total = 0.0
        for outcome in itertools.product(*[range(len(i.elements)) for i in ins.values()]):
            total += born_probability(w, ins, dict(zip(ins, outcome)))
        assert abs(total - 1) < 1e-8
