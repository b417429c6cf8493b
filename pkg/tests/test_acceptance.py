"""Acceptance criteria 1 to 11, each timed and reported on one line.

Run through pytest (the summary lists every criterion) or directly with
``python tests/test_acceptance.py``.
"""
import itertools
import math
import subprocess
import sys
import time
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

if __name__ == "__main__":
    sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from qspacetime.capacity import (
    CapacityCurve,
    axiom_suite,
    capacity_profile,
    curves_to_csv,
    eps_grid,
    fidelity_oracle,
    invert_capacity_curves,
    q_ent_closed_form,
    read_curves_csv,
)
from qspacetime.clean_models import (
    HarmonicCleanModel,
    PartialSwapModel,
    CleanBranch,
    Relation,
    build_clean_general,
    build_harmonic_purified,
    build_harmonic_reduced,
    build_partial_swap,
    build_w_i,
    harmonic_branches,
    trace_gravity,
)
from qspacetime.process_core import (
    ChoiInstrument,
    ProcessMatrix,
    born_probability,
    can_signal,
    measure_prepare_choi,
    simple_party,
    validate_process,
)
from qspacetime.sampling import (
    random_amplitudes,
    random_channel_kraus,
    random_density,
    random_local_operation_pair,
    random_sectored_amplitudes,
    random_state_vector,
)
from qspacetime.sectors import (
    ATYPICAL_EXAMPLE,
    TYPICAL_EXAMPLE,
    SectoredAmplitudes,
    build_sectored_noninteracting,
    marginal_probabilities,
)
from qspacetime.tendency import classify, leakage_report
from qspacetime.tensor_core import LabeledOperator, LabeledVector, maximally_mixed, tensor
from tests.conftest import ACCEPTANCE_RESULTS
from tests.test_process_core import random_instrument

ROOT = Path(__file__).resolve().parent.parent
FIX = ROOT / "fixtures"
SEED = 20240611


class Criterion:
    """Times a criterion body and records a one-line verdict."""

    def __init__(self, number: int, limit: float | None = None):
        self.number, self.limit = number, limit
        self.detail = ""

    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        elapsed = time.perf_counter() - self.start
        timing = f"{elapsed:.2f}s" + (f" (limit {self.limit:g}s)" if self.limit else "")
        ok = exc_type is None and (self.limit is None or elapsed < self.limit)
        reason = "" if exc_type is None else f" [{exc_type.__name__}: {str(exc).splitlines()[0] if str(exc) else ''}]"
        line = f"{self.detail} {timing}{reason}".strip()
        ACCEPTANCE_RESULTS[self.number] = (ok, line)
        print(f"criterion {self.number}: {'PASS' if ok else 'FAIL'} {line}")
        if exc_type is None and not ok:
            pytest.fail(f"criterion {self.number} exceeded its runtime limit: {timing}")
        return False


def sqrt_amplitudes(p1, p2, p3):
    return [math.sqrt(float(p1)), math.sqrt(float(p2)), math.sqrt(float(p3))]


def test_criterion_01_born_rule():
    rng = np.random.default_rng(SEED)
    with Criterion(1, limit=1.0) as c:
        worst_state = 0.0
        party = simple_party("A", "a1", "a2", 3)
        for _ in range(5):
            rho = random_density(3, rng)
            w = ProcessMatrix((party,), tensor(LabeledOperator([("a1", 3)], rho), maximally_mixed("a2", 3)))
            vals, vecs = np.linalg.eigh(rho)
            effects = [np.outer(vecs[:, k], vecs[:, k].conj()) for k in range(3)]
            keep = np.diag([1.0, 0.0, 0.0])
            ins = ChoiInstrument(party, tuple(measure_prepare_choi(party, [e], [keep]) for e in effects))
            for k in range(3):
                worst_state = max(worst_state, abs(born_probability(w, [ins], [k]) - vals[k]))
        assert worst_state <= 1e-9

        psi = LabeledVector([("x", 2), ("y", 2), ("e3", 2)], random_state_vector(8, rng))
        harmonic = HarmonicCleanModel(random_amplitudes(rng), 2, 2, psi)
        builders = {
            "harmonic_reduced": build_harmonic_reduced(harmonic),
            "harmonic_purified": build_harmonic_purified(harmonic),
            "w_1": build_w_i(1, d=2),
            "partial_swap": build_partial_swap(
                PartialSwapModel(0.37, 2, random_density(4, rng), tuple(random_channel_kraus(2, 2, rng)))
            ),
            "sectored": build_sectored_noninteracting(random_sectored_amplitudes(rng)),
            "clean_general": build_clean_general(
                harmonic.alpha, [CleanBranch(v, r) for v, r in zip(harmonic_branches(harmonic), Relation)]
            ),
        }
        worst_total = 0.0
        for w in builders.values():
            ins = {p.name: random_instrument(p, rng, outcomes=2) for p in w.parties}
            total = sum(
                born_probability(w, ins, dict(zip(ins, outcome)))
                for outcome in itertools.product(*[range(len(i.elements)) for i in ins.values()])
            )
            worst_total = max(worst_total, abs(total - 1))
        assert worst_total <= 1e-8
        c.detail = f"state-process error {worst_state:.1e}, instrument total error {worst_total:.1e} over {len(builders)} builders"


def test_criterion_02_harmonic_reduction():
    rng = np.random.default_rng(SEED + 2)
    with Criterion(2, limit=5.0) as c:
        worst = 0.0
        for _ in range(10):
            model = HarmonicCleanModel(random_amplitudes(rng), 2)
            reduced = trace_gravity(build_harmonic_purified(model)).w
            terms = [p * build_w_i(i + 1, model.psi, d=2).w for i, p in enumerate(model.p)]
            mixture = terms[0] + terms[1] + terms[2]
            worst = max(worst, reduced.max_abs_diff(mixture))
        assert worst <= 1e-10
        c.detail = f"max-abs deviation {worst:.1e} over 10 random amplitude vectors"


def test_criterion_03_signalling_structure():
    rng = np.random.default_rng(SEED + 3)
    with Criterion(3) as c:
        expected = {1: (True, False), 2: (False, True), 3: (False, False)}
        checked = 0
        for d in (2, 3):
            psis = [None, LabeledVector([("x", d), ("y", d), ("e3", 2)], random_state_vector(2 * d * d, rng))]
            for psi, i in itertools.product(psis, expected):
                w = build_w_i(i, psi, d=d)
                assert (can_signal(w, "A", "B"), can_signal(w, "B", "A")) == expected[i], (d, i)
                checked += 1
        c.detail = f"{checked} verdict pairs match A->B, A<-B, A-B"


def fraction_grid():
    ps = [Fraction(k, 10) for k in range(11)]
    epss = [Fraction(k, 20) for k in range(16)]
    return ps, epss


def test_criterion_04_oracle_equivalence():
    ps, epss = fraction_grid()
    with Criterion(4, limit=60.0) as c:
        mismatches, worst_fid, points = 0, 0.0, 0
        for d in (2, 3, 4):
            for p in ps:
                w = build_harmonic_reduced(HarmonicCleanModel(sqrt_amplitudes(p, 0, 1 - p), d))
                fids = {}
                for m in range(1, d + 1):
                    fids[m] = fidelity_oracle(w, "forward", m)
                    worst_fid = max(worst_fid, abs(fids[m] - (float(p) + float(1 - p) / m**2)))
                for eps in epss:
                    numeric = max(m for m in fids if fids[m] >= 1 - float(eps) - 1e-9)
                    if q_ent_closed_form(p, eps, d) != math.log2(numeric):
                        mismatches += 1
                    points += 1
        assert worst_fid <= 1e-9
        assert mismatches == 0
        c.detail = f"{points} grid points, {mismatches} mismatches, fidelity error {worst_fid:.1e}"


def test_criterion_05_zero_threshold():
    ps, epss = fraction_grid()
    with Criterion(5) as c:
        mismatches = points = 0
        for d, p, eps in itertools.product((2, 3, 4), ps, epss):
            zero = q_ent_closed_form(p, eps, d) == 0
            if zero != (p < 1 - Fraction(4, 3) * eps):
                mismatches += 1
            points += 1
        assert mismatches == 0
        c.detail = f"{points} grid points, {mismatches} mismatches"


def test_criterion_06_inversion_round_trip():
    rng = np.random.default_rng(SEED + 6)
    grid = eps_grid(0, 1, "0.001")
    with Criterion(6, limit=120.0) as c:
        worst, dim_failures, n = 0.0, 0, 0
        while n < 50:
            alpha = random_amplitudes(rng)
            if abs(abs(alpha[2]) - 1) < 1e-12:
                continue
            w = build_harmonic_reduced(HarmonicCleanModel(alpha, 4))
            curves = []
            for direction in ("forward", "backward"):
                profile = capacity_profile(w, direction)
                curves.append(CapacityCurve(direction, tuple((float(e), profile(e).bits) for e in grid)))
            parsed = read_curves_csv(curves_to_csv(curves))
            res = invert_capacity_curves(parsed["forward"], parsed["backward"])
            worst = max(worst, float(np.max(np.abs(res.p - np.abs(alpha) ** 2))))
            dim_failures += res.dims != (4, 4)
            n += 1
        assert worst <= 2e-3
        assert dim_failures == 0
        c.detail = f"50 models, max p error {worst:.2e} (bound 2e-3), {dim_failures} dimension failures"


def test_criterion_07_reference_examples():
    with Criterion(7) as c:
        typ = SectoredAmplitudes.from_probabilities(TYPICAL_EXAMPLE)
        atyp = SectoredAmplitudes.from_probabilities(ATYPICAL_EXAMPLE)
        assert classify(typ, "V").typical
        assert not classify(atyp, "V").typical
        assert not classify(typ, "VS").typical
        p_ml, p_mv = marginal_probabilities(typ)
        v = classify(typ, "V")
        errors = [
            abs(p_ml[0] - (0.5 - 2e-10)),
            abs(p_ml[1] - (0.5 - 2e-10)),
            abs(v.p_connect - (1 - 4e-10)),
            *(abs(x - 1 / 3) for x in p_mv),
        ]
        assert max(errors) <= 1e-12
        c.detail = f"V typical/atypical and VS atypical as expected, marginal error {max(errors):.1e}"


def test_criterion_08_partial_swap():
    rng = np.random.default_rng(SEED + 8)
    d = 2
    with Criterion(8) as c:
        rho = random_density(d * d, rng)
        kraus = tuple(random_channel_kraus(d, d, rng))

        def on(names, mat):
            return LabeledOperator([(n, d) for n in names], mat)

        id_only = tensor(on(["a1", "b1"], rho), tensor(maximally_mixed("a2", d), maximally_mixed("b2", d)))
        rho_a1 = on(["a1", "x"], rho).ptrace(["x"])
        choi = np.zeros((d * d, d * d), dtype=complex)
        for i, j in itertools.product(range(d), repeat=2):
            eij = np.zeros((d, d))
            eij[i, j] = 1
            choi += np.kron(eij, sum(k @ eij @ k.conj().T for k in kraus))
        swap_only = tensor(tensor(rho_a1, on(["a2", "b1"], choi / d)), maximally_mixed("b2", d))
        e0 = build_partial_swap(PartialSwapModel(0.0, d, rho, kraus)).w.max_abs_diff(id_only)
        e1 = build_partial_swap(PartialSwapModel(1.0, d, rho, kraus)).w.max_abs_diff(swap_only)
        assert max(e0, e1) <= 1e-10
        invalid = [k for k in range(21) if not validate_process(build_partial_swap(PartialSwapModel(k / 20, d, rho, kraus))).valid]
        assert not invalid
        c.detail = f"endpoint errors {e0:.1e} and {e1:.1e}, 21 of 21 grid points valid"


def test_criterion_09_axioms():
    rng = np.random.default_rng(SEED + 9)
    with Criterion(9) as c:
        checks = violations = 0
        for k in range(20):
            d = 2 if k % 2 == 0 else 3
            psi = LabeledVector([("x", d), ("y", d), ("e3", 2)], random_state_vector(2 * d * d, rng))
            w = build_harmonic_reduced(HarmonicCleanModel(random_amplitudes(rng), d, 2, psi))
            ops = [random_local_operation_pair("A", "B", d, rng) for _ in range(10)]
            report = axiom_suite(w, ops)
            checks += report.checks
            violations += len(report.violations)
        assert violations == 0
        c.detail = f"20 models x 10 local-operation pairs, {checks} checks, {violations} violations"


def test_criterion_10_leakage():
    rng = np.random.default_rng(SEED + 10)
    with Criterion(10) as c:
        flagged = 0
        for _ in range(100):
            amps = random_sectored_amplitudes(rng)
            p_ml, p_mv = marginal_probabilities(amps)
            assert p_ml[0] > 0 and p_mv[0] > 0
            flagged += leakage_report(build_sectored_noninteracting(amps), 0.1).any_superluminal
        counter = [[0, 0, 0], [0, 0, 0], [Fraction(1, 2), 0, Fraction(1, 2)]]
        counter_verdict = leakage_report(
            build_sectored_noninteracting(SectoredAmplitudes.from_probabilities(counter)), 0.1
        ).any_superluminal
        assert flagged == 0
        assert counter_verdict
        c.detail = f"{flagged} of 100 random models flagged, measure-zero counterexample flagged: {counter_verdict}"


def cli_invocations(tmp: Path):
    """Every command over the fixture corpus; ``--out`` targets live in ``tmp``."""
    models = sorted(p.name for p in FIX.glob("*.json") if p.name != "criterion_default.json")
    runs = [["validate", m] for m in models]
    harmonic = ["harmonic_identity.json", "harmonic_mixed.json", "harmonic_p099_d4.json", "harmonic_p0999_d2.json", "harmonic_p04_d2.json"]
    runs += [["capacity", m] for m in harmonic]
    runs += [
        ["capacity", "partial_swap.json", "--oracle", "--eps-grid", "0:0.75:0.25"],
        ["capacity", "clean_general.json", "--eps-grid", "0:0.75:0.25"],
        ["capacity", "sectored_typical.json", "--sector", "massive"],
        ["capacity", "harmonic_mixed.json", "--direction", "forward", "--eps-grid", "0:1:0.001", "--out", str(tmp / "f.csv")],
        ["capacity", "harmonic_mixed.json", "--direction", "backward", "--eps-grid", "0:1:0.001", "--out", str(tmp / "b.csv")],
        ["invert", str(tmp / "f.csv"), str(tmp / "b.csv")],
    ]
    for m in ("sectored_typical.json", "sectored_atypical.json", "sectored_measure_zero.json"):
        runs += [["typicality", m, "--condition", cond] for cond in ("V", "VS", "S", "VorS")]
        runs += [["leakage", m]]
    runs += [
        ["compare", "harmonic_p0999_d2.json", "harmonic_p04_d2.json", "--criterion", "criterion_default.json"],
        ["compare", "harmonic_mixed.json", "harmonic_mixed.json"],
        ["compare", "harmonic_mixed.json", "harmonic_p04_d2.json"],
        ["compare", "sectored_typical.json", "sectored_atypical.json", "--sector", "massless"],
    ]
    return [[a if not a.endswith(".json") else str(FIX / a) for a in r] for r in runs]


def run_corpus(tmp: Path) -> list[tuple]:
    outputs = []
    for argv in cli_invocations(tmp):
        res = subprocess.run([sys.executable, "-m", "qspacetime", *argv], capture_output=True, cwd=ROOT)
        outputs.append((argv, res.returncode, res.stdout, res.stderr))
    for f in sorted(tmp.glob("*.csv")):
        outputs.append((f.name, f.read_bytes()))
    return outputs


def test_criterion_11_cli_determinism(tmp_path):
    with Criterion(11) as c:
        first = run_corpus(tmp_path)
        for f in tmp_path.glob("*.csv"):
            f.unlink()
        second = run_corpus(tmp_path)
        assert len(first) == len(second)
        differing = [a[0] for a, b in zip(first, second) if a != b]
        assert not differing, differing
        codes = sorted({r[1] for r in first if len(r) == 4})
        c.detail = f"{len(first)} outputs byte-identical across two runs (exit codes seen {codes})"


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider", "--rootdir", str(ROOT)]))
