import numpy as np
import pytest

from qspacetime.clean_models import HarmonicCleanModel, PartialSwapModel, build_harmonic_reduced, build_partial_swap
from qspacetime.closeness import ClosenessCriterion, are_close, calibrate_typicality, threshold_self_test
from qspacetime.errors import DimError, DomainError
from qspacetime.sampling import random_sectored_amplitudes
from qspacetime.sectors import ATYPICAL_EXAMPLE, TYPICAL_EXAMPLE, SectoredAmplitudes, build_sectored_noninteracting
from qspacetime.tendency import classify

DEFAULT_CRITERION = ClosenessCriterion((0.01,), (0.01,), 2, 3)


def harmonic(p, d):
    return build_harmonic_reduced(HarmonicCleanModel(np.sqrt(np.asarray(p, dtype=float)), d))


def test_criterion_validation():
    assert ClosenessCriterion() == DEFAULT_CRITERION
    with pytest.raises(DomainError):
        ClosenessCriterion(())
    with pytest.raises(DomainError):
        ClosenessCriterion(d_forward=-1)
    with pytest.raises(DomainError):
        ClosenessCriterion((0.1, 0.2), d_forward={0.1: 1})


def test_are_close_examples():
    z = harmonic([0.3, 0.3, 0.4], 2)
    assert are_close(z, z, ClosenessCriterion((0.1, 0.5), (0.2,), 0, 0)).close
    rep = are_close(harmonic([0.999, 0, 0.001], 2), harmonic([0.4, 0, 0.6], 2), DEFAULT_CRITERION)
    assert rep.close
    assert abs(rep.comparisons[0].q_z - rep.comparisons[0].q_w) <= 1


def test_not_close_at_d16_by_closed_form():
    # building a d=16 process is unnecessary: the comparison is |4 - 0| against 2
    from qspacetime.capacity import q_ent_closed_form

    assert abs(q_ent_closed_form(0.999, 0.01, 16) - q_ent_closed_form(0.0, 0.01, 16)) == 4


def test_not_close_with_tight_threshold():
    rep = are_close(harmonic([0.999, 0, 0.001], 4), harmonic([0, 0, 1], 4), ClosenessCriterion(d_forward=1.5))
    assert not rep.close


def test_symmetric_and_dim_mismatch(rng):
    a, b = harmonic([0.7, 0.1, 0.2], 3), harmonic([0.1, 0.5, 0.4], 3)
    c = ClosenessCriterion((0.1, 0.4), (0.1, 0.4), 0.5, 0.5)
    assert are_close(a, b, c).close == are_close(b, a, c).close
    with pytest.raises(DimError):
        are_close(harmonic([1, 0, 0], 2), harmonic([1, 0, 0], 3))


def test_sector_restriction_with_trivial_other_sector(rng):
    for _ in range(3):
        za = build_sectored_noninteracting(random_sectored_amplitudes(rng), dims=(2, 1))
        wa = build_sectored_noninteracting(random_sectored_amplitudes(rng), dims=(2, 1))
        c = ClosenessCriterion((0.3, 0.6), (0.3, 0.6), 0, 0)
        whole = are_close(za, wa, c)
        restricted = are_close(za, wa, c, sector="massless")
        assert whole.close == restricted.close
        assert [x.q_z for x in whole.comparisons] == [x.q_z for x in restricted.comparisons]


def test_calibration():
    ref_amps = SectoredAmplitudes.from_probabilities(TYPICAL_EXAMPLE)
    reference = harmonic([0.999, 0, 0.001], 2)
    general = build_partial_swap(PartialSwapModel(0.999))
    verdict = calibrate_typicality(general, reference, classify(ref_amps, "V"))
    assert verdict.status == "typical"
    assert any("staircase" in line for line in verdict.lines())
    atyp = classify(SectoredAmplitudes.from_probabilities(ATYPICAL_EXAMPLE), "V")
    assert calibrate_typicality(general, reference, atyp).status == "atypical"
    tight = ClosenessCriterion((0.01,), (0.01,), 0, 0)
    far = harmonic([0, 0, 1], 2)
    assert calibrate_typicality(general, far, True, tight).status == "uncalibrated"


def test_threshold_self_test():
    ref = SectoredAmplitudes.from_probabilities(TYPICAL_EXAMPLE)
    loose = threshold_self_test(ClosenessCriterion(), ref)
    assert loose.samples == 100 and loose.close_to_reference == 100
    # the worked-example thresholds admit every d=2 model, including atypical ones
    assert not loose.accepted
    again = threshold_self_test(ClosenessCriterion(), ref)
    assert again == loose
    with pytest.raises(DomainError):
        threshold_self_test(ClosenessCriterion(), SectoredAmplitudes.from_probabilities(ATYPICAL_EXAMPLE))
