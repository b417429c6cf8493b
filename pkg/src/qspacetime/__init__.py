"""Process-matrix models of quantum spacetime with indefinite causal structure."""

__version__ = "0.1.0"

from .capacity import (
    CapacityCurve,
    CapacityQuery,
    LocalOperation,
    axiom_suite,
    fidelity_oracle,
    fit_harmonic,
    invert_capacity_curves,
    q_ent,
    q_ent_closed_form,
    q_ent_zero_threshold,
)
from .clean_models import (
    CleanBranch,
    HarmonicCleanModel,
    PartialSwapModel,
    Relation,
    build_clean_general,
    build_harmonic_purified,
    build_harmonic_reduced,
    build_partial_swap,
    build_w_i,
)
from .closeness import ClosenessCriterion, are_close, calibrate_typicality
from .errors import ModelError
from .process_core import (
    ChoiInstrument,
    PartySpec,
    ProcessMatrix,
    born_probability,
    can_signal,
    choi_of_kraus,
    validate_process,
)
from .sectors import SectoredAmplitudes, build_sectored_noninteracting, marginal_probabilities, reduce_sector
from .tendency import TendencyThresholds, classify, is_comparable, leakage_report, p_connect
from .tensor_core import LabeledOperator, LabeledVector, Subsystem, partial_trace, permute, tensor

__all__ = [
    "__version__",
    "CapacityCurve",
    "CapacityQuery",
    "LocalOperation",
    "axiom_suite",
    "fidelity_oracle",
    "fit_harmonic",
    "invert_capacity_curves",
    "q_ent",
    "q_ent_closed_form",
    "q_ent_zero_threshold",
    "CleanBranch",
    "HarmonicCleanModel",
    "PartialSwapModel",
    "Relation",
    "build_clean_general",
    "build_harmonic_purified",
    "build_harmonic_reduced",
    "build_partial_swap",
    "build_w_i",
    "ClosenessCriterion",
    "are_close",
    "calibrate_typicality",
    "ModelError",
    "ChoiInstrument",
    "PartySpec",
    "ProcessMatrix",
    "born_probability",
    "can_signal",
    "choi_of_kraus",
    "validate_process",
    "SectoredAmplitudes",
    "build_sectored_noninteracting",
    "marginal_probabilities",
    "reduce_sector",
    "TendencyThresholds",
    "classify",
    "is_comparable",
    "leakage_report",
    "p_connect",
    "LabeledOperator",
    "LabeledVector",
    "Subsystem",
    "partial_trace",
    "permute",
    "tensor",
]
