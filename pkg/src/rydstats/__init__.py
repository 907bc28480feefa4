"""Photon-number statistics of heralded light in a partially blockaded medium.

A library plus CLI that propagates truncated photon-number distributions
through loss/filter/blockade transfer matrices, models a heralded photon
source with realistic detection noise, runs the hard-sphere blockade
Monte Carlo, and estimates noise-corrected correlation functions from
time-tagged detector clicks.
"""

from .blockade import (
    BlockadeConfig,
    SurvivalDistribution,
    blockade_matrix,
    exact_pair_survival,
    simulate_fock,
    slow_light_matrix,
)
from .clicks import (
    ClickRecord,
    ClickStream,
    TrialCounts,
    TrialData,
    WindowSpec,
    analysis_report,
    bootstrap_error,
    count_trials,
    cross_correlation,
    g2_noise_corrected,
    g2_raw,
    ingest,
    synthesize,
)
from .errors import NumericalError, RydstatsError, ValidationError
from .fock import DEFAULT_N_MAX, FockDistribution, coherent, fock_state, vacuum
from .pipeline import (
    PipelineConfig,
    SweepResult,
    cloud_input_distribution,
    efficiency,
    g2_after_storage,
    medium_matrix,
    post_blockade_distribution,
    source_distribution,
    sweep,
    zeta_to_param,
)
from .ratemodel import (
    EfficiencyTable,
    RateModelParams,
    fit_p_eg,
    predict_cross_correlation,
    predict_probabilities,
    with_storage,
)
from .source import (
    SourceModel,
    conditional_read_state,
    ideal_cross_correlation,
    infer_p_from_g2,
    reference_g2_scaling,
    two_mode_joint,
)
from .transfer import (
    TransferMatrix,
    identity_matrix,
    loss_matrix,
    perfect_filter_matrix,
)

__version__ = "0.1.0"

__all__ = [
    "BlockadeConfig",
    "ClickRecord",
    "ClickStream",
    "DEFAULT_N_MAX",
    "EfficiencyTable",
    "FockDistribution",
    "NumericalError",
    "PipelineConfig",
    "RateModelParams",
    "RydstatsError",
    "SourceModel",
    "SurvivalDistribution",
    "SweepResult",
    "TransferMatrix",
    "TrialCounts",
    "TrialData",
    "ValidationError",
    "WindowSpec",
    "analysis_report",
    "blockade_matrix",
    "bootstrap_error",
    "cloud_input_distribution",
    "coherent",
    "conditional_read_state",
    "count_trials",
    "cross_correlation",
    "efficiency",
    "exact_pair_survival",
    "fit_p_eg",
    "fock_state",
    "g2_after_storage",
    "g2_noise_corrected",
    "g2_raw",
    "ideal_cross_correlation",
    "identity_matrix",
    "infer_p_from_g2",
    "ingest",
    "loss_matrix",
    "medium_matrix",
    "perfect_filter_matrix",
    "post_blockade_distribution",
    "predict_cross_correlation",
    "predict_probabilities",
    "reference_g2_scaling",
    "simulate_fock",
    "slow_light_matrix",
    "source_distribution",
    "sweep",
    "synthesize",
    "two_mode_joint",
    "vacuum",
    "with_storage",
]
