"""Respondent-driven sampling prevalence estimators with edge inclusion weighting."""

__version__ = "0.1.0"

from .bootstrap import BootstrapResult, bootstrap_estimators, salganik_bootstrap
from .estimators import (
    ESTIMATORS,
    PrevalenceEstimate,
    SampleMeanEstimator,
    SHEstimator,
    SSEstimator,
    VHEstimator,
    WeightedSHEstimator,
    estimate_mean,
    estimate_sh,
    estimate_ss,
    estimate_vh,
    estimate_wsh,
)
from .inclusion import (
    DegreeDistribution,
    InclusionEstimates,
    InclusionProbabilityEstimator,
    estimate_edge_probabilities,
    estimate_inclusion,
    estimate_pi_and_distribution,
    ppswor_draw,
    sampled_before_counts,
)
from .io import parse_recruitment_csv, write_recruitment_csv
from .network import (
    BlockProbabilities,
    Network,
    NetworkTargets,
    generate_network,
    network_stats,
    solve_block_probabilities,
)
from .sampler import RecruitmentSample, SamplingConfig, draw_rds_sample, recruitment_tallies
from .study import (
    InclusionConfig,
    MseTable,
    StudyCondition,
    benchmark_conditions,
    misspecification_sweep,
    run_estimation,
    run_simulation_study,
)
