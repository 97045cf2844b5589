"""Bi-domain active learning toolkit for detector-style frame records."""

from .core import (
    BudgetSchedule,
    Domain,
    FrameRecord,
    PipelineState,
    Score,
    validate_frame,
)
from .discriminator import (
    DiscriminatorModel,
    NumericalError,
    TrainConfig,
    bce_loss,
    domainness,
    domainness_logit,
    forward,
    loss_and_grads,
    train,
)
from .io import (
    BUDGET_PRESETS,
    ConfigError,
    FrameFormatError,
    load_config,
    load_frames,
    parse_schedule,
    parse_source_mode,
    save_frames,
)
from .pipeline import (
    DetectorOracle,
    PipelineConfig,
    run_bidomain,
    serialize_report,
    update_labeled_pool,
)
from .scoring import EnhancedFeature, channel_max, enhance, entropy_map, pool, scene_vector
from .simulator import (
    BenchmarkReport,
    ProxyDetector,
    SyntheticConfig,
    benchmark,
    default_schedule,
    frame_entropy,
    generate,
    paired_permutation_pvalue,
    run_strategy,
    sample_committee,
    sample_entropy,
    sample_random,
    selection_diversity,
)
from .source_sampler import Proportion, Threshold, TopK, score_source, select_source
from .target_sampler import (
    BankConfig,
    BankSet,
    ReweightedROI,
    SimilarityBank,
    build_banks,
    cosine,
    merge_banks,
    reweight,
    sample_round,
    select_targets,
)

__version__ = "0.1.0"

__all__ = [
    "BUDGET_PRESETS",
    "BankConfig",
    "BankSet",
    "BenchmarkReport",
    "BudgetSchedule",
    "ConfigError",
    "DetectorOracle",
    "DiscriminatorModel",
    "Domain",
    "EnhancedFeature",
    "FrameFormatError",
    "FrameRecord",
    "NumericalError",
    "PipelineConfig",
    "PipelineState",
    "Proportion",
    "ProxyDetector",
    "ReweightedROI",
    "Score",
    "SimilarityBank",
    "SyntheticConfig",
    "Threshold",
    "TopK",
    "TrainConfig",
    "bce_loss",
    "benchmark",
    "build_banks",
    "channel_max",
    "cosine",
    "default_schedule",
    "domainness",
    "domainness_logit",
    "enhance",
    "entropy_map",
    "forward",
    "frame_entropy",
    "generate",
    "load_config",
    "load_frames",
    "loss_and_grads",
    "merge_banks",
    "paired_permutation_pvalue",
    "parse_schedule",
    "parse_source_mode",
    "pool",
    "reweight",
    "run_bidomain",
    "run_strategy",
    "sample_committee",
    "sample_entropy",
    "sample_random",
    "sample_round",
    "save_frames",
    "scene_vector",
    "score_source",
    "select_source",
    "select_targets",
    "selection_diversity",
    "serialize_report",
    "train",
    "update_labeled_pool",
    "validate_frame",
]
