"""Cost-instrumented texture classification.

The engine classifies texture images by splitting them into a patch grid,
describing every patch with histogram descriptors (LBP, LPQ), scoring each
descriptor with a Gaussian-kernel SVM, and fusing the scores. A cascade of
such levels exits early when the decision margin clears a calibrated
threshold. Every run is metered by an exact operation-count ledger, and the
analytic cost formulas (classification, feature extraction under resolution
scaling, and global cost) are available as pure evaluators.
"""

from .amlf import (
    AmlfModel,
    CalibrationResult,
    CascadeResult,
    MarginRange,
    amlf_classify,
    calibrate_thresholds,
    margin,
    margin_range,
)
from .classifier import (
    GridSearchResult,
    KernelClassifier,
    NormalizationStats,
    fit_svm,
    gamma_cost,
    grid_search,
    normalize,
    train,
)
from .cost import (
    CostLedger,
    CostParams,
    cost_amlf,
    cost_c,
    cost_classification,
    cost_feature,
    cost_slf,
    global_amlf,
    global_slf,
    merge,
)
from .features import (
    FEATURE_SETS,
    LBP,
    LPQ,
    FeatureSetDescriptor,
    FeatureVector,
    extract,
    extract_lbp,
    extract_lpq,
)
from .harness import (
    DatasetManifest,
    ExperimentConfig,
    ReportRow,
    SplitPlan,
    emit_report,
    evaluate,
    make_splits,
    synth_dataset,
    train_pipeline,
)
from .imaging import GrayImage, PatchGrid, grid_count, load_image, rescale, split_patches, write_pgm
from .slf import ScoreSet, SlfLevelModel, fuse, slf_classify

__version__ = "0.1.0"

__all__ = [
    "AmlfModel",
    "CalibrationResult",
    "CascadeResult",
    "CostLedger",
    "CostParams",
    "DatasetManifest",
    "ExperimentConfig",
    "FEATURE_SETS",
    "FeatureSetDescriptor",
    "FeatureVector",
    "GrayImage",
    "GridSearchResult",
    "KernelClassifier",
    "LBP",
    "LPQ",
    "MarginRange",
    "NormalizationStats",
    "PatchGrid",
    "ReportRow",
    "ScoreSet",
    "SlfLevelModel",
    "SplitPlan",
    "amlf_classify",
    "calibrate_thresholds",
    "cost_amlf",
    "cost_c",
    "cost_classification",
    "cost_feature",
    "cost_slf",
    "emit_report",
    "evaluate",
    "extract",
    "extract_lbp",
    "extract_lpq",
    "fit_svm",
    "fuse",
    "gamma_cost",
    "global_amlf",
    "global_slf",
    "grid_count",
    "grid_search",
    "load_image",
    "make_splits",
    "margin",
    "margin_range",
    "merge",
    "normalize",
    "rescale",
    "slf_classify",
    "split_patches",
    "synth_dataset",
    "train",
    "train_pipeline",
    "write_pgm",
]
