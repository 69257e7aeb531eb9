"""spectrafuse: multimodal spectroscopic preprocessing, fusion, and evaluation.

A chemometrics toolkit for FTIR / Raman / EEM-fluorescence studies: modality
specific preprocessing, low-level data fusion of the per-modality feature
blocks, deterministic gradient-boosted-tree classification, grouped
stratified cross-validation, and an exhaustive preprocessing-pipeline search
with min-max selection.  A synthetic cohort generator provides ground truth
for desk-scale verification.
"""

from .core import (
    EEMatrix,
    SampleRecord,
    SampleTable,
    SpectralAxis,
    Spectrum1D,
    load_dataset,
    resample_to_grid,
    save_dataset,
)
from .prep1d import (
    DEFAULT_FTIR_PIPELINE,
    PipelineConfig,
    apply_pipeline,
    average_replicates,
    baseline_als,
    baseline_polynomial,
    derivative_block,
    moving_average,
    normalize,
    raman_pipeline,
    savitzky_golay,
    select_region,
    snv,
)
from .prepeem import eem_pipeline, flatten, mask_physical, remove_rayleigh, subtract_blank
from .fusion import (
    FeatureMatrix,
    ModalityBlock,
    ZScoreScaler,
    align_patients,
    block_scale,
    collapse_replicates_for_fusion,
    fuse,
    zscore_fit,
    zscore_transform,
)
from .gbdt import GBDTModel, GBDTParams, train
from .evaluation import (
    cross_validate,
    learning_curve,
    pca_project,
    roc_auc,
    stratified_group_kfold,
    threshold_metrics,
)
from .search import enumerate_pipelines, run_search, select_minmax
from .synth import SynthSpec, gen_1d, gen_eem, generate_dataset, write_dataset

__version__ = "0.1.0"

__all__ = [
    "EEMatrix", "SampleRecord", "SampleTable", "SpectralAxis", "Spectrum1D",
    "load_dataset", "resample_to_grid", "save_dataset",
    "DEFAULT_FTIR_PIPELINE", "PipelineConfig", "apply_pipeline",
    "average_replicates", "baseline_als", "baseline_polynomial",
    "derivative_block", "moving_average", "normalize", "raman_pipeline",
    "savitzky_golay", "select_region", "snv",
    "eem_pipeline", "flatten", "mask_physical", "remove_rayleigh", "subtract_blank",
    "FeatureMatrix", "ModalityBlock", "ZScoreScaler", "align_patients",
    "block_scale", "collapse_replicates_for_fusion", "fuse",
    "zscore_fit", "zscore_transform",
    "GBDTModel", "GBDTParams", "train",
    "cross_validate", "learning_curve", "pca_project", "roc_auc",
    "stratified_group_kfold", "threshold_metrics",
    "enumerate_pipelines", "run_search", "select_minmax",
    "SynthSpec", "gen_1d", "gen_eem", "generate_dataset", "write_dataset",
]
