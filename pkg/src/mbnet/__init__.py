"""Multilayer bootstrap networks, their ensembles, and unsupervised model selection.

The package trains stacks of random-centroid clusterings whose one-hot
outputs feed the next layer, builds ensembles of such networks over a
shared bottom layer, selects the best base models without supervision
(via cluster validity criteria or distribution divergence), and
evaluates the resulting embeddings with agglomerative clustering.
"""

from .data import (
    CodeBlock,
    Dataset,
    Embedding,
    LabelVector,
    SparseCode,
    code_gram,
    concat_codes,
    load_code,
    load_csv,
    load_labels,
    make_blobs,
    round_half_up,
    save_code,
    single_block_code,
    to_dense,
    write_csv,
)
from .divergence import MmdReport, mmd_report, mmd_scores, mmd_scores_dense, mmd_weights
from .ensemble import (
    EnsembleConfig,
    MbnEnsemble,
    ensemble_from_json,
    ensemble_to_json,
    meta_embedding,
    sample_deltas,
    train_bottom,
    train_ensemble,
)
from .errors import (
    ConfigError,
    DataFormatError,
    DegenerateCriterionError,
    MbnError,
    ZeroVarianceError,
)
from .evaluation import AccReport, AhcConfig, accuracy, ahc
from .harness import (
    ExperimentConfig,
    RunReport,
    b_sweep,
    config_from_dict,
    delta_sweep,
    emit_weight_plot,
    load_config,
    run_experiment,
    stable_view,
)
from .network import (
    ClusteringUnit,
    Layer,
    MbnConfig,
    MbnModel,
    encode,
    model_from_json,
    model_to_json,
    schedule_layers,
    train_layer,
    train_mbn,
)
from .reduction import PcaModel, pca_fit, pca_sparse, pca_transform
from .selection import SelectionConfig, SelectionResult, select, select_rso, select_sd, select_so
from .validity import (
    CriterionScore,
    ValidityDiagnostics,
    criterion_fn,
    pb,
    pbm,
    swc,
    validity_diagnostics,
    vrc,
)

__version__ = "0.1.0"

__all__ = [
    "AccReport",
    "AhcConfig",
    "ClusteringUnit",
    "CodeBlock",
    "ConfigError",
    "CriterionScore",
    "DataFormatError",
    "Dataset",
    "DegenerateCriterionError",
    "Embedding",
    "EnsembleConfig",
    "ExperimentConfig",
    "LabelVector",
    "Layer",
    "MbnConfig",
    "MbnEnsemble",
    "MbnError",
    "MbnModel",
    "MmdReport",
    "PcaModel",
    "RunReport",
    "SelectionConfig",
    "SelectionResult",
    "SparseCode",
    "ValidityDiagnostics",
    "ZeroVarianceError",
    "accuracy",
    "ahc",
    "b_sweep",
    "config_from_dict",
    "code_gram",
    "concat_codes",
    "criterion_fn",
    "delta_sweep",
    "emit_weight_plot",
    "encode",
    "ensemble_from_json",
    "ensemble_to_json",
    "load_code",
    "load_config",
    "load_csv",
    "load_labels",
    "make_blobs",
    "meta_embedding",
    "mmd_report",
    "mmd_scores",
    "mmd_scores_dense",
    "mmd_weights",
    "model_from_json",
    "model_to_json",
    "pb",
    "pbm",
    "pca_fit",
    "pca_sparse",
    "pca_transform",
    "round_half_up",
    "run_experiment",
    "sample_deltas",
    "save_code",
    "schedule_layers",
    "select",
    "select_rso",
    "select_sd",
    "select_so",
    "single_block_code",
    "stable_view",
    "swc",
    "to_dense",
    "train_bottom",
    "train_ensemble",
    "train_layer",
    "train_mbn",
    "validity_diagnostics",
    "vrc",
    "write_csv",
]
