"""Concrete k-means: Lloyd, shallow and deep CKM clustering with metrics."""

from ._core import (
    CkmError,
    ConfigError,
    InputError,
    Checkpoint,
    DeepResult,
    LloydResult,
    Scores,
    ShallowConfig,
    ShallowResult,
    TrainConfig,
    ae_kmeans,
    evaluate,
    gumbel_sample,
    hard_assign,
    kmeans_objective,
    kmeanspp_init,
    load_checkpoint,
    lloyd,
    lloyd_best_of,
    make_blobs,
    make_embedded_blobs,
    make_twonorm,
    rbf_log_probs,
    run,
    save_checkpoint,
    shallow_ckm_fit,
    standardize,
    train_ckm,
)

__all__ = [name for name in dir() if not name.startswith("_")]
