"""Adversarial multi-task neural dialogue evaluation metric."""

from ._advmt import (
    CheckpointError,
    ConfigError,
    DataError,
    DivergenceError,
    Scorer,
    UndefinedCorrelation,
    blend,
    bleu,
    build_vocab,
    cli,
    gradcheck,
    minmax_normalize,
    pearson,
    rouge_l,
    spearman,
    train,
)

__all__ = [
    "CheckpointError",
    "ConfigError",
    "DataError",
    "DivergenceError",
    "Scorer",
    "UndefinedCorrelation",
    "blend",
    "bleu",
    "build_vocab",
    "cli",
    "gradcheck",
    "minmax_normalize",
    "pearson",
    "rouge_l",
    "spearman",
    "train",
]
