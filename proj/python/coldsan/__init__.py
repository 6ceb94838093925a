"""Cold-start fake news detection with a structure adversarial network."""

from ._core import (
    ConfigError,
    Corpus,
    DataError,
    Error,
    Model,
    NumericError,
    default_config,
    evaluate,
    gradcheck,
    metrics,
    paired_t_test,
    run_cli,
    run_experiment,
    train,
)

__all__ = [
    "ConfigError",
    "Corpus",
    "DataError",
    "Error",
    "Model",
    "NumericError",
    "default_config",
    "evaluate",
    "gradcheck",
    "metrics",
    "paired_t_test",
    "run_cli",
    "run_experiment",
    "train",
]
