"""Speaker persona detection with utterance-to-profile matching."""

from ._spd_match import (
    ContractViolation,
    IoError,
    Model,
    NumericError,
    UnsupportedOperation,
    __version__,
    aggregate,
    count_parameters,
    gradient_check,
    metrics,
    model_names,
    run_cli,
    tokenize,
)

__all__ = [
    "ContractViolation",
    "IoError",
    "Model",
    "NumericError",
    "UnsupportedOperation",
    "__version__",
    "aggregate",
    "count_parameters",
    "gradient_check",
    "metrics",
    "model_names",
    "run_cli",
    "tokenize",
]
