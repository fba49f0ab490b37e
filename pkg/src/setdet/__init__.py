"""setdet: set-prediction rectangle detection, built from scratch on numpy."""

__version__ = "0.1.0"

from .errors import (
    CapacityExceeded,
    CheckpointVersionError,
    ConfigError,
    ContractError,
    CorruptCheckpoint,
    DanglingReference,
    EmptyMaskError,
    LoadError,
    MalformedRecord,
    NonFiniteError,
    PnmError,
    SetdetError,
    ShapeError,
)
from .tensor import Tensor, finite_difference_grad

__all__ = [
    "Tensor",
    "finite_difference_grad",
    "SetdetError",
    "ContractError",
    "ShapeError",
    "NonFiniteError",
    "CapacityExceeded",
    "EmptyMaskError",
    "LoadError",
    "MalformedRecord",
    "DanglingReference",
    "PnmError",
    "CorruptCheckpoint",
    "CheckpointVersionError",
    "ConfigError",
    "__version__",
]
