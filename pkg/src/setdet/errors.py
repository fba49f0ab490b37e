"""Exception types shared across the package."""


class SetdetError(Exception):
    """Base class for all package errors."""


class ContractError(SetdetError):
    """A documented precondition was violated by the caller."""


class ShapeError(ContractError):
    """Tensor/array dimensions do not line up."""


class NonFiniteError(SetdetError):
    """A forward computation produced NaN or Inf."""


class CapacityExceeded(ContractError):
    """More ground-truth objects than prediction slots."""


class EmptyMaskError(SetdetError):
    """A binary mask with no foreground pixel cannot yield a box."""


class LoadError(SetdetError):
    """Dataset ingestion failed."""


class MalformedRecord(LoadError):
    """A manifest record is missing fields or has invalid values."""


class DanglingReference(LoadError):
    """An annotation references an image id that does not exist."""


class PnmError(LoadError):
    """A PPM/PGM file could not be parsed."""


class CheckpointError(SetdetError):
    """Checkpoint serialization failed."""


class CorruptCheckpoint(CheckpointError):
    """Checkpoint file is truncated or fails integrity checks."""


class CheckpointVersionError(CheckpointError):
    """Checkpoint was written by an incompatible format version."""


class ConfigError(SetdetError):
    """Run configuration is invalid."""
