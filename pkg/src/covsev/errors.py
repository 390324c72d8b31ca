"""Exception types shared across the pipeline."""


class CovsevError(Exception):
    """Base class for all pipeline errors."""


class ManifestError(CovsevError):
    """Malformed or inconsistent dataset manifest."""


class ShapeError(CovsevError):
    """Tensor or mask does not match its contracted shape."""


class CacheError(CovsevError):
    """Volume cache payload or sidecar is invalid."""


class CheckpointError(CovsevError):
    """Checkpoint file is invalid or was written under a different config."""


class StageError(CovsevError):
    """A pipeline stage failed; message names the stage."""
