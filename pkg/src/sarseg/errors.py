"""Exception types shared across the package.

Every error the pipeline can surface deliberately derives from SarsegError so
the CLI can map error classes to distinct exit codes.
"""


class SarsegError(Exception):
    """Base class for all deliberate pipeline errors."""


class InputError(SarsegError):
    """Malformed or inconsistent input data (missing bands, geometry mismatch...)."""


class PairingError(SarsegError):
    """A label mask does not match the geometry of the scene it is paired with."""


class EmptyBandError(SarsegError):
    """A band contains no valid (non-nodata) pixels."""


class CapacityError(SarsegError):
    """Imagelet sampling could not reach the requested counts.

    Carries the per-quota achieved counts so callers can report the shortfall.
    """

    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = dict(achieved or {})


class SpecError(SarsegError):
    """An architecture or run specification is invalid."""


class WeightError(SarsegError):
    """Pretrained or checkpointed weights are incompatible with the network."""


class ShapeError(SarsegError):
    """An input shape violates a network's stride divisibility requirement."""

    def __init__(self, message, required_multiple=None):
        super().__init__(message)
        self.required_multiple = required_multiple


class ConfigError(SarsegError):
    """A run configuration is unusable (missing paths, empty splits...)."""


class DivergenceError(SarsegError):
    """Training produced a non-finite loss.

    ``last_checkpoint`` points at the most recent good checkpoint, if any.
    """

    def __init__(self, message, last_checkpoint=None):
        super().__init__(message)
        self.last_checkpoint = last_checkpoint


class UndefinedMetric(SarsegError):
    """A metric is undefined for this confusion matrix (zero marginal, empty matrix)."""
