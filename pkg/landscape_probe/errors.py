"""Exception types raised throughout landscape_probe."""
from typing import Any, Optional


class StructureError(ValueError):
    """Parameter manifest and network spec (or two manifests) do not agree."""


class EmptyDatasetError(ValueError):
    """An objective was requested over zero examples."""


class EvaluationError(ArithmeticError):
    """The objective evaluated to a non-finite value.

    Attributes
    ----------
    n_nonfinite: int
        number of examples with a non-finite loss
    alpha: Optional[float]
        interpolation coefficient at which the failure happened, if any
    """

    def __init__(self, msg: str, n_nonfinite: int = 0, alpha: Optional[float] = None):
        super().__init__(msg)
        self.n_nonfinite = n_nonfinite
        self.alpha = alpha


class DivergedError(ArithmeticError):
    """Training produced a non-finite loss.

    Attributes
    ----------
    last_finite: ParamVector
        last parameter vector with finite entries
    epoch: int
        epoch in which the divergence was detected
    """

    def __init__(self, msg: str, last_finite: Any, epoch: int):
        super().__init__(msg)
        self.last_finite = last_finite
        self.epoch = epoch


class IDXFormatError(ValueError):
    """IDX file has an unexpected magic number."""


class IDXLengthError(ValueError):
    """IDX file is shorter than its header declares."""


class IDXConsistencyError(ValueError):
    """Image and label IDX files disagree on the number of items."""


class TrajectoryFormatError(ValueError):
    """File is not a trajectory file."""


class TrajectoryVersionError(ValueError):
    """Trajectory file was written by an unsupported format version."""


class DigestMismatchError(ValueError):
    """Network spec digests do not match."""


class TruncatedFileError(ValueError):
    """Trajectory payload is shorter than announced."""


class DegenerateTrajectoryError(ValueError):
    """Initial and solution parameters coincide, no direction can be defined."""


class ConfigError(ValueError):
    """Invalid experiment configuration.

    Attributes
    ----------
    field: str
        offending field as ``section.key``
    """

    def __init__(self, field: str, msg: str):
        super().__init__(f"{field}: {msg}")
        self.field = field
