"""Exception hierarchy shared across the package.

The CLI maps these onto process exit codes: ConfigError -> 2,
DataError (and subclasses) -> 3, NumericError (and subclasses) -> 4.
"""


class AttrShareError(Exception):
    """Base class for all errors raised by this package."""

    exit_code = 1


class ConfigError(AttrShareError):
    """Invalid configuration value or infeasible scenario settings."""

    exit_code = 2


class DataError(AttrShareError):
    """Bad input data: non-finite values, empty sets, inconsistent labels."""

    exit_code = 3


class FormatError(DataError):
    """Malformed embedding file: wrong magic, truncated payload."""


class VersionError(FormatError):
    """File or checkpoint written by an unsupported format version."""


class ManifestError(DataError):
    """Manifest sidecar inconsistent with its embedding file."""


class ScenarioError(DataError):
    """Task data violates scenario structure (e.g. duplicated class ids)."""


class StateError(DataError):
    """Persisted or in-memory task state is internally inconsistent."""


class NumericError(AttrShareError):
    """Numeric contract violation."""

    exit_code = 4


class ShapeError(NumericError):
    """Operands have incompatible dimensions."""


class DegenerateVectorError(NumericError):
    """A vector that must have positive norm is (numerically) zero."""
