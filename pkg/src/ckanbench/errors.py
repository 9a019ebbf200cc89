"""Exception types shared across the package.

Every anticipated failure is raised as one of these, so callers (and the
CLI exit-code mapping) can tell configuration mistakes from data problems
from API misuse.
"""


class CkanError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(CkanError):
    """Invalid configuration value, flag combination, or spec field."""


class DimensionError(CkanError):
    """Array rank or axis extent incompatible with the requested op."""


class FormatError(CkanError):
    """On-disk payload does not match the declared file format."""


class ConsistencyError(CkanError):
    """Two inputs that must agree (lengths, ids, shapes) do not."""


class StateError(CkanError):
    """API called out of order, e.g. backward before forward."""
