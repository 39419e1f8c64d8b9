"""Exception types shared across the package."""


class MbnError(Exception):
    """Base class for package-specific failures."""


class DataFormatError(MbnError):
    """A file could not be parsed or violates the container contract."""


class ConfigError(MbnError):
    """A configuration value is missing, out of range, or inconsistent."""


class ZeroVarianceError(MbnError):
    """Input to PCA has no variance at all (rank zero)."""


class DegenerateCriterionError(MbnError):
    """A validity criterion is undefined on the given partition."""
