"""Exception types shared across the package."""


class CapacityError(ValueError):
    """Requested qubit count is outside the supported range."""


class DimensionError(ValueError):
    """Operands disagree on the number of qubits or vector length."""


class FormatError(ValueError):
    """A schedule, instance, or manifest file could not be parsed."""


class ConfigError(ValueError):
    """Invalid command or configuration parameters."""


class MetadataError(ValueError):
    """An instance lacks the ground-state metadata an operation needs."""
