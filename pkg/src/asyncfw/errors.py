"""Exception types shared across the package."""


class DimensionError(ValueError):
    """Array shapes do not line up."""


class ParameterError(ValueError):
    """An argument is outside its legal range."""


class DegenerateInputError(ValueError):
    """Input has no usable structure (e.g. an all-zero matrix)."""


class FeasibilityError(ValueError):
    """An iterate left the nuclear-norm ball."""


class InfeasibleTargetError(ValueError):
    """Requested accuracy lies below the residual floor of a constant-batch run."""


class ConfigError(ValueError):
    """Experiment configuration failed validation."""


class TransportError(RuntimeError):
    """A message channel failed mid-run."""
