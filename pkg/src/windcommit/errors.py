"""Exception hierarchy shared across the package."""


class WindcommitError(Exception):
    """Base class for all package-specific errors."""


class DomainError(WindcommitError, ValueError):
    """Invalid argument or violated precondition in a library call."""


class ConfigError(WindcommitError):
    """Malformed or invalid configuration document."""


class IngestionError(WindcommitError):
    """Malformed input data file."""


class SolverError(WindcommitError):
    """Solver failed or returned an unusable status."""


class AdapterError(SolverError):
    """External solver invocation or solution parsing failed."""

    def __init__(self, message, output=""):
        super().__init__(message)
        self.output = output


class BackendError(WindcommitError):
    """Chat backend transport failure."""


class ExtractionError(WindcommitError):
    """Probability vector could not be extracted from a reply."""


class ValidationError(WindcommitError):
    """Extracted probability vector failed validation."""

    def __init__(self, message, reason):
        super().__init__(message)
        self.reason = reason  # "length" | "negativity" | "sum"
