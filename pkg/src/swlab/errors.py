"""Exception hierarchy used across the package."""


class SwlabError(Exception):
    """Base class for all package errors."""


class DomainError(SwlabError, ValueError):
    """An argument lies outside the admissible domain."""


class ConfigurationError(SwlabError, ValueError):
    """Malformed or inconsistent run configuration."""


class PrecisionError(SwlabError):
    """A requested accuracy cannot be met with the current discretisation."""


class NumericalError(SwlabError):
    """An iterative method failed to converge or produced invalid numbers."""


class RareEventError(SwlabError):
    """A rejection sampler exhausted its retry budget."""

    def __init__(self, msg, acceptance=None):
        super().__init__(msg)
        self.acceptance = acceptance


class UnsupportedModelError(SwlabError):
    """The increment model lacks a capability needed by the caller."""


class SizeError(SwlabError):
    """Problem size exceeds the work budget."""

    def __init__(self, msg, suggestion=None):
        super().__init__(msg)
        self.suggestion = suggestion
