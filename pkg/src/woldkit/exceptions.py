"""Exception hierarchy for woldkit."""


class WoldkitError(Exception):
    """Base class for all woldkit errors."""


class InputError(WoldkitError, ValueError):
    """Raised when an argument is malformed (shape, finiteness, mismatched dims)."""


class DomainError(WoldkitError):
    """Raised when inputs are well formed but violate a mathematical precondition.

    The offending quantity (an angle or a defect) is kept on ``value``.
    """

    def __init__(self, msg, value=None):
        super().__init__(msg)
        self.value = value


class ConsistencyError(WoldkitError):
    """Raised when two independent numerical routes to the same object disagree."""

    def __init__(self, msg, details=None):
        super().__init__(msg)
        self.details = details or {}


class GateError(WoldkitError):
    """Raised when a tuple fails the acceptance gate and must not be decomposed."""

    def __init__(self, msg, report=None):
        super().__init__(msg)
        self.report = report


class DecompositionError(WoldkitError):
    """Raised when a computed decomposition fails one of its verification checks.

    ``residuals`` holds the full residual record and ``label`` the offending
    block label, if any.
    """

    def __init__(self, msg, residuals=None, label=None):
        super().__init__(msg)
        self.residuals = residuals or {}
        self.label = label


class ResourceError(WoldkitError):
    """Raised when a fixture would exceed the configured dimension cap."""
