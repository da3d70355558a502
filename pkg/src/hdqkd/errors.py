"""Exception hierarchy shared across the package.

The CLI maps these onto process exit codes: configuration problems exit
with 1, computation failures with 2 and I/O problems with 3.
"""


class HdqkdError(Exception):
    """Base class for all package-specific errors."""


class DomainError(HdqkdError, ValueError):
    """An argument is outside the physically or mathematically valid range."""


class ConfigError(HdqkdError, ValueError):
    """A configuration document or preset is malformed or inconsistent."""


class ComputationError(HdqkdError, RuntimeError):
    """A computation cannot be carried out (non-convergence, dead branches...)."""


class EstimationImpossibleError(ComputationError):
    """No frames are available for parameter estimation."""


class NoKeyError(ComputationError):
    """The bounds admit no secret key (vanishing single-pair fraction or
    unbounded excess noise); the caller must abort key extraction."""


class ChernoffInapplicableError(ComputationError):
    """The multiplicative concentration bound's preconditions fail.

    Carries the diagnostics of the applicability check so the caller can
    decide whether to fall back to the distribution-free bound or to
    proceed with the stated widths and flag the result.
    """

    def __init__(self, message: str, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics


class SecurityModelError(HdqkdError, ValueError):
    """A security-model table is malformed or queried outside its hull."""
