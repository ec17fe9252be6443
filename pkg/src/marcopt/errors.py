"""Exception types shared across the package."""


class EnsembleError(ValueError):
    """An ensemble, geometry, or ensemble file failed validation."""


class ConfigError(ValueError):
    """An experiment configuration is malformed or inconsistent."""


class NoConvergenceError(RuntimeError):
    """A dual or multiplier search failed to meet its residual tolerance."""


class NotInCaseError(RuntimeError):
    """A case-specific solver found no multiplier consistent with its case."""
