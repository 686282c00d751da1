"""Exception types shared across the package."""


class MagorbError(Exception):
    """Base class for all magorb errors."""


class ModelError(MagorbError):
    """Invalid model specification or deck element."""


class DomainError(MagorbError):
    """Chart coordinate outside the model's valid domain."""


class FluxUndefinedError(MagorbError):
    """Flux requested for a nontrivial class without a global primitive."""


class NoNegativeSeedError(MagorbError):
    """No loop with negative free-period action could be constructed."""


class NotBoundedBelowError(MagorbError):
    """Minimization refused: the action has no minimum in this setting."""


class IntegrationError(MagorbError):
    """The flow integrator failed (left the chart or exhausted halvings)."""


class ConfigError(MagorbError):
    """Run configuration failed validation."""
