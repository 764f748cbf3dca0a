"""Exception and warning types shared across the package."""


class ModelError(ValueError):
    """Invalid source model, delay distribution or belief."""


class ConfigError(ValueError):
    """Invalid solver or simulation configuration."""


class NonConvergence(RuntimeError):
    """Relative value iteration did not converge within its iteration budget."""


class CapBindingWarning(UserWarning):
    """A greedy waiting time hit the finite action cap.

    The optimum over all waiting times may lie beyond the cap; raise the cap
    and re-solve if this fires.
    """
