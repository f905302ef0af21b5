"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """Invalid dimensions, parameters or configuration content."""


class NumericalError(ArithmeticError):
    """A factorization or solve failed; message carries conditioning info."""


class FittingError(RuntimeError):
    """Hyperparameter fitting failed for every start point."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or []


class RunError(RuntimeError):
    """A run-to-run iteration could not be completed."""

    def __init__(self, message, iteration=None):
        super().__init__(message if iteration is None else f"iteration {iteration}: {message}")
        self.iteration = iteration
