"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """Raised when a configuration value is out of its legal range."""


class NumericError(ArithmeticError):
    """Raised when a computation produces non-finite values.

    Carries optional context (e.g. the training epoch) in ``details``.
    """

    def __init__(self, message, **details):
        super().__init__(message)
        self.details = details

    def __str__(self):
        base = super().__str__()
        if self.details:
            extras = ", ".join(f"{k}={v}" for k, v in sorted(self.details.items()))
            return f"{base} ({extras})"
        return base
