class ConfigError(ValueError):
    """Invalid configuration, shape mismatch or unsupported option."""


class NumericalError(FloatingPointError):
    """A loss, target or gradient became non-finite during training."""

    def __init__(self, message: str, step: int | None = None):
        self.step = step
        if step is not None:
            message = f"step {step}: {message}"
        super().__init__(message)
