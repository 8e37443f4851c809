class ConfigError(ValueError):
    """Invalid parameters or scenario configuration."""


class DomainError(ValueError):
    """A state or input left its admissible range."""


class InvariantViolation(RuntimeError):
    """A conservation or bound check failed while a scenario was running."""

    def __init__(self, message: str, step: int | None = None):
        super().__init__(message if step is None else f"step {step}: {message}")
        self.step = step
