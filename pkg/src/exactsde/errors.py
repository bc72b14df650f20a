"""Exception hierarchy shared across the package."""


class ExactSdeError(Exception):
    """Base class for every error raised by this package."""


class InvalidArgument(ExactSdeError, ValueError):
    pass


class ContractViolation(ExactSdeError, RuntimeError):
    """An internal invariant failed, e.g. a keep probability left [0, 1].

    This almost always means a model advertises a bound M that phi exceeds.
    """


class BudgetExceeded(ExactSdeError, RuntimeError):
    pass


class UnsupportedModel(ExactSdeError, ValueError):
    pass


class InvalidConfiguration(ExactSdeError, ValueError):
    pass


class DegenerateFilter(ExactSdeError, RuntimeError):
    def __init__(self, step, message=None):
        self.step = step
        super().__init__(message or f"all particle weights are zero at observation step {step}")


class IngestionError(ExactSdeError, ValueError):
    def __init__(self, row, message):
        self.row = row
        super().__init__(f"row {row}: {message}")


class ConfigError(ExactSdeError, ValueError):
    def __init__(self, key, message):
        self.key = key
        super().__init__(f"{key}: {message}")
