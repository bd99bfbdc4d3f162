class PawError(Exception):
    """Base class for every numerical failure raised by paw1d."""

    exit_code = 3

    def __init__(self, message):
        self.message = message
        super().__init__(self.message)


class ConfigError(PawError):
    """A parameter violates a model, setup or run-config constraint."""

    exit_code = 2


class RootCountMismatch(PawError):
    def __init__(self, message, expected=None, found=None):
        self.expected = expected
        self.found = found
        super().__init__(message)


class SingularMatching(PawError):
    def __init__(self, message, cond=None):
        self.cond = cond
        super().__init__(message)


class IllConditionedGram(PawError):
    def __init__(self, message, eta=None, cond=None):
        self.eta = eta
        self.cond = cond
        super().__init__(message)


class AssumptionViolated(PawError):
    def __init__(self, message, eta=None, cond=None):
        self.eta = eta
        self.cond = cond
        super().__init__(message)


class NotPositiveDefinite(PawError):
    def __init__(self, message, pivot=None):
        self.pivot = pivot
        super().__init__(message)


class NoConvergence(PawError):
    pass


class DegenerateFit(PawError):
    pass
