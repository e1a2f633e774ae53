"""Exception types shared across the toolkit."""


class ModelError(ValueError):
    """A physically invalid model (e.g. capacitance matrix not positive definite)."""


class CapacityError(ValueError):
    """Requested problem size exceeds the dense-storage guard."""


class CalibrationError(RuntimeError):
    """Gate calibration could not meet its targets; carries the best result found."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class AccuracyError(RuntimeError):
    """An adaptive numerical routine failed to certify its accuracy target."""
