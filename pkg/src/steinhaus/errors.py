"""Exception types.  The CLI maps these onto exit codes."""


class SteinhausError(Exception):
    pass


class HorizonError(SteinhausError, ValueError):
    """A query reaches past the radius where the point list is complete."""


class WindowTooLarge(SteinhausError, ValueError):
    pass


class PointFileError(SteinhausError, ValueError):
    pass


class BudgetExhausted(SteinhausError):
    """A search ran out of iterations.  ``trace`` holds the partial progress."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = list(trace or [])


class WitnessSearchExhausted(SteinhausError):
    """No separating perturbation was found for any shell pair.

    This is evidence of a locally indistinguishable pair, not a proof.
    """

    def __init__(self, message, attempts=0, best_separation=0.0):
        super().__init__(message)
        self.attempts = attempts
        self.best_separation = best_separation
