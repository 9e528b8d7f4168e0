class NumericalError(ArithmeticError):
    """Raised when a computation breaks a physical invariant (e.g. positivity)."""


class HorizonWarning(RuntimeWarning):
    """Integration stopped with a non-negligible trace still in the radical pair."""
