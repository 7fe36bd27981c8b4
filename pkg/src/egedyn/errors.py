"""Exception types shared across the package."""


class ArgumentError(ValueError):
    """Raised when an argument is outside its documented domain."""


class DegeneracyError(ArithmeticError):
    """Raised when a spectrum is (numerically) degenerate.

    Overlaps and the eigenvalue SDE coefficients blow up like the inverse
    squared gap, so near-collisions are reported instead of propagated.
    """

    def __init__(self, msg, min_gap=0.0, t=None, replica=None, state=None):
        super().__init__(msg)
        self.min_gap = float(min_gap)
        self.t = t
        self.replica = replica
        self.state = state
