"""Exception types raised by the symbolic engine."""


class NoetherError(Exception):
    """Base class for all errors raised by :mod:`noether_gca`."""


class OrderCapExceeded(NoetherError):
    """A jet operation would produce a derivative order above the cap."""


class MissingAssignment(NoetherError, KeyError):
    """``evaluate`` was called without a value for some variable."""

    def __init__(self, variable):
        self.variable = variable
        super().__init__(variable)

    def __str__(self):
        from .jet_algebra import var_name

        return f"no value assigned to {var_name(self.variable)}"


class ClassificationFailed(NoetherError):
    """The solver basis does not match the canonical generator span."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class NotClosed(NoetherError):
    """A bracket of basis elements leaves the span of the basis."""

    def __init__(self, message, residual=None, pair=None):
        super().__init__(message)
        self.residual = residual
        self.pair = pair


class NotConserved(NoetherError):
    """A constructed Noether charge failed the exact conservation check."""


class NonCanonicalResidual(NoetherError):
    """{J_X, J_Y} - J_[X,Y] is not a constant."""


class OrderTooHigh(NoetherError):
    """A jet polynomial cannot be mapped to Ostrogradski phase space."""


class InvalidRotation(NoetherError):
    """A rotation matrix is not exactly orthogonal."""
