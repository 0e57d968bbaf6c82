"""Exception and warning types shared across the package."""


class QRConformalError(Exception):
    """Base class for every error raised by this package."""


class TowerMismatch(QRConformalError):
    """Arithmetic mixed rational functions over incompatible parameter fields."""


class PoleAtPoint(QRConformalError):
    def __init__(self, point):
        super().__init__(f"denominator vanishes at xi = {point}")
        self.point = point


class PoleAtZeroParam(QRConformalError):
    """The parameter denominator vanishes identically at parameter = 0."""


class Divergent(QRConformalError):
    """A limit at xi -> infinity does not exist (numerator degree too high)."""


class ModuleUndefined(QRConformalError):
    """An operator has a genuine pole at a basis vector of the Verma module."""

    def __init__(self, n, detail=""):
        msg = f"operator undefined on basis vector z^{n}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)
        self.n = n


class NonPositiveNorms(QRConformalError):
    """The weight does not give a positive definite inner product."""


class PreconditionError(QRConformalError, ValueError):
    """Arguments violate the documented precondition of an operation."""


class CancellationWarning(UserWarning):
    """A reduced composite symbol was evaluated across a removable singularity."""
