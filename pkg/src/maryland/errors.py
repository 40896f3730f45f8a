"""Exception and warning types raised across the package."""


class MarylandError(Exception):
    """Base class for all numerical and domain errors in this package."""


class DomainError(MarylandError, ValueError):
    """Input outside the domain of an operation."""


class RationalFrequencyError(DomainError):
    """The frequency is rational (or numerically indistinguishable from one)."""


class PotentialPoleError(DomainError):
    """A cotangent argument sits on (or too close to) an integer.

    Attributes
    ----------
    point : float
        The offending argument.
    index : int or None
        Position in the cocycle orbit, when raised from a product.
    """

    def __init__(self, point, index=None, msg=None):
        self.point = point
        self.index = index
        if msg is None:
            shown = complex(point) if isinstance(point, complex) else float(point)
            msg = f"cot(pi*z) pole: z={shown!r} is within tolerance of an integer"
            if index is not None:
                msg += f" (orbit index k={index})"
        super().__init__(msg)


class SingularMatrixError(MarylandError, ArithmeticError):
    pass


class SingularFundamentalError(SingularMatrixError):
    """det Psi vanishes (resonant eta) or is not constant."""


class SmallDenominatorError(MarylandError, ArithmeticError):
    """A sin(pi*n*omega) denominator in the sigma series fell below the floor."""


class NearSingularValue(MarylandError, ArithmeticError):
    """An argument landed on the sigma pole/zero lattice."""

    def __init__(self, msg, point=None, distance=None):
        self.point = point
        self.distance = distance
        super().__init__(msg)


class QuadratureError(MarylandError, ArithmeticError):
    def __init__(self, msg, estimate=None, error=None):
        self.estimate = estimate
        self.error = error
        super().__init__(msg)


class ResidueError(QuadratureError):
    pass


class ContourSelectionError(MarylandError, ArithmeticError):
    """No admissible ray direction with enough decay (z too close to the real axis)."""


class MinSolPoleError(MarylandError, ArithmeticError):
    """Argument too close to the pole set +-(omega*k + m), k, m >= 1."""


class PrecisionError(MarylandError, ArithmeticError):
    """Double precision cannot meet the requested accuracy."""


class ResonanceWarning(UserWarning):
    """eta sits on (or next to) the resonance lattice pi*(omega*Z + Z)."""


class RationalFrequencyWarning(UserWarning):
    """omega is close to a rational with small denominator."""
