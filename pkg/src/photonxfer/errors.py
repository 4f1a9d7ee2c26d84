"""Exception hierarchy shared by every photonxfer module."""


class PhotonXferError(Exception):
    """Base class for all library errors."""


class DimensionError(PhotonXferError, ValueError):
    """Operand shapes do not agree."""


class PreconditionError(PhotonXferError, ValueError):
    """An input violates a structural requirement (unitarity, Hurwitz, ...)."""


class PoleProximityError(PreconditionError):
    def __init__(self, s, pole, distance):
        self.s = s
        self.pole = pole
        self.distance = distance
        super().__init__(
            f"s={s!r} lies within {distance:.3e} of the pole {pole!r} of the transfer function"
        )


class StabilityError(PreconditionError):
    """Integration step exceeds the stable bound."""


class NumericalError(PhotonXferError, ArithmeticError):
    """A computed quantity failed its residual check."""


class RangeError(NumericalError, OverflowError):
    """Result is not representable in double precision."""


class DivergenceError(NumericalError):
    def __init__(self, time, message="non-finite state encountered"):
        self.time = time
        super().__init__(f"{message} at t={time!r}")
