"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """Bad shapes, bad parameters, or an unparseable scenario file."""


class NumericalError(ArithmeticError):
    """A computation produced a non-finite value."""

    def __init__(self, message: str, layer: int | None = None):
        self.layer = layer
        if layer is not None:
            message = f"{message} (layer {layer})"
        super().__init__(message)


class SaturationError(ValueError):
    """Requested control inputs need a negative squared rotor speed."""

    def __init__(self, message: str, omegas_sq=None):
        self.omegas_sq = omegas_sq
        super().__init__(message)


class DivergenceError(RuntimeError):
    """The simulated vehicle left the valid envelope; the episode has failed."""

    def __init__(self, message: str, t: float | None = None):
        self.t = t
        super().__init__(message)
