"""Exception types shared across the package."""


class McBoundsError(Exception):
    """Base class for all package-specific errors."""


class ConfigurationError(McBoundsError, ValueError):
    """Invalid channel or sweep configuration (bad SNR vector, empty bound list, ...)."""


class InfeasibleParamsError(McBoundsError, ValueError):
    """Strategy parameters violate a power-allocation constraint.

    Attributes
    ----------
    violated : str
        Name of the codeword whose power budget is exceeded
        (one of ``"x"``, ``"xl"``, ``"xk"``).
    excess : float
        Amount by which the budget is exceeded, in units of the power budget.
    """

    def __init__(self, violated: str, excess: float):
        self.violated = violated
        self.excess = excess
        super().__init__(
            f"power budget exceeded for codeword '{violated}' by {excess:.3e}"
        )


class ParseError(McBoundsError, ValueError):
    """Malformed CLI config file or command-line value."""


class FixtureError(McBoundsError, ValueError):
    """Reference-curve comparison could not be carried out (missing curve/figure)."""
