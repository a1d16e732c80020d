"""Exception hierarchy shared by all hct modules."""


class HctError(Exception):
    """Base class for every error raised by hct."""


class ShapeMismatch(HctError, ValueError):
    pass


class NotSymmetric(HctError, ValueError):
    pass


class NotPositiveDefinite(HctError, ValueError):
    pass


class SizeLimitExceeded(HctError, ValueError):
    """Raised when a dense factorization is requested above the desk-scale guard."""


class BasisNotOrthonormal(HctError, ValueError):
    pass


class ComplexPropertyViolated(HctError, ValueError):
    def __init__(self, residual: float, tolerance: float, what: str = "A1*A0"):
        self.residual = residual
        self.tolerance = tolerance
        super().__init__(
            f"complex property violated: |{what}| relative residual "
            f"{residual:.3e} exceeds {tolerance:.1e}"
        )


class NoReducedPart(HctError, ValueError):
    """The operator is zero, so its reduced operator lives on {0}."""


class DecompositionResidualTooLarge(HctError, ValueError):
    pass


class DecompositionMismatch(HctError, ValueError):
    pass


class NotExact(HctError, ValueError):
    def __init__(self, cohomology_dim: int):
        self.cohomology_dim = cohomology_dim
        super().__init__(
            f"complex is not exact (cohomology dimension {cohomology_dim}); "
            "use three_term_decomposition"
        )


class NotAPreBasis(HctError, ValueError):
    pass


class NonManifold(HctError, ValueError):
    pass


class InvertedCell(HctError, ValueError):
    pass


class DuplicateCell(HctError, ValueError):
    pass


class NonSPDMass(HctError, ValueError):
    pass


class WrongDimension(HctError, ValueError):
    pass


class UnknownGenerator(HctError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else "unknown generator"


class BadParams(HctError, ValueError):
    pass


class ConfigError(HctError, ValueError):
    """Configuration problem; ``field`` names the offending key path."""

    def __init__(self, message: str, field: str | None = None):
        self.field = field
        super().__init__(f"{field}: {message}" if field else message)
