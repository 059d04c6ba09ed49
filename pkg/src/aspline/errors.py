"""Exception hierarchy shared across the package.

``DataError`` covers malformed or out-of-domain inputs (CLI exit code 3),
``NumericalError`` covers failures of the fitting machinery itself (exit
code 4). Precondition violations on library calls raise plain
``ValueError``.
"""


class AsplineError(Exception):
    """Base class for package-specific errors."""


class DataError(AsplineError):
    """Input data is malformed or incompatible with the requested model."""


class NumericalError(AsplineError):
    """A numerical procedure failed (singular system, divergence, ...)."""


class SingularMatrixError(NumericalError):
    """Cholesky factorization hit a non-positive (or below-floor) pivot."""

    def __init__(self, pivot_index: int, message: str | None = None):
        self.pivot_index = int(pivot_index)
        super().__init__(message or f"non-positive pivot at index {pivot_index}")


class RankDeficientBasisError(NumericalError):
    """An unpenalized refit design is rank deficient.

    Carries the knot span of the offending basis function so the caller can
    see which region of the domain lacks support.
    """

    def __init__(self, basis_index: int, span: tuple[float, float]):
        self.basis_index = int(basis_index)
        self.span = (float(span[0]), float(span[1]))
        super().__init__(
            f"reduced design is rank deficient: basis function {basis_index} "
            f"supported on [{span[0]:g}, {span[1]:g}] cannot be identified"
        )


class DivergenceError(NumericalError):
    """Iteratively reweighted least squares diverged."""

    def __init__(self, message: str, deviance_trace=None):
        self.deviance_trace = list(deviance_trace) if deviance_trace is not None else []
        super().__init__(message)
