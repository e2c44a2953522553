"""Exception hierarchy shared by all dnmaps modules."""


class DnMapsError(Exception):
    """Base class for every error raised by dnmaps."""


class InvalidConfig(DnMapsError, ValueError):
    """Generator parameters or experiment configuration out of bounds."""


class InvalidInput(DnMapsError, ValueError):
    """An operation received an argument violating its precondition."""


class GeometryError(DnMapsError):
    """A mesh construction produced (or would produce) invalid geometry."""


class NumericalError(DnMapsError):
    """A linear solve or iteration failed to meet its accuracy contract."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class IndeterminateRank(DnMapsError):
    """No clear multiplicative gap in a singular-value profile."""

    def __init__(self, message, profile):
        super().__init__(message)
        self.profile = profile


class DivergenceError(NumericalError):
    """A Neumann series stopped contracting."""

    def __init__(self, message, mu_sup):
        super().__init__(message)
        self.mu_sup = mu_sup


class SingularComposition(DnMapsError):
    """Beltrami composition denominator too close to zero."""
