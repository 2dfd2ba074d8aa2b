"""Exception types raised across the package."""


class ViscoError(Exception):
    """Base class for all package errors."""


class InvalidShape(ViscoError, ValueError):
    pass


class GridMismatch(ViscoError, ValueError):
    pass


class NonFinite(ViscoError, FloatingPointError):
    """A state coefficient became NaN or Inf during time stepping."""

    def __init__(self, message: str, t: float | None = None, eps: float | None = None):
        super().__init__(message)
        self.t = t
        self.eps = eps

    def __str__(self) -> str:
        msg = super().__str__()
        extra = []
        if self.t is not None:
            extra.append(f"t={self.t:.6g}")
        if self.eps is not None:
            extra.append(f"eps={self.eps:.6g}")
        return f"{msg} ({', '.join(extra)})" if extra else msg


class LedgerMissing(ViscoError):
    pass


class TestFieldNotDivergenceFree(ViscoError, ValueError):
    __test__ = False  # keep pytest from collecting this


class InitialMismatch(ViscoError):
    pass


class BudgetExceeded(ViscoError, ValueError):
    pass


class NullspaceDeficient(ViscoError):
    pass


class UnknownGenerator(ViscoError, KeyError):
    pass


class SnapshotError(ViscoError):
    pass


class BadMagic(SnapshotError):
    pass


class VersionUnsupported(SnapshotError):
    pass


class TruncatedPayload(SnapshotError):
    pass


class UnresolvedWarning(UserWarning):
    """Spectral tail of a field is too large for pointwise norms to be trusted."""
