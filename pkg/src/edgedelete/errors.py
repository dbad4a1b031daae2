"""Exception types raised across the package."""


class NetworkError(ValueError):
    """A network file or network object violates the data model."""


class ImpossibleEvidenceError(ValueError):
    """The evidence has probability zero under the network."""

    def __init__(self, message="evidence has probability zero", iteration=None):
        if iteration is not None:
            message = f"{message} (iteration {iteration})"
        super().__init__(message)
        self.iteration = iteration


class ScaleGuardError(RuntimeError):
    """A computation would materialize a table larger than its configured cap."""


class UnreachableThresholdError(ValueError):
    """Edge selection cannot bring every bucket under the requested threshold."""

    def __init__(self, message, bucket=None):
        super().__init__(message)
        self.bucket = bucket


class NormalizationWarning(UserWarning):
    """A CPT row was off-normal by a small amount and has been renormalized."""
