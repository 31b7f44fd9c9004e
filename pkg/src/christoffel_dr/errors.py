"""Exception types raised by the numerical pipeline."""


class ChristoffelError(Exception):
    """Base class for numerical failures (rank, factorization, eigen)."""


class NotPositiveDefinite(ChristoffelError):
    pass


class EigenFailure(ChristoffelError):
    pass


class InsufficientRank(ChristoffelError):
    """A bag's x-Gram matrix is not positive definite."""

    def __init__(self, bag_id, message=None):
        self.bag_id = bag_id
        super().__init__(message or f"bag {bag_id!r}: x-Gram matrix is rank deficient")


class SingularConditionalGram(ChristoffelError):
    pass


class DatasetError(ValueError):
    """Invalid dataset shape or contents (sizes, non-finite values, parse errors)."""


class OverfitWarning(UserWarning):
    pass
