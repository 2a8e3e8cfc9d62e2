"""Exception types shared by the compiled and pure-Python kernels."""


class LinAlgError(ValueError):
    pass


class RankDeficientError(LinAlgError):
    """A Householder pivot fell below the rank tolerance."""


class NotPositiveDefiniteError(LinAlgError):
    pass


class DegenerateAppendError(LinAlgError):
    """The appended column is numerically dependent on the factored ones."""


class BudgetExceededError(RuntimeError):
    """A brute-force enumeration would exceed its configured budget."""

    def __init__(self, message, combinations=None):
        super().__init__(message)
        self.combinations = combinations
