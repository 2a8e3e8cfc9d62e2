"""Robust linear regression with sparse outliers: GARD, baselines and certificates."""
from ._backend import BACKEND
from ._errors import (BudgetExceededError, DegenerateAppendError, LinAlgError,
                      NotPositiveDefiniteError, RankDeficientError)
from .gard import GardResult, RegressionProblem, SparseVector, gard_solve

__version__ = "0.1.0"

__all__ = ["BACKEND", "BudgetExceededError", "DegenerateAppendError", "LinAlgError",
           "NotPositiveDefiniteError", "RankDeficientError", "GardResult",
           "RegressionProblem", "SparseVector", "gard_solve", "__version__"]
