"""Exact arithmetic for classically integral quadratic forms.

Local solubility, local densities and the singular series, exponential
sums, descent for pairs failing strong local solubility, small zeros of
indefinite forms, exceptional integers of definite forms, and a desk
scale numerical check of the main term.
"""

__version__ = "0.1.0"

from .core import QuadraticForm, build_form, diagonal_form, dump_form, load_form
from .errors import Budget, BudgetError, ContradictionError, InputError, QFormsError

__all__ = [
    "Budget",
    "BudgetError",
    "ContradictionError",
    "InputError",
    "QFormsError",
    "QuadraticForm",
    "build_form",
    "diagonal_form",
    "dump_form",
    "load_form",
    "__version__",
]
