"""Exact representation of classically integral quadratic forms.

A form is stored by its integer Gram matrix A (so Q(x) = x^T A x, and the
cross coefficient of x_i x_j in the polynomial is 2*A_ij).  Determinant,
height and definiteness class are all derived exactly; floating point only
appears in the advisory eigenvalue report.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property

import numpy as np

from .errors import InputError
from .linalg import IntMatrix, IntVector, as_matrix, det, leading_minors, mat_vec


@dataclass(frozen=True)
class EigenEnvelope:
    """Certified two-sided bounds on the eigenvalues of the Gram matrix.

    max_abs_upper / min_abs_lower are exact (max-row-sum bound and the
    |det| / bound^(n-1) counting argument); numeric_eigs is advisory float
    data that must land inside the certified window.
    """

    max_abs_upper: int
    min_abs_lower: Fraction
    numeric_eigs: tuple[float, ...]


@dataclass(frozen=True)
class QuadraticForm:
    n: int
    gram: IntMatrix

    @cached_property
    def determinant(self) -> int:
        return det(self.gram)

    @cached_property
    def height(self) -> int:
        return max(abs(v) for row in self.gram for v in row)

    @cached_property
    def classification(self) -> str:
        """'positive-definite' | 'negative-definite' | 'indefinite' | 'degenerate'."""
        if self.determinant == 0:
            return "degenerate"
        minors = leading_minors(self.gram)
        if all(m > 0 for m in minors):
            return "positive-definite"
        if all(m * (-1) ** (k + 1) > 0 for k, m in enumerate(minors)):
            return "negative-definite"
        return "indefinite"

    @cached_property
    def is_diagonal(self) -> bool:
        return all(
            self.gram[i][j] == 0
            for i in range(self.n)
            for j in range(self.n)
            if i != j
        )

    @property
    def diagonal(self) -> IntVector:
        if not self.is_diagonal:
            raise InputError("form is not diagonal")
        return tuple(self.gram[i][i] for i in range(self.n))

    def evaluate(self, x) -> int:
        if len(x) != self.n:
            raise InputError(f"vector has length {len(x)}, expected {self.n}")
        return sum(
            self.gram[i][j] * x[i] * x[j] for i in range(self.n) for j in range(self.n)
        )

    def gradient_half(self, x) -> IntVector:
        """A x, i.e. half the gradient of Q (grad Q = 2 A x)."""
        if len(x) != self.n:
            raise InputError(f"vector has length {len(x)}, expected {self.n}")
        return mat_vec(self.gram, x)

    def eigen_envelope(self) -> EigenEnvelope:
        n, h = self.n, self.height
        upper = n * h
        if self.determinant == 0:
            lower = Fraction(0)
        else:
            lower = Fraction(abs(self.determinant), upper ** (n - 1))
        eigs = np.linalg.eigvalsh(np.array(self.gram, dtype=float))
        return EigenEnvelope(upper, lower, tuple(float(v) for v in eigs))

    def scaled_by_unimodular(self, u: IntMatrix) -> "QuadraticForm":
        """The form with Gram U^T A U (U must be integer, |det U| = 1)."""
        if abs(det(u)) != 1:
            raise InputError("transform is not unimodular")
        ut = tuple(zip(*u))
        gram = tuple(
            tuple(
                sum(u[a][i] * self.gram[a][b] * u[b][j] for a in range(self.n) for b in range(self.n))
                for j in range(self.n)
            )
            for i in range(self.n)
        )
        return QuadraticForm(self.n, gram)


def build_form(matrix) -> QuadraticForm:
    """Validate and freeze a Gram matrix given as any nested int sequence."""
    try:
        gram = as_matrix(matrix)
    except (TypeError, ValueError) as exc:
        raise InputError(f"matrix entries must be integers: {exc}") from exc
    n = len(gram)
    if n == 0:
        raise InputError("empty matrix")
    for i, row in enumerate(gram):
        if len(row) != n:
            raise InputError(f"row {i} has length {len(row)}, expected {n}")
    for i in range(n):
        for j in range(i + 1, n):
            if gram[i][j] != gram[j][i]:
                raise InputError(
                    f"matrix is not symmetric at ({i},{j}): "
                    f"{gram[i][j]} != {gram[j][i]}"
                )
    return QuadraticForm(n, gram)


def diagonal_form(coeffs) -> QuadraticForm:
    coeffs = [int(c) for c in coeffs]
    n = len(coeffs)
    return build_form([[coeffs[i] if i == j else 0 for j in range(n)] for i in range(n)])


def load_form(path: str) -> QuadraticForm:
    """Read a form from a JSON file {"n": int, "matrix": [[...], ...]}."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read form file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"form file {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict) or "matrix" not in data:
        raise InputError(f"form file {path} must be an object with a 'matrix' key")
    try:
        form = build_form(data["matrix"])
    except InputError as exc:
        raise InputError(f"form file {path}: {exc}") from exc
    if "n" in data and int(data["n"]) != form.n:
        raise InputError(
            f"form file {path}: declared n={data['n']} but matrix is {form.n}x{form.n}"
        )
    return form


def dump_form(form: QuadraticForm) -> str:
    return json.dumps({"n": form.n, "matrix": [list(r) for r in form.gram]})
