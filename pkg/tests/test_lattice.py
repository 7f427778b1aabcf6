import itertools
import math
import random
from fractions import Fraction

import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_posdef
from qforms.core import build_form, diagonal_form
from qforms.errors import InputError
from qforms.lattice import enumerate_representations, min_max_check, reduce_form
from qforms.linalg import det, floor_sqrt, mat_mul, transpose

I5 = diagonal_form([1, 1, 1, 1, 1])


def brute_representations(form, k):
    # Q(x) = k forces x_i^2 <= k * (A^-1)_ii for positive definite A
    inv = sympy.Matrix([list(r) for r in form.gram]).inv()
    radii = [floor_sqrt(Fraction(k) * Fraction(inv[i, i])) for i in range(form.n)]
    out = []
    for x in itertools.product(*[range(-r, r + 1) for r in radii]):
        if any(x) and form.evaluate(x) == k:
            out.append(x)
    return sorted(out)


def test_five_squares_representation_numbers():
    # r(1..5) = 10, 40, 80, 90, 112 for the sum of five squares
    expected = [10, 40, 80, 90, 112]
    got = [len(enumerate_representations(I5, k)) for k in range(1, 6)]
    assert got == expected


def test_enumeration_is_complete_on_small_cases():
    q = build_form([[2, 1, 0], [1, 2, 0], [0, 0, 3]])
    for k in (1, 2, 3, 5, 6, 12):
        assert sorted(enumerate_representations(q, k)) == brute_representations(q, k)


def test_empty_enumeration_is_a_proof():
    q2 = diagonal_form([1, 1, 7, 7])
    assert enumerate_representations(q2, 3) == []
    assert enumerate_representations(q2, 147) == []
    assert brute_representations(q2, 3) == []


def test_enumeration_guards():
    with pytest.raises(InputError):
        enumerate_representations(diagonal_form([1, 1, -2]), 4)
    # k = 0 has only the excluded zero vector under positive definiteness
    assert enumerate_representations(I5, 0) == []


def test_reduce_form_known_shear():
    # x^2 + 2 x y + 5 y^2 reduces to x^2 + 4 y^2 by one shear
    q = build_form([[1, 1], [1, 5]])
    red = reduce_form(q)
    assert red.certified
    assert red.min_value == 1
    assert red.form.determinant == q.determinant
    assert abs(det(red.transform)) == 1
    moved = mat_mul(transpose(red.transform), mat_mul(q.gram, red.transform))
    assert moved == red.form.gram


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.integers(2, 4))
def test_reduce_form_invariants(seed, n):
    rnd = random.Random(seed)
    q = random_posdef(rnd, n)
    red = reduce_form(q)
    assert red.form.determinant == q.determinant
    assert abs(det(red.transform)) == 1
    moved = mat_mul(transpose(red.transform), mat_mul(q.gram, red.transform))
    assert moved == red.form.gram
    assert red.certified
    # the certified minimum is attained and nothing smaller is represented
    assert enumerate_representations(red.form, red.min_value)
    for k in range(1, red.min_value):
        assert enumerate_representations(red.form, k) == []
    # reduction is stable: a second pass cannot improve the minimum
    again = reduce_form(red.form)
    assert again.min_value == red.min_value


def test_reduce_form_needs_positive_definite():
    with pytest.raises(InputError):
        reduce_form(diagonal_form([1, -1]))


def test_min_max_report_formula():
    red = reduce_form(diagonal_form([2, 3, 5]))
    rep = min_max_check(red)
    assert rep.min_value == 2
    assert rep.height == 5
    assert rep.abs_det == 30
    assert rep.ratio == Fraction(2**2 * 5, 30)
    assert rep.alpha == pytest.approx(math.log(2) / math.log(30))


def test_min_max_alpha_zero_for_unimodular():
    rep = min_max_check(reduce_form(diagonal_form([1, 1])))
    assert rep.alpha == 0.0
    assert rep.abs_det == 1
