from fractions import Fraction

import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from qforms.linalg import (
    as_matrix,
    ceil_sqrt,
    det,
    exact_sqrt,
    floor_sqrt,
    identity,
    leading_minors,
    mat_mul,
    mat_vec,
    transpose,
)

square_int_matrix = st.integers(1, 5).flatmap(
    lambda n: st.lists(
        st.lists(st.integers(-30, 30), min_size=n, max_size=n), min_size=n, max_size=n
    )
)


def test_det_known_values():
    assert det(identity(4)) == 1
    assert det([[2, 1], [1, 2]]) == 3
    assert det([[0, 1], [1, 0]]) == -1
    assert det([[2, 0, 0], [0, 0, 3], [0, 3, 0]]) == -18


@settings(max_examples=200, deadline=None)
@given(square_int_matrix)
def test_det_matches_sympy(rows):
    assert det(rows) == int(sympy.Matrix(rows).det())


@settings(max_examples=100, deadline=None)
@given(square_int_matrix)
def test_leading_minors_match_sympy(rows):
    m = sympy.Matrix(rows)
    expected = [int(m[:j, :j].det()) for j in range(1, len(rows) + 1)]
    assert leading_minors(rows) == expected


def test_mat_mul_and_vec():
    a = as_matrix([[1, 2], [3, 4]])
    b = as_matrix([[0, 1], [1, 0]])
    assert mat_mul(a, b) == ((2, 1), (4, 3))
    assert mat_vec(a, (1, 1)) == (3, 7)
    assert transpose(a) == ((1, 3), (2, 4))


@settings(max_examples=300, deadline=None)
@given(st.integers(0, 10**12))
def test_floor_sqrt_bracket(x):
    r = floor_sqrt(x)
    assert r * r <= x < (r + 1) * (r + 1)


@settings(max_examples=300, deadline=None)
@given(st.integers(1, 10**9), st.integers(1, 10**6))
def test_floor_ceil_sqrt_on_fractions(num, den):
    x = Fraction(num, den)
    f, c = floor_sqrt(x), ceil_sqrt(x)
    assert f * f <= x
    assert (f + 1) * (f + 1) > x
    assert c * c >= x
    assert (c - 1) * (c - 1) < x


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 10**3))
def test_exact_sqrt_recognizes_squares(num, den):
    x = Fraction(num, den)
    root = exact_sqrt(x * x)
    assert root == x
    assert exact_sqrt(-1) is None


def test_exact_sqrt_rejects_nonsquares():
    assert exact_sqrt(2) is None
    assert exact_sqrt(Fraction(1, 2)) is None
    assert exact_sqrt(Fraction(4, 9)) == Fraction(2, 3)


def test_det_rejects_ragged_input():
    with pytest.raises(Exception):
        det([[1, 2], [3]])
