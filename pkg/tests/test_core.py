import json
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import eval_gram, random_gram, random_unimodular
from qforms.core import build_form, diagonal_form, dump_form, load_form
from qforms.errors import InputError


def test_build_form_rejects_bad_input():
    with pytest.raises(InputError):
        build_form([[1, 2], [3, 4]])  # not symmetric
    with pytest.raises(InputError):
        build_form([[1, 2, 3], [2, 1, 1]])  # not square
    with pytest.raises(InputError):
        build_form([])
    with pytest.raises(InputError):
        build_form([[1.5]])


def test_classification_and_invariants():
    i5 = diagonal_form([1, 1, 1, 1, 1])
    assert i5.classification == "positive-definite"
    assert i5.determinant == 1
    assert i5.height == 1
    ind = diagonal_form([1, 1, -2])
    assert ind.classification == "indefinite"
    assert ind.determinant == -2
    assert ind.height == 2
    neg = diagonal_form([-1, -3])
    assert neg.classification == "negative-definite"
    assert diagonal_form([1, 0]).classification == "degenerate"


def test_evaluate_and_gradient():
    q = build_form([[2, 1], [1, 3]])
    assert q.evaluate((1, 1)) == 7
    assert q.gradient_half((1, 1)) == (3, 4)
    assert q.evaluate((0, 0)) == 0


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10**6), st.integers(2, 4))
def test_evaluate_matches_bilinear_expansion(seed, n):
    rnd = random.Random(seed)
    form = random_gram(rnd, n)
    x = [rnd.randint(-5, 5) for _ in range(n)]
    assert form.evaluate(x) == eval_gram(form.gram, x)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10**6), st.integers(2, 4))
def test_unimodular_change_preserves_determinant_and_values(seed, n):
    rnd = random.Random(seed)
    form = random_gram(rnd, n)
    u = random_unimodular(rnd, n)
    moved = form.scaled_by_unimodular(u)
    assert moved.determinant == form.determinant
    x = [rnd.randint(-4, 4) for _ in range(n)]
    ux = [sum(u[i][j] * x[j] for j in range(n)) for i in range(n)]
    assert form.evaluate(ux) == moved.evaluate(x)


def test_unimodular_guard():
    q = diagonal_form([1, 1])
    with pytest.raises(InputError):
        q.scaled_by_unimodular([[2, 0], [0, 1]])


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6), st.integers(2, 4))
def test_eigen_envelope_brackets_numeric_spectrum(seed, n):
    rnd = random.Random(seed)
    form = random_gram(rnd, n)
    env = form.eigen_envelope()
    assert len(env.numeric_eigs) == n
    for lam in env.numeric_eigs:
        assert abs(lam) <= env.max_abs_upper + 1e-9
        assert abs(lam) >= float(env.min_abs_lower) - 1e-9


def test_dump_load_round_trip(tmp_path):
    form = build_form([[2, 1, 0], [1, 2, 0], [0, 0, -3]])
    path = tmp_path / "form.json"
    path.write_text(dump_form(form))
    again = load_form(str(path))
    assert again.gram == form.gram
    assert again.n == 3


def test_load_form_reports_location(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"n": 2, "matrix": [[1, 2], [3, 1]]}))
    with pytest.raises(InputError) as err:
        load_form(str(path))
    assert "bad.json" in str(err.value)
    missing = tmp_path / "missing.json"
    with pytest.raises(InputError) as err:
        load_form(str(missing))
    assert "missing.json" in str(err.value)


def test_load_form_rejects_malformed_json(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{not json")
    with pytest.raises(InputError) as err:
        load_form(str(path))
    assert "broken.json" in str(err.value)
