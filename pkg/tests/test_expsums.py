import cmath
import math
import random

import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import brute_mr, mr_by_convolution, random_gram, sq_by_definition
from qforms.core import build_form, diagonal_form
from qforms.errors import InputError
from qforms.expsums import (
    average_Sq,
    closed_form_Mr,
    distinct_prime_count,
    eval_Sq,
    eval_Sq_direct,
    gamma_n,
    gauss_sum,
    kloosterman_salie,
    legendre,
    omega_squared,
    ramanujan_sum,
    sq_envelope,
    sq_envelope_squarefree,
)

ODD_PRIMES = [3, 5, 7, 11, 13, 17, 19, 23]


def test_legendre_matches_sympy():
    for p in ODD_PRIMES:
        assert legendre(0, p) == 0
        assert legendre(p, p) == 0
        for a in range(1, p):
            assert legendre(a, p) == sympy.legendre_symbol(a, p)


def test_gauss_sum_exact_values():
    # (a/p) * omega_p against the literal sum, and |G|^2 = p for units
    for p in ODD_PRIMES:
        for a in (1, 2, 3):
            direct = sum(cmath.exp(2j * cmath.pi * ((a * z * z) % p) / p) for z in range(p))
            assert abs(gauss_sum(a, p) - direct) < 1e-9
            if a % p:
                assert abs(abs(gauss_sum(a, p)) ** 2 - p) < 1e-8
        assert omega_squared(p) == (p if p % 4 == 1 else -p)
        assert abs(gauss_sum(1, p) ** 2 - omega_squared(p)) < 1e-8


def test_gauss_sum_rejects_bad_modulus():
    with pytest.raises(InputError):
        gauss_sum(1, 2)
    with pytest.raises(InputError):
        gauss_sum(1, 9)


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 10**6))
def test_closed_form_count_matches_both_oracles(seed):
    rnd = random.Random(seed)
    p = rnd.choice([3, 5, 7, 11, 13])
    r = rnd.randint(1, 4)
    coeffs = [rnd.randint(1, p - 1) for _ in range(r)]
    k = rnd.randint(0, p - 1)
    got = closed_form_Mr(coeffs, k, p).count
    assert got == mr_by_convolution(coeffs, k, p)
    if p**r <= 20000:
        assert got == brute_mr(coeffs, k, p)


def test_closed_form_edge_cases():
    assert closed_form_Mr([], 0, 5).count == 0
    assert closed_form_Mr([1], 0, 5).count == 0  # z^2 = 0 only at z = 0
    assert closed_form_Mr([1], 1, 5).count == 2  # z = 1, 4
    with pytest.raises(InputError):
        closed_form_Mr([5], 1, 5)
    with pytest.raises(InputError):
        closed_form_Mr([1], 1, 2)


def test_kloosterman_salie_against_definition():
    for p in (5, 7, 11, 13):
        for a, b in ((1, 1), (2, 3), (0, 1), (1, 0)):
            for parity in ("even", "odd"):
                val, bound = kloosterman_salie(a, b, p, parity)
                direct = 0j
                for x in range(1, p):
                    term = cmath.exp(2j * cmath.pi * ((a * x + b * pow(x, p - 2, p)) % p) / p)
                    if parity == "odd":
                        term *= legendre(x, p)
                    direct += term
                assert abs(val - direct) < 1e-9
                assert abs(val) <= bound + 1e-9


def test_ramanujan_sum_against_unit_sum():
    for q in range(1, 30):
        for m in range(0, q + 2):
            direct = sum(
                cmath.exp(2j * cmath.pi * (a * m % q) / q)
                for a in range(1, q + 1)
                if math.gcd(a, q) == 1
            )
            assert abs(ramanujan_sum(q, m) - direct.real) < 1e-8
            assert abs(direct.imag) < 1e-8


def test_eval_sq_trivial_modulus():
    form = diagonal_form([1, 1, 1, 1])
    assert eval_Sq(form, 5, 1).value == pytest.approx(1.0)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_eval_sq_matches_literal_double_sum(seed):
    rnd = random.Random(seed)
    n = rnd.randint(2, 3)
    q = rnd.choice([2, 3, 4, 5, 6, 7, 8, 9, 12])
    form = random_gram(rnd, n, -4, 4)
    k = rnd.randint(0, 2 * q)
    c = [rnd.randint(0, q - 1) for _ in range(n)] if rnd.random() < 0.5 else None
    expected = sq_by_definition(form.gram, k, q, c)
    got = eval_Sq(form, k, q, c)
    assert abs(got.value - expected) <= 1e-6 * max(1.0, abs(expected)) + got.abs_err_bound


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6))
def test_eval_sq_agrees_with_unsplit_separable_route(seed):
    # the unsplit route stays separable for diagonal forms, so the two
    # evaluations differ in all of the CRT splitting and inverse twisting
    rnd = random.Random(seed)
    n = rnd.randint(4, 5)
    q = rnd.choice([12, 15, 20, 36, 45, 60, 72, 90])
    form = diagonal_form([rnd.choice([-9, -5, -2, -1, 1, 2, 3, 5, 7]) for _ in range(n)])
    k = rnd.randint(1, 300)
    c = [rnd.randint(0, q - 1) for _ in range(n)] if rnd.random() < 0.4 else None
    a = eval_Sq(form, k, q, c)
    b = eval_Sq_direct(form, k, q, c)
    assert b.method == "separable"
    scale = max(1.0, abs(a.value), abs(b.value))
    assert abs(a.value - b.value) / scale <= 1e-6


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10**6))
def test_eval_sq_agrees_with_unsplit_enumeration_route(seed):
    rnd = random.Random(seed)
    n = rnd.randint(2, 3)
    q = rnd.choice([6, 10, 12, 15, 18, 20])
    form = random_gram(rnd, n, -6, 6)
    k = rnd.randint(0, 100)
    c = [rnd.randint(0, q - 1) for _ in range(n)] if rnd.random() < 0.4 else None
    a = eval_Sq(form, k, q, c)
    b = eval_Sq_direct(form, k, q, c)
    off = [form.gram[i][j] for i in range(n) for j in range(n) if i != j]
    if any(v % q for v in off):
        assert b.method == "enumerate"
    scale = max(1.0, abs(a.value), abs(b.value))
    assert abs(a.value - b.value) / scale <= 1e-6


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6))
def test_sq_envelope_dominates(seed):
    rnd = random.Random(seed)
    form = random_gram(rnd, 4, -5, 5)
    q = rnd.randint(2, 60)
    k = rnd.randint(0, 100)
    val = abs(eval_Sq(form, k, q).value)
    assert val <= sq_envelope(form, q) * (1 + 1e-9)
    if sympy.factorint(q) and all(e == 1 for e in sympy.factorint(q).values()):
        assert val <= sq_envelope_squarefree(form, k, q) * (1 + 1e-9)


def test_distinct_prime_count_and_gamma():
    assert distinct_prime_count(1) == 0
    assert distinct_prime_count(12) == 2
    assert distinct_prime_count(30) == 3
    assert gamma_n(4, 0) == 1
    assert gamma_n(4, 3) == 0
    assert gamma_n(5, 0) == 0


def test_average_report_consistency():
    form = diagonal_form([1, 1, 1, 1, 1])
    rep = average_Sq(form, 4, X=12)
    assert rep.X == 12
    assert len(rep.per_q) == 12
    assert rep.total == pytest.approx(sum(rep.per_q))
    assert rep.ratio == pytest.approx(rep.total / 12**rep.envelope_exponent)
    assert rep.per_q[0] == pytest.approx(1.0)  # q = 1 term
