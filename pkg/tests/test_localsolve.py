import itertools
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import brute_congruence_count, eval_gram, random_gram
from qforms.core import build_form, diagonal_form
from qforms.errors import Budget, BudgetError, InputError
from qforms.linalg import det, mat_mul, mat_vec, transpose
from qforms.localsolve import (
    certified_level,
    count_congruence,
    count_congruence_direct,
    decide_strong_lsc,
    decide_weak_lsc,
    decide_weak_lsc_all,
    diagonalize_odd,
    find_solution_mod,
    two_adic_blocks,
)


def brute_nonsingular_count(gram, k, p, t):
    n = len(gram)
    q = p**t
    total = 0
    for x in itertools.product(range(q), repeat=n):
        if (eval_gram(gram, x) - k) % q != 0:
            continue
        grad = [sum(gram[i][j] * x[j] for j in range(n)) % p for i in range(n)]
        if any(grad):
            total += 1
    return total


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6))
def test_diagonalize_odd_invariants(seed):
    rnd = random.Random(seed)
    n = rnd.randint(2, 4)
    p = rnd.choice([3, 5, 7])
    t = rnd.randint(1, 3)
    form = random_gram(rnd, n)
    dg = diagonalize_odd(form, p, t)
    assert abs(det(dg.transform)) == 1
    moved = mat_mul(transpose(dg.transform), mat_mul(form.gram, dg.transform))
    assert moved == dg.exact_gram
    q = p**t
    for i in range(n):
        assert dg.exact_gram[i][i] == dg.coefficients[i]
        for j in range(n):
            if i != j:
                assert dg.exact_gram[i][j] % q == 0


def test_diagonalize_odd_rejects_two():
    with pytest.raises(InputError):
        diagonalize_odd(diagonal_form([1, 1]), 2, 1)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6))
def test_two_adic_blocks_invariants(seed):
    rnd = random.Random(seed)
    n = rnd.randint(2, 4)
    prec = rnd.randint(3, 6)
    form = random_gram(rnd, n)
    bl = two_adic_blocks(form, prec)
    assert abs(det(bl.transform)) == 1
    moved = mat_mul(transpose(bl.transform), mat_mul(form.gram, bl.transform))
    assert moved == bl.exact_gram
    covered = sorted(i for b in bl.blocks for i in b.indices)
    assert covered == list(range(n))
    q = 2**prec
    own = {i: b for b in bl.blocks for i in b.indices}
    for i in range(n):
        for j in range(n):
            if own[i] is not own[j]:
                assert bl.exact_gram[i][j] % q == 0


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_count_congruence_matches_walk(seed):
    rnd = random.Random(seed)
    n = rnd.randint(2, 3)
    p = rnd.choice([2, 3, 5])
    t = rnd.randint(1, 2)
    if p**(t * n) > 20000:
        t = 1
    form = random_gram(rnd, n, -6, 6)
    k = rnd.randint(0, p**t)
    primitive = rnd.random() < 0.3
    got = count_congruence(form, k, p, t, primitive=primitive)
    assert got.count == brute_congruence_count(form.gram, k, p, t, primitive=primitive)
    assert got.prime == p and got.level == t and got.primitive == primitive
    if not primitive:
        assert got.nonsingular == brute_nonsingular_count(form.gram, k, p, t)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6))
def test_counting_routes_agree(seed):
    rnd = random.Random(seed)
    n = rnd.randint(2, 4)
    p = rnd.choice([2, 3, 5, 7])
    t = 1 if p > 3 or n == 4 else 2
    form = random_gram(rnd, n, -8, 8)
    k = rnd.randint(0, 50)
    a = count_congruence(form, k, p, t)
    b = count_congruence_direct(form, k, p, t)
    assert a.count == b.count
    assert b.strategy == "direct"


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6))
def test_unramified_counts_stabilize_immediately(seed):
    # N(p^(t+1)) = p^(n-1) N(p^t) whenever p does not divide 2*det*k
    rnd = random.Random(seed)
    n = 5
    form = random_gram(rnd, n, -6, 6)
    k = rnd.randint(1, 200)
    p = next(q for q in (3, 5, 7, 11, 13) if (2 * form.determinant * k) % q != 0)
    n1 = count_congruence(form, k, p, 1).count
    n2 = count_congruence(form, k, p, 2).count
    assert n2 == p ** (n - 1) * n1


def test_certified_level_formula():
    # v_p(k) + 2 v_p(det) + 2 tau + 1 with tau = 1 only at p = 2
    i5 = diagonal_form([1, 1, 1, 1, 1])
    assert certified_level(i5, 3, 5) == 1
    assert certified_level(i5, 25, 5) == 3
    assert certified_level(i5, 3, 2) == 3
    q = diagonal_form([1, 1, 7, 7])  # det 49
    assert certified_level(q, 1, 7) == 5
    assert certified_level(q, 7, 7) == 6
    assert certified_level(q, 4, 2) == 5


def test_find_solution_mod_returns_valid_vector():
    form = diagonal_form([1, 1, 7, 7])
    for p, t, k in ((7, 2, 7), (2, 3, 5), (3, 1, 2)):
        x = find_solution_mod(form, k, p, t, cap=1 << 23)
        assert x is not None
        assert (form.evaluate(x) - k) % p**t == 0
    # the default cap refuses rather than stalls, and None carries no verdict
    assert find_solution_mod(form, 7, 7, 4) is None
    # primitive flag excludes the all-divisible classes
    x = find_solution_mod(diagonal_form([1, 1, 1, 1, 1]), 0, 3, 2, primitive=True)
    assert x is not None
    assert any(v % 3 for v in x)


def test_weak_refutation_when_form_vanishes_mod_p():
    scaled = diagonal_form([7, 7, 7, 7, 7])
    verdict = decide_weak_lsc(scaled, 3, 7)
    assert not verdict.weak and not verdict.strong
    assert verdict.count == 0
    four = diagonal_form([4, 4, 4, 4])
    assert not decide_weak_lsc(four, 2, 2).weak


def test_weak_without_strong_at_ramified_prime():
    # x^2 + y^2 + 7 z^2 + 7 w^2 = 7 is soluble over Z (z = 1) but every
    # 7-adic solution has x = y = 0 mod 7, hence a vanishing gradient
    form = diagonal_form([1, 1, 7, 7])
    verdict = decide_strong_lsc(form, 7, 7)
    assert verdict.weak
    assert not verdict.strong
    assert verdict.count > 0


def test_strong_witness_is_checked_exactly():
    cases = [
        (diagonal_form([1, 1, 1, 1, 1]), 3, 5),
        (diagonal_form([1, 1, 7, 7]), 3, 7),
        (diagonal_form([2, 2, 2, 2, 5]), 3, 2),
        (build_form([[2, 1, 0], [1, 2, 0], [0, 0, 3]]), 2, 3),
    ]
    for form, k, p in cases:
        verdict = decide_strong_lsc(form, k, p)
        assert verdict.strong
        w = verdict.witness
        level = 3 if p == 2 else 1
        assert (form.evaluate(w) - k) % p**level == 0
        grad = mat_vec(form.gram, w)
        assert any(g % p for g in grad)


def test_weak_everywhere_report():
    i5 = diagonal_form([1, 1, 1, 1, 1])
    rep = decide_weak_lsc_all(i5, 60)
    assert rep.soluble
    assert set(rep.verdicts) == {2, 3, 5}
    assert rep.automatic_reason
    bad = decide_weak_lsc_all(diagonal_form([4, 4, 4, 4]), 2)
    assert not bad.soluble
    assert not bad.verdicts[2].weak


def test_zero_target_uses_primitive_count():
    i5 = diagonal_form([1, 1, 1, 1, 1])
    verdict = decide_weak_lsc(i5, 0, 7)
    assert verdict.weak
    assert verdict.count == brute_congruence_count(i5.gram, 0, 7, 1, primitive=True)


def test_budget_exhaustion_raises():
    form = diagonal_form([1, 1, 7, 7])
    with pytest.raises(BudgetError):
        count_congruence_direct(form, 7, 7, 2, budget=Budget(limit=10))


def test_prime_validation():
    form = diagonal_form([1, 1, 1, 1])
    with pytest.raises(InputError):
        decide_weak_lsc(form, 1, 6)
    with pytest.raises(InputError):
        count_congruence(form, 1, 4, 1)
