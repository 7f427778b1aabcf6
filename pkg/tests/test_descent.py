import random

import pytest

from qforms.core import diagonal_form
from qforms.descent import (
    DescentStep,
    descend_full,
    descend_odd,
    descend_two_adic,
    solubility_equivalent,
)
from qforms.errors import ContradictionError, InputError
from qforms.linalg import det, mat_mul, transpose
from qforms.localsolve import decide_strong_lsc, decide_weak_lsc_all


def check_step_arithmetic(step):
    q = step.p**step.theta_increment
    assert step.k_before == step.k_after * q
    moved = mat_mul(transpose(step.T), mat_mul(step.Q_before.gram, step.T))
    assert moved == tuple(tuple(v * q for v in row) for row in step.Q_after.gram)
    assert abs(step.Q_after.determinant) <= abs(step.Q_before.determinant)


def test_single_odd_step_on_a_rank_two_failure():
    # x^2 + y^2 is anisotropic mod 7, so strong solubility fails at 7
    form = diagonal_form([1, 1, 7, 7, 7])
    assert not decide_strong_lsc(form, 147, 7).strong
    step = descend_odd(form, 147, 7)
    assert step.case_tag == "odd-r2"
    assert (step.k_before, step.k_after) == (147, 21)
    assert abs(det(step.T)) == 7**2  # sublattice index p^r
    check_step_arithmetic(step)


def test_single_odd_step_on_a_rank_one_failure():
    # the unit square cannot represent k: 3 * 1 is not a square mod 7
    form = diagonal_form([3, 7, 7, 7, 7])
    step = descend_odd(form, 7 * 3, 7)
    assert step.case_tag == "odd-r1"
    assert abs(det(step.T)) == 7
    check_step_arithmetic(step)


def test_single_odd_step_on_a_rank_zero_failure():
    form = diagonal_form([7, 7, 7, 7, 7])
    step = descend_odd(form, 7, 7)
    assert step.case_tag == "odd-r0"
    assert step.T == tuple(tuple(1 if i == j else 0 for j in range(5)) for i in range(5))
    check_step_arithmetic(step)


def test_odd_step_refuses_when_strong_holds():
    form = diagonal_form([1, 1, 1, 7, 7])
    with pytest.raises(ContradictionError):
        descend_odd(form, 147, 7)


def test_odd_step_refuses_insoluble_pairs():
    with pytest.raises(InputError):
        descend_odd(diagonal_form([7, 7, 7, 7, 7]), 3, 7)  # k not divisible
    with pytest.raises(InputError):
        descend_odd(diagonal_form([3, 7, 7, 7, 7]), 1, 7)  # 3 is not a square mod 7


def test_two_adic_certificate_for_odd_form():
    form = diagonal_form([1, 1, 7, 7, 7])
    cert = descend_two_adic(form, 21)
    assert not isinstance(cert, DescentStep)
    assert cert.branch == "no-coefficient-divisible-by-8"
    assert cert.sigma2.exact
    assert cert.threshold.denominator == 2 ** (3 * 4)
    assert cert.meets_threshold == (cert.sigma2.value >= cert.threshold)


def test_two_adic_step_when_form_vanishes_mod_four():
    form = diagonal_form([4, 4, 4, 4, 4])
    step = descend_two_adic(form, 8)
    assert isinstance(step, DescentStep)
    assert step.case_tag == "two-adic-quad"
    assert step.theta_increment == 2
    assert step.k_after == 2
    check_step_arithmetic(step)
    with pytest.raises(InputError):
        descend_two_adic(form, 2)  # 4 does not divide k


def test_full_descent_frozen_example():
    form = diagonal_form([1, 1, 7, 7, 7])
    trace = descend_full(form, 147)
    assert [(s.p, s.case_tag, s.k_before, s.k_after) for s in trace.steps] == [
        (7, "odd-r2", 147, 21)
    ]
    assert trace.terminal_k == 21
    assert trace.terminal_form.is_diagonal
    assert sorted(trace.terminal_form.diagonal) == [1, 1, 1, 7, 7]
    cert = trace.certificate
    assert sorted(cert.odd_verdicts) == [3, 7]
    assert all(v.strong for v in cert.odd_verdicts.values())
    assert cert.two_adic.branch == "strong-lsc-at-2"
    assert cert.two_adic.sigma2.value.numerator == 9
    assert cert.two_adic.meets_threshold
    assert solubility_equivalent(trace, form, 147)


def test_full_descent_terminal_pairs_are_strongly_soluble():
    rnd = random.Random(23)
    seen_tags = set()
    for _ in range(10):
        p = rnd.choice([3, 5, 7])
        r = rnd.randint(0, 2)
        units = [rnd.randint(1, p - 1) for _ in range(r)]
        if r == 2:
            # force the anisotropic pair: -u1*u2 must be a nonsquare
            while pow((-units[0] * units[1]) % p, (p - 1) // 2, p) == 1:
                units[1] = rnd.randint(1, p - 1)
        scaled = [p * rnd.choice([1, 2, 3]) for _ in range(5 - r)]
        form = diagonal_form(units + scaled)
        k = p * rnd.randint(1, 12)
        if not decide_weak_lsc_all(form, k).soluble:
            continue
        if decide_strong_lsc(form, k, p).strong:
            continue
        trace = descend_full(form, k)
        for step in trace.steps:
            check_step_arithmetic(step)
            seen_tags.add(step.case_tag)
        for q, verdict in trace.certificate.odd_verdicts.items():
            assert verdict.strong
        assert trace.certificate.two_adic.sigma2.value > 0
        assert solubility_equivalent(trace, form, k)
    assert seen_tags  # the loop must have exercised at least one reduction


def test_descent_needs_five_variables():
    with pytest.raises(InputError):
        descend_full(diagonal_form([1, 1, 7, 7]), 147)
