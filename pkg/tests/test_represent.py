import random
from fractions import Fraction

import pytest

from conftest import random_posdef
from qforms.core import diagonal_form
from qforms.errors import InputError
from qforms.lattice import enumerate_representations, reduce_form
from qforms.represent import phi_exponent, scan_exceptions, theorem_envelope_report


def test_scan_finds_the_seven_family_exceptions():
    # x^2 + y^2 + 7 z^2 + 7 w^2 misses exactly 3, 6, 21, 42, 147 below 200
    q = diagonal_form([1, 1, 7, 7])
    rep = scan_exceptions(q, 200)
    assert rep.weak_exceptions == (3, 6, 21, 42, 147)
    assert rep.strong_exceptions == (3, 6)
    assert rep.kappa_observed == 147
    assert rep.kappa_star_observed == 6
    assert set(rep.per_k) == {3, 6, 21, 42, 147}
    for k in rep.weak_exceptions:
        assert enumerate_representations(q, k) == []
    assert rep.automatic_reason


def test_scan_on_universal_form_is_empty():
    rep = scan_exceptions(diagonal_form([1, 1, 1, 1]), 60)
    assert rep.weak_exceptions == ()
    assert rep.strong_exceptions == ()
    assert rep.kappa_observed == 0
    assert rep.kappa_star_observed == 0


def test_scan_scaled_form_exceptions():
    rep = scan_exceptions(diagonal_form([2, 2, 2, 2, 5]), 20)
    assert rep.weak_exceptions == (1, 3)
    assert rep.strong_exceptions == (1, 3)


def test_scan_guards():
    with pytest.raises(InputError):
        scan_exceptions(diagonal_form([1, 1, -2]), 10)
    with pytest.raises(InputError):
        scan_exceptions(diagonal_form([1, 1, 1, 1]), 0)


def test_scan_commutes_with_reduction():
    rnd = random.Random(5)
    for _ in range(4):
        n = rnd.choice([4, 5])
        q = random_posdef(rnd, n)
        red = reduce_form(q).form
        a = scan_exceptions(q, 60)
        b = scan_exceptions(red, 60)
        assert a.weak_exceptions == b.weak_exceptions
        assert a.strong_exceptions == b.strong_exceptions
        assert q.determinant == red.determinant


def test_phi_exponent_exact_values():
    expected = {
        5: Fraction(222, 47),
        6: Fraction(28, 11),
        7: Fraction(475, 271),
        8: Fraction(114, 85),
        9: Fraction(826, 759),
    }
    for n, want in expected.items():
        got = phi_exponent(n)
        assert got == want
        # recompute from the printed formula
        num = 4 * (n - 2) * (3 * n * n - 7 * n - 3)
        den = (2 * n**3 - 9 * n * n + 2 * n + 12) * (n - 3)
        assert got == Fraction(num, den)
    with pytest.raises(InputError):
        phi_exponent(4)


def test_envelope_report_formulas():
    q = diagonal_form([2, 2, 2, 2, 5])
    scan = scan_exceptions(q, 20)
    rep = theorem_envelope_report(q, scan)
    d, h, n = float(abs(q.determinant)), float(q.height), q.n
    assert rep.phi == phi_exponent(5)
    assert rep.envelopes["det-phi"] == pytest.approx(d ** float(rep.phi))
    assert rep.envelopes["det-height-plain"] == pytest.approx((d * h**n) ** (2 / (n - 3)))
    assert rep.envelopes["det-height-mixed"] == pytest.approx(
        (d ** ((n - 2) / (n - 4)) * h**n) ** (2 / (n - 3))
    )
    assert rep.envelopes["det-internal-five"] == pytest.approx(d ** (5 / (n - 4) + 1 / n))
    assert rep.envelopes["det-internal-mixed"] == pytest.approx(
        d ** ((n - 2) / (n - 4) + 2 / n)
    )
    for name, env in rep.envelopes.items():
        assert rep.weak_ratios[name] == pytest.approx(scan.kappa_observed / env)
        assert rep.strong_ratios[name] == pytest.approx(scan.kappa_star_observed / env)


def test_envelope_report_four_variables_has_plain_only():
    q = diagonal_form([1, 1, 7, 7])
    rep = theorem_envelope_report(q, scan_exceptions(q, 200))
    assert rep.phi is None
    assert set(rep.envelopes) == {"det-height-plain"}
