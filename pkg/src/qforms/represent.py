"""Exceptional integers: locally soluble but globally unrepresented k.

A scan classifies every k up to a bound as represented, locally
insoluble, or exceptional, with per-k certificates.  Exception lists are
desk-scale observations over [1, K]; the reported maxima are observed
values, never claims about the true suprema.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from sympy import factorint

from .core import QuadraticForm
from .errors import Budget, BudgetError, InputError
from .lattice import _enumerate_up_to, enumerate_representations
from .localsolve import LocalVerdict, decide_strong_lsc, decide_weak_lsc_all


@dataclass(frozen=True)
class ExceptionalReport:
    form: QuadraticForm
    bound: int
    weak_exceptions: tuple[int, ...]  # weakly soluble everywhere, unrepresented
    strong_exceptions: tuple[int, ...]  # subset also strongly soluble everywhere
    kappa_observed: int  # max weak exception in [1, bound], 0 if none
    kappa_star_observed: int
    per_k: dict  # exceptional k -> verdicts and emptiness certificates
    automatic_reason: str  # why primes away from 2, det, k need no check


def _automatic_strong_reason(n: int) -> str:
    """Strong solubility is automatic at p not dividing 2*det*k, n >= 4.

    The reduction mod p keeps n unit squares, and the closed-form count
    of nonzero solutions is at least p^(n-1) - 1 - p^((n+1)/2), which is
    positive already at p = 3 and grows with p because the leading
    exponent dominates.  Nonsingular solutions lift indefinitely.
    """
    assert n >= 4
    assert (3 ** (n - 1) - 1) ** 2 > 3 ** (n + 1)
    return (
        f"at p not dividing 2*det*k the form reduces to {n} unit squares "
        f"mod p; the closed-form nonsingular count is at least "
        f"p^{n - 1} - 1 - p^{Fraction(n + 1, 2)} > 0 for every p >= 3"
    )


def _diagonal_or_none(form: QuadraticForm) -> list[int] | None:
    for i in range(form.n):
        for j in range(form.n):
            if i != j and form.gram[i][j] != 0:
                return None
    return [form.gram[i][i] for i in range(form.n)]


def _represented_diagonal(diag: list[int], bound: int) -> np.ndarray:
    """Boolean reachability table for sum a_i x_i^2 over [0, bound]."""
    reach = np.zeros(bound + 1, dtype=bool)
    reach[0] = True
    for a in diag:
        step = np.zeros(bound + 1, dtype=bool)
        x = 0
        while a * x * x <= bound:
            v = a * x * x
            step[v:] |= reach[: bound + 1 - v]
            x += 1
        reach = step
    return reach


def _represented_by_enumeration(
    form: QuadraticForm, bound: int, budget: Budget
) -> np.ndarray:
    reach = np.zeros(bound + 1, dtype=bool)
    reach[0] = True
    for value, _ in _enumerate_up_to(form, bound, budget):
        reach[value] = True
    return reach


def scan_exceptions(
    form: QuadraticForm, bound: int, budget: Budget | None = None
) -> ExceptionalReport:
    """Classify every k in [1, bound] and report the exceptional ones.

    Represented k (decided by one reachability pass) need no local work.
    Each unrepresented k gets the full weak verdict, strong verdicts at
    every p dividing 2*det*k, and an independent emptiness certificate
    by direct enumeration.
    """
    budget = budget or Budget()
    if form.classification != "positive-definite":
        raise InputError("the exceptional scan needs a positive definite form")
    if bound < 1:
        raise InputError("the scan bound must be >= 1")
    if form.n < 4:
        raise InputError("the scan needs n >= 4")
    reason = _automatic_strong_reason(form.n)
    diag = _diagonal_or_none(form)
    if diag is not None:
        represented = _represented_diagonal(diag, bound)
    else:
        represented = _represented_by_enumeration(form, bound, budget)
    det_primes = set(factorint(2 * abs(form.determinant)))
    weak_list: list[int] = []
    strong_list: list[int] = []
    per_k: dict[int, dict] = {}
    for k in range(1, bound + 1):
        if represented[k]:
            continue
        try:
            weak = decide_weak_lsc_all(form, k, budget=budget)
            if not weak.soluble:
                continue
            empty = enumerate_representations(form, k, budget=budget)
            assert empty == []
            strong_verdicts: dict[int, LocalVerdict] = {}
            for p in sorted(det_primes | set(factorint(k))):
                strong_verdicts[p] = decide_strong_lsc(form, k, p, budget=budget)
        except BudgetError as e:
            raise BudgetError(
                f"exceptional scan ran out of budget at k = {k}: {e}",
                partial={
                    "largest_fully_scanned_k": k - 1,
                    "weak_exceptions_so_far": tuple(weak_list),
                },
            ) from e
        weak_list.append(k)
        strong = all(v.strong for v in strong_verdicts.values())
        if strong:
            strong_list.append(k)
        per_k[k] = {
            "weak": weak,
            "strong_verdicts": strong_verdicts,
            "strong_everywhere": strong,
            "enumeration_empty": True,
        }
    return ExceptionalReport(
        form,
        bound,
        tuple(weak_list),
        tuple(strong_list),
        max(weak_list, default=0),
        max(strong_list, default=0),
        per_k,
        reason,
    )


# ---------------------------------------------------------------------------
# envelope arithmetic


def phi_exponent(n: int) -> Fraction:
    """The exponent 4(n-2)(3n^2-7n-3) / ((2n^3-9n^2+2n+12)(n-3)), n >= 5."""
    if n < 5:
        raise InputError("the exponent needs n >= 5")
    num = 4 * (n - 2) * (3 * n * n - 7 * n - 3)
    den = (2 * n**3 - 9 * n * n + 2 * n + 12) * (n - 3)
    return Fraction(num, den)


@dataclass(frozen=True)
class TheoremEnvelopeReport:
    scan: ExceptionalReport
    phi: Fraction | None
    envelopes: dict  # name -> constant-free float value
    weak_ratios: dict  # kappa_observed / envelope
    strong_ratios: dict  # kappa_star_observed / envelope


def theorem_envelope_report(
    form: QuadraticForm, scan: ExceptionalReport
) -> TheoremEnvelopeReport:
    """Observed kappa values against the constant-free growth envelopes.

    Envelopes, with D = |det| and H = height:
      det-phi             D^phi(n)                         (n >= 5)
      det-height-mixed    (D^((n-2)/(n-4)) * H^n)^(2/(n-3))  (n >= 5)
      det-height-plain    (D * H^n)^(2/(n-3))              (n >= 4)
      det-internal-five   D^(5/(n-4) + 1/n)                (n >= 5)
      det-internal-mixed  D^((n-2)/(n-4) + 2/n)            (n >= 5)
    All implied multiplicative constants are unknown, so the ratios are
    informational only; nothing is asserted about them.
    """
    n = form.n
    if n < 4:
        raise InputError("the envelopes need n >= 4")
    D = float(abs(form.determinant))
    H = float(form.height)
    envelopes: dict[str, float] = {}
    phi = None
    if n >= 5:
        phi = phi_exponent(n)
        envelopes["det-phi"] = D ** float(phi)
        envelopes["det-height-mixed"] = (D ** ((n - 2) / (n - 4)) * H**n) ** (
            2 / (n - 3)
        )
        envelopes["det-internal-five"] = D ** (5 / (n - 4) + 1 / n)
        envelopes["det-internal-mixed"] = D ** ((n - 2) / (n - 4) + 2 / n)
    envelopes["det-height-plain"] = (D * H**n) ** (2 / (n - 3))
    weak_ratios = {name: scan.kappa_observed / v for name, v in envelopes.items()}
    strong_ratios = {
        name: scan.kappa_star_observed / v for name, v in envelopes.items()
    }
    return TheoremEnvelopeReport(scan, phi, envelopes, weak_ratios, strong_ratios)
