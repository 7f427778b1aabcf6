"""Local densities and the singular series, in exact rational arithmetic.

The p-adic density of solutions of Q = k is the limit of the normalized
congruence counts N(p^t) / p^(t(n-1)).  Beyond a finite level the count
grows at the exact rate p^(n-1) per level, so the limit is a rational
number that a single deep count certifies.  The singular series is the
product of these densities; all ramified primes are computed exactly and
the remaining primes are controlled by a certified tail interval.

For k = 0 the densities are taken over primitive solution classes, so
that a form with no nontrivial p-adic zero gets density zero instead of
picking up the zero vector and its scalings.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from sympy import isprime, primefactors, primerange

from .core import QuadraticForm
from .errors import Budget, BudgetError, InputError
from .expsums import closed_form_Mr, legendre
from .linalg import floor_sqrt
from .localsolve import (
    _count_total,
    _nonsingular_count,
    _val,
    certified_level,
    decide_strong_lsc,
    decide_weak_lsc_all,
    diagonalize_odd,
)

TAIL_CONSTANT = 4  # validated against exact closed forms in the test suite


@dataclass(frozen=True)
class LocalDensity:
    prime: int
    lower: Fraction
    upper: Fraction  # equal to lower when the density is certified exactly
    depth_used: int  # deepest level actually counted
    method: str  # "closed-form" | "counting" | "counting-with-descent"

    @property
    def exact(self) -> bool:
        return self.lower == self.upper

    @property
    def value(self) -> Fraction | None:
        """The certified exact density, or None for an interval result."""
        return self.lower if self.lower == self.upper else None


def _odd_counting_method(form: QuadraticForm, p: int) -> str:
    dg = diagonalize_odd(form, p, 1)
    if all(a % p != 0 for a in dg.coefficients):
        return "counting"
    return "counting-with-descent"


def _closed_form_density(form: QuadraticForm, k: int, p: int) -> LocalDensity:
    """Exact density for odd p with unit determinant and p not dividing k.

    Every solution mod p is then nonsingular, so the level-1 count already
    determines the limit.  For k = 0 the closed form counts the nonzero
    classes, which is exactly the primitive convention.
    """
    dg = diagonalize_odd(form, p, 1)
    assert all(a % p != 0 for a in dg.coefficients)
    count = closed_form_Mr(dg.coefficients, k, p).count
    value = Fraction(count, p ** (form.n - 1))
    return LocalDensity(p, value, value, 1, "closed-form")


def local_density(
    form: QuadraticForm,
    k: int,
    p: int,
    tmax: int | None = None,
    budget: Budget | None = None,
) -> LocalDensity:
    """The p-adic density of solutions of Q = k, exact when certifiable.

    Unramified primes go through the level-1 closed form.  At a ramified
    prime the count is taken to the lifting cutoff and one level beyond;
    the two depths must agree at the exact rate p^(n-1), which certifies
    the limit.  A depth cap (tmax below the cutoff, or an exhausted
    budget) degrades the result to an interval: the lower end from the
    nonsingular stratum, the upper end from the one-level growth bound
    N(p^(t+1)) <= p^n N(p^t).
    """
    budget = budget or Budget()
    if not isprime(p):
        raise InputError("p must be prime")
    if form.determinant == 0:
        raise InputError("degenerate form")
    if tmax is not None and tmax < 1:
        raise InputError("tmax must be >= 1")
    delta = abs(form.determinant)
    if p != 2 and delta % p != 0 and (k == 0 or k % p != 0):
        return _closed_form_density(form, k, p)

    n = form.n
    primitive = k == 0
    tau = 1 if p == 2 else 0
    base = 1 + 2 * tau
    T = certified_level(form, k, p)
    target = T if tmax is None else max(base, min(tmax, T))
    method = "counting" if p == 2 else _odd_counting_method(form, p)

    nstar = _nonsingular_count(form, k, p, base, budget)
    hensel_lower = Fraction(nstar, p ** (base * (n - 1)))

    # the base-level count is cheap and anchors the growth upper bound
    N_b = _count_total(form, k, p, base, primitive=primitive, budget=budget)
    depth, density = base, Fraction(N_b, p ** (base * (n - 1)))
    try:
        if target > base:
            N_t = _count_total(form, k, p, target, primitive=primitive, budget=budget)
            depth, density = target, Fraction(N_t, p ** (target * (n - 1)))
        if target == T:
            N_next = _count_total(form, k, p, T + 1, primitive=primitive, budget=budget)
            # growth locks to the exact lifting rate at the cutoff
            assert N_next == p ** (n - 1) * density * p ** (T * (n - 1))
            return LocalDensity(p, density, density, T + 1, method)
    except BudgetError:
        pass  # degrade to the interval from the levels that were affordable
    upper = density * p ** (T - depth)
    assert hensel_lower <= upper
    return LocalDensity(p, hensel_lower, upper, depth, method)


@dataclass(frozen=True)
class SingularSeriesEstimate:
    finite_part: Fraction | None  # exact product over the computed primes
    tail_lower: Fraction
    tail_upper: Fraction
    lower: Fraction
    upper: Fraction
    pcut: int
    certified: bool  # False when any per-prime density was an interval
    densities: tuple[LocalDensity, ...]  # the ramified primes, ascending

    @property
    def positive(self) -> bool:
        return self.lower > 0


def _tail_sum_bound(n: int, pcut: int) -> Fraction:
    """Rational R with sum over p > pcut of the per-prime deviation <= R.

    For n >= 5 the deviation envelope is TAIL_CONSTANT * p^(-(n-2)/2).
    Every prime above 3 sits in one of the two residue classes coprime
    to 6, so the sum over primes beyond pcut is at most one third of the
    integral of x^(-(n-2)/2) from pcut - 6 on.  For n = 4 that exponent
    would diverge, but the exact closed forms give the sharper deviation
    p^(-2) at every unramified prime, with the same coprime-to-6 count.
    """
    if pcut < 30:
        raise InputError("pcut below 30 cannot certify a tail")
    base = pcut - 6
    if n == 4:
        return Fraction(1, 3 * base)
    e_num = n - 2  # exponent is e_num / 2
    if e_num % 2 == 0:
        # (4/3) * base^(1-e) / (e-1) with integer e = (n-2)/2
        return Fraction(8, 3 * (n - 4) * base ** ((n - 4) // 2))
    # half-integer exponent: base^(-1/2) <= 1 / floor(sqrt(base))
    return Fraction(8, 3 * (n - 4) * base ** ((n - 5) // 2) * floor_sqrt(base))


def singular_series(
    form: QuadraticForm,
    k: int,
    pcut: int = 1000,
    budget: Budget | None = None,
) -> SingularSeriesEstimate:
    """Certified interval for the product of all local densities.

    Ramified primes (2, the primes of the determinant, the primes of k)
    are always computed exactly; the remaining primes up to pcut go in
    through their closed forms, and the primes beyond pcut contribute a
    rational interval from the deviation envelope.
    """
    budget = budget or Budget()
    n = form.n
    if n < 4:
        raise InputError("singular series needs n >= 4")
    if form.determinant == 0:
        raise InputError("degenerate form")
    if n == 4 and k <= 0:
        raise InputError("n = 4 needs k > 0 (k = 0 needs n >= 5)")
    if pcut < 5:
        raise InputError("pcut must be >= 5")
    delta = abs(form.determinant)
    ramified = {2} | set(primefactors(delta))
    if k != 0:
        ramified |= set(primefactors(abs(k)))
    densities = []
    finite_lower = Fraction(1)
    finite_upper = Fraction(1)
    certified = True
    for p in sorted(ramified):
        d = local_density(form, k, p, budget=budget)
        densities.append(d)
        finite_lower *= d.lower
        finite_upper *= d.upper
        certified = certified and d.exact
    for p in primerange(3, pcut + 1):
        if p in ramified:
            continue
        d = _closed_form_density(form, k, p)
        finite_lower *= d.lower
        finite_upper *= d.upper
    tail_sum = _tail_sum_bound(n, pcut)
    if tail_sum >= 1:
        raise InputError("pcut too small to certify the tail at this rank")
    tail_lower = 1 - tail_sum
    tail_upper = 1 / (1 - tail_sum)
    return SingularSeriesEstimate(
        finite_part=finite_lower if certified else None,
        tail_lower=tail_lower,
        tail_upper=tail_upper,
        lower=finite_lower * tail_lower,
        upper=finite_upper * tail_upper,
        pcut=pcut,
        certified=certified,
        densities=tuple(densities),
    )


# ---------------------------------------------------------------------------
# reduction stratification at odd primes dividing the determinant


@dataclass(frozen=True)
class ReducedClassification:
    reduced: bool
    condition: int | None  # 1, 2 or 3 when reduced, else None
    unit_count: int  # r in {0, 1, 2} drives the descent step when not reduced
    unit_positions: tuple[int, ...]
    detail: str


def p_reduced_classify(diag, k: int, p: int) -> ReducedClassification:
    """Which of the three good diagonal shapes holds at an odd prime.

    The input is the diagonal of an odd-p diagonalization.  The good
    shapes are: (1) at most n-3 coefficients divisible by p; (2) p | k,
    exactly n-2 divisible, and the two unit coefficients a_i, a_j have
    (-a_i a_j / p) = 1; (3) all but one divisible and the unit one a_i
    has (k a_i / p) = 1.  Anything else is refused with the unit count
    r in {0, 1, 2}, which selects the variable-scaling descent step.
    """
    if p == 2 or not isprime(p):
        raise InputError("classification needs an odd prime")
    coeffs = [int(a) for a in diag]
    units = tuple(i for i, a in enumerate(coeffs) if a % p != 0)
    r = len(units)
    if r >= 3:
        return ReducedClassification(
            True, 1, r, units, f"p divides {len(coeffs) - r} <= n-3 coefficients"
        )
    if r == 2:
        i, j = units
        sym = legendre(-coeffs[i] * coeffs[j], p)
        if k % p == 0 and sym == 1:
            return ReducedClassification(
                True, 2, r, units, "p | k and the unit pair is isotropic"
            )
        why = "p does not divide k" if k % p != 0 else "the unit pair is anisotropic"
        return ReducedClassification(False, None, r, units, why)
    if r == 1:
        i = units[0]
        if legendre(k * coeffs[i], p) == 1:
            return ReducedClassification(
                True, 3, r, units, "k times the unit coefficient is a nonzero square"
            )
        return ReducedClassification(
            False, None, r, units, "k times the unit coefficient is not a square"
        )
    return ReducedClassification(False, None, 0, (), "p divides every coefficient")


def _reduction_steps(diag, k: int, p: int, n: int, cap: int) -> int:
    """Number of variable-scaling steps until the diagonal shape is good.

    Each step divides k by p, scales the unit variables by p, and divides
    the rest of the diagonal by p; it only applies while solutions exist,
    which the caller guarantees by checking weak solubility first.
    """
    coeffs = [int(a) for a in diag]
    steps = 0
    while steps <= cap:
        cls = p_reduced_classify(coeffs, k, p)
        if cls.reduced:
            return steps
        if cls.unit_count == 2 and k % p != 0:
            # the unit binary part represents every nonzero class mod p,
            # so the count is already bounded below without further steps
            return steps
        if k % p != 0:
            # r <= 1 and p does not divide k: no solutions mod p exist,
            # contradicting weak solubility
            raise InputError("reduction walk needs a weakly soluble pair")
        units = [coeffs[i] for i in cls.unit_positions]
        rest = [coeffs[i] // p for i in range(len(coeffs)) if i not in cls.unit_positions]
        coeffs = rest + [p * a for a in units]
        k //= p
        steps += 1
    raise InputError("reduction walk exceeded its certified step bound")


@dataclass(frozen=True)
class SigmaLowerReport:
    series: SingularSeriesEstimate
    strong_everywhere: bool
    theta: Fraction  # 0 under strong solubility, else 1/(n-4)
    envelope: float  # |det|^(-theta), informational
    ratio: float  # series.lower / envelope, constant-free
    prime_depths: dict  # odd p | det -> (steps used, certified bound)


def sigma_lower_report(
    form: QuadraticForm, k: int, pcut: int = 1000, budget: Budget | None = None
) -> SigmaLowerReport:
    """Computed singular-series interval against its determinant envelope.

    The envelope exponent is zero when a nonsingular solution exists at
    every prime and 1/(n-4) otherwise; the per-prime entries show how
    many variable-scaling steps the diagonal shape actually needs next to
    the certified bound v_p(det)/(n-4).
    """
    budget = budget or Budget()
    n = form.n
    if n < 5:
        raise InputError("the envelope needs n >= 5")
    report = decide_weak_lsc_all(form, k, budget)
    if not report.soluble:
        raise InputError("weak local solubility fails; no lower envelope applies")
    series = singular_series(form, k, pcut=pcut, budget=budget)
    delta = abs(form.determinant)
    strong = all(
        decide_strong_lsc(form, k, p, budget).strong
        for p in sorted({2} | set(primefactors(delta)))
    )
    theta = Fraction(0) if strong else Fraction(1, n - 4)
    envelope = float(delta) ** (-float(theta))
    ratio = float(series.lower) / envelope if envelope > 0 else float("inf")
    prime_depths = {}
    for p in sorted(primefactors(delta)):
        if p == 2:
            continue
        nu = _val(delta, p, delta.bit_length() + 2)
        bound = Fraction(nu, n - 4)
        cap = 1 + max(0, (nu - n + 3)) // (n - 4)
        dg = diagonalize_odd(form, p, 1)
        steps = _reduction_steps(dg.coefficients, k, p, n, cap)
        assert Fraction(steps) <= max(bound, Fraction(1))
        prime_depths[p] = (steps, bound)
    return SigmaLowerReport(series, strong, theta, envelope, ratio, prime_depths)
