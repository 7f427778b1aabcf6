"""Reduction of pairs (k, Q) failing strong local solubility.

Each step divides k by a prime power and replaces Q by an integral form
of no larger determinant, preserving global solubility, until strong
local solubility holds at every odd prime and the 2-adic density is
certified positive.  All step invariants are verified in exact
arithmetic as the steps are built.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from sympy import Matrix

from .core import QuadraticForm, build_form
from .errors import Budget, ContradictionError, InputError
from .expsums import legendre
from .lattice import congruence_lattice_basis, enumerate_representations
from .linalg import identity, mat_mul, transpose
from .localsolve import (
    LocalVerdict,
    _count_total,
    _strong_witness_odd,
    decide_strong_lsc,
    decide_weak_lsc_all,
    diagonalize_odd,
    two_adic_blocks,
)
from .singular import LocalDensity, local_density


@dataclass(frozen=True)
class DescentStep:
    p: int
    case_tag: str  # odd-r0 | odd-r1 | odd-r2 | two-adic-quad
    T: tuple[tuple[int, ...], ...]  # columns span the sublattice
    k_before: int
    k_after: int
    Q_before: QuadraticForm
    Q_after: QuadraticForm
    theta_increment: int  # k_after = k_before / p^theta


@dataclass(frozen=True)
class TwoAdicCertificate:
    branch: str
    sigma2: LocalDensity  # exact 2-adic density of the terminal pair
    threshold: Fraction  # 2^(-3(n-1)), the strong-solubility floor
    meets_threshold: bool
    detail: str


@dataclass(frozen=True)
class TerminalCertificate:
    odd_verdicts: dict  # odd prime -> LocalVerdict, all strong
    two_adic: TwoAdicCertificate


@dataclass(frozen=True)
class DescentTrace:
    steps: tuple[DescentStep, ...]
    terminal_k: int
    terminal_form: QuadraticForm
    certificate: TerminalCertificate


def _make_step(
    form: QuadraticForm,
    k: int,
    p: int,
    tag: str,
    T,
    theta: int,
) -> DescentStep:
    """Assemble a step and verify its invariants exactly."""
    q = p**theta
    if k % q != 0:
        raise InputError(f"k must be divisible by {p}^{theta} for this step")
    scaled = mat_mul(transpose(T), mat_mul(form.gram, T))
    assert all(v % q == 0 for row in scaled for v in row)
    after = build_form([[v // q for v in row] for row in scaled])
    assert abs(after.determinant) <= abs(form.determinant)
    if form.n >= 5:
        before_ratio = Fraction(k, abs(form.determinant))
        after_ratio = Fraction(k // q, abs(after.determinant))
        assert after_ratio >= before_ratio
    return DescentStep(p, tag, T, k, k // q, form, after, theta)


def descend_odd(form: QuadraticForm, k: int, p: int) -> DescentStep:
    """One reduction step at an odd prime where strong solubility fails.

    Diagonalizing mod p leaves r unit coefficients.  r >= 3, or a unit
    block representing k mod p with a nonzero coordinate, would produce a
    nonsingular solution, contradicting the premise; the remaining cases
    force p | k and confine every solution mod p to a sublattice of index
    p^r, along which both k and Q lose one factor of p.
    """
    if p == 2:
        raise InputError("descend_odd needs an odd prime")
    if k <= 0:
        raise InputError("k must be positive")
    n = form.n
    dg = diagonalize_odd(form, p, 1)
    units = [i for i in range(n) if dg.coefficients[i] % p != 0]
    r = len(units)
    if r >= 3:
        witness = _strong_witness_odd(form, k, p)
        raise ContradictionError(
            f"strong solubility holds at {p}: {r} unit coefficients give the "
            f"nonsingular solution {witness} mod {p}",
            witness=witness,
        )
    if r == 0:
        if k % p != 0:
            raise InputError(f"weak solubility fails at {p}: Q = 0 != k mod {p}")
    elif r == 1:
        a1 = dg.coefficients[units[0]]
        if k % p != 0:
            if legendre(k * a1, p) == 1:
                witness = _strong_witness_odd(form, k, p)
                raise ContradictionError(
                    f"strong solubility holds at {p}: k times the unit "
                    f"coefficient is a square mod {p}, witness {witness}",
                    witness=witness,
                )
            raise InputError(
                f"weak solubility fails at {p}: the single unit square "
                f"cannot represent k mod {p}"
            )
    else:
        a1, a2 = (dg.coefficients[i] for i in units)
        if k % p != 0 or legendre(-a1 * a2, p) == 1:
            witness = _strong_witness_odd(form, k, p)
            raise ContradictionError(
                f"strong solubility holds at {p}: the unit pair represents "
                f"k mod {p} nonsingularly, witness {witness}",
                witness=witness,
            )
    # every solution mod p now has the unit coordinates divisible by p
    if r == 0:
        T = identity(n)
    else:
        inv = Matrix(list(map(list, dg.transform))).inv_mod(p)
        rows = [tuple(int(v) % p for v in inv.row(i)) for i in units]
        basis = congruence_lattice_basis([(row, p) for row in rows], n)
        assert basis.abs_det == p**r
        T = basis.basis
    return _make_step(form, k, p, f"odd-r{r}", T, 1)


def descend_two_adic(form: QuadraticForm, k: int, budget: Budget | None = None):
    """Certify the 2-adic density positive, or emit a k/4 reduction step.

    The form is split 2-adically into blocks a X^2, b XY, c (X^2+XY+Y^2)
    with b, c even.  If no block coefficient is divisible by 8, or some
    solution mod 2^7 has an odd coordinate on a block whose coefficient
    is not divisible by 8, solutions lift and the exact density is the
    certificate.  Otherwise all solutions mod 2^7 lie in the sublattice
    doubling those coordinates, 4 | k is forced, and the pair descends.

    Returns a TwoAdicCertificate or a DescentStep.
    """
    budget = budget or Budget()
    if k <= 0:
        raise InputError("k must be positive")
    n = form.n
    if all(v % 4 == 0 for row in form.gram for v in row):
        if k % 4 != 0:
            raise InputError("weak solubility fails at 2: Q = 0 != k mod 4")
        return _make_step(form, k, 2, "two-adic-quad", identity(n), 2)
    blocks = two_adic_blocks(form, 13)
    coeff_of_position = {}
    for block in blocks.blocks:
        for i in block.indices:
            coeff_of_position[i] = block.scale
    unit_positions = [i for i in range(n) if coeff_of_position[i] % 8 != 0]

    def certificate(branch: str, detail: str) -> TwoAdicCertificate:
        sigma2 = local_density(form, k, 2, budget=budget)
        if not sigma2.exact:
            raise InputError("budget too small to certify the 2-adic density")
        if sigma2.value == 0:
            raise InputError("weak solubility fails at 2: the density vanishes")
        threshold = Fraction(1, 2 ** (3 * (n - 1)))
        return TwoAdicCertificate(
            branch, sigma2, threshold, sigma2.value >= threshold, detail
        )

    if len(unit_positions) == n:
        sub = "k not divisible by 2^7" if k % 128 != 0 else "2^7 divides k"
        return certificate(
            "no-coefficient-divisible-by-8",
            f"every block coefficient is a unit times at most 4; {sub}; "
            "solutions lift from level 7",
        )
    total = _count_total(form, k, 2, 7)
    if total == 0:
        raise InputError("weak solubility fails at 2: no solutions mod 2^7")
    # count solutions whose unit-block coordinates are all even, by
    # doubling those coordinates of the block basis
    D = [[0] * n for _ in range(n)]
    for i in range(n):
        D[i][i] = 2 if i in unit_positions else 1
    WD = mat_mul(blocks.transform, D)
    doubled = build_form(mat_mul(transpose(WD), mat_mul(form.gram, WD)))
    in_sublattice, rem = divmod(
        _count_total(doubled, k, 2, 7), 2 ** len(unit_positions)
    )
    assert rem == 0
    assert in_sublattice <= total
    if in_sublattice < total:
        return certificate(
            "odd-coordinate-on-small-block",
            "a solution mod 2^7 has an odd coordinate where the block "
            "coefficient is not divisible by 8; it lifts",
        )
    if k % 4 != 0:
        raise InputError(
            "every solution mod 2^7 has even unit-block coordinates, "
            "yet 4 does not divide k; weak solubility fails at 2"
        )
    inv = Matrix(list(map(list, blocks.transform))).inv_mod(2)
    rows = [tuple(int(v) % 2 for v in inv.row(i)) for i in unit_positions]
    basis = congruence_lattice_basis([(row, 2) for row in rows], n)
    assert basis.abs_det == 2 ** len(unit_positions)
    assert basis.abs_det <= 2 ** (n - 1)
    return _make_step(form, k, 2, "two-adic-quad", basis.basis, 2)


def _odd_prime_factors(m: int) -> list[int]:
    from sympy import factorint

    return sorted(p for p in factorint(abs(m)) if p != 2)


def descend_full(
    form: QuadraticForm, k: int, budget: Budget | None = None
) -> DescentTrace:
    """Iterate the reduction until the terminal pair is certified.

    Strong solubility can fail at odd p only when p divides the
    determinant (otherwise the reduction mod p keeps n >= 3 unit squares
    and the closed-form nonsingular count is positive), so those primes
    are reduced first, then the 2-adic branch runs until it certifies.
    """
    budget = budget or Budget()
    if form.n < 5:
        raise InputError("the descent needs n >= 5")
    if form.classification != "positive-definite":
        raise InputError("the descent needs a positive definite form")
    if k <= 0:
        raise InputError("k must be positive")
    report = decide_weak_lsc_all(form, k, budget=budget)
    if not report.soluble:
        raise InputError("weak local solubility fails; nothing to descend")

    from sympy import factorint, multiplicity

    limit = 2 + multiplicity(2, k) + sum(
        e for p, e in factorint(abs(form.determinant)).items() if p != 2
    )

    steps: list[DescentStep] = []
    current, kc = form, k
    two_adic_cert = None
    while two_adic_cert is None:
        if len(steps) > limit:
            raise RuntimeError(
                "descent did not terminate within its valuation budget; "
                "a step failed to reduce the invariants"
            )
        failed = None
        for p in _odd_prime_factors(current.determinant):
            if not decide_strong_lsc(current, kc, p, budget=budget).strong:
                failed = p
                break
        if failed is not None:
            step = descend_odd(current, kc, failed)
            steps.append(step)
            current, kc = step.Q_after, step.k_after
            continue
        if decide_strong_lsc(current, kc, 2, budget=budget).strong:
            sigma2 = local_density(current, kc, 2, budget=budget)
            assert sigma2.exact
            threshold = Fraction(1, 2 ** (3 * (form.n - 1)))
            assert sigma2.value >= threshold
            two_adic_cert = TwoAdicCertificate(
                "strong-lsc-at-2",
                sigma2,
                threshold,
                True,
                "a solution mod 8 with odd gradient lifts indefinitely",
            )
            continue
        outcome = descend_two_adic(current, kc, budget=budget)
        if isinstance(outcome, DescentStep):
            steps.append(outcome)
            current, kc = outcome.Q_after, outcome.k_after
            continue
        two_adic_cert = outcome

    check = {2} | set(_odd_prime_factors(current.determinant))
    check |= set(_odd_prime_factors(kc))
    odd_verdicts: dict[int, LocalVerdict] = {}
    for p in sorted(check - {2}):
        verdict = decide_strong_lsc(current, kc, p, budget=budget)
        assert verdict.strong
        odd_verdicts[p] = verdict
    for a, b in zip(steps, steps[1:]):
        assert b.k_before == a.k_after and b.k_after < a.k_after
    return DescentTrace(
        tuple(steps), kc, current, TerminalCertificate(odd_verdicts, two_adic_cert)
    )


def solubility_equivalent(trace: DescentTrace, form: QuadraticForm, k: int, budget: Budget | None = None) -> bool:
    """Check by enumeration that the descent preserved global solubility."""
    budget = budget or Budget()
    before = enumerate_representations(form, k, budget=budget)
    after = enumerate_representations(trace.terminal_form, trace.terminal_k, budget=budget)
    return (len(before) == 0) == (len(after) == 0)
