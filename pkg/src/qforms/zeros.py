"""Small integer zeros of indefinite forms, with exhaustive certificates.

The searches here are box-exhaustive: a negative result proves that no
nontrivial zero exists in the scanned box.  Pruning works through an
exact rational completion of squares, so discarded subtrees are discarded
by proof; candidate leaves are verified in integer arithmetic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from sympy import factorint, gamma as _gamma_fn

from .core import QuadraticForm, build_form
from .errors import Budget, BudgetError, InputError
from .linalg import floor_sqrt


def _square_completion(gram):
    """Pivot order, coefficients d_j, and rational rows completing squares.

    Returns (order, dvals, rows) with Q(x) = sum_j d_j z_j^2 where
    z_j = x[order[j]] + sum over later l of rows[j][l] * x[order[l]].
    Pivots take the largest remaining diagonal entry of the Schur
    complement; a wholly vanishing diagonal with a nonzero block left
    cannot happen for the nondegenerate forms accepted here, and is
    refused loudly if it does.
    """
    n = len(gram)
    S = [[Fraction(v) for v in row] for row in gram]
    remaining = list(range(n))
    order: list[int] = []
    dvals: list[Fraction] = []
    rows: list[dict] = []
    while remaining:
        pivot = max(remaining, key=lambda i: (abs(S[i][i]), -i))
        if S[pivot][pivot] == 0:
            # an all-zero Schur diagonal needs an off-diagonal pivot;
            # callers fall back to plain enumeration in that case
            return None
        d = S[pivot][pivot]
        remaining.remove(pivot)
        row = {q: S[pivot][q] / d for q in remaining}
        order.append(pivot)
        dvals.append(d)
        rows.append(row)
        for i in remaining:
            for j in remaining:
                S[i][j] -= S[pivot][i] * S[pivot][j] / d
    return order, dvals, rows


def _interval_square(lo: Fraction, hi: Fraction) -> tuple[Fraction, Fraction]:
    """Range of t^2 for t in [lo, hi]."""
    if lo <= 0 <= hi:
        mn = Fraction(0)
    else:
        mn = min(lo * lo, hi * hi)
    return mn, max(lo * lo, hi * hi)


def _exact_sqrt_fraction(q: Fraction):
    """sqrt(q) as a Fraction if it is one, else None (q >= 0)."""
    a, b = q.numerator, q.denominator
    ra, rb = floor_sqrt(a), floor_sqrt(b)
    if ra * ra == a and rb * rb == b:
        return Fraction(ra, rb)
    return None


def _scan_box(form: QuadraticForm, bound: int, budget: Budget, emit) -> None:
    """Call emit(x) for every x with |x| <= bound, x != 0 and Q(x) = 0.

    Coordinates are fixed from the last pivot inwards, so each completed
    square becomes exact as soon as its leading variable is set; the free
    squares are bracketed by interval arithmetic over the box and the
    final coordinate is solved in closed form.
    """
    n = form.n
    completion = _square_completion(form.gram)
    if completion is None:
        _scan_box_brute(form, bound, budget, emit)
        return
    order, dvals, rows = completion
    position = {var: j for j, var in enumerate(order)}
    m = Fraction(bound)
    x = [0] * n

    # weights w_j = 1 + sum of |row coefficients| over still-free variables
    def free_interval(j: int, first_fixed: int) -> tuple[Fraction, Fraction]:
        # variables order[first_fixed:] are fixed, order[:first_fixed] free
        center = Fraction(0)
        width = Fraction(1)  # own variable x[order[j]]
        for l, c in rows[j].items():
            if position[l] >= first_fixed:
                center += c * x[l]
            else:
                width += abs(c)
        return center - width * m, center + width * m

    def walk(depth: int, value: Fraction) -> None:
        # depth counts fixed variables, from the tail of the pivot order
        budget.charge(1, "zero search node")
        j = n - 1 - depth  # next pivot index to fix
        lo, hi = Fraction(0), Fraction(0)
        for i in range(j + 1):
            flo, fhi = free_interval(i, n - depth)
            smin, smax = _interval_square(flo, fhi)
            if dvals[i] > 0:
                lo += dvals[i] * smin
                hi += dvals[i] * smax
            else:
                lo += dvals[i] * smax
                hi += dvals[i] * smin
        if value + hi < 0 or value + lo > 0:
            return
        var = order[j]
        offset = sum(c * x[l] for l, c in rows[j].items())
        if depth == n - 1:
            # single free square: d_j (x + offset)^2 = -value exactly
            target = -value / dvals[j]
            if target < 0:
                return
            root = _exact_sqrt_fraction(target)
            if root is None:
                return
            for z in {root, -root}:
                t = z - offset
                if t.denominator == 1 and -bound <= t <= bound:
                    x[var] = int(t)
                    if any(x):
                        assert form.evaluate(x) == 0
                        emit(tuple(x))
            x[var] = 0
            return
        for t in range(-bound, bound + 1):
            x[var] = t
            z = t + offset
            walk(depth + 1, value + dvals[j] * z * z)
        x[var] = 0

    walk(0, Fraction(0))


def _scan_box_brute(form: QuadraticForm, bound: int, budget: Budget, emit) -> None:
    """Plain exhaustive scan, for forms without a diagonal square completion.

    Those forms contain a hyperbolic pair after restriction, so small
    zeros are plentiful and the doubling passes above stay tiny.
    """
    n = form.n
    x = [0] * n

    def walk(i: int) -> None:
        budget.charge(1, "zero search node")
        if i == n:
            if any(x) and form.evaluate(x) == 0:
                emit(tuple(x))
            return
        for t in range(-bound, bound + 1):
            x[i] = t
            walk(i + 1)
        x[i] = 0

    walk(0)


@dataclass(frozen=True)
class ZeroSearchResult:
    found: tuple[int, ...] | None  # smallest max-norm zero, ties lex-greatest
    found_first_nonzero: tuple[int, ...] | None  # same, among x_1 != 0
    search_bound: int  # the box |x| <= search_bound was covered completely
    exhaustive: bool  # False only when the budget cut the last pass short


def _better(a: tuple[int, ...] | None, b: tuple[int, ...]) -> tuple[int, ...]:
    if a is None:
        return b
    na, nb = max(map(abs, a)), max(map(abs, b))
    if nb < na or (nb == na and b > a):
        return b
    return a


def search_zero(
    form: QuadraticForm,
    bound: int,
    require_x1: bool = False,
    budget: Budget | None = None,
) -> ZeroSearchResult:
    """Exhaustive small-zero search over the box |x| <= bound.

    Scans boxes of doubling size so a small zero is found without paying
    for the full box; each completed pass proves no zero of smaller
    max-norm exists.  With require_x1 the search keeps growing the box
    until a zero with nonzero first coordinate appears (or the box is
    exhausted); otherwise it stops at the first completed pass with any
    zero.
    """
    budget = budget or Budget()
    if form.determinant == 0:
        raise InputError("degenerate form")
    if form.classification not in ("indefinite",):
        raise InputError("zero search needs an indefinite form")
    if bound < 1:
        raise InputError("bound must be >= 1")
    best: tuple[int, ...] | None = None
    best_x1: tuple[int, ...] | None = None
    covered = 0
    passes = []
    b = 1
    while True:
        passes.append(b)
        if b >= bound:
            break
        b = min(2 * b, bound)
    for b in passes:

        def emit(vec: tuple[int, ...]) -> None:
            nonlocal best, best_x1
            best = _better(best, vec)
            if vec[0] != 0:
                best_x1 = _better(best_x1, vec)

        try:
            _scan_box(form, b, budget, emit)
        except BudgetError:
            return ZeroSearchResult(best, best_x1, covered, False)
        covered = b
        if best is not None and (not require_x1 or best_x1 is not None):
            break
    return ZeroSearchResult(best, best_x1, covered, True)


# ---------------------------------------------------------------------------
# the extremal chained family


def kneser_form(c: int, n: int) -> QuadraticForm:
    """Indefinite unimodular form whose least zero grows geometrically.

    The form is X_1^2 - (X_2 - c X_1)^2 - ... - (X_n - c X_{n-1})^2; its
    Gram matrix has unit determinant and height c^2 + 1 for n >= 3, and
    the chain structure forces any zero to climb by factors of about c.
    """
    if c < 3:
        raise InputError("c must be >= 3")
    if n < 2:
        raise InputError("n must be >= 2")
    gram = [[0] * n for _ in range(n)]
    gram[0][0] = 1
    for i in range(1, n):
        # subtract (X_{i+1} - c X_i)^2 in 0-based coordinates (i, i-1)
        gram[i][i] -= 1
        gram[i - 1][i - 1] -= c * c
        gram[i][i - 1] += c
        gram[i - 1][i] += c
    form = build_form(gram)
    assert abs(form.determinant) == 1
    assert form.classification == "indefinite"
    return form


def kneser_minimal_vector(c: int, n: int) -> tuple[int, ...]:
    """(1, c-1, c(c-1), ..., c^(n-2)(c-1)): a zero of the chained form."""
    vec = [1]
    for i in range(1, n):
        vec.append(c ** (i - 1) * (c - 1))
    return tuple(vec)


# ---------------------------------------------------------------------------
# five-variable zeros of diagonal forms


def _diagonal_of(form: QuadraticForm) -> list[int]:
    for i in range(form.n):
        for j in range(form.n):
            if i != j and form.gram[i][j] != 0:
                raise InputError("a diagonal form is required")
    return [form.gram[i][i] for i in range(form.n)]


def _choose_mixed_five(diag: list[int]) -> list[int]:
    """Indices of the five smallest coefficients, signs forced to mix."""
    by_size = sorted(range(len(diag)), key=lambda i: (abs(diag[i]), i))
    chosen = by_size[:5]
    signs = {diag[i] > 0 for i in chosen}
    if len(signs) == 1:
        want_positive = diag[chosen[0]] < 0
        swap_in = next(
            i for i in by_size[5:] if (diag[i] > 0) == want_positive
        )
        drop = max(chosen, key=lambda i: (abs(diag[i]), i))
        chosen.remove(drop)
        chosen.append(swap_in)
        chosen.sort(key=lambda i: (abs(diag[i]), i))
    return chosen


def _weighted_zeros_up_to(coeffs, cap: int, budget: Budget):
    """All zeros of the diagonal form with sum |a_i| x_i^2 <= cap."""
    k = len(coeffs)
    weights = [abs(a) for a in coeffs]
    found = []
    x = [0] * k

    def walk(i: int, rem: int, value: int) -> None:
        budget.charge(1, "weighted zero node")
        if i == k:
            if value == 0 and any(x):
                found.append(tuple(x))
            return
        top = floor_sqrt(rem // weights[i]) if rem >= weights[i] else 0
        for t in range(-top, top + 1):
            x[i] = t
            walk(i + 1, rem - weights[i] * t * t, value + coeffs[i] * t * t)
        x[i] = 0

    walk(0, cap, 0)
    return found


def diagonal_five_variable_zero(
    form: QuadraticForm, budget: Budget | None = None
) -> tuple[int, ...]:
    """A small zero of an indefinite diagonal form using five variables.

    Five coefficients of minimal absolute value are selected (swapping
    one to make the signs mix), the others are frozen at zero, and the
    quinary subform is searched inside the weighted ball
    |a_1| x_1^2 + ... + |a_5| x_5^2 <= 2 |a_1 a_2 a_3 a_4 a_5|,
    which always contains a zero.  The returned vector has max-norm at
    most sqrt(2) * height(Q)^2, and that inequality is verified.
    """
    budget = budget or Budget()
    diag = _diagonal_of(form)
    if form.n < 5:
        raise InputError("five-variable selection needs n >= 5")
    if any(a == 0 for a in diag):
        raise InputError("all diagonal coefficients must be nonzero")
    if form.classification != "indefinite":
        raise InputError("an indefinite form is required")
    chosen = _choose_mixed_five(diag)
    coeffs = [diag[i] for i in chosen]
    det5 = abs(math.prod(coeffs))
    cap = 2 * det5
    w = 2
    zeros = []
    while True:
        zeros = _weighted_zeros_up_to(coeffs, min(w, cap), budget)
        if zeros or w >= cap:
            break
        w *= 2
    if not zeros:
        raise InputError("no zero inside the guaranteed weighted ball")

    def weight(v) -> int:
        return sum(abs(a) * t * t for a, t in zip(coeffs, v))

    wmin = min(weight(v) for v in zeros)
    pick = max(v for v in zeros if weight(v) == wmin)
    out = [0] * form.n
    for idx, t in zip(chosen, pick):
        out[idx] = t
    assert form.evaluate(out) == 0
    assert max(t * t for t in out) <= 2 * form.height**4
    return tuple(out)


@dataclass(frozen=True)
class OuWilliamsReport:
    given: tuple[int, ...]
    given_weight: int
    ellipsoid_cap: int  # 2 |det|
    inside: tuple[int, ...]  # a zero with weight <= cap
    inside_weight: int
    max_norm_bound: float  # sqrt(2) * height^((n-1)/2)
    given_inside: bool


def ou_williams_check(
    form: QuadraticForm, zero, budget: Budget | None = None
) -> OuWilliamsReport:
    """Check a known zero of a diagonal form against the weighted ball.

    The ball sum |A_i| x_i^2 <= 2 |det| always contains a zero; if the
    supplied one lies inside, it is its own witness, otherwise the ball
    is searched by increasing weight.
    """
    budget = budget or Budget()
    diag = _diagonal_of(form)
    zero = tuple(int(v) for v in zero)
    if form.evaluate(zero) != 0 or not any(zero):
        raise InputError("the supplied vector is not a nontrivial zero")
    cap = 2 * abs(form.determinant)
    given_weight = sum(abs(a) * t * t for a, t in zip(diag, zero))
    if given_weight <= cap:
        inside, inside_weight = zero, given_weight
    else:
        w = 2
        while True:
            zeros = _weighted_zeros_up_to(diag, min(w, cap), budget)
            if zeros or w >= cap:
                break
            w *= 2
        if not zeros:
            raise InputError("no zero found inside the weighted ball")
        inside = max(zeros, key=lambda v: (-sum(abs(a) * t * t for a, t in zip(diag, v)), v))
        inside_weight = sum(abs(a) * t * t for a, t in zip(diag, inside))
    bound = math.sqrt(2) * form.height ** ((form.n - 1) / 2)
    return OuWilliamsReport(
        zero, given_weight, cap, inside, inside_weight, bound, given_weight <= cap
    )


# ---------------------------------------------------------------------------
# envelope report


_HERMITE_EXACT = {
    1: 1.0,
    2: (4 / 3) ** 0.5,
    3: 2 ** (1 / 3),
    4: 2**0.5,
    5: 8 ** (1 / 5),
    6: (64 / 3) ** (1 / 6),
    7: 64 ** (1 / 7),
    8: 2.0,
}


def hermite_gamma(m: int) -> float:
    """The Hermite constant for m <= 8, a proven upper bound beyond."""
    if m < 1:
        raise InputError("dimension must be >= 1")
    if m in _HERMITE_EXACT:
        return _HERMITE_EXACT[m]
    return (2 / math.pi) * float(_gamma_fn(2 + m / 2)) ** (2 / m)


@dataclass(frozen=True)
class LambdaEnvelopeReport:
    observed: int  # max-norm of the reported zero
    observed_first_nonzero: int | None
    cassels: float  # height^((n-1)/2)
    davenport_constant: float  # (sqrt(2) n gamma_{n-1})^((n-1)/2)
    davenport: float
    theorem_small_eigen: float | None  # None when the exponent degenerates
    masser: float  # height^(n/2)
    alpha_parity: int  # 1 for even n, 0 for odd
    beta_exponent: Fraction | None
    ratios: dict  # envelope name -> observed / envelope, constant-free


def lambda_envelope_report(
    form: QuadraticForm, result: ZeroSearchResult
) -> LambdaEnvelopeReport:
    """Observed least-zero size against the classical envelopes.

    All envelopes are reported constant-free: no implied multiplicative
    constants are attached, the numbers are the bare height/determinant
    expressions, and the ratios are to be read qualitatively.
    """
    if form.determinant == 0:
        raise InputError("degenerate form")
    if result.found is None:
        raise InputError("the report needs a found zero")
    n = form.n
    H = form.height
    delta = abs(form.determinant)
    observed = max(map(abs, result.found))
    observed_x1 = (
        max(map(abs, result.found_first_nonzero))
        if result.found_first_nonzero is not None
        else None
    )
    cassels = H ** ((n - 1) / 2)
    dav_const = (math.sqrt(2) * n * hermite_gamma(n - 1)) ** ((n - 1) / 2)
    alpha = 1 if n % 2 == 0 else 0
    beta = None
    if n >= 5:
        fac = factorint(delta)
        squarefree = all(e == 1 for e in fac.values())
        beta = Fraction(0) if (delta % 2 == 1 and squarefree) else Fraction(1, n - 4)
    theorem = None
    if n >= 5 and n - 3 - alpha > 0:
        min_abs_lower = form.eigen_envelope().min_abs_lower
        theorem = float(min_abs_lower) ** (-0.5) * float(
            delta ** (1 + 2 * beta) * Fraction(H) ** n
        ) ** (1 / (n - 3 - alpha))
    masser = H ** (n / 2)
    envelopes = {
        "cassels": cassels,
        "davenport": dav_const * cassels,
        "masser": masser,
    }
    if theorem is not None:
        envelopes["small-eigenvalue"] = theorem
    ratios = {name: observed / val for name, val in envelopes.items()}
    return LambdaEnvelopeReport(
        observed,
        observed_x1,
        cassels,
        dav_const,
        dav_const * cassels,
        theorem,
        masser,
        alpha,
        beta,
        ratios,
    )
