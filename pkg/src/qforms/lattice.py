"""Lattice utilities over the integers, with exact arithmetic throughout.

Basis reduction works on the Gram matrix alone, so a quadratic form can
be reduced without ever fixing an embedding.  Enumeration of the vectors
taking a prescribed value uses an exact rational decomposition of the
Gram matrix: emptiness results are proofs, not float-tolerance guesses.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from sympy import Matrix, isprime
from sympy.matrices.normalforms import hermite_normal_form

from .core import QuadraticForm, build_form
from .errors import Budget, BudgetError, InputError
from .linalg import det, exact_sqrt, identity, mat_mul, transpose


def _gram_of(transform, gram):
    return mat_mul(mat_mul(transpose(transform), gram), transform)


def _round_half_away(x: Fraction) -> int:
    if x >= 0:
        return int(x + Fraction(1, 2))
    return -int(-x + Fraction(1, 2))


def _lll_reduce(gram) -> list[list[int]]:
    """Unimodular U with Uᵀ·gram·U LLL-reduced (delta = 3/4), exactly.

    Gram-Schmidt data lives in Fractions recomputed from the integer Gram
    matrix, so no precision parameter exists to tune.
    """
    n = len(gram)
    U = [list(row) for row in identity(n)]

    def gs(G):
        mu = [[Fraction(0)] * n for _ in range(n)]
        B = [Fraction(0)] * n
        for i in range(n):
            B[i] = Fraction(G[i][i])
            for j in range(i):
                mu[i][j] = Fraction(G[i][j])
                for l in range(j):
                    mu[i][j] -= mu[i][l] * mu[j][l] * B[l]
                mu[i][j] /= B[j]
                B[i] -= mu[i][j] ** 2 * B[j]
        return mu, B

    def addcol(dst: int, src: int, c: int):
        for r in range(n):
            U[r][dst] += c * U[r][src]

    G = _gram_of(tuple(map(tuple, U)), gram)
    mu, B = gs(G)
    k = 1
    while k < n:
        for j in range(k - 1, -1, -1):
            c = _round_half_away(mu[k][j])
            if c != 0:
                addcol(k, j, -c)
                G = _gram_of(tuple(map(tuple, U)), gram)
                mu, B = gs(G)
        if B[k] >= (Fraction(3, 4) - mu[k][k - 1] ** 2) * B[k - 1]:
            k += 1
        else:
            for r in range(n):
                U[r][k], U[r][k - 1] = U[r][k - 1], U[r][k]
            G = _gram_of(tuple(map(tuple, U)), gram)
            mu, B = gs(G)
            k = max(k - 1, 1)
    return U


def _greedy_pass(gram, U) -> bool:
    """One sweep replacing b_j by b_j ± b_i whenever that shrinks Q(b_j)."""
    n = len(gram)
    improved = False
    G = _gram_of(tuple(map(tuple, U)), gram)
    for j in range(n):
        for i in range(n):
            if i == j:
                continue
            # Q(b_j + s b_i) = Q(b_j) + 2 s <b_i, b_j> + Q(b_i)
            for s in (1, -1):
                if G[j][j] + 2 * s * G[i][j] + G[i][i] < G[j][j]:
                    for r in range(n):
                        U[r][j] += s * U[r][i]
                    G = _gram_of(tuple(map(tuple, U)), gram)
                    improved = True
    return improved


@dataclass(frozen=True)
class ReducedForm:
    form: QuadraticForm  # the reduced form
    transform: tuple[tuple[int, ...], ...]  # unimodular U carrying old to new
    min_value: int | None  # exact minimum over nonzero vectors when certified

    @property
    def certified(self) -> bool:
        return self.min_value is not None


def reduce_form(form: QuadraticForm, budget: Budget | None = None) -> ReducedForm:
    """Exact basis reduction of a positive definite form.

    Runs integer LLL at delta 3/4, then greedy single-vector improvements
    until fixed point.  The minimum is then certified by enumerating all
    vectors of value up to the smallest diagonal entry, which is an upper
    bound for it.
    """
    budget = budget or Budget()
    if form.classification != "positive-definite":
        raise InputError("reduce_form needs a positive definite form")
    U = _lll_reduce(form.gram)
    while _greedy_pass(form.gram, U):
        pass
    new_gram = _gram_of(tuple(map(tuple, U)), form.gram)
    reduced = build_form([list(row) for row in new_gram])
    assert abs(det(U)) == 1
    assert reduced.determinant == form.determinant
    bound = min(new_gram[i][i] for i in range(form.n))
    min_value = None
    try:
        below = _enumerate_up_to(reduced, bound, budget)
        min_value = min(v for v, _ in below)
        assert min_value <= bound
    except BudgetError:
        pass  # leave the minimum uncertified rather than guess
    return ReducedForm(reduced, tuple(tuple(row) for row in U), min_value)


@dataclass(frozen=True)
class MinMaxReport:
    ratio: Fraction  # min^(n-1) * height / |det|, constant-free
    alpha: float  # log min / log |det|, 0 when |det| = 1
    min_value: int
    height: int
    abs_det: int


def min_max_check(reduced: ReducedForm) -> MinMaxReport:
    """How far the reduced form sits from the extremal shape.

    The product min(Q)^(n-1) * height(Q) is commensurable with |det| for
    reduced forms; the ratio and the exponent alpha are informational,
    with no normalizing constants applied.
    """
    if reduced.min_value is None:
        raise InputError("min_max_check needs a certified minimum")
    form = reduced.form
    m = reduced.min_value
    d = abs(form.determinant)
    ratio = Fraction(m ** (form.n - 1) * form.height, d)
    alpha = 0.0 if d == 1 else math.log(m) / math.log(d)
    return MinMaxReport(ratio, alpha, m, form.height, d)


# ---------------------------------------------------------------------------
# enumeration at a fixed value


def _ldl(gram) -> tuple[list[list[Fraction]], list[Fraction]]:
    """A = L·diag(D)·Lᵀ with unit lower-triangular L, exactly; needs A ≻ 0."""
    n = len(gram)
    L = [[Fraction(1 if i == j else 0) for j in range(n)] for i in range(n)]
    D = [Fraction(0)] * n
    for j in range(n):
        D[j] = Fraction(gram[j][j]) - sum(L[j][l] ** 2 * D[l] for l in range(j))
        if D[j] <= 0:
            raise InputError("form is not positive definite")
        for i in range(j + 1, n):
            s = Fraction(gram[i][j]) - sum(L[i][l] * L[j][l] * D[l] for l in range(j))
            L[i][j] = s / D[j]
    return L, D


def _floor_center_plus_sqrt(center: Fraction, square: Fraction) -> int:
    """floor(center + sqrt(square)) exactly, square >= 0."""
    guess = math.floor(float(center) + math.sqrt(float(square)))
    while Fraction(guess + 1) - center <= 0 or (Fraction(guess + 1) - center) ** 2 <= square:
        guess += 1
    while Fraction(guess) - center > 0 and (Fraction(guess) - center) ** 2 > square:
        guess -= 1
    return guess


def _enumerate_up_to(form: QuadraticForm, bound: int, budget: Budget):
    """All (value, x) with 0 < Q(x) <= bound and x nonzero, up to sign.

    Only one of each antipodal pair {x, -x} is returned (the one whose
    first nonzero coordinate is positive).
    """
    L, D = _ldl(form.gram)
    n = form.n
    results = []
    x = [0] * n

    def walk(i: int, rem: Fraction):
        budget.charge(1, "value enumeration node")
        if i < 0:
            used = Fraction(bound) - rem
            if used > 0:
                value = int(used)
                assert used == value
                for v in x:
                    if v > 0:
                        results.append((value, tuple(x)))
                        break
                    if v < 0:
                        break
            return
        center = -sum(L[j][i] * x[j] for j in range(i + 1, n))
        radius_sq = rem / D[i]
        hi = _floor_center_plus_sqrt(center, radius_sq)
        lo = -_floor_center_plus_sqrt(-center, radius_sq)
        for t in range(lo, hi + 1):
            x[i] = t
            walk(i - 1, rem - D[i] * (t - center) ** 2)
        x[i] = 0

    walk(n - 1, Fraction(bound))
    return results


def _enumerate_exact(form: QuadraticForm, k: int, budget: Budget):
    """All x with Q(x) = k > 0, up to sign (first nonzero coordinate > 0).

    Same walk as _enumerate_up_to, except the innermost coordinate is
    not iterated: D_0 (t - c)^2 = rem is solved in closed form, so the
    node count follows the (n-1)-dimensional section, not the ball.
    """
    L, D = _ldl(form.gram)
    n = form.n
    results = []
    x = [0] * n

    def keep():
        for v in x:
            if v > 0:
                results.append(tuple(x))
                return
            if v < 0:
                return

    def walk(i: int, rem: Fraction):
        budget.charge(1, "value enumeration node")
        center = -sum(L[j][i] * x[j] for j in range(i + 1, n))
        if i == 0:
            root = exact_sqrt(rem / D[0])
            if root is None:
                return
            for r in (root, -root) if root else (root,):
                t = center + r
                if t.denominator == 1:
                    x[0] = int(t)
                    keep()
            x[0] = 0
            return
        radius_sq = rem / D[i]
        hi = _floor_center_plus_sqrt(center, radius_sq)
        lo = -_floor_center_plus_sqrt(-center, radius_sq)
        for t in range(lo, hi + 1):
            x[i] = t
            walk(i - 1, rem - D[i] * (t - center) ** 2)
        x[i] = 0

    walk(n - 1, Fraction(k))
    return results


def enumerate_representations(
    form: QuadraticForm, k: int, budget: Budget | None = None
) -> list[tuple[int, ...]]:
    """Every nonzero integer vector with Q(x) = k, positive definite Q.

    The exact rational decomposition gives closed interval bounds per
    coordinate, so the returned list is complete: an empty list is a
    proof that k is not represented.
    """
    budget = budget or Budget()
    if form.classification != "positive-definite":
        raise InputError("enumeration needs a positive definite form")
    if k < 0:
        raise InputError("a positive definite form only takes values k >= 0")
    if k == 0:
        return []
    found = []
    for vec in _enumerate_exact(form, k, budget):
        found.append(vec)
        found.append(tuple(-v for v in vec))
    found.sort()
    return found


# ---------------------------------------------------------------------------
# congruence sublattices


@dataclass(frozen=True)
class CongruenceLatticeBasis:
    modulus_data: tuple  # the (coefficients, prime) constraints as given
    basis: tuple[tuple[int, ...], ...]  # columns generate the sublattice
    abs_det: int  # index of the sublattice in Z^n


def congruence_lattice_basis(
    constraints, n: int | None = None
) -> CongruenceLatticeBasis:
    """Hermite-form basis of {x : p | L(x) for every constraint (L, p)}.

    Constraints are processed one at a time: the pullback of each mod-p
    kernel is itself generated by scaling one pivot column by p and
    clearing the rest, and the running product is put in Hermite normal
    form at the end.  The determinant is checked against the index
    computed independently from mod-p ranks.
    """
    constraints = [(tuple(int(c) for c in L), int(p)) for L, p in constraints]
    if n is None:
        if not constraints:
            raise InputError("need constraints or an explicit dimension")
        n = len(constraints[0][0])
    for L, p in constraints:
        if len(L) != n:
            raise InputError("constraint length does not match dimension")
        if not isprime(p):
            raise InputError("constraint modulus must be prime")
    T = [list(row) for row in identity(n)]
    for L, p in constraints:
        row = [sum(L[i] * T[i][j] for i in range(n)) % p for j in range(n)]
        pivot = next((j for j, v in enumerate(row) if v != 0), None)
        if pivot is None:
            continue  # constraint already satisfied on the current lattice
        inv = pow(row[pivot], -1, p)
        S = [list(r) for r in identity(n)]
        for j in range(n):
            if j == pivot:
                S[pivot][pivot] = p
            elif row[j] != 0:
                S[pivot][j] = (-row[j] * inv) % p
        T = [list(r) for r in mat_mul(T, S)]
    H = hermite_normal_form(Matrix(T))
    basis = tuple(tuple(int(v) for v in H.row(i)) for i in range(n))
    index = abs(det([list(r) for r in basis]))
    # independent index: product over primes of p^rank of the stacked rows
    expected = 1
    for p in sorted({p for _, p in constraints}):
        rows = [[c % p for c in L] for L, q in constraints if q == p]
        rank = 0
        for col in range(n):
            piv = next((r for r in range(rank, len(rows)) if rows[r][col] % p), None)
            if piv is None:
                continue
            rows[rank], rows[piv] = rows[piv], rows[rank]
            inv = pow(rows[rank][col], -1, p)
            for r in range(len(rows)):
                if r != rank and rows[r][col] % p:
                    c = (rows[r][col] * inv) % p
                    rows[r] = [(a - c * b) % p for a, b in zip(rows[r], rows[rank])]
            rank += 1
        expected *= p**rank
    assert index == expected
    for j in range(n):
        col = [basis[i][j] for i in range(n)]
        for L, p in constraints:
            assert sum(L[i] * col[i] for i in range(n)) % p == 0
    return CongruenceLatticeBasis(tuple(constraints), basis, index)
