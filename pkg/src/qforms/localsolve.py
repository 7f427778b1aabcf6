"""Local structure of a form at a prime: decompositions and solution counts.

Everything here is exact integer arithmetic.  The two decompositions are

* ``diagonalize_odd``: a unimodular change of basis making the Gram matrix
  diagonal modulo p^t for odd p;
* ``two_adic_blocks``: a unimodular change of basis splitting the Gram
  matrix modulo a power of two into 1x1 blocks and 2x2 blocks of
  hyperbolic type (value 2m*XY) or hexagonal type (value 2g*(X^2+XY+Y^2)).

On top of them, ``count_congruence`` computes N(p^t) = #{x mod p^t :
Q(x) = k mod p^t} in time polynomial in t (never by walking the p^(tn)
points), by splitting solutions into a "good" part with unit gradient,
counted in closed form and lifted at the exact rate p^(n-1) per level, and
a "bad" part that reduces to a smaller instance at level t-1.

``decide_weak_lsc`` then certifies solubility in the p-adic integers from
a single exact count at a finite level determined by k and det(Q): above
that level, any solution has a unit-enough gradient to lift forever, so a
nonzero count is a complete certificate and a zero count a disproof.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sympy import isprime, primefactors

from .core import QuadraticForm
from .errors import Budget, InputError
from .expsums import closed_form_Mr
from .linalg import det, identity, mat_mul, transpose

# ---------------------------------------------------------------------------
# basis-change bookkeeping


def _swap(M, U, i, j):
    if i == j:
        return
    M[i], M[j] = M[j], M[i]
    for row in M:
        row[i], row[j] = row[j], row[i]
    for row in U:
        row[i], row[j] = row[j], row[i]


def _addcol(M, U, dst, src, c):
    """Basis op e_dst <- e_dst + c*e_src, kept symmetric on M."""
    if c == 0:
        return
    n = len(M)
    for l in range(n):
        M[dst][l] += c * M[src][l]
    for l in range(n):
        M[l][dst] += c * M[l][src]
    for l in range(n):
        U[l][dst] += c * U[l][src]


def _block_op(M, U, i, P):
    """Basis op on coordinates (i, i+1): new cols are combinations by P (2x2)."""
    n = len(M)
    for l in range(n):
        a, b = M[l][i], M[l][i + 1]
        M[l][i] = P[0][0] * a + P[1][0] * b
        M[l][i + 1] = P[0][1] * a + P[1][1] * b
    for l in range(n):
        a, b = M[i][l], M[i + 1][l]
        M[i][l] = P[0][0] * a + P[1][0] * b
        M[i + 1][l] = P[0][1] * a + P[1][1] * b
    for l in range(n):
        a, b = U[l][i], U[l][i + 1]
        U[l][i] = P[0][0] * a + P[1][0] * b
        U[l][i + 1] = P[0][1] * a + P[1][1] * b


def _val(x: int, p: int, cap: int) -> int:
    """p-adic valuation capped at `cap`; the zero entry counts as cap."""
    if x == 0:
        return cap
    v = 0
    while x % p == 0 and v < cap:
        x //= p
        v += 1
    return v


# ---------------------------------------------------------------------------
# odd-prime diagonalization


@dataclass(frozen=True)
class DiagonalizationOdd:
    prime: int
    precision: int  # congruences hold mod p^precision
    coefficients: tuple[int, ...]  # exact diagonal of the transformed Gram
    transform: tuple[tuple[int, ...], ...]  # unimodular U with U^T A U = exact_gram
    exact_gram: tuple[tuple[int, ...], ...]  # off-diagonal entries = 0 mod p^precision


def diagonalize_odd(form: QuadraticForm, p: int, t: int) -> DiagonalizationOdd:
    """Unimodular U over Z with U^T A U diagonal mod p^t (p an odd prime).

    Pivots are chosen by minimal p-adic valuation; an off-diagonal minimum
    is promoted to the diagonal by e_j <- e_j +/- e_l, where one of the two
    signs must preserve the minimal valuation because their difference is
    the unit 4 times the off-diagonal entry.
    """
    if p == 2 or not isprime(p):
        raise InputError("diagonalize_odd needs an odd prime")
    if t < 1:
        raise InputError("precision t must be >= 1")
    n = form.n
    M = [list(row) for row in form.gram]
    U = [list(row) for row in identity(n)]
    q = p**t
    for i in range(n):
        best = None  # (valuation, j, l)
        for j in range(i, n):
            for l in range(j, n):
                v = _val(M[j][l], p, t)
                if best is None or v < best[0]:
                    best = (v, j, l)
        if best is None or best[0] >= t:
            break  # trailing block vanishes mod p^t: already diagonal there
        v, j, l = best
        if j != l and _val(M[j][j], p, t) > v and _val(M[l][l], p, t) > v:
            plus = M[j][j] + 2 * M[j][l] + M[l][l]
            _addcol(M, U, j, l, 1 if _val(plus, p, t) == v else -1)
        elif j != l:
            j = j if _val(M[j][j], p, t) == v else l
        _swap(M, U, i, j)
        piv = M[i][i]
        pv = _val(piv, p, t)
        unit = piv // p**pv
        inv = pow(unit % q, -1, q)
        for j in range(i + 1, n):
            if M[i][j] == 0:
                continue
            m = ((M[i][j] // p**pv) * inv) % q
            _addcol(M, U, j, i, -m)
            assert M[i][j] % q == 0
    return DiagonalizationOdd(
        prime=p,
        precision=t,
        coefficients=tuple(M[i][i] for i in range(n)),
        transform=tuple(tuple(row) for row in U),
        exact_gram=tuple(tuple(row) for row in M),
    )


# ---------------------------------------------------------------------------
# two-adic block decomposition


@dataclass(frozen=True)
class TwoAdicBlock:
    indices: tuple[int, ...]
    gram: tuple[tuple[int, ...], ...]  # exact 1x1 or 2x2 Gram entries
    kind: str  # "square" | "hyperbolic" | "hexagonal"
    scale: int  # value coefficient: a*X^2, b*XY, or c*(X^2+XY+Y^2)


@dataclass(frozen=True)
class TwoAdicBlocks:
    precision: int
    blocks: tuple[TwoAdicBlock, ...]
    transform: tuple[tuple[int, ...], ...]
    exact_gram: tuple[tuple[int, ...], ...]


def _hensel_root_unit_deriv(c2: int, c1: int, c0: int, W: int) -> int | None:
    """Root mod 2^W of c2 x^2 + c1 x + c0 with c1 odd, or None if no root mod 2."""
    x = None
    for x0 in (0, 1):
        if (c2 * x0 * x0 + c1 * x0 + c0) % 2 == 0:
            x = x0
            break
    if x is None:
        return None
    mod = 2
    while mod < (1 << W):
        mod = min(mod * mod, 1 << W)
        f = (c2 * x * x + c1 * x + c0) % mod
        d = (2 * c2 * x + c1) % mod
        x = (x - f * pow(d, -1, mod)) % mod
    return x


def _sqrt_2adic(d: int, W: int) -> int:
    """Square root mod 2^W of d = 1 mod 8."""
    assert d % 8 == 1
    x = 1
    for j in range(3, W):
        if (x * x - d) % (1 << (j + 1)) != 0:
            x += 1 << (j - 1)
    assert (x * x - d) % (1 << W) == 0
    return x


def two_adic_blocks(form: QuadraticForm, prec: int) -> TwoAdicBlocks:
    """Unimodular T over Z with T^T A T block-diagonal mod 2^prec.

    Each block is either a single entry (value a*X^2), a hyperbolic pair
    with zero diagonal mod 2^prec (value b*XY with b twice an odd multiple
    of a power of two), or a hexagonal pair g*[[2,1],[1,2]] mod 2^prec
    (value c*(X^2+XY+Y^2) with c = 2g).  Which 2x2 shape applies is decided
    by the determinant of the unit part mod 8: -1 means hyperbolic, 3 means
    hexagonal; no other class has odd off-diagonal and even diagonal.
    """
    if prec < 1:
        raise InputError("precision must be >= 1")
    n = form.n
    W = prec + 8
    TWO = 1 << W
    M = [list(row) for row in form.gram]
    U = [list(row) for row in identity(n)]
    blocks: list[TwoAdicBlock] = []
    i = 0
    while i < n:
        best = None
        for j in range(i, n):
            for l in range(j, n):
                v = _val(M[j][l], 2, W)
                if best is None or v < best[0]:
                    best = (v, j, l)
        v = best[0]
        if v >= W:
            # trailing block vanishes mod 2^W: emit its diagonal as squares
            for j in range(i, n):
                blocks.append(TwoAdicBlock((j,), ((M[j][j],),), "square", M[j][j]))
            break
        diag_j = None
        for j in range(i, n):
            if _val(M[j][j], 2, W) == v:
                diag_j = j
                break
        if diag_j is not None:
            _swap(M, U, i, diag_j)
            piv = M[i][i]
            unit = piv >> v
            inv = pow(unit % TWO, -1, TWO)
            for j in range(i + 1, n):
                if M[i][j] != 0:
                    m = ((M[i][j] >> v) * inv) % TWO
                    _addcol(M, U, j, i, -m)
                    assert _val(M[i][j], 2, W) >= W
            blocks.append(TwoAdicBlock((i,), ((M[i][i],),), "square", M[i][i]))
            i += 1
            continue
        # off-diagonal minimum with strictly deeper diagonals: 2x2 block
        _, j, l = best
        _swap(M, U, i, j)
        l = j if l == i else l
        _swap(M, U, i + 1, l)
        alpha, beta, delta = M[i][i], M[i][i + 1], M[i + 1][i + 1]
        assert _val(beta, 2, W) == v and _val(alpha, 2, W) > v and _val(delta, 2, W) > v
        a1, b1, d1 = alpha >> v, beta >> v, delta >> v
        detu = a1 * d1 - b1 * b1
        inv_det = pow(detu % TWO, -1, TWO)
        for j2 in range(i + 2, n):
            t1, t2 = M[i][j2] >> v, M[i + 1][j2] >> v
            m1 = ((d1 * t1 - b1 * t2) * inv_det) % TWO
            m2 = ((-b1 * t1 + a1 * t2) * inv_det) % TWO
            _addcol(M, U, j2, i, -m1)
            _addcol(M, U, j2, i + 1, -m2)
            assert _val(M[i][j2], 2, W) >= W and _val(M[i + 1][j2], 2, W) >= W
        if detu % 8 == 7:
            # hyperbolic: find a primitive null vector and pair it
            x = _hensel_root_unit_deriv(a1 // 2, b1, d1 // 2, W - 1)
            if x is not None:
                P = [[x, 1], [1, 0]]
            else:
                y = _hensel_root_unit_deriv(d1 // 2, b1, a1 // 2, W - 1)
                assert y is not None
                P = [[1, 0], [y, 1]]
            _block_op(M, U, i, P)
            pairing = M[i][i + 1]
            assert _val(pairing, 2, W) == v
            lam = (-(M[i + 1][i + 1] >> (v + 1)) * pow((pairing >> v) % TWO, -1, TWO)) % TWO
            _addcol(M, U, i + 1, i, lam)
            assert _val(M[i][i], 2, W) >= prec and _val(M[i + 1][i + 1], 2, W) >= prec
            g2 = ((M[i][i], M[i][i + 1]), (M[i + 1][i], M[i + 1][i + 1]))
            blocks.append(TwoAdicBlock((i, i + 1), g2, "hyperbolic", 2 * pairing))
        else:
            assert detu % 8 == 3
            gam = _sqrt_2adic((detu * pow(3, -1, 1 << (W - 3))) % (1 << (W - 3)), W - 3)
            # represent 2*gam by the unit block, with a coordinate equal to 1
            found = None
            for c2, c1, c0, orient in (
                (a1 // 2, b1, d1 // 2 - gam, 0),
                (d1 // 2, b1, a1 // 2 - gam, 1),
            ):
                x = _hensel_root_unit_deriv(c2, c1, c0, W - 4)
                if x is not None:
                    found = (x, orient)
                    break
            assert found is not None
            x, orient = found
            P = [[x, 1], [1, 0]] if orient == 0 else [[1, 0], [x, 1]]
            _block_op(M, U, i, P)
            pairing = M[i][i + 1] >> v
            assert pairing % 2 == 1
            lam = (((gam - pairing) // 2) * pow(gam, -1, 1 << (W - 5))) % (1 << (W - 5))
            _addcol(M, U, i + 1, i, lam)
            two_prec = 1 << prec
            assert ((M[i][i] >> (v + 1)) - gam) % two_prec == 0
            assert ((M[i][i + 1] >> v) - gam) % two_prec == 0
            assert ((M[i + 1][i + 1] >> (v + 1)) - gam) % two_prec == 0
            g2 = ((M[i][i], M[i][i + 1]), (M[i + 1][i], M[i + 1][i + 1]))
            scale = M[i][i]  # = 2*gam*2^v mod 2^prec
            blocks.append(TwoAdicBlock((i, i + 1), g2, "hexagonal", scale))
        i += 2
    d = det([list(row) for row in U])
    assert d in (1, -1)
    return TwoAdicBlocks(
        precision=prec,
        blocks=tuple(blocks),
        transform=tuple(tuple(row) for row in U),
        exact_gram=tuple(tuple(row) for row in M),
    )


# ---------------------------------------------------------------------------
# exact congruence counting


def _count_diag_odd(coeffs: list[int], k: int, p: int, t: int) -> int:
    """N(p^t) for an exactly diagonal form, odd p, via good/bad splitting.

    Good solutions (some unit coordinate among unit coefficients) are
    counted in closed form at level 1 and lift at the exact rate p^(n-1);
    bad solutions force p | k and reduce to level t-1 with the coefficient
    roles of units and non-units exchanged.
    """
    if t == 0:
        return 1
    n = len(coeffs)
    units = [a for a in coeffs if a % p != 0]
    r, s = len(units), n - len(units)
    good = 0
    if r:
        m = closed_form_Mr(units, k, p).count
        good = p ** ((n - 1) * (t - 1)) * p**s * m
    if k % p != 0:
        return good
    nxt = [a * p if a % p != 0 else a // p for a in coeffs]
    return good + p**s * _count_diag_odd(nxt, k // p, p, t - 1)


def _f2_kernel_basis(G: list[list[int]]) -> tuple[int, list[list[int]]]:
    """Rank of G over F_2 and a basis of {x in Z^n : Gx = 0 mod 2}.

    The basis columns are 0/1 lifts of the F_2 kernel plus 2*e_i for the
    pivot coordinates; its determinant is +/- 2^rank.
    """
    n = len(G)
    A = [[G[i][j] % 2 for j in range(n)] for i in range(n)]
    pivots = []
    row = 0
    for col in range(n):
        sel = None
        for rr in range(row, n):
            if A[rr][col]:
                sel = rr
                break
        if sel is None:
            continue
        A[row], A[sel] = A[sel], A[row]
        for rr in range(n):
            if rr != row and A[rr][col]:
                A[rr] = [(x + y) % 2 for x, y in zip(A[rr], A[row])]
        pivots.append(col)
        row += 1
    rank = len(pivots)
    free = [c for c in range(n) if c not in pivots]
    cols = []
    for f in free:
        vec = [0] * n
        vec[f] = 1
        for rr, c in enumerate(pivots):
            vec[c] = A[rr][f] % 2
        cols.append(vec)
    for c in pivots:
        vec = [0] * n
        vec[c] = 2
        cols.append(vec)
    basis = [[cols[j][i] for j in range(n)] for i in range(n)]  # columns
    return rank, basis


def _enumerate_mod(G: list[list[int]], k: int, q: int) -> int:
    """#{x mod q : x^T G x = k mod q} by vectorized enumeration."""
    n = len(G)
    Gm = np.array([[v % q for v in row] for row in G], dtype=np.int64)
    total = q**n
    count = 0
    chunk = 1 << 18
    for start in range(0, total, chunk):
        stop = min(start + chunk, total)
        idx = np.arange(start, stop, dtype=np.int64)
        digits = np.empty((stop - start, n), dtype=np.int64)
        rem = idx
        for i in range(n):
            digits[:, i] = rem % q
            rem = rem // q
        half = (digits @ Gm) % q
        vals = (digits * half).sum(axis=1) % q
        count += int(np.count_nonzero(vals == k % q))
    return count


def _good_base_mask(G: list[list[int]], k: int):
    """(digits, mask) over x mod 4 with Q(x) = k mod 8 and Gx odd.

    Q mod 8 is well defined on x mod 4 and the gradient parity on x mod 2,
    so this grid decides the nonsingular stratum at every level >= 3.
    """
    n = len(G)
    G8 = np.array([[v % 8 for v in row] for row in G], dtype=np.int64)
    G2 = G8 % 2
    total = 4**n
    idx = np.arange(total, dtype=np.int64)
    digits = np.empty((total, n), dtype=np.int64)
    rem = idx
    for i in range(n):
        digits[:, i] = rem % 4
        rem = rem // 4
    vals = (digits * (digits @ G8.T)).sum(axis=1) % 8
    odd_grad = ((digits @ G2.T) % 2).any(axis=1)
    return digits, (vals == k % 8) & odd_grad


def _good_count_base(G: list[list[int]], k: int) -> int:
    return int(np.count_nonzero(_good_base_mask(G, k)[1]))


def _strong_witness_two(G: list[list[int]], k: int) -> tuple[int, ...] | None:
    digits, mask = _good_base_mask(G, k)
    hits = np.nonzero(mask)[0]
    if hits.size == 0:
        return None
    return tuple(int(v) for v in digits[hits[0]])


def _count_two(G: list[list[int]], k: int, t: int, budget: Budget) -> int:
    if t == 0:
        return 1
    n = len(G)
    if t <= 2:
        budget.charge(4**n, "two-adic base enumeration")
        return _enumerate_mod(G, k, 1 << t)
    budget.charge(4**n, "two-adic good-count scan")
    a3 = _good_count_base(G, k)
    good = (1 << (n + (n - 1) * (t - 3))) * a3
    if k % 2 != 0:
        return good
    rank, basis = _f2_kernel_basis(G)
    M = basis
    GM = mat_mul(mat_mul(transpose(M), G), M)
    assert all(v % 2 == 0 for row in GM for v in row)
    G2 = [[v // 2 for v in row] for row in GM]
    return good + (1 << (n - rank)) * _count_two(G2, k // 2, t - 1, budget)


def _count_total(
    form: QuadraticForm,
    k: int,
    p: int,
    t: int,
    primitive: bool = False,
    budget: Budget | None = None,
) -> int:
    """Exact N(p^t) = #{x mod p^t : Q(x) = k mod p^t}, optionally primitive.

    The primitive count removes the solutions divisible by p: those exist
    only when p^2 | k (or at level 1 when p | k) and biject with solutions
    of Q = k/p^2 at level t-2 through x = p*x'.
    """
    if not isprime(p):
        raise InputError("p must be prime")
    if t < 0:
        raise InputError("level t must be >= 0")
    budget = budget or Budget()
    if primitive:
        if t < 1:
            raise InputError("primitive counting needs t >= 1")
        total = _count_total(form, k, p, t, budget=budget)
        if t == 1:
            return total - (1 if k % p == 0 else 0)
        if k % (p * p) == 0:
            sub = _count_total(form, k // (p * p), p, t - 2, budget=budget)
            return total - p**form.n * sub
        return total
    if t == 0:
        return 1
    if p == 2:
        return _count_two([list(row) for row in form.gram], k, t, budget)
    budget.charge(form.n**3 * t, "odd diagonalization")
    dg = diagonalize_odd(form, p, t)
    return _count_diag_odd(list(dg.coefficients), k, p, t)


def _nonsingular_count_two(G: list[list[int]], k: int, t: int, budget: Budget) -> int:
    """N*(2^t): solutions mod 2^t with Gx odd in some coordinate."""
    n = len(G)
    if t >= 3:
        budget.charge(4**n, "two-adic good-count scan")
        return (1 << (n + (n - 1) * (t - 3))) * _good_count_base(G, k)
    budget.charge(4**n, "two-adic base enumeration")
    q = 1 << t
    Gm = np.array([[v % q for v in row] for row in G], dtype=np.int64)
    G2 = np.array([[v % 2 for v in row] for row in G], dtype=np.int64)
    total = q**n
    idx = np.arange(total, dtype=np.int64)
    digits = np.empty((total, n), dtype=np.int64)
    rem = idx
    for i in range(n):
        digits[:, i] = rem % q
        rem = rem // q
    vals = (digits * ((digits @ Gm) % q)).sum(axis=1) % q
    odd_grad = ((digits @ G2.T) % 2).any(axis=1)
    return int(np.count_nonzero((vals == k % q) & odd_grad))


def _nonsingular_count(form: QuadraticForm, k: int, p: int, t: int, budget: Budget) -> int:
    """Exact N*(p^t): solutions mod p^t whose gradient A*x is a unit vector mod p.

    Every nonsingular solution mod p^(1+2tau) lifts at the exact rate
    p^(n-1) per level, so the count is a single closed formula in t.
    """
    if t < 1:
        raise InputError("nonsingular counting needs t >= 1")
    if p == 2:
        return _nonsingular_count_two([list(row) for row in form.gram], k, t, budget)
    dg = diagonalize_odd(form, p, 1)
    units = [a for a in dg.coefficients if a % p != 0]
    r, s = len(units), form.n - len(units)
    if r == 0:
        return 0
    # the closed form already excludes the zero assignment on the unit
    # block, which is the one solution there with vanishing gradient
    m = closed_form_Mr(units, k, p).count
    return p ** ((form.n - 1) * (t - 1)) * p**s * m


@dataclass(frozen=True)
class CongruenceCount:
    prime: int
    level: int  # counts taken mod prime**level
    count: int  # N(p^t), all residue classes
    nonsingular: int  # N*(p^t), classes whose gradient A*x is nonzero mod p
    primitive: bool  # when True, count excludes classes divisible by p
    strategy: str  # "stratified-recursion" | "direct"


def count_congruence(
    form: QuadraticForm,
    k: int,
    p: int,
    t: int,
    primitive: bool = False,
    budget: Budget | None = None,
) -> CongruenceCount:
    """Exact N(p^t) and N*(p^t) for Q(x) = k mod p^t.

    Splitting off the stratum with unit gradient (counted in closed form,
    lifting at the exact rate p^(n-1) per level) and recursing on the
    singular stratum keeps the cost polynomial in t; the p^(tn) classes are
    never enumerated.
    """
    budget = budget or Budget()
    total = _count_total(form, k, p, t, primitive=primitive, budget=budget)
    nonsing = _nonsingular_count(form, k, p, t, budget) if t >= 1 else 0
    # a nonsingular class has A*x nonzero mod p, so it is in particular primitive
    assert 0 <= nonsing <= total
    return CongruenceCount(p, t, total, nonsing, primitive, "stratified-recursion")


def count_congruence_direct(
    form: QuadraticForm, k: int, p: int, t: int, budget: Budget | None = None
) -> CongruenceCount:
    """Oracle counter walking all p^(tn) points (kept for cross-checking)."""
    budget = budget or Budget()
    q = p**t
    budget.charge(q**form.n, "direct congruence enumeration")
    n = form.n
    G = [list(row) for row in form.gram]
    if t == 0:
        return CongruenceCount(p, 0, 1, 0, False, "direct")
    Gm = np.array([[v % q for v in row] for row in G], dtype=np.int64)
    Gp = np.array([[v % p for v in row] for row in G], dtype=np.int64)
    total = 0
    nonsing = 0
    chunk = 1 << 18
    for start in range(0, q**n, chunk):
        stop = min(start + chunk, q**n)
        idx = np.arange(start, stop, dtype=np.int64)
        digits = np.empty((stop - start, n), dtype=np.int64)
        rem = idx
        for i in range(n):
            digits[:, i] = rem % q
            rem = rem // q
        hit = (digits * ((digits @ Gm) % q)).sum(axis=1) % q == k % q
        total += int(np.count_nonzero(hit))
        unit_grad = ((digits @ Gp.T) % p).any(axis=1)
        nonsing += int(np.count_nonzero(hit & unit_grad))
    return CongruenceCount(p, t, total, nonsing, False, "direct")


def find_solution_mod(
    form: QuadraticForm,
    k: int,
    p: int,
    t: int,
    primitive: bool = False,
    cap: int = 1 << 22,
) -> tuple[int, ...] | None:
    """One solution of Q(x) = k mod p^t by bounded enumeration, else None.

    Returns None when the search space p^(tn) exceeds the cap, so a None is
    never evidence of insolubility.
    """
    q = p**t
    n = form.n
    if q**n > cap:
        return None
    Gm = np.array([[v % q for v in row] for row in form.gram], dtype=np.int64)
    fallback = None
    total = q**n
    chunk = 1 << 18
    for start in range(0, total, chunk):
        stop = min(start + chunk, total)
        idx = np.arange(start, stop, dtype=np.int64)
        digits = np.empty((stop - start, n), dtype=np.int64)
        rem = idx
        for i in range(n):
            digits[:, i] = rem % q
            rem = rem // q
        vals = (digits * ((digits @ Gm) % q)).sum(axis=1) % q
        for h in np.nonzero(vals == k % q)[0]:
            x = tuple(int(v) for v in digits[h])
            if not primitive:
                return x
            if any(v % p for v in x):
                return x
            if fallback is None:
                fallback = x
    return None if primitive else fallback


# ---------------------------------------------------------------------------
# local solubility verdicts


def certified_level(form: QuadraticForm, k: int, p: int) -> int:
    """Finite level whose count decides solubility over the p-adic integers.

    Any solution mod p^T with T = v_p(k) + 2 v_p(det) + 2 tau + 1 (tau = 1
    at p = 2, else 0) has gradient valuation small enough to Hensel-lift
    without end, because adj(A) A = det(A) I caps the gradient valuation of
    a solution in terms of v_p(det); for k = 0 the same holds for primitive
    solutions with the v_p(k) term dropped.
    """
    if not isprime(p):
        raise InputError("p must be prime")
    tau = 1 if p == 2 else 0
    delta = abs(form.determinant)
    if delta == 0:
        raise InputError("degenerate form")
    vd = _val(delta, p, delta.bit_length() + 2)
    vk = _val(abs(k), p, abs(k).bit_length() + 2) if k != 0 else 0
    return vk + 2 * vd + 2 * tau + 1


@dataclass(frozen=True)
class LocalVerdict:
    prime: int
    weak: bool  # Q = k soluble over the p-adic integers
    strong: bool  # solution mod p^(1+2tau) with A*x nonzero mod p
    witness: tuple[int, ...] | None  # vector mod p^(1+2tau); satisfies the
    # strong condition exactly whenever strong is True
    cutoff_used: int  # level of the decisive weak count
    count: int  # exact N(p^cutoff); primitive count when k = 0


def _strong_witness_odd(form: QuadraticForm, k: int, p: int) -> tuple[int, ...] | None:
    """A vector x mod p with Q(x) = k mod p and A*x nonzero mod p, or None.

    Searches the unit block of the mod-p diagonalization: a nonzero value
    there makes the corresponding gradient coordinate a unit.  Only one or
    two free coordinates are ever scanned, so the cost is O(p log p).
    """
    from sympy.ntheory.residue_ntheory import sqrt_mod

    dg = diagonalize_odd(form, p, 1)
    unit_pos = [i for i, a in enumerate(dg.coefficients) if a % p != 0]
    if not unit_pos:
        return None
    n = form.n
    coeff = {i: dg.coefficients[i] % p for i in unit_pos}

    def embed(assign: dict) -> tuple[int, ...]:
        y = [0] * n
        for i, v in assign.items():
            y[i] = v % p
        x = [sum(dg.transform[i][j] * y[j] for j in range(n)) % p for i in range(n)]
        return tuple(x)

    i0 = unit_pos[0]
    if len(unit_pos) == 1:
        if k % p == 0:
            return None  # the only value class is 0, reached with zero gradient
        root = sqrt_mod(k * pow(coeff[i0], -1, p), p)
        return None if root is None else embed({i0: root})
    i1 = unit_pos[1]
    inv0 = pow(coeff[i0], -1, p)
    # second pass pins a third unit coordinate to 1, which keeps the gradient
    # nonzero even when the first two coordinates vanish
    passes = [(None, 0)]
    if len(unit_pos) >= 3:
        passes.append((unit_pos[2], coeff[unit_pos[2]]))
    for extra, shift in passes:
        for y1 in range(p):
            rhs = ((k - shift - coeff[i1] * y1 * y1) * inv0) % p
            y0 = sqrt_mod(rhs, p)
            if y0 is None:
                continue
            if y1 == 0 and y0 % p == 0 and extra is None:
                continue  # zero vector: gradient vanishes on the unit block
            assign = {i0: y0, i1: y1}
            if extra is not None:
                assign[extra] = 1
            return embed(assign)
    return None


def decide_strong_lsc(
    form: QuadraticForm, k: int, p: int, budget: Budget | None = None
) -> LocalVerdict:
    """Nonsingular solubility mod p^(1+2tau): mod p for odd p, mod 8 at p = 2.

    A positive verdict carries a witness whose gradient A*x is nonzero mod
    p; such a solution lifts indefinitely, so the small level already
    settles the weak question too.  Only a negative verdict falls back to
    the certified-level count.
    """
    budget = budget or Budget()
    if not isprime(p):
        raise InputError("p must be prime")
    level = 3 if p == 2 else 1
    nstar = _nonsingular_count(form, k, p, level, budget)
    if nstar == 0:
        return decide_weak_lsc(form, k, p, budget)
    if p == 2:
        witness = _strong_witness_two([list(row) for row in form.gram], k)
    else:
        witness = _strong_witness_odd(form, k, p)
    assert witness is not None
    count = _count_total(form, k, p, level, primitive=(k == 0), budget=budget)
    return LocalVerdict(p, True, True, witness, level, count)


def decide_weak_lsc(
    form: QuadraticForm, k: int, p: int, budget: Budget | None = None
) -> LocalVerdict:
    """Certify or refute solubility of Q = k over the p-adic integers.

    The verdict is a single exact count at the certified level: beyond it
    every class lifts at the full rate, so a zero count is a disproof.  For
    k = 0 the count is over primitive classes (the zero vector is not a
    solution of interest and its multiples would always make N positive).
    The strong field is filled in from the nonsingular count at level
    1 + 2 tau, which costs little extra.
    """
    budget = budget or Budget()
    T = certified_level(form, k, p)
    primitive = k == 0
    N = _count_total(form, k, p, T, primitive=primitive, budget=budget)
    level = 3 if p == 2 else 1
    nstar = _nonsingular_count(form, k, p, level, budget)
    witness = None
    if nstar > 0:
        if p == 2:
            witness = _strong_witness_two([list(row) for row in form.gram], k)
        else:
            witness = _strong_witness_odd(form, k, p)
        assert witness is not None
    elif N > 0:
        witness = find_solution_mod(form, k, p, level, primitive=primitive)
    return LocalVerdict(p, N > 0, nstar > 0, witness, T, N)


@dataclass(frozen=True)
class LocalSolubilityReport:
    soluble: bool  # weak LSC holds at every prime
    verdicts: dict  # prime -> LocalVerdict, over all p dividing 2*det*k
    automatic_reason: str  # why the remaining primes need no computation


def decide_weak_lsc_all(
    form: QuadraticForm, k: int, budget: Budget | None = None
) -> LocalSolubilityReport:
    """Weak local solubility at every prime at once.

    Only primes dividing 2*det*k need an exact count: at any other p the
    form reduces mod p to a unit diagonal form in n >= 3 variables with
    p not dividing k, whose nonzero solution count mod p is positive by
    the closed formula and lifts freely.
    """
    if form.n < 3:
        raise InputError("the every-prime certificate needs n >= 3")
    delta = abs(form.determinant)
    if delta == 0:
        raise InputError("degenerate form")
    primes = set([2] + list(primefactors(delta)))
    if k != 0:
        primes.update(primefactors(abs(k)))
    verdicts = {}
    ok = True
    for p in sorted(primes):
        res = decide_weak_lsc(form, k, p, budget)
        verdicts[p] = res
        ok = ok and res.weak
    reason = (
        "at p not dividing 2*det*k the reduction is a unit diagonal form in"
        f" n = {form.n} >= 3 variables; its nonsingular solution count mod p"
        " is positive in closed form for every k, and nonsingular solutions"
        " lift indefinitely"
    )
    return LocalSolubilityReport(ok, verdicts, reason)
