"""Complete exponential sums attached to a quadratic form.

The central object is

    S_q(c) = sum_{a mod q, gcd(a,q)=1} sum_{b in (Z/q)^n}
                 e_q( a*(Q(b) - k) + b.c ),

together with the classical one-variable building blocks (quadratic Gauss
sums, Kloosterman and Salie sums) and the exact count of solutions of
a_1 z_1^2 + ... + a_r z_r^2 = k over F_p with z != 0.

Two independent evaluation routes are kept deliberately separate:

* ``eval_Sq`` splits q into prime-power parts and twists the linear
  argument by modular inverses of the complementary factors, evaluating
  each part through a diagonal or block decomposition (cost ~ phi(q)*n*q);
* ``eval_Sq_direct`` never splits the modulus: it either exploits a Gram
  matrix that is already diagonal mod q, or enumerates all q^n points.

Float results carry a tracked absolute error bound; everything upstream of
the final complex summation is exact integer arithmetic.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from sympy import factorint, isprime, mobius, primefactors

from .core import QuadraticForm
from .errors import Budget, InputError
from .linalg import mat_vec, transpose

EPS = 2.3e-16


# ---------------------------------------------------------------------------
# exact character/charge helpers


def legendre(a: int, p: int) -> int:
    """Legendre symbol (a/p) for an odd prime p, with (0/p) = 0."""
    a %= p
    if a == 0:
        return 0
    r = pow(a, (p - 1) // 2, p)
    return 1 if r == 1 else -1


def omega_squared(p: int) -> int:
    """Exact square of the normalized Gauss sum: (-1)^((p-1)/2) * p."""
    return p if p % 4 == 1 else -p


def gauss_sum(a: int, p: int) -> complex:
    """sum_z e_p(a z^2) = (a/p) * omega_p with omega_p = i^((p-1)^2/4) sqrt(p)."""
    if p == 2 or not isprime(p):
        raise InputError("gauss_sum needs an odd prime")
    chi = legendre(a, p)
    if chi == 0:
        return complex(p)
    omega = (1j ** (((p - 1) // 2) ** 2)) * math.sqrt(p)
    return chi * omega


@dataclass(frozen=True)
class ClosedFormCount:
    """Exact count of z in (F_p)^r with sum a_i z_i^2 = k and z != 0."""

    count: int
    r: int
    kappa_p: int  # 1 iff p | k
    parity: str  # "even" | "odd"


def closed_form_Mr(coeffs, k: int, p: int) -> ClosedFormCount:
    """Count solutions of a diagonal unit form over F_p, excluding z = 0.

    All coefficients must be units mod p, p an odd prime.  r = 0 is allowed
    and gives count 0 (an empty vector cannot be nonzero).
    """
    if p == 2 or not isprime(p):
        raise InputError("closed_form_Mr needs an odd prime")
    coeffs = [int(a) % p for a in coeffs]
    if any(a == 0 for a in coeffs):
        raise InputError("closed_form_Mr expects unit coefficients mod p")
    r = len(coeffs)
    kappa = 1 if k % p == 0 else 0
    if r == 0:
        return ClosedFormCount(0, 0, kappa, "even")
    prod = 1
    for a in coeffs:
        prod = (prod * a) % p
    chi_minus1 = 1 if p % 4 == 1 else -1
    if r % 2 == 0:
        main = p ** (r - 1) - kappa
        tail = legendre(prod, p) * (chi_minus1 ** (r // 2)) * p ** (r // 2 - 1)
        count = main + tail * (kappa * p - 1)
        parity = "even"
    else:
        main = p ** (r - 1) - kappa
        tail = legendre((-k * prod) % p, p) * (chi_minus1 ** ((r + 1) // 2))
        count = main + tail * p ** ((r + 1) // 2 - 1)
        parity = "odd"
    assert count >= 0
    return ClosedFormCount(count, r, kappa, parity)


def kloosterman_salie(a: int, b: int, p: int, parity: str) -> tuple[complex, float]:
    """Twisted complete sum over F_p^* and its certified modulus bound.

    parity "even" gives the plain Kloosterman sum sum e_p(ax + b/x); parity
    "odd" inserts the quadratic character.  The returned bound
    2*sqrt(p)*gcd(a,b,p)^(1/2) covers both flavours.
    """
    if p == 2 or not isprime(p):
        raise InputError("kloosterman_salie needs an odd prime")
    if parity not in ("even", "odd"):
        raise InputError("parity must be 'even' or 'odd'")
    total = 0j
    for x in range(1, p):
        xinv = pow(x, p - 2, p)
        phase = (a * x + b * xinv) % p
        term = cmath.exp(2j * cmath.pi * phase / p)
        if parity == "odd":
            term *= legendre(x, p)
        total += term
    g = math.gcd(a % p, math.gcd(b % p, p))
    if g == 0:
        g = p
    bound = 2.0 * math.sqrt(p) * math.sqrt(g)
    return total, bound


def ramanujan_sum(q: int, m: int) -> int:
    """sum over units a mod q of e_q(a m), exactly (Moebius-divisor form)."""
    g = math.gcd(m % q, q) if q > 1 else 1
    if q == 1:
        return 1
    total = 0
    for d in range(1, g + 1):
        if g % d == 0 and q % d == 0:
            total += d * int(mobius(q // d))
    return total


# ---------------------------------------------------------------------------
# S_q evaluation


@dataclass(frozen=True)
class ExpSumValue:
    value: complex
    abs_err_bound: float
    method: str
    q: int


@lru_cache(maxsize=256)
def _phase_table(q: int) -> np.ndarray:
    r = np.arange(q)
    return np.exp(2j * np.pi * r / q)


def _sum_separable(diag, k: int, q: int, c, budget: Budget) -> tuple[complex, float]:
    """S_q for a form that is diagonal mod q (exact phases, float only at the end)."""
    n = len(diag)
    budget.charge(q * n * max(1, q // 2), "separable exponential sum")
    tab = _phase_table(q)
    x = np.arange(q, dtype=np.int64)
    total = 0j
    terms = 0.0
    for a in range(1, q + 1):
        if math.gcd(a, q) != 1:
            continue
        prod = complex(tab[(-a * k) % q])
        size = 1.0
        for i in range(n):
            phases = (a * diag[i] * x * x + c[i] * x) % q
            g = complex(np.sum(tab[phases]))
            prod *= g
            size *= max(abs(g), 1.0)
        total += prod
        terms += size
    err = 6.0 * (n + 2) * EPS * (terms + abs(total))
    return total, err


def _sum_blocks(blocks, k: int, q: int, c, budget: Budget) -> tuple[complex, float]:
    """S_q for a 1x1/2x2 block Gram structure (used at powers of two).

    blocks is a list of (indices, gram_block); c is already expressed in the
    block coordinates.
    """
    tab = _phase_table(q)
    per_block_cost = sum(q if len(ix) == 1 else q * q for ix, _ in blocks)
    budget.charge((q // 2) * per_block_cost, "block exponential sum")
    # exact block entries can be astronomically large; only their residues
    # enter the phases, and reducing first keeps the numpy arithmetic in range
    blocks = [(ix, [[v % q for v in row] for row in g]) for ix, g in blocks]
    x = np.arange(q, dtype=np.int64)
    total = 0j
    terms = 0.0
    n = sum(len(ix) for ix, _ in blocks)
    for a in range(1, q + 1, 2 if q % 2 == 0 else 1):
        if math.gcd(a, q) != 1:
            continue
        prod = complex(tab[(-a * k) % q])
        size = 1.0
        for indices, g in blocks:
            if len(indices) == 1:
                ci = c[indices[0]] % q
                phases = (a * g[0][0] * x * x + ci * x) % q
                s = complex(np.sum(tab[phases]))
            else:
                ci, cj = c[indices[0]] % q, c[indices[1]] % q
                xx = x[:, None]
                yy = x[None, :]
                phases = (
                    a * (g[0][0] * xx * xx + 2 * g[0][1] * xx * yy + g[1][1] * yy * yy)
                    + ci * xx
                    + cj * yy
                ) % q
                s = complex(np.sum(tab[phases]))
            prod *= s
            size *= max(abs(s), 1.0)
        total += prod
        terms += size
    err = 6.0 * (n + 4) * EPS * (terms + abs(total))
    return total, err


def _prime_power_sq(
    form: QuadraticForm, k: int, p: int, t: int, c, budget: Budget
) -> tuple[complex, float, str]:
    from .localsolve import diagonalize_odd, two_adic_blocks

    q = p**t
    if p != 2:
        dg = diagonalize_odd(form, p, t)
        cprime = [v % q for v in mat_vec(transpose(dg.transform), c)]
        val, err = _sum_separable([a % q for a in dg.coefficients], k, q, cprime, budget)
        return val, err, "diagonalized"
    blocks = two_adic_blocks(form, t + 2)
    cprime = [v % q for v in mat_vec(transpose(blocks.transform), c)]
    blocklist = [(b.indices, b.gram) for b in blocks.blocks]
    val, err = _sum_blocks(blocklist, k, q, cprime, budget)
    return val, err, "block"


def eval_Sq(form: QuadraticForm, k: int, q: int, c=None, budget: Budget | None = None) -> ExpSumValue:
    """Evaluate S_q(c) by splitting q into coprime prime-power parts.

    Each part q_j = p^e receives the twisted linear argument
    (q/q_j)^(-1) mod q_j * c; the part itself is evaluated through an exact
    diagonal (odd p) or block (p = 2) decomposition of the Gram matrix.
    """
    if q < 1:
        raise InputError("modulus q must be >= 1")
    if c is None:
        c = (0,) * form.n
    if len(c) != form.n:
        raise InputError("twist vector c has wrong length")
    budget = budget or Budget()
    if q == 1:
        return ExpSumValue(complex(1.0), 0.0, "trivial", 1)
    parts = []
    methods = []
    for p, e in sorted(factorint(q).items()):
        qj = p**e
        cofactor = q // qj
        twist = pow(cofactor, -1, qj)
        cj = tuple((twist * v) % qj for v in c)
        val, err, meth = _prime_power_sq(form, k, p, e, cj, budget)
        methods.append(f"{meth}@{p}^{e}")
        parts.append((val, err))
    total = complex(1.0)
    for val, _ in parts:
        total *= val
    abs_err = 0.0
    for i, (_, err_i) in enumerate(parts):
        contrib = err_i
        for j, (val_j, err_j) in enumerate(parts):
            if j != i:
                contrib *= abs(val_j) + err_j
        abs_err += contrib
    abs_err += 10 * EPS * abs(total)
    return ExpSumValue(total, abs_err, "multiplicative[" + ",".join(methods) + "]", q)


def eval_Sq_direct(
    form: QuadraticForm, k: int, q: int, c=None, budget: Budget | None = None
) -> ExpSumValue:
    """Evaluate S_q(c) without any splitting of the modulus.

    If the Gram matrix is diagonal mod q the b-sum factors per coordinate;
    otherwise all q^n points are enumerated (bounded by the node budget) and
    the unit sum over a is contracted exactly into Ramanujan sums.
    """
    if q < 1:
        raise InputError("modulus q must be >= 1")
    if c is None:
        c = (0,) * form.n
    if len(c) != form.n:
        raise InputError("twist vector c has wrong length")
    budget = budget or Budget()
    if q == 1:
        return ExpSumValue(complex(1.0), 0.0, "trivial", 1)
    n = form.n
    diagonal_mod_q = all(
        form.gram[i][j] % q == 0 for i in range(n) for j in range(n) if i != j
    )
    if diagonal_mod_q:
        diag = [form.gram[i][i] % q for i in range(n)]
        val, err = _sum_separable(diag, k, q, [v % q for v in c], budget)
        return ExpSumValue(val, err, "separable", q)

    budget.charge(q**n, "direct exponential sum enumeration")
    hist = np.zeros(q * q, dtype=np.int64)
    gram = np.array(form.gram, dtype=np.int64)
    cvec = np.array([v % q for v in c], dtype=np.int64)
    chunk = 1 << 18
    total_pts = q**n
    for start in range(0, total_pts, chunk):
        stop = min(start + chunk, total_pts)
        idx = np.arange(start, stop, dtype=np.int64)
        digits = np.empty((stop - start, n), dtype=np.int64)
        rem = idx
        for i in range(n):
            digits[:, i] = rem % q
            rem = rem // q
        qv = np.einsum("bi,ij,bj->b", digits % q, gram, digits % q) % q
        lv = (digits @ cvec) % q
        np.add.at(hist, qv * q + lv, 1)
    hist = hist.reshape(q, q)
    cq = np.array([ramanujan_sum(q, (u - k) % q) for u in range(q)], dtype=np.int64)
    w = hist.T @ cq  # w[v] = sum_u hist[u,v] * c_q(u-k), exact in int64
    tab = _phase_table(q)
    val = complex(np.dot(tab, w.astype(np.complex128)))
    err = 8.0 * EPS * float(np.abs(w).sum() + 1.0)
    return ExpSumValue(val, err, "enumerate", q)


# ---------------------------------------------------------------------------
# envelopes


def distinct_prime_count(q: int) -> int:
    return len(primefactors(q)) if q > 1 else 0


def sq_envelope(form: QuadraticForm, q: int) -> float:
    """2^(omega(q)+n+1) * q^(n/2+1) * gcd(q^n, det)^(1/2), valid for every q."""
    n = form.n
    g = math.gcd(q**n, abs(form.determinant))
    return 2.0 ** (distinct_prime_count(q) + n + 1) * q ** (n / 2 + 1) * math.sqrt(g)


def sq_envelope_squarefree(form: QuadraticForm, k: int, q: int) -> float:
    """Sharper envelope for square-free q.

    2^(omega(q)+n+1) * q^((n+1)/2) * gcd(q^n,det)^(1/2) * gcd(q,k,d)^(1/2)
    where d = 0 for even n (so the last gcd is gcd(q,k)) and d = det for odd n.
    """
    n = form.n
    delta = abs(form.determinant)
    d = 0 if n % 2 == 0 else delta
    g1 = math.gcd(q**n, delta)
    g2 = math.gcd(q, math.gcd(k, d)) if (k, d) != (0, 0) else q
    return (
        2.0 ** (distinct_prime_count(q) + n + 1)
        * q ** ((n + 1) / 2)
        * math.sqrt(g1)
        * math.sqrt(g2)
    )


def gamma_n(n: int, k: int) -> int:
    """Extra averaging loss: 1 iff n is even and k = 0."""
    return 1 if (n % 2 == 0 and k == 0) else 0


@dataclass(frozen=True)
class AverageReport:
    X: int
    total: float
    envelope_exponent: float
    ratio: float
    per_q: tuple[float, ...]


def average_Sq(
    form: QuadraticForm, k: int, c=None, X: int = 64, budget: Budget | None = None
) -> AverageReport:
    """sum_{q <= X} |S_q(c)| against the X^((n+3+gamma)/2) envelope (informational)."""
    if X < 1:
        raise InputError("X must be >= 1")
    budget = budget or Budget()
    vals = []
    for q in range(1, X + 1):
        vals.append(abs(eval_Sq(form, k, q, c, budget).value))
    expo = (form.n + 3 + gamma_n(form.n, k)) / 2
    total = float(sum(vals))
    return AverageReport(X, total, expo, total / X**expo, tuple(vals))
