"""Shared generators and definition-level oracles.

The oracles here never call into the package beyond the data containers:
they recompute counts and sums straight from the definitions so that the
library routes are checked against genuinely independent arithmetic.
"""

import cmath
import itertools
import math
import random

from qforms.core import build_form


def eval_gram(gram, x):
    n = len(gram)
    return sum(gram[i][j] * x[i] * x[j] for i in range(n) for j in range(n))


def brute_congruence_count(gram, k, p, t, primitive=False):
    """N(p^t) by walking all p^(t*n) residue vectors."""
    n = len(gram)
    q = p**t
    total = 0
    for x in itertools.product(range(q), repeat=n):
        if primitive and all(v % p == 0 for v in x):
            continue
        if (eval_gram(gram, x) - k) % q == 0:
            total += 1
    return total


def brute_mr(coeffs, k, p):
    """Nonzero solutions of a_1 z_1^2 + ... + a_r z_r^2 = k over F_p."""
    total = 0
    for z in itertools.product(range(p), repeat=len(coeffs)):
        if not any(z):
            continue
        if (sum(a * v * v for a, v in zip(coeffs, z)) - k) % p == 0:
            total += 1
    return total


def mr_by_convolution(coeffs, k, p):
    """Same count through cyclic convolution of the per-coordinate value
    histograms; independent of both the walk above and the closed form."""
    hist = [1] + [0] * (p - 1)
    for a in coeffs:
        nxt = [0] * p
        for v in range(p):
            if hist[v] == 0:
                continue
            for z in range(p):
                nxt[(v + a * z * z) % p] += hist[v]
        hist = nxt
    return hist[k % p] - (1 if k % p == 0 else 0)


def sq_by_definition(gram, k, q, c=None):
    """The double sum over a coprime to q and all of (Z/q)^n, literally."""
    n = len(gram)
    if c is None:
        c = [0] * n
    total = 0j
    for a in range(1, q + 1):
        if math.gcd(a, q) != 1:
            continue
        for x in itertools.product(range(q), repeat=n):
            ph = (a * (eval_gram(gram, x) - k) + sum(ci * xi for ci, xi in zip(c, x))) % q
            total += cmath.exp(2j * math.pi * ph / q)
    return total


def random_gram(rnd: random.Random, n: int, lo=-9, hi=9):
    """Symmetric nondegenerate integer matrix."""
    while True:
        m = [[0] * n for _ in range(n)]
        for i in range(n):
            for j in range(i, n):
                m[i][j] = m[j][i] = rnd.randint(lo, hi)
        form = build_form(m)
        if form.determinant != 0:
            return form


def random_posdef(rnd: random.Random, n: int, spread=3):
    """B^T B + I for a random integer B: positive definite by construction."""
    b = [[rnd.randint(-spread, spread) for _ in range(n)] for _ in range(n)]
    gram = [
        [sum(b[a][i] * b[a][j] for a in range(n)) + (1 if i == j else 0) for j in range(n)]
        for i in range(n)
    ]
    return build_form(gram)


def random_unimodular(rnd: random.Random, n: int, steps=12):
    """Product of elementary shears and signed swaps."""
    u = [[1 if i == j else 0 for j in range(n)] for i in range(n)]
    for _ in range(steps):
        i, j = rnd.sample(range(n), 2)
        if rnd.random() < 0.5:
            c = rnd.choice([-2, -1, 1, 2])
            for r in range(n):
                u[r][j] += c * u[r][i]
        else:
            s = rnd.choice([-1, 1])
            for r in range(n):
                u[r][i], u[r][j] = s * u[r][j], u[r][i]
    return tuple(tuple(row) for row in u)


def random_diagonal_indefinite(rnd: random.Random, n: int, capmag=12):
    """Diagonal coefficients in [-capmag, capmag] \\ {0} with mixed signs."""
    while True:
        diag = [rnd.choice([-1, 1]) * rnd.randint(1, capmag) for _ in range(n)]
        if any(d > 0 for d in diag) and any(d < 0 for d in diag):
            return diag
