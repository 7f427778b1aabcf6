"""Numerical check of the weighted main term at desk scale.

The smooth weight stack is built from one bump function; the weighted
solution count is an exact finite sum (evaluated by value convolution
for diagonal forms and by direct enumeration otherwise); the singular
integral is estimated by quasi Monte Carlo on an epsilon shell with
Richardson extrapolation.  The comparison divides the exact count by
the predicted main term and reports the relative error per scale.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from sympy import zeta

from .core import QuadraticForm
from .errors import Budget, InputError
from .singular import SingularSeriesEstimate, singular_series
from .zeros import _scan_box


def bump(t):
    """exp(-1/(1-t^2)) inside (-1, 1), zero outside; peak value 1/e at 0."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    inside = np.abs(t) < 1
    with np.errstate(divide="ignore", over="ignore"):
        out[inside] = np.exp(-1.0 / (1.0 - t[inside] ** 2))
    return out


@dataclass(frozen=True)
class WeightStack:
    form: QuadraticForm
    R: np.ndarray  # orthogonal, columns ordered by descending eigenvalue
    lambdas: np.ndarray  # eigenvalues, descending
    residual: float  # max |R^T A R - diag(lambdas)|

    def w0(self, t):
        return bump(t)

    def w1(self, y) -> float:
        """Bump product supported on (1/2, 3/2) x (-1, 1)^(n-1)."""
        y = np.asarray(y, dtype=float)
        return float(bump(2.0 * y[0] - 2.0) * np.prod(bump(y[1:])))

    def w_tilde(self, y) -> float:
        y = np.asarray(y, dtype=float)
        return self.w1(np.sqrt(np.abs(self.lambdas)) * y)

    def w_Q(self, x) -> float:
        return self.w_tilde(self.R.T @ np.asarray(x, dtype=float))

    def signature_signs(self) -> tuple[int, ...]:
        return tuple(1 if v > 0 else -1 for v in self.lambdas)


def build_weights(form: QuadraticForm) -> WeightStack:
    """Eigendecompose the Gram matrix and wire up the weight stack.

    Eigenvalues are sorted descending; each eigenvector's sign is fixed
    by making its first nonzero component positive, so the stack is
    deterministic for a given form.
    """
    if form.determinant == 0:
        raise InputError("the weight stack needs a nondegenerate form")
    A = np.array(form.gram, dtype=float)
    vals, vecs = np.linalg.eigh(A)
    order = np.argsort(-vals, kind="stable")
    vals = vals[order]
    vecs = vecs[:, order]
    for j in range(form.n):
        col = vecs[:, j]
        lead = next((v for v in col if abs(v) > 1e-12), 1.0)
        if lead < 0:
            vecs[:, j] = -col
    residual = float(np.max(np.abs(vecs.T @ A @ vecs - np.diag(vals))))
    if residual > 1e-8 * form.n * form.height:
        raise InputError(
            f"eigendecomposition residual {residual:.3e} is out of tolerance; "
            "the form is too badly conditioned for the numeric stack"
        )
    return WeightStack(form, vecs, vals, residual)


# ---------------------------------------------------------------------------
# exact weighted counts


def _fft_convolve(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    size = len(a) + len(b) - 1
    nfft = 1 << (size - 1).bit_length()
    out = np.fft.irfft(np.fft.rfft(a, nfft) * np.fft.rfft(b, nfft), nfft)[:size]
    return out


def _diagonal_theta(
    coeff: int, lam: float, shifted: bool, B: float
) -> tuple[int, np.ndarray]:
    """Weighted value vector for one coordinate of a diagonal form.

    Returns (offset, theta) with theta[v - offset] = sum of the weight at
    x/B over integer x with coeff*x^2 = v.  The support of the weight
    truncates the range exactly.
    """
    top = int(math.floor(1.5 * B / math.sqrt(abs(lam)))) + 1
    values = {}
    for x in range(-top, top + 1):
        y = math.sqrt(abs(lam)) * x / B
        w = float(bump(2.0 * y - 2.0)) if shifted else float(bump(y))
        if w != 0.0:
            values[coeff * x * x] = values.get(coeff * x * x, 0.0) + w
    if not values:
        return 0, np.zeros(1)
    lo, hi = min(values), max(values)
    theta = np.zeros(hi - lo + 1)
    for v, w in values.items():
        theta[v - lo] = w
    return lo, theta


def weighted_count(
    form: QuadraticForm,
    k: int,
    B: float,
    stack: WeightStack | None = None,
    budget: Budget | None = None,
) -> float:
    """Sum of w_Q(x/B) over the integer solutions of Q(x) = k.

    Diagonal forms go through per-coordinate value vectors convolved
    together (the weight factors exactly along the eigenbasis, which is
    the coordinate basis); other positive definite forms enumerate the
    solutions; other indefinite forms with k = 0 scan the support box.
    """
    budget = budget or Budget()
    stack = stack or build_weights(form)
    if B <= 0:
        raise InputError("the scale B must be positive")
    n = form.n
    diagonal = all(
        form.gram[i][j] == 0 for i in range(n) for j in range(n) if i != j
    )
    if diagonal:
        # column j of R is the unit vector of the coordinate it selects
        perm = [int(np.argmax(np.abs(stack.R[:, j]))) for j in range(n)]
        assert sorted(perm) == list(range(n))
        offset, theta = 0, np.array([1.0])
        for j in range(n):
            coord = perm[j]
            o, th = _diagonal_theta(
                form.gram[coord][coord], stack.lambdas[j], j == 0, B
            )
            budget.charge(len(theta) + len(th), "weighted count convolution")
            theta = _fft_convolve(theta, th)
            offset += o
        if not offset <= k <= offset + len(theta) - 1:
            return 0.0
        return float(max(theta[k - offset], 0.0))
    if form.classification == "positive-definite":
        from .lattice import enumerate_representations

        total = 0.0
        for vec in enumerate_representations(form, k, budget=budget):
            total += stack.w_Q(np.array(vec) / B)
        return total
    if k != 0:
        raise InputError(
            "indefinite non-diagonal forms are only counted at k = 0"
        )
    radius = 1.5 * B * math.sqrt(
        float(np.sum(1.0 / np.abs(stack.lambdas)))
    )
    total = 0.0

    def emit(vec):
        nonlocal total
        total += stack.w_Q(np.array(vec) / B)

    _scan_box(form, max(1, int(math.floor(radius))), budget, emit)
    return total


# ---------------------------------------------------------------------------
# singular integral by quasi Monte Carlo


@dataclass(frozen=True)
class SigmaInftyEstimate:
    value: float  # Richardson-extrapolated estimate
    ci: float  # half-width, from batch variance
    per_eps: dict  # eps -> (mean, ci half-width)
    flagged: bool  # True when the CI does not reach positive values
    samples: int
    seed: int


_KRONECKER_PRIMES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)

# Gauss-Legendre nodes and weights on (-1, 1), order 8
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(8)


def sigma_infty_mc(
    signs: tuple[int, ...],
    k_positive: bool,
    samples: int = 400_000,
    eps_sequence: tuple[float, ...] = (0.1, 0.05, 0.025),
    seed: int = 0,
) -> SigmaInftyEstimate:
    """Shell estimate of the singular integral for a unit diagonal form.

    The target is the density of |P(x)| <= eps weighted by the bump
    product, halved shells extrapolated to eps = 0, where P is the
    signature form minus 1 (k > 0) or the signature form itself (k = 0).
    The first coordinate carries the sign +1 and only its positive range
    meets the weight support, so for fixed remaining coordinates y the
    shell is an explicit x_1 interval; integrating the weight over that
    interval per sample leaves a smooth integrand on the y box.  Points
    come from a Kronecker lattice with a fresh random shift per batch,
    so the batch spread gives a usable confidence interval.
    """
    n = len(signs)
    if samples < 1000:
        raise InputError("too few samples for a batch confidence interval")
    if any(s not in (-1, 1) for s in signs):
        raise InputError("signs must be +1 or -1")
    if signs[0] != 1:
        raise InputError("the leading sign must be +1 (order is descending)")
    rng = np.random.Generator(np.random.Philox(seed))
    batches = 16
    per_batch = samples // batches
    alphas = np.sqrt(np.array(_KRONECKER_PRIMES[: n - 1], dtype=float))
    idx = np.arange(1, per_batch + 1, dtype=float)[:, None]
    sgn_rest = np.array(signs[1:], dtype=float)
    volume = 2.0 ** (n - 1)  # the y box (-1, 1)^(n-1)
    shift = -1.0 if k_positive else 0.0
    means: dict[float, tuple[float, float]] = {}
    batch_values: dict[float, np.ndarray] = {}
    shifts = [rng.random(n - 1) for _ in range(batches)]
    for eps in eps_sequence:
        vals = np.empty(batches)
        for b in range(batches):
            u = (idx * alphas + shifts[b]) % 1.0
            y = 2.0 * u - 1.0
            w = np.ones(per_batch)
            for i in range(n - 1):
                w = w * bump(y[:, i])
            # x_1^2 must land in [A - eps, A + eps]
            A = -shift - (y * y) @ sgn_rest
            lo = np.sqrt(np.maximum(A - eps, 0.0))
            hi = np.sqrt(np.maximum(A + eps, 0.0))
            lo = np.maximum(lo, 0.5)
            hi = np.minimum(hi, 1.5)
            length = np.maximum(hi - lo, 0.0)
            mid = (lo + hi) / 2.0
            inner = np.zeros(per_batch)
            for node, weight in zip(_GL_NODES, _GL_WEIGHTS):
                inner += weight * bump(2.0 * (mid + node * length / 2.0) - 2.0)
            inner *= length / 2.0
            vals[b] = volume * np.mean(w * inner) / (2.0 * eps)
        mean = float(np.mean(vals))
        ci = 1.96 * float(np.std(vals, ddof=1)) / math.sqrt(batches)
        means[eps] = (mean, ci)
        batch_values[eps] = vals
    eps_sorted = sorted(eps_sequence, reverse=True)
    e_big, e_small = eps_sorted[-2], eps_sorted[-1]
    assert abs(e_big - 2.0 * e_small) < 1e-12, "eps sequence must halve"
    rich = (4.0 * batch_values[e_small] - batch_values[e_big]) / 3.0
    value = float(np.mean(rich))
    ci = 1.96 * float(np.std(rich, ddof=1)) / math.sqrt(batches)
    flagged = value + ci <= 0.0
    return SigmaInftyEstimate(value, ci, means, flagged, samples, seed)


# ---------------------------------------------------------------------------
# main-term comparison


@dataclass(frozen=True)
class DeltaReport:
    B: float
    k: int
    weighted: float  # exact finite sum, up to float rounding
    sigma_infty: SigmaInftyEstimate
    series: SingularSeriesEstimate
    series_factor: float  # midpoint of the series interval, zeta-adjusted
    main_term: float
    rel_error: float | None  # None when the comparison is flagged off
    flagged: bool


@dataclass(frozen=True)
class DeltaSchedule:
    reports: tuple[DeltaReport, ...]
    empirical_decay: float | None  # slope of log relError against log B
    envelope_decay: float  # (n-1+gamma_n)/2 - (n-2), gamma_n = [n even, k=0]


def _one_report(
    form: QuadraticForm,
    k: int,
    B: float,
    stack: WeightStack,
    sigma: SigmaInftyEstimate,
    pcut: int,
    budget: Budget,
) -> DeltaReport:
    series = singular_series(form, k, pcut=pcut, budget=budget)
    count = weighted_count(form, k, B, stack=stack, budget=budget)
    # the tail factors are reciprocal, so the geometric midpoint of the
    # interval is the computed finite product, the natural point value
    point = math.sqrt(float(series.lower) * float(series.upper))
    if k == 0:
        # plain counts include imprimitive solutions: one zeta factor
        point *= float(zeta(form.n - 2))
    flagged = sigma.flagged or series.lower <= 0
    main = (
        sigma.value * point * B ** (form.n - 2)
        / math.sqrt(abs(form.determinant))
    )
    rel = None
    if not flagged and main > 0:
        rel = abs(count - main) / main
    return DeltaReport(
        B, k, count, sigma, series, point, main, rel, flagged or main <= 0
    )


def main_term_compare(
    form: QuadraticForm,
    ks: list[int] | None = None,
    bs: list[float] | None = None,
    pcut: int = 300,
    samples: int = 400_000,
    seed: int = 0,
    budget: Budget | None = None,
) -> DeltaSchedule:
    """Exact weighted counts against the predicted main term.

    Pass ks for the k > 0 regime (each scale is B = sqrt(k)) or bs for
    the k = 0 regime at a fixed set of scales; exactly one of the two.
    The empirical decay exponent of the relative error is fit by least
    squares and reported next to the error envelope exponent.
    """
    budget = budget or Budget()
    if (ks is None) == (bs is None):
        raise InputError("pass exactly one of ks (k > 0) or bs (k = 0)")
    stack = build_weights(form)
    sigma = sigma_infty_mc(
        stack.signature_signs(), ks is not None, samples=samples, seed=seed
    )
    reports = []
    if ks is not None:
        if any(k <= 0 for k in ks):
            raise InputError("the k schedule needs k > 0")
        for k in ks:
            reports.append(
                _one_report(form, k, math.sqrt(k), stack, sigma, pcut, budget)
            )
        gamma = 0
    else:
        if any(b <= 0 for b in bs):
            raise InputError("the B schedule needs B > 0")
        for B in bs:
            reports.append(
                _one_report(form, 0, float(B), stack, sigma, pcut, budget)
            )
        gamma = 1 if form.n % 2 == 0 else 0
    envelope = (form.n - 1 + gamma) / 2.0 - (form.n - 2)
    usable = [
        (r.B, r.rel_error)
        for r in reports
        if r.rel_error is not None and r.rel_error > 0
    ]
    decay = None
    if len(usable) >= 2:
        xs = np.log([b for b, _ in usable])
        ys = np.log([e for _, e in usable])
        decay = float(np.polyfit(xs, ys, 1)[0])
    return DeltaSchedule(tuple(reports), decay, envelope)
