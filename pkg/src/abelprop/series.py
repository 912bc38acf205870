"""Coefficient sequences of the inverse-time series ``t(x1)``.

Integrating ``dt/dx1 = v = -(A x1 + C)^-1 +/- P(x1)^-1/2`` term by term gives

    t = sum_{n>=1} sigma_n x1^n,
    sigma_n = lambda_{n-1} +/- mu_{n-1} / (n sqrt(D)),

where ``lambda`` comes from the logarithm and ``mu`` from the binomial
expansion of ``prod_k (x1 + theta_k)^-1/2``.  The additive constants of both
antiderivatives are dropped, so series time is zero where ``x1 = 0``.

All routines accept :class:`fractions.Fraction` inputs and then stay exact
as long as no irrational square root is needed.
"""
import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Sequence, Tuple

from .exceptions import ConvergenceWarning, DomainError

DEFAULT_ORDER = 24


def exact_sqrt(x):
    """Square root that stays a :class:`Fraction` for rational perfect squares."""
    if isinstance(x, (Fraction, int)) and x >= 0:
        x = Fraction(x)
        n, d = math.isqrt(x.numerator), math.isqrt(x.denominator)
        if n * n == x.numerator and d * d == x.denominator:
            return Fraction(n, d)
    return math.sqrt(x)


def gen_binomial(x, m: int):
    """Generalised binomial coefficient ``x (x-1) ... (x-m+1) / m!``."""
    if m < 0:
        raise DomainError("m must be non-negative", stage="series", m=m)
    out = Fraction(1) if isinstance(x, (Fraction, int)) else 1.0
    for i in range(m):
        out = out * (x - i) / (i + 1)
    return out


def convolve(a: Sequence, b: Sequence, n_max=None) -> list:
    """Cauchy product truncated at index ``n_max``."""
    if n_max is None:
        n_max = len(a) + len(b) - 2
    out = []
    for n in range(n_max + 1):
        terms = [a[p] * b[n - p] for p in range(max(0, n - len(b) + 1), min(n, len(a) - 1) + 1)]
        out.append(math.fsum(terms) if terms and isinstance(terms[0], float) else sum(terms))
    return out


def binomial_sequence(theta, n_max: int) -> list:
    """Coefficients of ``(1 + x/theta)^-1/2``: ``binom(-1/2, p) / theta^p``."""
    half = Fraction(-1, 2) if isinstance(theta, (Fraction, int)) else -0.5
    out, c = [], (Fraction(1) if isinstance(theta, (Fraction, int)) else 1.0)
    for p in range(n_max + 1):
        out.append(c)
        c = c * (half - p) / ((p + 1) * theta)
    return out


def mu_coeffs(theta1, theta2, theta3, n_max: int) -> list:
    """Taylor coefficients of ``prod_k (x + theta_k)^-1/2`` up to ``x^n_max``."""
    ths = (theta1, theta2, theta3)
    if any(not t > 0 for t in ths):
        raise DomainError("shifts theta_k must be positive", stage="series", thetas=ths)
    seqs = [binomial_sequence(t, n_max) for t in ths]
    prod = convolve(convolve(seqs[0], seqs[1], n_max), seqs[2], n_max)
    root = exact_sqrt(theta1 * theta2 * theta3)
    return [c / root for c in prod]


def lambda_coeffs(A, C, n_max: int) -> list:
    """Coefficients ``lambda_n`` with ``-log(1 + A x/C)/A = sum lambda_n x^(n+1)``."""
    if C == 0:
        raise DomainError("C must be nonzero", stage="series")
    exact = all(isinstance(v, (Fraction, int)) for v in (A, C))
    if exact:
        A, C = Fraction(A), Fraction(C)
        return [Fraction((-1) ** (n + 1), n + 1) * A ** n / C ** (n + 1) for n in range(n_max + 1)]
    A, C = float(A), float(C)
    ratio = A / C
    if abs(ratio) <= 1:
        return [(-1) ** (n + 1) * ratio ** n / ((n + 1) * C) for n in range(n_max + 1)]
    warnings.warn(f"|A/C| = {abs(ratio):.3g} > 1: log series converges only for "
                  f"|x1| < {abs(1 / ratio):.3g}", ConvergenceWarning, stacklevel=2)
    lr, lc = math.log(abs(ratio)), math.log(abs(C))
    sign_r, sign_c = math.copysign(1, ratio), math.copysign(1, C)
    out = []
    for n in range(n_max + 1):
        mag = n * lr - math.log(n + 1) - lc
        sign = (-1) ** (n + 1) * sign_r ** n * sign_c
        out.append(sign * math.exp(mag) if mag < 709 else sign * math.inf)
    return out


def sigma_coeffs(lam: Sequence, mu: Sequence, D, n_max: int) -> Tuple[list, list]:
    """``sigma_n^+`` and ``sigma_n^-`` for ``n = 1..n_max`` (index 0 holds sigma_1)."""
    if len(lam) < n_max or len(mu) < n_max:
        raise ValueError("lambda and mu need at least n_max entries")
    rd = exact_sqrt(D)
    plus, minus = [], []
    for n in range(1, n_max + 1):
        m = mu[n - 1] / (n * rd)
        plus.append(lam[n - 1] + m)
        minus.append(lam[n - 1] - m)
    return plus, minus


@dataclass(frozen=True)
class SeriesCoeffs:
    order: int
    lam: Tuple
    mu: Tuple
    sigma_plus: Tuple
    sigma_minus: Tuple
    A: float
    C: float
    D: float
    thetas: Tuple

    def sigma(self, branch) -> Tuple:
        return self.sigma_plus if _sign(branch) > 0 else self.sigma_minus

    @property
    def x_radius(self):
        """Joint convergence radius in ``x1`` of the log and binomial series."""
        r = min(abs(float(t)) for t in self.thetas)
        if self.A != 0:
            r = min(r, abs(float(self.C) / float(self.A)))
        return r


def _sign(branch):
    if branch in ("+", 1, +1.0):
        return 1
    if branch in ("-", -1, -1.0):
        return -1
    raise ValueError(f"branch must be '+' or '-', got {branch!r}")


def build_series(A, C, D, thetas, order: int = DEFAULT_ORDER) -> SeriesCoeffs:
    lam = lambda_coeffs(A, C, order - 1)
    mu = mu_coeffs(*thetas, order - 1)
    plus, minus = sigma_coeffs(lam, mu, D, order)
    return SeriesCoeffs(order, tuple(lam), tuple(mu), tuple(plus), tuple(minus),
                        A, C, D, tuple(thetas))


def eval_power_series(coeffs: Sequence, x, start: int = 0):
    """Horner evaluation of ``sum_i coeffs[i] x^(i+start)``."""
    acc = 0
    for c in reversed(coeffs):
        acc = acc * x + c
    return acc * x ** start if start else acc
