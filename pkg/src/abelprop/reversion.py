"""Series reversion.

Given ``t = sum_{n>=1} sigma_n x^n`` with ``sigma_1 != 0``, the inverse
``x = sum_{n>=1} rho_n t^n`` has

    rho_n = 1/(n sigma_1^n) * sum_s (-1)^S * n(n+1)...(n+S-1) / (s_1! s_2! ...)
            * prod_i (sigma_{i+1}/sigma_1)^{s_i},

the sum running over partitions ``s_1 + 2 s_2 + 3 s_3 + ... = n - 1`` with
``S = s_1 + s_2 + ...``.  :func:`revert_oracle` solves the same problem by
matching coefficients of the composed series and shares no code with
:func:`revert`.

Sequences are 0-indexed: ``sigma[0]`` is ``sigma_1``.
"""
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, List, Optional, Sequence, Tuple

from .exceptions import NonInvertibleSeries


def _parts_desc(m: int, largest: int) -> Iterator[List[int]]:
    if m == 0:
        yield []
        return
    for k in range(min(m, largest), 0, -1):
        for rest in _parts_desc(m - k, k):
            yield [k] + rest


def partitions(m: int) -> List[Tuple[int, ...]]:
    """Partitions of ``m`` as multiplicity tuples ``(s_1, ..., s_m)``.

    Ordered by largest part, descending; ``partitions(0) == [()]``.
    """
    if m < 0:
        raise ValueError("m must be non-negative")
    out = []
    for parts in _parts_desc(m, m):
        s = [0] * m
        for k in parts:
            s[k - 1] += 1
        out.append(tuple(s))
    return out


def partition_count(m: int) -> int:
    """p(m) via Euler's pentagonal-number recurrence."""
    p = [1] + [0] * m
    for n in range(1, m + 1):
        k, total = 1, 0
        while True:
            g1 = k * (3 * k - 1) // 2
            if g1 > n:
                break
            sign = 1 if k % 2 else -1
            total += sign * p[n - g1]
            g2 = k * (3 * k + 1) // 2
            if g2 <= n:
                total += sign * p[n - g2]
            k += 1
        p[n] = total
    return p[m]


def _is_exact(seq):
    return all(isinstance(v, (Fraction, int)) for v in seq)


def _sum(terms):
    if terms and not _is_exact(terms):
        return math.fsum(terms)
    return sum(terms, Fraction(0))


@dataclass(frozen=True)
class ReversionResult:
    rho: Tuple
    sigma: Tuple
    branch: Optional[str] = None


def _check(sigma, order):
    if order < 1:
        raise ValueError("order must be at least 1")
    if len(sigma) < order:
        raise ValueError(f"need {order} sigma coefficients, got {len(sigma)}")
    if sigma[0] == 0:
        raise NonInvertibleSeries("sigma_1 = 0: series has no local inverse", stage="reversion")


def revert(sigma: Sequence, order: int, branch=None, exact=False) -> ReversionResult:
    """Invert ``t(x)`` with the partition formula.

    The alternating partition sum cancels badly in floating point once
    ``|sigma_n / sigma_1|`` grows geometrically.  ``exact=True`` converts
    float input to :class:`Fraction` (losslessly) and rounds only the final
    ``rho_n``.
    """
    _check(sigma, order)
    if exact and not _is_exact(sigma[:order]):
        rr = revert([Fraction(float(s)) for s in sigma[:order]], order, branch)
        return ReversionResult(tuple(float(r) for r in rr.rho), tuple(sigma[:order]), branch)
    exact = _is_exact(sigma[:order])
    s1 = Fraction(sigma[0]) if exact else float(sigma[0])
    ratios = [(Fraction(s) if exact else float(s)) / s1 for s in sigma[1:order]]
    rho = []
    for n in range(1, order + 1):
        terms = []
        for s in partitions(n - 1):
            S = sum(s)
            # n(n+1)...(n+S-1) / prod s_i!  is an integer
            coef = math.prod(range(n, n + S)) // math.prod(math.factorial(k) for k in s)
            term = coef if S % 2 == 0 else -coef
            for i, si in enumerate(s):
                if si:
                    term = term * ratios[i] ** si
            terms.append(term)
        rho.append(_sum(terms) / (n * s1 ** n))
    return ReversionResult(tuple(rho), tuple(sigma[:order]), branch)


def _mul_trunc(a, b, order):
    """Product of two series indexed from t^0, truncated at t^order."""
    out = [0] * (order + 1)
    for i, ai in enumerate(a):
        if ai == 0:
            continue
        for j in range(0, order + 1 - i):
            if j < len(b):
                out[i + j] += ai * b[j]
    return out


def revert_oracle(sigma: Sequence, order: int) -> Tuple:
    """Invert ``t(x)`` by solving for one coefficient at a time."""
    _check(sigma, order)
    s1 = sigma[0]
    rho = []
    for n in range(1, order + 1):
        x = [0] + rho + [0]  # rho_n still unknown (zero)
        power = list(x)
        acc = 0
        for k in range(2, n + 1):
            power = _mul_trunc(power, x, n)
            acc += sigma[k - 1] * power[n]
        target = 1 if n == 1 else 0
        rho.append((target - acc) / s1)
    return tuple(rho)


def compose(sigma: Sequence, rho: Sequence, order: int) -> list:
    """Coefficients of ``sigma(rho(t))`` for ``t^0 .. t^order``."""
    x = [0] + list(rho[:order])
    out = [0] * (order + 1)
    power = [1]
    for k in range(1, order + 1):
        power = _mul_trunc(power, x, order)
        for i in range(order + 1):
            out[i] += sigma[k - 1] * power[i]
    return out


def compose_check(sigma: Sequence, rho: Sequence, order: int) -> list:
    """Coefficients of ``sigma(rho(t)) - t`` for ``t^1 .. t^order``."""
    c = compose(sigma, rho, order)
    c[1] -= 1
    return c[1:]
