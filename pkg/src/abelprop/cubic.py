"""Roots of the cubic ``P(x1) = D x1^3 + E x1^2 + F x1 + G``.

The cubic is shifted to the depressed form ``y^3 + H y + I`` with
``y = x1 + E/(3D)``.  One root comes from Cardano's radicals (valid when
``delta1 = I^2 + 4H^3/27 >= 0``), the other two from the quadratic cofactor
``y^2 + y1*y + (y1^2 + H)``.  When ``delta1 < 0`` Cardano's radicals are
complex; :func:`trig_roots` is an opt-in cosine parametrisation for that case.

The shifts ``theta_k = E/(3D) - y_k`` give ``P = D (x+theta_1)(x+theta_2)(x+theta_3)``.
"""
import math
import warnings
from dataclasses import dataclass
from typing import Tuple

from .exceptions import (ComplexPair, DegenerateCubic, LooseRootWarning,
                         NegativeDiscriminant, RefinementFailed, ZeroShift)
from .reduction import CubicData

STRICT_TOL = 1e-10
LOOSE_TOL = 1e-6
NEWTON_STEPS = 5


@dataclass(frozen=True)
class DepressedCubic:
    H: float
    I: float
    shift: float = 0.0  # E/(3D)

    @property
    def delta1(self):
        return self.I * self.I + 4 * self.H ** 3 / 27

    @property
    def scale(self):
        return 1 + abs(float(self.H)) + abs(float(self.I))

    def __call__(self, y):
        return (y * y + self.H) * y + self.I

    def derivative(self, y):
        return 3 * y * y + self.H


@dataclass(frozen=True)
class CubicRoots:
    y1: float
    y2: float
    y3: float
    delta2: float
    theta1: float
    theta2: float
    theta3: float
    method: str = "cardano"

    @property
    def roots(self):
        return (self.y1, self.y2, self.y3)

    @property
    def thetas(self):
        return (self.theta1, self.theta2, self.theta3)


def cbrt(x):
    """Real cube root with ``cbrt(-x) == -cbrt(x)``."""
    x = float(x)
    return math.copysign(abs(x) ** (1.0 / 3.0), x)


def depress(cd: CubicData) -> DepressedCubic:
    D, E, F, G = cd.D, cd.E, cd.F, cd.G
    if D == 0:
        raise DegenerateCubic("leading coefficient D is zero", stage="cubic")
    H = (3 * D * F - E * E) / (3 * D * D)
    I = (2 * E ** 3 - 9 * D * E * F + 27 * D * D * G) / (27 * D ** 3)
    return DepressedCubic(H=H, I=I, shift=E / (3 * D))


def cardano_root(dc: DepressedCubic) -> float:
    delta1 = dc.delta1
    if delta1 < 0:
        raise NegativeDiscriminant("Cardano radicals need delta1 >= 0", delta1=float(delta1),
                                   stage="cubic")
    sq = math.sqrt(float(delta1))
    I, H = float(dc.I), float(dc.H)
    # take the radical without cancellation; the other one follows from u*v = -H/3
    u = cbrt((-I - math.copysign(sq, I)) / 2)
    if u == 0:
        return 0.0
    return u - H / (3 * u)


def remaining_roots(y1, H) -> Tuple[float, float]:
    """Roots of ``y^2 + y1*y + (y1^2 + H)``."""
    y1, H = float(y1), float(H)
    delta2 = y1 * y1 - 4 * (H + y1 * y1)
    # the cubic at the would-be double root -y1/2 equals 3*y1*delta2/8; when that
    # is below tolerance the pair is a repeated root blurred by rounding
    if delta2 < 0 and 3 * abs(y1 * delta2) / 8 <= STRICT_TOL * (1 + abs(H) + abs(y1) ** 3):
        delta2 = 0.0
    if delta2 < 0:
        im = math.sqrt(-delta2) / 2
        raise ComplexPair("remaining roots form a complex-conjugate pair", delta2=delta2,
                          roots=(y1, complex(-y1 / 2, -im), complex(-y1 / 2, im)),
                          stage="cubic")
    sq = math.sqrt(delta2)
    return ((-y1 - sq) / 2, (-y1 + sq) / 2)


def trig_roots(dc: DepressedCubic) -> Tuple[float, float, float]:
    """Three real roots of a depressed cubic with ``delta1 <= 0``."""
    H, I = float(dc.H), float(dc.I)
    if H >= 0:
        if H == 0 and I == 0:
            return (0.0, 0.0, 0.0)
        raise NegativeDiscriminant("trigonometric method needs H < 0", delta1=float(dc.delta1),
                                   stage="cubic")
    m = 2 * math.sqrt(-H / 3)
    arg = 3 * I / (2 * H) * math.sqrt(-3 / H)
    phi = math.acos(max(-1.0, min(1.0, arg))) / 3
    return tuple(m * math.cos(phi - 2 * math.pi * k / 3) for k in range(3))


def _bisect(f, lo, hi, tol, maxiter=200):
    flo = f(lo)
    for _ in range(maxiter):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if abs(fm) <= tol or mid in (lo, hi):
            return mid
        if (fm < 0) == (flo < 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def refine_roots(dc: DepressedCubic, raw) -> Tuple[float, float, float]:
    """Newton-polish each root of the depressed cubic.

    Roots that stay above the strict residual tolerance after Newton (as at
    a multiple root) are bisected when a sign change brackets them, and
    otherwise accepted at the looser tolerance with a
    :class:`LooseRootWarning`.
    """
    Hf, If = float(dc.H), float(dc.I)

    def P(y):
        return (y * y + Hf) * y + If

    strict = STRICT_TOL * dc.scale
    loose = LOOSE_TOL * dc.scale
    out = []
    for y in raw:
        y = float(y)
        if not math.isfinite(y):
            raise RefinementFailed("non-finite raw root", stage="cubic", root=y)
        last_step = 0.0
        for _ in range(NEWTON_STEPS):
            r = P(y)
            if abs(r) <= strict:
                break
            dr = 3 * y * y + Hf
            if dr == 0:
                break
            last_step = r / dr
            y -= last_step
        r = P(y)
        if abs(r) > strict:
            w = max(abs(last_step), 1e-8 * (1 + abs(y)))
            lo, hi = y - w, y + w
            if (P(lo) < 0) != (P(hi) < 0):
                y = _bisect(P, lo, hi, strict)
                r = P(y)
        if abs(r) > strict:
            if abs(r) > loose:
                raise RefinementFailed("root residual above tolerance", stage="cubic",
                                       root=y, residual=r)
            warnings.warn(f"root {y!r} accepted at relaxed tolerance (residual {r:.3g})",
                          LooseRootWarning, stacklevel=2)
        out.append(y)
    return tuple(out)


def thetas(roots, cd: CubicData) -> Tuple[float, float, float]:
    shift = float(cd.E / (3 * cd.D))
    tol = 1e-12 * (1 + abs(shift))
    th = tuple(shift - float(y) for y in roots)
    for k, t in enumerate(th, start=1):
        if abs(t) <= tol:
            raise ZeroShift(f"theta{k} vanishes: x1 = 0 is a root of P", stage="cubic",
                            thetas=th)
    return th


def solve_cubic(cd: CubicData, trig_fallback=False) -> CubicRoots:
    """Full root pipeline: depress, Cardano (or cosine fallback), cofactor
    roots, Newton polish, ascending sort and shifts."""
    dc = depress(cd)
    delta1 = dc.delta1
    if delta1 >= 0:
        y1 = cardano_root(dc)
        y1 = refine_roots(dc, (y1,))[0]
        y2, y3 = remaining_roots(y1, dc.H)
        method = "cardano"
    elif trig_fallback:
        y1, y2, y3 = trig_roots(dc)
        method = "trigonometric"
    else:
        raise NegativeDiscriminant("three distinct real roots; Cardano radicals are complex "
                                   "(enable the trigonometric fallback)",
                                   delta1=float(delta1), stage="cubic")
    delta2 = y1 * y1 - 4 * (float(dc.H) + y1 * y1)
    ys = sorted(refine_roots(dc, (y1, y2, y3)))
    th = thetas(ys, cd)
    return CubicRoots(ys[0], ys[1], ys[2], delta2, th[0], th[1], th[2], method)


def expand_from_thetas(D, th):
    """Coefficients ``(D, E, F, G)`` of ``D * prod(x + theta_k)``."""
    t1, t2, t3 = th
    return (D, D * (t1 + t2 + t3), D * (t1 * t2 + t1 * t3 + t2 * t3), D * t1 * t2 * t3)
