"""Second-order (Lienard) and Abel forms of the virus equation.

Eliminating ``x2`` and ``x3`` leads to

    a*x1'' + b*x1' + c*x1**2 + d*x1 + e = 0,

i.e. ``x1'' + A*x1' + B(x1) = 0`` with ``A = b/a`` and the quadratic
``B(x1) = (c*x1**2 + d*x1 + e)/a``.  With ``v = 1/x1'`` as a function of
``x1`` this becomes the Abel equation ``dv/dx1 = A*v**2 + B(x1)*v**3``.

The elimination combines the ``x2`` and ``x3`` equations under the
assumption ``x1 + x2 + x3 = N`` for all time.  Along a trajectory where that
sum drifts, the Lienard residual equals ``(k2/a) * d/dt(x1 + x2 + x3)``;
:func:`lienard_drift_term` computes that term.
"""
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from .exceptions import InvalidConstant
from .model import ModelParams, rk4


@dataclass(frozen=True)
class LienardSystem:
    a: float
    b: float
    c: float
    d: float
    e: float

    @property
    def A(self):
        return self.b / self.a

    @property
    def B(self) -> Tuple[float, float, float]:
        """Coefficients ``(c/a, d/a, e/a)`` of the quadratic ``B(x1)``."""
        return (self.c / self.a, self.d / self.a, self.e / self.a)

    def B_at(self, x1):
        return (self.c * x1 * x1 + self.d * x1 + self.e) / self.a


@dataclass(frozen=True)
class AbelEquation:
    """``dv/dx1 = A v^2 + B(x1) v^3`` where ``v = 1/(dx1/dt)``."""

    A: float
    B: Tuple[float, float, float]

    @classmethod
    def from_lienard(cls, ls: LienardSystem):
        return cls(A=ls.A, B=ls.B)

    def B_at(self, x1):
        c, d, e = self.B
        return (c * x1 + d) * x1 + e


@dataclass(frozen=True)
class CubicData:
    """Coefficients of ``P(x1) = D x1^3 + E x1^2 + F x1 + G`` plus the
    integration constants it came from."""

    D: float
    E: float
    F: float
    G: float
    C: float = 1.0
    Cp: float = 0.0
    Cpp: float = 0.0

    def P(self, x):
        return ((self.D * x + self.E) * x + self.F) * x + self.G

    def dP(self, x):
        return (3 * self.D * x + 2 * self.E) * x + self.F

    @property
    def coeffs(self):
        return (self.D, self.E, self.F, self.G)


def lienard_coeffs(p: ModelParams) -> LienardSystem:
    d1, d2, d3, b1, b2, k1, k2, N = (p.d1, p.d2, p.d3, p.b1, p.b2, p.k1, p.k2, p.N)
    return LienardSystem(
        a=(k1 + k2) / b2,
        b=k2 + (k1 * (d1 + d2) + k2 * (d1 + d3)) / b2,
        c=-k1 * k2,
        d=-b1 * k1 + k2 * (d3 + k1 * N) + d1 * (d2 * k1 + d3 * k2) / b2,
        e=-d3 * k2 * N,
    )


def closed_system_rhs(p: ModelParams, x1, x2):
    """Planar system obtained by substituting ``x3 = N - x1 - x2``."""
    return (
        -p.d1 * x1 + p.b2 * x2,
        (p.b1 - p.k2 * p.N) * x1 + p.k2 * x1 * x1 - p.d2 * x2 + p.k2 * x1 * x2,
    )


def closed_derivatives(p: ModelParams, x1, x2):
    """``(x1', x1'')`` along the planar system by the chain rule."""
    dx1, dx2 = closed_system_rhs(p, x1, x2)
    return dx1, -p.d1 * dx1 + p.b2 * dx2


def lienard_residual(ls: LienardSystem, samples) -> np.ndarray:
    """``x1'' + A x1' + B(x1)`` for rows ``(t, x1, x1', x1'')``."""
    s = np.asarray(samples, dtype=float).reshape(-1, 4)
    x1, dx1, ddx1 = s[:, 1], s[:, 2], s[:, 3]
    a, c, d, e = (float(v) for v in (ls.a, ls.c, ls.d, ls.e))
    return ddx1 + (float(ls.b) / a) * dx1 + (c * x1 * x1 + d * x1 + e) / a


def lienard_terms_scale(ls: LienardSystem, samples) -> np.ndarray:
    """Largest individual term magnitude per sample, for relative residuals."""
    s = np.asarray(samples, dtype=float).reshape(-1, 4)
    x1, dx1, ddx1 = s[:, 1], s[:, 2], s[:, 3]
    a = float(ls.a)
    terms = np.abs(np.column_stack([
        ddx1, float(ls.b) / a * dx1,
        float(ls.c) / a * x1 * x1, float(ls.d) / a * x1,
        np.full_like(x1, float(ls.e) / a)]))
    return terms.max(axis=1)


def lienard_drift_term(p: ModelParams, ls: LienardSystem, x1, x2, x3=None):
    """``(k2/a) * d/dt(x1+x2+x3)`` evaluated with the full system's rates.

    With ``x3`` omitted the planar closure ``x3 = N - x1 - x2`` is used.
    """
    if x3 is None:
        x3 = p.N - x1 - x2
    rate = ((p.b1 - p.d1) * x1 + (p.b2 - p.d2) * x2 - p.d3 * x3
            + p.k1 * x1 * x2 - p.k2 * x1 * x3)
    return p.k2 / ls.a * rate


def abel_rhs(ae: AbelEquation, x1, v):
    return ae.A * v * v + ae.B_at(x1) * v ** 3


def cubic_from_abel(ls: LienardSystem, C=1.0, Cp=0.0, Cpp=0.0) -> CubicData:
    """Cubic under the radical of the ``v2`` branch: ``P = -2 * int B + C'``."""
    if C == 0:
        raise InvalidConstant("integration constant C must be nonzero", stage="reduction", C=C)
    return CubicData(
        D=-2 * ls.c / (3 * ls.a),
        E=-ls.d / ls.a,
        F=-2 * ls.e / ls.a,
        G=-2 * Cpp + Cp,
        C=C, Cp=Cp, Cpp=Cpp,
    )


def closed_trajectory_samples(p: ModelParams, x1_0, x2_0, t_end=1.0, h=1e-3, t0=0.0):
    """RK4 on the planar system, returned as ``(t, x1, x1', x1'')`` rows
    together with the ``x2`` column."""
    fp = ModelParams(**{k: float(v) for k, v in p.as_dict().items()})
    traj = rk4(lambda y: closed_system_rhs(fp, y[0], y[1]),
               np.array([x1_0, x2_0], dtype=float), t0, t_end, h, name="rk4-closed")
    x1, x2 = traj.states[:, 0], traj.states[:, 1]
    dx1, ddx1 = closed_derivatives(fp, x1, x2)
    return np.column_stack([traj.t, x1, dx1, ddx1]), x2
