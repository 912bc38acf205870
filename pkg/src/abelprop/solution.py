"""Assemble the series solution and measure how well it solves the model.

The pipeline is::

    params -> Lienard/Abel coefficients -> cubic P -> shifts theta_k
           -> sigma_n (t as a series in x1) -> rho_n (x1 as a series in t)
           -> x2 = (x1' + d1 x1)/b2,  x3 = N - x1 - x2

The Abel solution is taken as the sum ``v = v1 + v2`` of the solutions of
``v1' = A v1^2`` and ``v2' = B v2^3``.  Because the Abel equation is not
linear that sum leaves a residual, reported by
:func:`abel_decomposition_residual` together with its closed form.
"""
import contextlib
import math
import warnings
from dataclasses import asdict, dataclass, field
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from .cubic import CubicRoots, solve_cubic
from .exceptions import (AbelPropError, BranchMismatch, ConvergenceWarning, DomainError,
                         InitialVelocityError, InsufficientData, InvalidConstant)
from .model import ModelParams, State, integrate_reference, rhs, rk4
from .reduction import (CubicData, LienardSystem, closed_derivatives, closed_system_rhs,
                        cubic_from_abel, lienard_coeffs, lienard_drift_term,
                        lienard_residual, lienard_terms_scale)
from .reversion import revert
from .series import DEFAULT_ORDER, SeriesCoeffs, _sign, build_series

DEFAULT_POINTS = 101


@dataclass(frozen=True)
class Constants:
    C: float
    Cp: float
    Cpp: float
    G: float
    branch: str
    t0: float = 0.0
    t_off: Optional[float] = None


@dataclass(frozen=True)
class SeriesSolution:
    branch: str
    rho: Tuple
    x2_coeffs: Tuple
    x3_coeffs: Tuple
    order: int
    constants: Constants
    radius: float
    params: ModelParams
    lienard: LienardSystem
    cubic: CubicData
    roots: CubicRoots
    series: SeriesCoeffs

    @property
    def t_off(self):
        return self.constants.t_off

    @property
    def x1_coeffs(self):
        return (0.0,) + tuple(self.rho)


@contextlib.contextmanager
def _stage(name):
    try:
        yield
    except AbelPropError as exc:
        if exc.stage is None:
            exc.stage = name
        raise


def _branch_str(branch):
    return "+" if _sign(branch) > 0 else "-"


def fit_constants(p: ModelParams, s0, t0=0.0, C=1.0, branch=None, Cpp=0) -> Constants:
    """Choose ``G`` so that ``v(x1_0) = 1/x1'(t0)`` on the selected branch.

    ``C`` stays free; ``C'`` is reported as ``G + 2 C''``.  With ``branch``
    omitted the branch matching the sign of ``v0 + 1/(A x1_0 + C)`` is used.
    ``t_off`` is filled in by :func:`solve_series`.
    """
    if C == 0:
        raise InvalidConstant("integration constant C must be nonzero", stage="fit", C=C)
    x1, x2 = s0[0], s0[1]
    velocity = -p.d1 * x1 + p.b2 * x2
    if velocity == 0:
        raise InitialVelocityError("initial dx1/dt is zero; v = 1/x1' is undefined",
                                   stage="fit", x1_0=x1, x2_0=x2)
    ls = lienard_coeffs(p)
    w = ls.A * x1 + C
    if w == 0:
        raise InvalidConstant("A*x1_0 + C vanishes", stage="fit", C=C)
    v2 = 1 / velocity + 1 / w
    if v2 == 0:
        raise DomainError("initial velocity matches v1 alone; P(x1_0) would be infinite",
                          stage="fit")
    sign = "+" if v2 > 0 else "-"
    if branch is not None and _branch_str(branch) != sign:
        raise BranchMismatch(f"initial velocity selects branch {sign!r}", stage="fit",
                             requested=_branch_str(branch))
    cd = cubic_from_abel(ls, C)
    G = 1 / (v2 * v2) - ((cd.D * x1 + cd.E) * x1 + cd.F) * x1
    return Constants(C=C, Cp=G + 2 * Cpp, Cpp=Cpp, G=G, branch=sign, t0=t0)


def state_coefficients(rho: Sequence, p: ModelParams):
    """Coefficients of ``x2`` and ``x3`` (from ``t^0``) given ``rho_1..rho_n``."""
    x1c = [0] + list(rho)
    n = len(rho)
    x2c = [((k + 1) * x1c[k + 1] + p.d1 * x1c[k]) / p.b2 for k in range(n)]
    x3c = [(p.N if k == 0 else 0) - x1c[k] - x2c[k] for k in range(n)]
    return x2c, x3c


def radius_estimate(rho: Sequence) -> float:
    """Convergence radius from the growth of the trailing coefficients.

    Works on the last half of the nonzero coefficients.  When the ratios
    ``|rho_n / rho_(n-1)|`` are monotone they are extrapolated linearly in
    ``1/n`` (Domb-Sykes), which removes the algebraic prefactor of a branch
    point; a non-positive limit means superexponential decay and gives
    ``inf``.  Otherwise the growth rate is the larger of the root-test
    maximum ``|rho_n|^(1/n)`` and the last ratio, so the estimate errs small.
    """
    pts = [(n, abs(float(c))) for n, c in enumerate(rho, start=1) if c != 0]
    if len(pts) < 6:
        raise InsufficientData("need at least 6 nonzero coefficients", stage="radius",
                               nonzero=len(pts))
    tail = pts[len(pts) // 2 - 1:]
    n = np.array([q[0] for q in tail], dtype=float)
    mag = np.array([q[1] for q in tail])
    ratios = (mag[1:] / mag[:-1]) ** (1.0 / np.diff(n))
    inv_n = 1.0 / n[1:]
    steps = np.diff(ratios)
    scale = np.max(np.abs(ratios))
    if np.all(steps >= -1e-12 * scale) or np.all(steps <= 1e-12 * scale):
        slope, intercept = np.polyfit(inv_n, ratios, 1)
        if intercept <= 1e-12 * scale:
            return math.inf
        return float(1.0 / intercept)
    root = np.max(np.exp(np.log(mag) / n))
    return float(1.0 / max(root, ratios[-1]))


def _locate_series_time(rho, x1_0, radius):
    """Series time at which the truncated ``x1`` series reaches ``x1_0``."""
    if x1_0 == 0:
        return 0.0
    coeffs = np.array([0.0] + [float(c) for c in rho])

    def f(tau):
        return np.polynomial.polynomial.polyval(tau, coeffs) - x1_0

    direction = math.copysign(1.0, float(rho[0]) * x1_0)
    limit = radius if math.isfinite(radius) else 1e6
    b = min(abs(x1_0 / float(rho[0])), limit)
    while True:
        if (f(direction * b) > 0) != (f(0.0) > 0):
            break
        if b >= limit:
            raise DomainError("x1_0 is not reached inside the series radius",
                              stage="time-offset", x1_0=x1_0, radius=radius)
        b = min(1.5 * b, limit)
    lo, hi = 0.0, direction * b
    flo = f(lo)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if fm == 0 or mid in (lo, hi):
            break
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return float(mid)


def solve_series(p: ModelParams, s0, t0=0.0, C=1.0, order=DEFAULT_ORDER, branch=None,
                 trig_fallback=False) -> SeriesSolution:
    """Run the full pipeline from parameters and initial state to the
    truncated series for ``(x1, x2, x3)``."""
    with _stage("fit"):
        consts = fit_constants(p, s0, t0, C, branch)
    with _stage("reduction"):
        ls = lienard_coeffs(p)
        cd = cubic_from_abel(ls, C, consts.Cp, consts.Cpp)
    with _stage("cubic"):
        roots = solve_cubic(cd, trig_fallback=trig_fallback)
    with _stage("series"):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ConvergenceWarning)
            sc = build_series(float(ls.A), float(C), float(cd.D), roots.thetas, order)
    with _stage("reversion"):
        rr = revert(sc.sigma(consts.branch), order, branch=consts.branch, exact=True)
    rho = tuple(float(r) for r in rr.rho)
    fp = ModelParams(**{k: float(v) for k, v in p.as_dict().items()})
    x2c, x3c = state_coefficients(rho, fp)
    with _stage("radius"):
        radius = radius_estimate(rho)
    with _stage("time-offset"):
        tau0 = _locate_series_time(rho, float(s0[0]), radius)
    consts = Constants(C=consts.C, Cp=consts.Cp, Cpp=consts.Cpp, G=consts.G,
                       branch=consts.branch, t0=float(t0), t_off=float(t0) - tau0)
    return SeriesSolution(branch=consts.branch, rho=rho, x2_coeffs=tuple(x2c),
                          x3_coeffs=tuple(x3c), order=order, constants=consts,
                          radius=radius, params=p, lienard=ls, cubic=cd, roots=roots,
                          series=sc)


def _polyval(coeffs, tau):
    return np.polynomial.polynomial.polyval(tau, np.asarray(coeffs, dtype=float))


def _deriv(coeffs, k=1):
    c = np.asarray(coeffs, dtype=float)
    for _ in range(k):
        c = c[1:] * np.arange(1, len(c)) if len(c) > 1 else np.zeros(1)
    return c


def evaluate(sol: SeriesSolution, t):
    """State at scenario time ``t`` (scalar -> :class:`State`, array -> (n, 3))."""
    tau = np.asarray(t, dtype=float) - sol.t_off
    if np.any(np.abs(tau) > sol.radius):
        warnings.warn("evaluating outside the estimated convergence radius",
                      ConvergenceWarning, stacklevel=2)
    out = np.stack([_polyval(sol.x1_coeffs, tau), _polyval(sol.x2_coeffs, tau),
                    _polyval(sol.x3_coeffs, tau)], axis=-1)
    if out.ndim == 1:
        return State(*(float(v) for v in out))
    return out


def evaluate_derivatives(sol: SeriesSolution, t, k=1):
    tau = np.asarray(t, dtype=float) - sol.t_off
    return np.stack([_polyval(_deriv(c, k), tau)
                     for c in (sol.x1_coeffs, sol.x2_coeffs, sol.x3_coeffs)], axis=-1)


# --------------------------------------------------------------------------
# residuals


def abel_decomposition_residual(ls: LienardSystem, cd: CubicData, x1_grid, branches=("+", "-")):
    """Residual of ``v = v1 +/- v2`` in ``dv/dx1 = A v^2 + B v^3``.

    Returns, per branch, arrays of the ``v1``-only, ``v2``-only and composite
    residuals, the closed-form cross term
    ``-A(2 v1 v2 + v2^2) - B(v1^3 + 3 v1^2 v2 + 3 v1 v2^2)`` and the term
    scale used for relative errors.
    """
    x = np.asarray(x1_grid, dtype=float)
    A, C = float(ls.A), float(cd.C)
    D, E, F, G = (float(v) for v in cd.coeffs)
    P = ((D * x + E) * x + F) * x + G
    bad = x[P <= 0]
    if bad.size:
        raise DomainError("P(x1) <= 0 on the grid", stage="abel", points=bad.tolist())
    dP = (3 * D * x + 2 * E) * x + F
    B = np.array([float(ls.B_at(v)) for v in x]) if x.ndim else float(ls.B_at(x))
    w = A * x + C
    v1, dv1 = -1 / w, A / (w * w)
    out = {}
    for br in branches:
        s = _sign(br)
        v2 = s / np.sqrt(P)
        dv2 = -0.5 * s * dP / P ** 1.5
        v = v1 + v2
        dv = dv1 + dv2
        out[_branch_str(br)] = {
            "x1": x,
            "v1": v1,
            "v2": v2,
            "v1_residual": dv1 - A * v1 * v1,
            "v2_residual": dv2 - B * v2 ** 3,
            "v1_scale": np.maximum(np.abs(dv1), np.abs(A * v1 * v1)),
            "v2_scale": np.maximum(np.abs(dv2), np.abs(B * v2 ** 3)),
            "residual": dv - A * v * v - B * v ** 3,
            "cross_term": -A * (2 * v1 * v2 + v2 * v2) - B * (v1 ** 3 + 3 * v1 * v1 * v2 + 3 * v1 * v2 * v2),
            "scale": np.max(np.abs(np.stack([dv1, dv2, A * v * v, B * v ** 3])), axis=0),
        }
    return out


@dataclass
class ResidualFamily:
    name: str
    kind: str  # "hard" or "diagnostic"
    grid: np.ndarray
    values: np.ndarray
    tol: float
    description: str = ""

    @property
    def count(self):
        return int(self.values.size)

    @property
    def max(self):
        return float(np.max(np.abs(self.values))) if self.values.size else 0.0

    @property
    def rms(self):
        return float(np.sqrt(np.mean(self.values ** 2))) if self.values.size else 0.0

    @property
    def passed(self):
        return bool(np.all(np.isfinite(self.values))) and self.max <= self.tol

    def to_dict(self):
        return {"name": self.name, "kind": self.kind, "description": self.description,
                "count": self.count, "max": self.max, "rms": self.rms, "tol": self.tol,
                "passed": self.passed, "grid": self.grid.tolist(),
                "values": self.values.tolist()}


@dataclass
class ResidualReport:
    families: Dict[str, ResidualFamily] = field(default_factory=dict)
    meta: Dict = field(default_factory=dict)

    def add(self, fam: ResidualFamily):
        self.families[fam.name] = fam

    @property
    def hard_passed(self):
        return all(f.passed for f in self.families.values() if f.kind == "hard")

    @property
    def diagnostic_passed(self):
        return all(f.passed for f in self.families.values() if f.kind == "diagnostic")

    def to_dict(self):
        return {"meta": self.meta,
                "families": {k: f.to_dict() for k, f in self.families.items()}}

    def to_text(self):
        lines = [f"{'family':<20} {'kind':<11} {'n':>5} {'max':>12} {'rms':>12} {'tol':>10}  verdict"]
        for f in self.families.values():
            lines.append(f"{f.name:<20} {f.kind:<11} {f.count:>5} {f.max:>12.4e} "
                         f"{f.rms:>12.4e} {f.tol:>10.3g}  {'pass' if f.passed else 'FAIL'}")
        return "\n".join(lines)


def _relative(res, scale):
    scale = np.asarray(scale, dtype=float)
    return np.asarray(res, dtype=float) / np.where(scale > 0, scale, 1.0)


def _reference_on_grid(p, s0, times, h, closed=False):
    """RK4 samples at ``times`` (uniform, starting at times[0])."""
    span = times[-1] - times[0]
    intervals = len(times) - 1
    m = max(1, math.ceil(span / intervals / h - 1e-9))
    hh = span / (intervals * m)
    if closed:
        traj = rk4(lambda y: closed_system_rhs(p, y[0], y[1]),
                   np.array([s0[0], s0[1]], dtype=float), times[0], times[-1], hh,
                   name="rk4-closed")
    else:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            traj = integrate_reference(p, s0, times[0], times[-1], hh)
    return traj, traj.states[::m]


def validate(sol: SeriesSolution, p: ModelParams, s0, horizon=1.0, tol_hard=1e-6,
             tol_diag=1e-6, n_points=DEFAULT_POINTS, step=1e-3) -> ResidualReport:
    """Measure every residual family for a series solution."""
    if not horizon > 0:
        raise DomainError("horizon must be positive", stage="validate", horizon=horizon)
    fp = ModelParams(**{k: float(v) for k, v in p.as_dict().items()})
    ls = LienardSystem(*(float(getattr(sol.lienard, k)) for k in "abcde"))
    t0 = sol.constants.t0
    times = t0 + np.linspace(0.0, horizon, n_points)
    tau = times - sol.t_off
    report = ResidualReport(meta={
        "branch": sol.branch, "order": sol.order, "radius": sol.radius,
        "t_off": sol.t_off, "t0": t0, "horizon": horizon, "cubic_method": sol.roots.method,
    })
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConvergenceWarning)
        x = evaluate(sol, times)
        dx = evaluate_derivatives(sol, times, 1)
        ddx = evaluate_derivatives(sol, times, 2)

    # system residual of the series triple
    f = np.array([rhs(fp, row) for row in x])
    x1, x2, x3 = x.T
    terms = np.abs(np.column_stack([dx, fp.d1 * x1, fp.b2 * x2, fp.b1 * x1, fp.d2 * x2,
                                    fp.k2 * x1 * x3, fp.d3 * x3, fp.k1 * x1 * x2]))
    report.add(ResidualFamily("system", "diagnostic", times,
                              _relative(np.max(np.abs(dx - f), axis=1), terms.max(axis=1)),
                              tol_diag, "series triple in the three-compartment system"))

    samples = np.column_stack([times, x1, dx[:, 0], ddx[:, 0]])
    report.add(ResidualFamily("lienard", "diagnostic", times,
                              _relative(lienard_residual(ls, samples),
                                        lienard_terms_scale(ls, samples)),
                              tol_diag, "series x1 in the Lienard equation"))

    abel = abel_decomposition_residual(ls, sol.cubic, x1, branches=(sol.branch,))[sol.branch]
    report.add(ResidualFamily("abel", "diagnostic", x1,
                              _relative(abel["residual"], abel["scale"]), tol_diag,
                              "v = v1 +/- v2 in the Abel equation"))
    report.add(ResidualFamily("abel_cross_term", "hard", x1,
                              _relative(abel["residual"] - abel["cross_term"], abel["scale"]),
                              tol_hard, "Abel residual minus its closed-form cross term"))

    traj, ref = _reference_on_grid(fp, tuple(float(v) for v in s0), times, step)
    report.add(ResidualFamily("drift", "diagnostic", times,
                              (ref.sum(axis=1) - fp.N) / fp.N, tol_diag,
                              "(x1 + x2 + x3 - N)/N along the reference trajectory"))
    report.add(ResidualFamily("deviation", "diagnostic", tau,
                              np.max(np.abs(x - ref), axis=1), tol_diag,
                              "max |series - reference| over the three components"))

    ctraj, cref = _reference_on_grid(fp, tuple(float(v) for v in s0), times, step, closed=True)
    cx1, cx2 = ctraj.states[:, 0], ctraj.states[:, 1]
    cdx1, cddx1 = closed_derivatives(fp, cx1, cx2)
    csamples = np.column_stack([ctraj.t, cx1, cdx1, cddx1])
    report.add(ResidualFamily(
        "lienard_drift", "hard", ctraj.t,
        _relative(lienard_residual(ls, csamples) - lienard_drift_term(fp, ls, cx1, cx2),
                  lienard_terms_scale(ls, csamples)),
        tol_hard, "planar-system Lienard residual minus (k2/a) * conservation rate"))
    fd = np.gradient(cx1, ctraj.t, edge_order=2)
    report.add(ResidualFamily(
        "closed_x2", "hard", ctraj.t,
        ((fd + fp.d1 * cx1) / fp.b2 - cx2) / np.maximum(1.0, np.abs(cx2)),
        tol_hard, "x2 recovered from the planar x1 by (x1' + d1 x1)/b2"))
    return report
