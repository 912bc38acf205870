"""Three-compartment virus propagation model and its reference integrator.

State variables are the virus level ``x1``, the protected systems ``x2`` and
the unprotected systems ``x3``::

    x1' = -d1*x1 + b2*x2
    x2' =  b1*x1 - d2*x2 - k2*x1*x3
    x3' = -d3*x3 + k1*x1*x2
"""
import math
import warnings
from dataclasses import dataclass, fields
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .exceptions import DomainError, IntegrationBlowup


def _is_finite(x):
    try:
        return math.isfinite(x)
    except (TypeError, OverflowError):
        return False


@dataclass(frozen=True)
class ModelParams:
    """Rate constants and total population.

    Values may be floats or :class:`fractions.Fraction`; the latter keeps
    the reduction coefficients exact.
    """

    d1: float
    d2: float
    d3: float
    b1: float
    b2: float
    k1: float
    k2: float
    N: float = 1.0

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if not _is_finite(value) or not value > 0:
                raise DomainError(f"parameter {f.name} must be finite and strictly positive",
                                  stage="model", **{f.name: value})

    def as_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def replace(self, **changes):
        values = self.as_dict()
        values.update(changes)
        return ModelParams(**values)


class State(NamedTuple):
    x1: float
    x2: float
    x3: float


@dataclass(frozen=True)
class Trajectory:
    t: np.ndarray
    states: np.ndarray  # shape (n, k)
    step: float
    integrator: str = "rk4"

    def __len__(self):
        return len(self.t)

    def __post_init__(self):
        if len(self.t) != len(self.states):
            raise ValueError("time and state arrays differ in length")
        if len(self.t) > 1 and not np.all(np.diff(self.t) > 0):
            raise ValueError("trajectory times must be strictly increasing")


def _check_state(s):
    if len(s) != 3 or not all(_is_finite(v) for v in s):
        raise DomainError("state must be three finite numbers", stage="model", state=tuple(s))


def rhs(p: ModelParams, s) -> State:
    """Right-hand side of the three-compartment system."""
    _check_state(s)
    x1, x2, x3 = s
    return State(
        -p.d1 * x1 + p.b2 * x2,
        p.b1 * x1 - p.d2 * x2 - p.k2 * x1 * x3,
        -p.d3 * x3 + p.k1 * x1 * x2,
    )


def conservation_rate(p: ModelParams, s):
    """d/dt (x1 + x2 + x3) at state ``s``."""
    return sum(rhs(p, s))


def rk4(f: Callable, y0, t0, t_end, h, name="rk4") -> Trajectory:
    """Classical fixed-step Runge-Kutta on a uniform grid.

    The last step is shortened when ``(t_end - t0)`` is not a multiple of
    ``h``.
    """
    if not h > 0:
        raise DomainError("step must be positive", stage="integrate", h=h)
    if not t_end > t0:
        raise DomainError("t_end must exceed t0", stage="integrate", t0=t0, t_end=t_end)
    n = max(1, math.ceil((t_end - t0) / h - 1e-9))
    t = t0 + h * np.arange(n + 1, dtype=float)
    t[-1] = t_end
    y = np.empty((n + 1, len(y0)), dtype=float)
    y[0] = y0
    for i in range(n):
        dt = t[i + 1] - t[i]
        yi = y[i]
        with np.errstate(over="ignore", invalid="ignore"):
            k1 = np.asarray(f(yi), dtype=float)
            k2 = np.asarray(f(yi + 0.5 * dt * k1), dtype=float)
            k3 = np.asarray(f(yi + 0.5 * dt * k2), dtype=float)
            k4 = np.asarray(f(yi + dt * k3), dtype=float)
            nxt = yi + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(nxt)):
            raise IntegrationBlowup("non-finite state during integration",
                                    t_last=float(t[i]), stage="integrate")
        y[i + 1] = nxt
    return Trajectory(t=t, states=y, step=float(h), integrator=name)


def integrate_reference(p: ModelParams, s0, t0=0.0, t_end=1.0, h=1e-3) -> Trajectory:
    """RK4 trajectory of the full three-compartment system."""
    _check_state(s0)
    fp = ModelParams(**{k: float(v) for k, v in p.as_dict().items()})

    def f(y):
        x1, x2, x3 = y
        return (-fp.d1 * x1 + fp.b2 * x2,
                fp.b1 * x1 - fp.d2 * x2 - fp.k2 * x1 * x3,
                -fp.d3 * x3 + fp.k1 * x1 * x2)

    traj = rk4(f, np.asarray(s0, dtype=float), float(t0), float(t_end), float(h))
    if np.any(traj.states < 0):
        first = int(np.argmax(np.any(traj.states < 0, axis=1)))
        warnings.warn(f"state left the non-negative octant at t={traj.t[first]:.6g}",
                      RuntimeWarning, stacklevel=2)
    return traj


def conservation_drift(traj: Trajectory, p: ModelParams) -> np.ndarray:
    """Rows of ``(t, x1 + x2 + x3 - N)`` along a trajectory."""
    if len(traj) == 0:
        raise ValueError("empty trajectory")
    total = traj.states[:, :3].sum(axis=1) - float(p.N)
    return np.column_stack([traj.t, total])


def initial_state(values: Sequence[float]) -> State:
    """Validate an initial state: finite and non-negative."""
    s = State(*values)
    _check_state(s)
    if any(v < 0 for v in s):
        raise DomainError("initial state must be non-negative", stage="model", state=tuple(s))
    return s
