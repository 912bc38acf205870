"""scikit-learn style wrappers.

``fit`` takes the initial state ``[x1_0, x2_0, x3_0]`` (a single row),
``predict`` takes times and returns an ``(n, 3)`` array of states::

    est = SeriesSolver(params=ModelParams(...), trig_fallback=True).fit([[0.01, 0.259, 0.731]])
    est.predict([0.0, 0.01])
"""
import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .model import ModelParams, initial_state, integrate_reference
from .series import DEFAULT_ORDER
from .solution import evaluate, solve_series, validate


def _check_initial(X):
    X = check_array(np.atleast_2d(np.asarray(X, dtype=float)), ensure_all_finite=True)
    if X.shape != (1, 3):
        raise ValueError(f"expected a single initial state of shape (1, 3), got {X.shape}")
    return initial_state(X[0])


def _check_times(T):
    return check_array(np.asarray(T, dtype=float).reshape(-1, 1), ensure_all_finite=True)[:, 0]


def _check_params(params):
    if not isinstance(params, ModelParams):
        raise TypeError("params must be a ModelParams instance")
    return params


class SeriesSolver(RegressorMixin, BaseEstimator):
    """Truncated power-series solution of the virus propagation model.

    Parameters
    ----------
    params : ModelParams
    order : int
        Number of series coefficients for ``x1``.
    C : float
        Free integration constant of the logarithmic branch.
    branch : {'+', '-'} or None
        Sign branch; ``None`` picks the one matching the initial velocity.
    t0 : float
        Scenario time of the initial state.
    trig_fallback : bool
        Allow the trigonometric cubic roots when Cardano's discriminant is
        negative.
    """

    def __init__(self, params=None, order=DEFAULT_ORDER, C=1.0, branch=None, t0=0.0,
                 trig_fallback=False):
        self.params = params
        self.order = order
        self.C = C
        self.branch = branch
        self.t0 = t0
        self.trig_fallback = trig_fallback

    def fit(self, X, y=None):
        p = _check_params(self.params)
        s0 = _check_initial(X)
        self.solution_ = solve_series(p, s0, t0=self.t0, C=self.C, order=self.order,
                                      branch=self.branch, trig_fallback=self.trig_fallback)
        self.initial_state_ = s0
        self.coef_ = np.column_stack([self.solution_.x1_coeffs[:-1],
                                      self.solution_.x2_coeffs, self.solution_.x3_coeffs])
        self.radius_ = self.solution_.radius
        self.t_off_ = self.solution_.t_off
        return self

    def predict(self, T):
        check_is_fitted(self, "solution_")
        return np.atleast_2d(evaluate(self.solution_, _check_times(T)))

    def residual_report(self, horizon=1.0, tol_hard=1e-6, tol_diag=1e-6):
        check_is_fitted(self, "solution_")
        return validate(self.solution_, self.params, self.initial_state_, horizon=horizon,
                        tol_hard=tol_hard, tol_diag=tol_diag)


class ReferenceIntegrator(RegressorMixin, BaseEstimator):
    """RK4 reference trajectory with the same ``fit``/``predict`` surface.

    ``predict`` integrates from ``t0`` and reads off the requested times
    (which must not precede ``t0``) by linear interpolation on the grid.
    """

    def __init__(self, params=None, step=1e-3, t0=0.0):
        self.params = params
        self.step = step
        self.t0 = t0

    def fit(self, X, y=None):
        _check_params(self.params)
        self.initial_state_ = _check_initial(X)
        return self

    def predict(self, T):
        check_is_fitted(self, "initial_state_")
        t = _check_times(T)
        if np.any(t < self.t0):
            raise ValueError("times must not precede t0")
        t_end = max(float(t.max()), self.t0 + self.step)
        traj = integrate_reference(self.params, self.initial_state_, self.t0, t_end, self.step)
        return np.column_stack([np.interp(t, traj.t, traj.states[:, k]) for k in range(3)])
