import math
import warnings

import numpy as np
import pytest

from abelprop.exceptions import DomainError, IntegrationBlowup
from abelprop.model import (ModelParams, State, conservation_drift, conservation_rate,
                            initial_state, integrate_reference, rhs)

from conftest import random_params


def rhs_matrix_form(p, s):
    """Second transcription: linear part as a matrix plus the two bilinear terms."""
    M = np.array([[-p.d1, p.b2, 0.0],
                  [p.b1, -p.d2, 0.0],
                  [0.0, 0.0, -p.d3]])
    x = np.asarray(s, dtype=float)
    bil = np.array([0.0, -p.k2 * x[0] * x[2], p.k1 * x[0] * x[1]])
    return M @ x + bil


def test_rhs_origin_is_equilibrium(ones):
    assert rhs(ones, (0.0, 0.0, 0.0)) == (0.0, 0.0, 0.0)


def test_rhs_all_ones():
    p = ModelParams(1, 1, 1, 1, 1, 1, 1, N=1)
    assert rhs(p, (1, 1, 1)) == (0, -1, 0)


def test_rhs_first_component():
    p = ModelParams(d1=2, d2=1, d3=1, b1=1, b2=3, k1=1, k2=1)
    assert rhs(p, (1, 1, 0))[0] == 1


def test_rhs_rejects_non_finite(ones):
    with pytest.raises(DomainError):
        rhs(ones, (math.nan, 0.0, 0.0))
    with pytest.raises(DomainError):
        rhs(ones, (0.0, math.inf, 0.0))


def test_rhs_matches_second_transcription(rng):
    for _ in range(1000):
        p = random_params(rng)
        s = rng.uniform(-2, 2, size=3)
        a = np.array(rhs(p, s))
        b = rhs_matrix_form(p, s)
        scale = np.max(np.abs([p.d1 * s[0], p.b2 * s[1], p.b1 * s[0], p.d2 * s[1],
                               p.k2 * s[0] * s[2], p.d3 * s[2], p.k1 * s[0] * s[1]]))
        np.testing.assert_allclose(a, b, rtol=0, atol=4 * np.finfo(float).eps * scale)


@pytest.mark.parametrize("name", ["d1", "d2", "d3", "b1", "b2", "k1", "k2", "N"])
@pytest.mark.parametrize("bad", [0.0, -1.0, math.nan, math.inf])
def test_params_must_be_positive(ones, name, bad):
    with pytest.raises(DomainError):
        ones.replace(**{name: bad})


def test_initial_state_non_negative():
    assert initial_state((0.1, 0.2, 0.7)) == State(0.1, 0.2, 0.7)
    with pytest.raises(DomainError):
        initial_state((-0.1, 0.2, 0.7))


def test_equilibrium_trajectory_is_constant(ones):
    traj = integrate_reference(ones, (0.0, 0.0, 0.0), 0.0, 1.0, 0.01)
    assert np.all(traj.states == 0.0)
    assert traj.t[0] == 0.0 and traj.t[-1] == 1.0
    assert np.all(np.diff(traj.t) > 0)


def _decay_error(h):
    p = ModelParams(1, 1, 1, 1, 1, 1, 1, N=1)
    traj = integrate_reference(p, (0.0, 0.0, 1.0), 0.0, 1.0, h)
    return abs(traj.states[-1, 2] - math.exp(-1.0))


@pytest.mark.parametrize("h", [0.1, 0.05, 1e-3])
def test_rk4_exponential_decay(h):
    assert _decay_error(h) < 10 * h ** 4


def test_rk4_convergence_order():
    order = math.log2(_decay_error(0.1) / _decay_error(0.05))
    assert 3.8 <= order <= 4.2


def test_rk4_step_halving_against_richardson_reference(ones):
    s0 = (0.3, 0.3, 0.4)
    ref = integrate_reference(ones, s0, 0.0, 1.0, 0.1 / 64).states[-1]
    e1 = np.max(np.abs(integrate_reference(ones, s0, 0.0, 1.0, 0.1).states[-1] - ref))
    e2 = np.max(np.abs(integrate_reference(ones, s0, 0.0, 1.0, 0.05).states[-1] - ref))
    assert 12 < e1 / e2 < 20


def test_rk4_is_deterministic(ones):
    a = integrate_reference(ones, (0.3, 0.3, 0.4), 0.0, 1.0, 0.01)
    b = integrate_reference(ones, (0.3, 0.3, 0.4), 0.0, 1.0, 0.01)
    assert np.array_equal(a.states, b.states)


def test_blowup_reports_last_valid_time(ones):
    with pytest.raises(IntegrationBlowup) as info:
        integrate_reference(ones, (1e200, 1e200, 1e200), 0.5, 1.0, 0.1)
    assert info.value.t_last == 0.5


def test_bad_step_or_interval(ones):
    with pytest.raises(DomainError):
        integrate_reference(ones, (0, 0, 0), 0.0, 1.0, 0.0)
    with pytest.raises(DomainError):
        integrate_reference(ones, (0, 0, 0), 1.0, 1.0, 0.1)


def test_negative_states_are_reported_not_clamped():
    p = ModelParams(1, 1, 1, 1, 1, 1, 10, N=11)
    with pytest.warns(RuntimeWarning, match="non-negative"):
        traj = integrate_reference(p, (1.0, 0.0, 10.0), 0.0, 1.0, 0.01)
    assert traj.states[:, 1].min() < 0


def test_drift_zero_at_start_when_population_matches(ones):
    traj = integrate_reference(ones, (0.3, 0.3, 0.4), 0.0, 1.0, 0.01)
    drift = conservation_drift(traj, ones)
    assert drift[0, 0] == 0.0 and abs(drift[0, 1]) < 1e-15


def test_drift_nonzero_later(ones):
    assert conservation_rate(ones, (0.3, 0.3, 0.4)) == pytest.approx(-0.43, abs=1e-15)
    traj = integrate_reference(ones, (0.3, 0.3, 0.4), 0.0, 1.0, 0.01)
    assert np.all(np.abs(conservation_drift(traj, ones)[1:, 1]) > 0)
