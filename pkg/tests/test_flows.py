import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lcs_fsle import FlowModel, TransitionWindow, smooth_transition, velocity, velocity_gradient
from lcs_fsle.flows import parse_params, rate_of_strain

MODELS = [
    FlowModel.linear_saddle(),
    FlowModel.rigid_rotation(),
    FlowModel.transient_saddle(),
    FlowModel.transition_saddle(),
    FlowModel.double_gyre(),
    FlowModel.moving_separation(),
    FlowModel.moving_separation(flip_hamiltonian=True),
]

coord = st.floats(-1.5, 1.5, allow_nan=False)
times = st.floats(0.0, 2.0, allow_nan=False)


@pytest.mark.parametrize("m", MODELS, ids=lambda m: m.describe())
@settings(max_examples=40, deadline=None)
@given(x1=coord, x2=coord, t=times)
def test_jacobian_matches_central_differences(m, x1, x2, t):
    h = 1e-6
    x = np.array([x1, x2])
    j = velocity_gradient(m, x, t)
    for k in range(2):
        e = np.zeros(2)
        e[k] = h
        fd = (velocity(m, x + e, t) - velocity(m, x - e, t)) / (2 * h)
        scale = max(1.0, np.abs(j).max())
        assert np.allclose(j[:, k], fd, atol=1e-6 * scale)


@pytest.mark.parametrize("m", MODELS, ids=lambda m: m.describe())
def test_divergence_free(m):
    rng = np.random.default_rng(1)
    x = rng.uniform(-1, 1, (50, 2))
    j = velocity_gradient(m, x, 0.55)
    assert np.allclose(j[:, 0, 0] + j[:, 1, 1], 0.0, atol=1e-12)


def test_linear_saddle_velocity_and_gradient():
    m = FlowModel.linear_saddle()
    assert np.allclose(velocity(m, [0.3, -0.4], 7.0), [-0.3, -0.4])
    assert np.array_equal(velocity_gradient(m, [0.3, -0.4], 7.0), [[-1.0, 0.0], [0.0, 1.0]])
    s = rate_of_strain(m, [0.1, 0.2], 0.0)
    assert (s.c11, s.c12, s.c22) == (-1.0, 0.0, 1.0)


def test_rigid_rotation_is_pure_rotation():
    s = rate_of_strain(FlowModel.rigid_rotation(), [0.2, 0.7], 0.0)
    assert s.norm() == 0.0


def test_transient_saddle_switches_to_uniform_flow():
    m = FlowModel.transient_saddle(0.5, 0.6)
    assert np.allclose(velocity(m, [1.0, 1.0], 0.0), [-1.0, 1.0])
    assert np.allclose(velocity(m, [0.3, 0.4], 0.7), [1.0, 0.0])
    assert np.allclose(velocity_gradient(m, [0.3, 0.4], 0.7), 0.0)


def test_transition_saddle_endpoints():
    m = FlowModel.transition_saddle(0.5, 0.6)
    x1, x2 = 0.4, 0.3
    assert np.allclose(velocity(m, [x1, x2], 0.0), [-x1, x2])
    sech2 = 1.0 / np.cosh(x2) ** 2
    assert np.allclose(velocity(m, [x1, x2], 1.0), [-x1 - x1 * sech2, x2 + np.tanh(x2)])


def test_double_gyre_walls_and_values():
    m = FlowModel.double_gyre()
    for s in np.linspace(0, 1, 11):
        assert abs(velocity(m, [0.0, s], 0.0)[0]) < 1e-15
        assert abs(velocity(m, [1.0, s], 0.0)[0]) < 1e-15
        assert abs(velocity(m, [s, 0.0], 0.0)[1]) < 1e-15
        assert abs(velocity(m, [s, 1.0], 0.0)[1]) < 1e-15
    # u2 = A pi cos(pi x1) sin(pi x2) at (0, 0.5)
    assert math.isclose(velocity(m, [0.0, 0.5], 0.0)[1], 0.1 * math.pi)
    assert np.allclose(velocity(m, [0.5, 0.5], 3.0), 0.0, atol=1e-16)


def test_double_gyre_gradient_against_fd_oracle():
    m = FlowModel.double_gyre()
    x, h = np.array([0.25, 0.25]), 1e-5
    fd = np.column_stack([(velocity(m, x + e, 0.0) - velocity(m, x - e, 0.0)) / (2 * h)
                          for e in (np.array([h, 0.0]), np.array([0.0, h]))])
    assert np.allclose(velocity_gradient(m, x, 0.0), fd, atol=1e-8)


@pytest.mark.parametrize("flip", [False, True])
def test_moving_separation_wall_is_free_slip(flip):
    m = FlowModel.moving_separation(flip_hamiltonian=flip)
    for x1 in np.linspace(-2, 2, 21):
        for t in (0.0, 0.13, 1.0):
            assert velocity(m, [x1, 0.0], t)[1] == 0.0


def test_flip_reverses_velocity():
    a = velocity(FlowModel.moving_separation(), [0.3, 0.2], 0.05)
    b = velocity(FlowModel.moving_separation(flip_hamiltonian=True), [0.3, 0.2], 0.05)
    assert np.allclose(a, -b)


@settings(max_examples=60, deadline=None)
@given(t=st.floats(-1.0, 2.0, allow_nan=False), dt=st.floats(1e-6, 0.2))
def test_transition_monotone_and_bounded(t, dt):
    w = TransitionWindow(0.5, 0.6)
    a, b = smooth_transition(t, w), smooth_transition(t + dt, w)
    assert 0.0 <= a <= 1.0
    assert b >= a


def test_transition_flat_outside_window():
    w = TransitionWindow(0.5, 0.6)
    assert smooth_transition(0.5, w) == 0.0
    assert smooth_transition(0.6, w) == 1.0
    assert smooth_transition(0.55, w) == pytest.approx(0.5)
    arr = smooth_transition(np.array([0.0, 0.55, 1.0]), w)
    assert np.allclose(arr, [0.0, 0.5, 1.0])


def test_bad_parameters_rejected():
    with pytest.raises(ValueError):
        FlowModel("double-gyre", {"B": 1.0})
    with pytest.raises(ValueError):
        FlowModel("nope")
    with pytest.raises(ValueError):
        TransitionWindow(0.6, 0.5)
    with pytest.raises(ValueError):
        parse_params("a0.5")
    assert parse_params("a=0.5, b=0.7") == {"a": 0.5, "b": 0.7}
