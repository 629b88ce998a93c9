import math

import numpy as np
import pytest
from hypothesis import example, given, settings, strategies as st

from lcs_fsle import (DegenerateEigenvalueError, FlowModel, InvalidHorizonError,
                      SymmetricTensor2, cauchy_green, eig_sym2, flow_map_with_gradient, ftle,
                      lambda_max_time_derivative)
from lcs_fsle.integrator import IntegratorConfig, lambda_max_monitor


def test_cauchy_green_examples():
    assert cauchy_green(np.eye(2)) == SymmetricTensor2(1.0, 0.0, 1.0)
    assert cauchy_green(np.diag([2.0, 0.5])) == SymmetricTensor2(4.0, 0.0, 0.25)
    a = 0.7
    rot = np.array([[math.cos(a), -math.sin(a)], [math.sin(a), math.cos(a)]])
    c = cauchy_green(rot)
    assert np.allclose(c.as_array(), np.eye(2), atol=1e-15)


def test_eig_examples():
    e = eig_sym2(SymmetricTensor2(4.0, 0.0, 0.25))
    assert (e.lambda_max, e.lambda_min, e.e_max) == (4.0, 0.25, (1.0, 0.0))
    e = eig_sym2(SymmetricTensor2(2.0, 1.0, 2.0))
    assert np.allclose([e.lambda_min, e.lambda_max], [1.0, 3.0])
    assert np.allclose(e.e_max, np.array([1.0, 1.0]) / math.sqrt(2))
    e = eig_sym2(SymmetricTensor2(1.0, 0.0, 1.0))
    assert e.degenerate and e.lambda_min == e.lambda_max == 1.0


entry = st.floats(-1e3, 1e3, allow_nan=False)


@settings(max_examples=300, deadline=None)
@given(a=entry, b=entry, c=entry)
@example(a=0.05, b=0.0, c=0.05)
def test_eig_reconstruction_and_orientation(a, b, c):
    t = SymmetricTensor2(a, b, c)
    e = eig_sym2(t)
    assert e.lambda_min <= e.lambda_max
    if e.degenerate:
        assert e.lambda_max - e.lambda_min <= 1e-12 * max(1.0, abs(e.lambda_max))
        assert (e.e_min, e.e_max) == ((0.0, 1.0), (1.0, 0.0))
        return
    vmin, vmax = np.array(e.e_min), np.array(e.e_max)
    assert abs(vmin @ vmax) <= 1e-12
    assert abs(np.hypot(*vmax) - 1) <= 1e-12
    for v in (vmin, vmax):
        first = v[0] if v[0] != 0 else v[1]
        assert first > 0
    rec = e.lambda_min * np.outer(vmin, vmin) + e.lambda_max * np.outer(vmax, vmax)
    assert np.abs(rec - t.as_array()).max() <= 1e-12 * max(t.norm(), 1e-300) * 10


def test_ftle_examples():
    assert ftle(4.0, 0.0, 1.0) == pytest.approx(math.log(2))
    assert ftle(1.0, 2.0, 5.0) == 0.0
    T = 1.7
    assert ftle(math.exp(2 * T), 0.0, T) == pytest.approx(1.0)
    with pytest.raises(InvalidHorizonError):
        ftle(2.0, 1.0, 1.0)


def test_incompressible_det_and_nonnegative_ftle():
    s = flow_map_with_gradient(FlowModel.double_gyre(), (0.3, 0.48), 0.0, 5.0)
    e = eig_sym2(cauchy_green(s.df))
    assert abs(e.lambda_min * e.lambda_max - 1.0) <= 1e-5
    assert ftle(e.lambda_max, 0.0, 5.0) >= 0.0


def test_lambda_derivative_linear_saddle():
    T = 0.8
    s = flow_map_with_gradient(FlowModel.linear_saddle(), (0.1, 0.2), 0.0, T)
    assert lambda_max_time_derivative(FlowModel.linear_saddle(), s, T) == pytest.approx(2 * math.exp(2 * T), rel=1e-8)


def test_lambda_derivative_rotation_is_zero():
    m = FlowModel.rigid_rotation()
    s = flow_map_with_gradient(m, (0.1, 0.2), 0.0, 1.0)
    assert lambda_max_time_derivative(m, s, 1.0) == 0.0


def test_lambda_derivative_degenerate_anisotropic_raises():
    from lcs_fsle.integrator import FlowSample

    s = FlowSample(np.array([0.1, 0.2]), np.eye(2))
    with pytest.raises(DegenerateEigenvalueError):
        lambda_max_time_derivative(FlowModel.linear_saddle(), s, 0.0)


def test_lambda_derivative_double_gyre_fd():
    m, x0, T, h = FlowModel.double_gyre(), (0.3, 0.48), 5.0, 1e-4
    cfg = IntegratorConfig(dt=1e-4)
    s = flow_map_with_gradient(m, x0, 0.0, T, cfg)

    def lam(t):
        return lambda_max_monitor(np.r_[0.0, 0.0, flow_map_with_gradient(m, x0, 0.0, t, cfg).df.ravel()], t)

    fd = (lam(T + h) - lam(T - h)) / (2 * h)
    assert lambda_max_time_derivative(m, s, T) == pytest.approx(fd, rel=1e-3)
