import math

import numpy as np
import pytest

from lcs_fsle import (EventMode, FlowModel, IntegratorConfig, NotCrossedError, flow_map,
                      flow_map_with_gradient, record_trajectory, refine_crossing)
from lcs_fsle.integrator import lambda_max_monitor, step_times

DG = FlowModel.double_gyre()
X0 = (0.3, 0.48)

# DoubleGyre flow map of (0.3, 0.48) over [0, 5] at dt = 1e-5, used as the reference


@pytest.fixture(scope="module")
def dg_reference():
    return flow_map(DG, X0, 0.0, 5.0, IntegratorConfig(dt=1e-5))


def test_step_times_grid_and_short_final_step():
    t = step_times(0.0, 1.0, 0.3)
    assert np.allclose(t, [0.0, 0.3, 0.6, 0.9, 1.0])
    assert step_times(2.0, 2.0, 0.1).tolist() == [2.0]
    assert step_times(0.0, 1.0, 0.1).size == 11
    with pytest.raises(ValueError):
        step_times(1.0, 0.0, 0.1)
    with pytest.raises(ValueError):
        step_times(0.0, 10.0, 1e-3, max_steps=100)


def test_config_validation():
    with pytest.raises(ValueError):
        IntegratorConfig(dt=0.0)
    with pytest.raises(ValueError):
        IntegratorConfig(scheme="Euler")


def test_linear_saddle_flow_map_analytic():
    x = flow_map(FlowModel.linear_saddle(), (1.0, 1.0), 0.0, 1.0)
    assert np.allclose(x, [math.exp(-1), math.e], atol=1e-8, rtol=0)


@pytest.mark.parametrize("T", [0.37, 1.0, 2.5])
def test_linear_saddle_gradient_analytic(T):
    s = flow_map_with_gradient(FlowModel.linear_saddle(), (0.2, -0.7), 1.0, 1.0 + T)
    assert np.allclose(s.df, np.diag([math.exp(-T), math.exp(T)]), atol=1e-8 * math.exp(T))


def test_identity_at_zero_span():
    for m in (DG, FlowModel.moving_separation()):
        s = flow_map_with_gradient(m, X0, 0.3, 0.3)
        assert tuple(s.x1) == X0
        assert np.array_equal(s.df, np.eye(2))


def test_double_gyre_against_fine_step_reference(dg_reference):
    x = flow_map(DG, X0, 0.0, 5.0, IntegratorConfig(dt=1e-3))
    assert np.abs(x - dg_reference).max() <= 1e-6


def test_rk4_fourth_order(dg_reference):
    e1 = np.abs(flow_map(DG, X0, 0.0, 5.0, IntegratorConfig(dt=0.1)) - dg_reference).max()
    e2 = np.abs(flow_map(DG, X0, 0.0, 5.0, IntegratorConfig(dt=0.05)) - dg_reference).max()
    assert 12.0 <= e1 / e2 <= 20.0


def test_deformation_gradient_matches_fd_of_flow_map():
    s = flow_map_with_gradient(DG, X0, 0.0, 5.0)
    h = 1e-6
    cols = []
    for e in (np.array([h, 0.0]), np.array([0.0, h])):
        cols.append((flow_map(DG, np.add(X0, e), 0.0, 5.0) - flow_map(DG, np.subtract(X0, e), 0.0, 5.0)) / (2 * h))
    assert np.abs(s.df - np.column_stack(cols)).max() <= 1e-4


@pytest.mark.parametrize("m", [DG, FlowModel.moving_separation(), FlowModel.transition_saddle()],
                         ids=lambda m: m.kind)
def test_area_preservation(m):
    rng = np.random.default_rng(3)
    for x0 in rng.uniform(0.05, 0.95, (5, 2)):
        s = flow_map_with_gradient(m, x0, 0.0, 5.0 if m.kind != "moving-separation" else 1.0)
        assert abs(np.linalg.det(s.df) - 1.0) <= 1e-5


def test_composition():
    mid = flow_map(DG, X0, 0.0, 2.3)
    assert np.abs(flow_map(DG, mid, 2.3, 5.0) - flow_map(DG, X0, 0.0, 5.0)).max() <= 1e-6


def test_record_trajectory_layout():
    rec = record_trajectory(FlowModel.linear_saddle(), (0.5, 0.5), 0.0, 1.05, IntegratorConfig(dt=0.1))
    assert rec.times.size == math.floor(1.05 / 0.1) + 1 + 1
    assert rec.times[-1] == 1.05
    for k in range(rec.times.size):
        t = rec.times[k]
        assert np.allclose(rec.df(k), np.diag([math.exp(-t), math.exp(t)]), atol=1e-8 * math.exp(t) * 1e2)
    assert not rec.states.flags.writeable
    single = record_trajectory(DG, X0, 0.0, 0.0)
    assert single.times.tolist() == [0.0]


def test_record_df_linear_saddle_fine():
    rec = record_trajectory(FlowModel.linear_saddle(), (0.5, 0.5), 0.0, 1.0)
    err = max(np.abs(rec.df(k) - np.diag([math.exp(-t), math.exp(t)])).max()
              for k, t in enumerate(rec.times))
    assert err <= 1e-8


def test_refine_crossing_linear_saddle():
    rec = record_trajectory(FlowModel.linear_saddle(), (0.1, 0.1), 0.0, 2.0)
    t = refine_crossing(FlowModel.linear_saddle(), rec, lambda_max_monitor, 4.0, EventMode.BISECT)
    assert abs(t - math.log(2)) <= 1e-8
    ts = refine_crossing(FlowModel.linear_saddle(), rec, lambda_max_monitor, 4.0, EventMode.STEP)
    assert t <= ts <= t + 1e-3


def test_refine_crossing_immediate_and_missing():
    m = FlowModel.linear_saddle()
    rec = record_trajectory(m, (0.1, 0.1), 0.5, 0.2)
    assert refine_crossing(m, rec, lambda_max_monitor, 0.5) == 0.5
    with pytest.raises(NotCrossedError):
        refine_crossing(m, rec, lambda_max_monitor, 100.0)


def test_event_mode_parse():
    assert EventMode.parse("Bisection") is EventMode.BISECT
    assert EventMode.parse("step") is EventMode.STEP
    with pytest.raises(ValueError):
        EventMode.parse("secant")
