import math

import numpy as np
import pytest

from lcs_fsle import (FieldKind, FlowModel, GridSpec, IntegratorConfig, SeparationParams, Status,
                      compute_field, degeneracy_scan, eig_sym2, flow_map_with_gradient, cauchy_green,
                      fsle, fsle_tau, ftle, isle, isle_tau0, kernels)
from lcs_fsle.separation import isle_batch

LS = FlowModel.linear_saddle()
TS = FlowModel.transition_saddle(0.5, 0.6)
TR = FlowModel.transient_saddle(0.5, 0.6)
DG = FlowModel.double_gyre()
COARSE = IntegratorConfig(dt=1e-2)


def test_params_validation():
    with pytest.raises(ValueError):
        SeparationParams(r=1.0)
    with pytest.raises(ValueError):
        SeparationParams(r=2.0, delta0=0.0)
    with pytest.raises(ValueError):
        SeparationParams(r=2.0, n_probes=3)
    with pytest.raises(ValueError):
        SeparationParams(r=2.0, horizon=-1.0)
    p = SeparationParams(r=2.0, horizon=4.0, event_mode="step")
    assert p.tol_deg == pytest.approx(1e-6)
    assert not p.bisect


def test_isle_linear_saddle():
    o = isle_tau0(LS, (0.2, -0.3), 0.0, SeparationParams(r=2.0, horizon=5.0))
    assert o.status is Status.SEPARATED
    assert abs(o.tau - math.log(2)) <= 1e-8
    assert o.margin == pytest.approx(2 * 4.0, rel=1e-6)


def test_isle_transition_saddle_below_window():
    o = isle(TS, (0.4, -0.2), 0.0, SeparationParams(r=1.5, horizon=5.0))
    assert o.tau == pytest.approx(math.log(1.5), abs=1e-8)
    assert o.value == pytest.approx(1.0, abs=1e-8)


def test_transient_saddle_undefined():
    p = SeparationParams(r=2.1, delta0=1e-3, horizon=50.0)
    assert isle_tau0(TR, (0.3, 0.3), 0.0, p, COARSE).status is Status.UNDEFINED
    o = fsle_tau(TR, (0.3, 0.3), 0.0, p, COARSE)
    assert o.status is Status.UNDEFINED and math.isnan(o.tau) and math.isnan(o.value)


def test_fsle_linear_saddle():
    o = fsle(LS, (0.1, 0.1), 0.0, SeparationParams(r=2.0, delta0=1e-2, n_probes=8, horizon=5.0))
    assert abs(o.tau - math.log(2)) <= 1e-6
    assert o.value == pytest.approx(1.0, abs=1e-6)


def test_fsle_transition_saddle_insensitive():
    o = fsle(TS, (0.3, 0.2), 0.0, SeparationParams(r=1.5, delta0=1e-3, horizon=5.0))
    assert abs(o.value - 1.0) <= 5e-3


@pytest.mark.parametrize("r", [1.5, 2.0, 4.0])
def test_linear_identity(r):
    p = SeparationParams(r=r, delta0=1e-3, horizon=5.0)
    a = fsle(LS, (0.3, 0.1), 0.0, p)
    b = isle(LS, (0.3, 0.1), 0.0, p)
    lam = eig_sym2(cauchy_green(flow_map_with_gradient(LS, (0.3, 0.1), 0.0, b.tau).df)).lambda_max
    assert a.value == pytest.approx(b.value, abs=1e-6)
    assert a.value == pytest.approx(ftle(lam, 0.0, b.tau), abs=1e-6)


def test_double_gyre_fsle_close_to_isle():
    """First-order closeness at (0.30, 0.48): sigma within 10 delta0, tau error halves with delta0."""
    x0 = (0.30, 0.48)
    o0 = isle_tau0(DG, x0, 0.0, SeparationParams(r=6.0, horizon=50.0))
    errs = []
    for d in (1e-3, 5e-4):
        p = SeparationParams(r=6.0, delta0=d, n_probes=360, horizon=50.0)
        o = fsle_tau(DG, x0, 0.0, p)
        assert abs(o.value - o0.value) <= 10 * d
        errs.append(abs(o.tau - o0.tau))
    assert 1.3 <= errs[0] / errs[1] <= 3.0


def test_threshold_monotone_in_r_and_status_coherent():
    pts = np.random.default_rng(5).uniform(0.05, 0.95, (30, 2))
    prev = None
    for r in (2.0, 4.0, 8.0, 40.0):
        b = isle_batch(DG, pts, 0.0, SeparationParams(r=r, horizon=10.0), COARSE)
        tau = np.where(b.status == 1, np.inf, b.tau)
        if prev is not None:
            assert np.all(tau >= prev)
        prev = tau


def test_bisect_never_later_than_step():
    pts = np.random.default_rng(6).uniform(0.05, 0.95, (40, 2))
    from lcs_fsle.separation import fsle_batch
    cfg = IntegratorConfig(dt=0.05)
    a = isle_batch(DG, pts, 0.0, SeparationParams(r=4.0, horizon=20.0, event_mode="bisect"), cfg)
    b = isle_batch(DG, pts, 0.0, SeparationParams(r=4.0, horizon=20.0, event_mode="step"), cfg)
    both = (a.status != 1) & (b.status != 1)
    assert np.all(a.tau[both] <= b.tau[both])
    assert np.all(b.tau[both] - a.tau[both] <= 0.05 + 1e-12)
    ta, sa, _ = fsle_batch(DG, pts, 0.0, SeparationParams(r=4.0, delta0=1e-2, horizon=20.0), cfg)
    tb, sb, _ = fsle_batch(DG, pts, 0.0, SeparationParams(r=4.0, delta0=1e-2, horizon=20.0, event_mode="step"), cfg)
    ok = (sa == 0) & (sb == 0)
    assert np.all(ta[ok] <= tb[ok])


def test_no_flags_for_linear_saddle():
    assert degeneracy_scan(LS, GridSpec(-1, 1, -1, 1, 9, 9), 0.0, SeparationParams(r=3.0, horizon=5.0)) == []


def test_compute_field_ftle_linear_constant():
    g = compute_field(FieldKind.FTLE, LS, GridSpec(-1, 1, -1, 1, 7, 5), 0.0, 1.0)
    assert g.values.shape == (5, 7)
    assert np.allclose(g.values, 1.0, atol=1e-12)


def test_compute_field_isle_transition_constant():
    g = compute_field(FieldKind.ISLE, TS, GridSpec(-1, 1, -1, 1, 21, 21), 0.0,
                      SeparationParams(r=1.5, horizon=5.0))
    assert np.abs(g.values - 1.0).max() <= 1e-3


def test_compute_field_missing_values_and_margin():
    p = SeparationParams(r=2.1, delta0=1e-3, horizon=50.0)
    g = compute_field(FieldKind.TAU, TR, GridSpec(-1, 1, -1, 1, 5, 5), 0.0, p, COARSE)
    assert np.all(np.isnan(g.values))
    m = compute_field(FieldKind.MARGIN, LS, GridSpec(-1, 1, -1, 1, 3, 3), 0.0,
                      SeparationParams(r=2.0, horizon=5.0))
    assert np.allclose(m.values, 8.0, rtol=1e-6)


def test_field_independent_of_threads_and_backend():
    spec = GridSpec(0.05, 0.95, 0.05, 0.95, 9, 7)
    p = SeparationParams(r=4.0, delta0=1e-2, horizon=20.0)
    ref = compute_field(FieldKind.FSLE, DG, spec, 0.0, p, COARSE, threads=1).values
    again = compute_field(FieldKind.FSLE, DG, spec, 0.0, p, COARSE, threads=2).values
    assert np.array_equal(ref, again, equal_nan=True)
    with kernels.use_backend("numpy"):
        other = compute_field(FieldKind.FSLE, DG, spec, 0.0, p, COARSE).values
    assert np.allclose(ref, other, rtol=1e-9, equal_nan=True)


def test_ftle_field_invalid_horizon():
    from lcs_fsle import InvalidHorizonError
    with pytest.raises(InvalidHorizonError):
        compute_field(FieldKind.FTLE, LS, GridSpec(0, 1, 0, 1, 2, 2), 0.0, 0.0)


def test_degeneracy_flag_diagnostics_on_short_transect():
    spec = GridSpec(0.14, 0.18, 0.48, 0.48, 41, 1)
    flags = degeneracy_scan(DG, spec, 0.0, SeparationParams(r=6.0, horizon=50.0))
    assert len(flags) == 1
    f = flags[0]
    assert abs(f.x[0] - 0.1583) <= 0.01
    assert f.jump > 1.0
    # at the vanishing excursion lambda_max barely crosses: slow rise, curvature of a peak
    assert f.d2t_lambda < 0
    assert math.isfinite(f.dx_lambda[0]) and math.isnan(f.dx_lambda[1])


@pytest.mark.slow
def test_fsle_isle_first_order_constant_is_stable():
    """|sigma - sigma0| <= K delta0 on a 21x21 subgrid away from flagged jumps, K stable in delta0."""
    from lcs_fsle.separation import fsle_batch

    r = 2.0
    spec = GridSpec(0.1, 0.4, 0.1, 0.4, 21, 21)
    pts = spec.points()
    p = SeparationParams(r=r, horizon=50.0)
    b = isle_batch(DG, pts, 0.0, p)
    near_flag = set()
    for f in degeneracy_scan(DG, spec, 0.0, p):
        for j, i in (f.index, f.neighbor):
            near_flag.update((j + dj, i + di) for dj in (-1, 0, 1) for di in (-1, 0, 1))
    keep = np.array([b.status[k] == 0 and divmod(k, spec.nx) not in near_flag for k in range(spec.size)])
    assert keep.sum() >= 100
    sigma0 = math.log(r) / b.tau[keep]
    ks = []
    for d in (1e-3, 5e-4, 2.5e-4):
        tau, status, _ = fsle_batch(DG, pts[keep], 0.0, SeparationParams(r=r, delta0=d, n_probes=360, horizon=50.0))
        assert np.all(status == 0)
        ks.append(float(np.median(np.abs(math.log(r) / tau - sigma0) / d)))
    mean = np.mean(ks)
    assert all(0.5 * mean <= k <= 1.5 * mean for k in ks), ks
