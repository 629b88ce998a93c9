"""Ridge extraction and verification on scalar grids, plus FSLE-to-FTLE ridge continuation."""

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import MissingDataError, NotInZ0Error, OutOfBoundsError
from .integrator import IntegratorConfig
from .scalar_field import (HERMITE, CriticalKind, CriticalPoint, GridSpec, ScalarGrid,
                           classify, find_critical_points, newton_critical)
from .strain import eig_sym2

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class GradientFlowResult:
    points: np.ndarray     # (n, 2) polyline including the start
    status: str            # "converged" | "out_of_bounds" | "missing_data" | "max_steps"

    @property
    def end(self):
        return self.points[-1]


def _grad(g, x, method):
    return g.evaluate(x, method, 1)[1]


def default_flow_step(g, method=HERMITE):
    """Largest pseudo-time step kept for RK4 stability: about 1 / |Hessian| (Gershgorin bound)."""
    fx, fy, fxy = g.slopes(method)
    s = g.spec
    fxx = np.gradient(fx, s.h1, axis=1)
    fyy = np.gradient(fy, s.h2, axis=0)
    bound = np.abs(fxx) + np.abs(fyy) + 2 * np.abs(fxy)
    bound = bound[np.isfinite(bound)]
    top = float(np.percentile(bound, 99)) if bound.size else 0.0
    h = min(s.h1, s.h2)
    return 1.0 / top if top > 0 else h


def gradient_flow_trajectory(g, x_start, step=None, max_steps=20000, tol_grad=None,
                             method=HERMITE):
    """RK4 integration of dx/ds = grad f(x) on the interpolated field.

    The pseudo-time step is ``step`` (default: a stability bound) shortened so
    that no step moves more than half a grid cell.
    """
    tol = g.default_tol_grad() if tol_grad is None else tol_grad
    hmax = default_flow_step(g, method) if step is None else step
    half_cell = 0.5 * min(g.spec.h1, g.spec.h2)
    x = np.asarray(x_start, dtype=float).copy()
    pts = [x.copy()]
    try:
        k1 = _grad(g, x, method)
    except OutOfBoundsError:
        return GradientFlowResult(np.array(pts), "out_of_bounds")
    except MissingDataError:
        return GradientFlowResult(np.array(pts), "missing_data")
    for _ in range(max_steps):
        gn = math.hypot(*k1)
        if gn <= tol:
            return GradientFlowResult(np.array(pts), "converged")
        h = min(hmax, half_cell / gn)
        try:
            k2 = _grad(g, x + 0.5 * h * k1, method)
            k3 = _grad(g, x + 0.5 * h * k2, method)
            k4 = _grad(g, x + h * k3, method)
            x = x + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
            pts.append(x.copy())
            k1 = _grad(g, x, method)
        except OutOfBoundsError:
            return GradientFlowResult(np.array(pts), "out_of_bounds")
        except MissingDataError:
            return GradientFlowResult(np.array(pts), "missing_data")
    return GradientFlowResult(np.array(pts), "max_steps")


@dataclass(frozen=True)
class RidgeCurve:
    points: np.ndarray                 # ordered polyline (n, 2), n >= 3
    endpoints: tuple                   # two CriticalPoint records
    interior_criticals: tuple = ()
    source: str = "heteroclinic"       # or "critical-line"

    def __post_init__(self):
        p = np.asarray(self.points, dtype=float)
        if p.ndim != 2 or p.shape[1] != 2 or p.shape[0] < 3:
            raise ValueError("a ridge polyline needs at least 3 points")
        p.setflags(write=False)
        object.__setattr__(self, "points", p)

    @classmethod
    def from_polyline(cls, g, points, method=HERMITE):
        """Wrap an arbitrary polyline, taking its end nodes as the endpoint records."""
        p = np.asarray(points, dtype=float)
        ends = []
        for x in (p[0], p[-1]):
            hs = g.evaluate(x, method, 2)[2]
            ends.append(CriticalPoint((float(x[0]), float(x[1])), hs, classify(hs)))
        return cls(p, tuple(ends), (), "given")

    @property
    def length(self):
        return float(np.sum(np.hypot(*np.diff(self.points, axis=0).T)))


def _near(cps, x, tol):
    best, dist = None, math.inf
    for c in cps:
        d = math.hypot(c.x[0] - x[0], c.x[1] - x[1])
        if d < dist:
            best, dist = c, d
    return best if dist <= tol else None


def _critical_at(g, x, tol, method):
    x = newton_critical(g, x, tol, method) if tol is not None else x
    if x is None:
        return None
    hs = g.evaluate(x, method, 2)[2]
    return CriticalPoint((float(x[0]), float(x[1])), hs, classify(hs))


def _thin(points, min_gap):
    out = [points[0]]
    for p in points[1:-1]:
        if math.hypot(*(p - out[-1])) >= min_gap:
            out.append(p)
    out.append(points[-1])
    return np.array(out)


def _is_line_point(c):
    ep = eig_sym2(c.hessian)
    scale = max(abs(ep.lambda_min), abs(ep.lambda_max))
    return c.kind is CriticalKind.DEGENERATE and scale > 0 and ep.lambda_min < -1e-6 * scale


def _critical_lines(g, cps):
    """Chains of degenerate critical points (a ridge made of critical points).

    Happens when f is exactly constant along the ridge, e.g. FTLE of a flow
    whose stretching does not depend on the along-ridge coordinate.
    """
    s = g.spec
    cand = [c for c in cps if _is_line_point(c)]
    if len(cand) < 3:
        return []
    xy = np.array([c.x for c in cand])
    link = 2.5 * math.hypot(s.h1, s.h2)
    n = len(cand)
    parent = list(range(n))

    def root(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        d = np.hypot(*(xy[i + 1:] - xy[i]).T)
        for j in np.nonzero(d <= link)[0]:
            parent[root(i)] = root(i + 1 + j)
    groups = {}
    for i in range(n):
        groups.setdefault(root(i), []).append(i)
    curves = []
    for idx in groups.values():
        if len(idx) < 3:
            continue
        pts = xy[idx]
        centre = pts.mean(axis=0)
        _, _, vt = np.linalg.svd(pts - centre)
        proj = (pts - centre) @ vt[0]
        order = np.argsort(proj, kind="stable")
        members = [cand[idx[k]] for k in order]
        curves.append(RidgeCurve(pts[order], (members[0], members[-1]),
                                 tuple(members[1:-1]), "critical-line"))
    return curves


def extract_ridges(g, tol_grad=None, method=HERMITE, step=None, max_steps=20000, offset=None):
    """Saddle-to-maximum heteroclinic chains of the gradient flow of ``g``.

    From each saddle two trajectories leave along +/- the unstable Hessian
    eigenvector; chains whose both branches end at maxima become ridges.
    Lines of degenerate critical points with a negative transverse curvature
    are returned as ridges too.
    """
    tol = g.default_tol_grad() if tol_grad is None else tol_grad
    s = g.spec
    h = min(s.h1, s.h2)
    eps = 1e-2 * h if offset is None else offset
    cps = find_critical_points(g, tol, method)
    step = default_flow_step(g, method) if step is None else step
    ridges, discarded = [], 0
    for c in cps:
        if c.kind is not CriticalKind.SADDLE:
            continue
        e = np.asarray(eig_sym2(c.hessian).e_max)
        branches, ends = [], []
        for sign in (1.0, -1.0):
            start = np.asarray(c.x) + sign * eps * e
            res = gradient_flow_trajectory(g, start, step, max_steps, tol, method)
            if res.status != "converged":
                break
            end = _near(cps, res.end, 1.5 * math.hypot(s.h1, s.h2)) or _critical_at(g, res.end, tol, method)
            if end is None or end.kind is not CriticalKind.MAX:
                break
            branches.append(res.points)
            ends.append(end)
        if len(branches) != 2:
            discarded += 1
            continue
        a = np.vstack([branches[0][::-1], np.asarray(c.x)[None], branches[1]])
        a = np.vstack([np.asarray(ends[0].x)[None], a, np.asarray(ends[1].x)[None]])
        pts = _thin(a, 0.25 * h)
        if pts.shape[0] < 3:
            discarded += 1
            continue
        ridges.append(RidgeCurve(pts, (ends[0], ends[1]), (c,), "heteroclinic"))
    ridges.extend(_critical_lines(g, cps))
    if discarded:
        log.warning("extract_ridges: %d unterminated chains discarded", discarded)
    extract_ridges.last_discarded = discarded
    ridges.sort(key=lambda r: (float(r.points[:, 0].min()), float(r.points[:, 1].min())))
    return ridges


extract_ridges.last_discarded = 0


# verification -----------------------------------------------------------------------------

def lyapunov_type_number(h):
    """lambda_min / lambda_max of a Hessian with lambda_min < lambda_max < 0."""
    ep = eig_sym2(h)
    if ep.degenerate or not ep.lambda_max < 0.0 or not ep.lambda_min < ep.lambda_max:
        raise NotInZ0Error(f"eigenvalues ({ep.lambda_min}, {ep.lambda_max}) are not in Z0")
    return ep.lambda_min / ep.lambda_max


def smoothness_degree(lyapunov_numbers, s=2, p=2):
    """q = min(s - 1, p, min Int[ratio]); the last term is skipped when there are no ratios."""
    q = min(s - 1, p)
    for nu in lyapunov_numbers:
        q = min(q, int(math.floor(nu)))
    return q


@dataclass(frozen=True)
class RidgeReport:
    tangency_error: float
    endpoint_ok: bool
    interior_ok: bool
    lyapunov_numbers: tuple
    smoothness_degree_q: int
    min_alignment: float
    passed: bool = field(default=False)


def _resample(points, n):
    p = np.asarray(points, dtype=float)
    seg = np.hypot(*np.diff(p, axis=0).T)
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    if cum[-1] == 0:
        return np.repeat(p[:1], n, axis=0)
    u = np.linspace(0.0, cum[-1], n)
    return np.column_stack([np.interp(u, cum, p[:, 0]), np.interp(u, cum, p[:, 1])])


def _tangents(points):
    p = np.asarray(points, dtype=float)
    t = np.gradient(p, axis=0)
    n = np.hypot(t[:, 0], t[:, 1])
    n[n == 0] = 1.0
    return t / n[:, None]


def _tangent_at(points, x):
    p = np.asarray(points, dtype=float)
    d = np.hypot(*(p - np.asarray(x)).T)
    k = int(np.argmin(d))
    return _tangents(p)[k]


def verify_ridge(g, curve, s=2, p=2, tangency_tol=0.05, align_tol_deg=5.0, n_samples=200,
                 method=HERMITE):
    """Check the one-dimensional ridge conditions on ``curve``.

    Tangency is measured on samples away from the critical points (where the
    gradient vanishes and its direction is meaningless).
    """
    pts = _resample(curve.points, max(n_samples, 20))
    tang = _tangents(pts)
    normals = np.column_stack([-tang[:, 1], tang[:, 0]])
    crit = list(curve.endpoints) + list(curve.interior_criticals)
    h = math.hypot(g.spec.h1, g.spec.h2)
    tol_abs = g.default_tol_grad() * 1e3
    worst = 0.0
    for x, nrm in zip(pts, normals):
        if any(math.hypot(x[0] - c.x[0], x[1] - c.x[1]) < 2.0 * h for c in crit):
            continue
        grad = g.evaluate(x, method, 1)[1]
        gn = math.hypot(*grad)
        if gn <= tol_abs:
            continue
        worst = max(worst, abs(float(grad @ nrm)) / gn)

    lyap = []
    endpoint_ok = True
    for c in curve.endpoints:
        ep = eig_sym2(c.hessian)
        if not ep.lambda_max < 0.0:
            endpoint_ok = False
        try:
            lyap.append(lyapunov_type_number(c.hessian))
        except NotInZ0Error:
            pass

    interior_ok = True
    min_align = math.inf
    for c in curve.interior_criticals:
        ep = eig_sym2(c.hessian)
        t = _tangent_at(curve.points, c.x)
        nrm = np.array([-t[1], t[0]])
        align = abs(float(np.asarray(ep.e_min) @ nrm))
        min_align = min(min_align, align)
        if not (ep.lambda_min < 0.0 and align >= math.cos(math.radians(align_tol_deg))):
            interior_ok = False
        try:
            lyap.append(lyapunov_type_number(c.hessian))
        except NotInZ0Error:
            pass
    if not curve.interior_criticals:
        min_align = math.nan

    q = smoothness_degree(lyap, s, p)
    passed = (worst <= tangency_tol and endpoint_ok and interior_ok and all(v > 1.0 for v in lyap))
    return RidgeReport(worst, endpoint_ok, interior_ok, tuple(lyap), q, min_align, passed)


# continuation ----------------------------------------------------------------------------

@dataclass(frozen=True)
class ContinuationReport:
    tau_bar: float
    epsilon: float
    rho: float
    matched: bool
    hausdorff_c0: float
    c1_angle: float
    degenerate_neighborhood: bool
    grid_spacing: float
    n_undefined: int
    n_ftle_ridges: int

    def to_text(self):
        rows = []
        for k, v in self.__dict__.items():
            if isinstance(v, bool):
                v = "true" if v else "false"
            elif isinstance(v, float):
                v = "%.17g" % v
            rows.append(f"{k}={v}")
        return "\n".join(rows)


def _point_segment_distances(q, poly):
    """Distance from each point of q (m,2) to the polyline poly (n,2); returns (dist, segment index)."""
    a = poly[:-1]
    b = poly[1:]
    ab = b - a
    ll = np.einsum("ij,ij->i", ab, ab)
    ll[ll == 0] = 1.0
    d = q[:, None, :] - a[None, :, :]
    t = np.clip(np.einsum("mij,ij->mi", d, ab) / ll, 0.0, 1.0)
    proj = a[None] + t[..., None] * ab[None]
    dist = np.hypot(*(q[:, None, :] - proj).transpose(2, 0, 1))
    k = np.argmin(dist, axis=1)
    return dist[np.arange(q.shape[0]), k], k


def match_ridges(reference, candidates, threshold):
    """Best candidate ridge for a reference polyline.

    Returns (matched, hausdorff_c0, c1_angle, index): hausdorff_c0 is the largest
    distance from a reference sample to the candidate polyline, minimised over
    candidates; c1_angle the largest tangent-direction difference (radians).
    """
    ref = np.asarray(reference, dtype=float)
    best = (math.inf, math.nan, -1)
    for idx, c in enumerate(candidates):
        poly = np.asarray(c.points if hasattr(c, "points") else c, dtype=float)
        if poly.shape[0] < 2:
            continue
        dist, seg = _point_segment_distances(ref, poly)
        dmax = float(dist.max())
        if dmax < best[0]:
            t_ref = _tangents(ref)
            ab = poly[seg + 1] - poly[seg]
            ab /= np.maximum(np.hypot(ab[:, 0], ab[:, 1]), 1e-300)[:, None]
            cosang = np.clip(np.abs(np.einsum("ij,ij->i", t_ref, ab)), 0.0, 1.0)
            best = (dmax, float(np.arccos(cosang).max()), idx)
    dmax, ang, idx = best
    return (math.isfinite(dmax) and dmax <= threshold), dmax, ang, idx


def refine_along_normals(g, polyline, rho, n_samples=None, method=HERMITE):
    """Move each sample of ``polyline`` to the maximum of ``g`` along its normal within +/- rho.

    Samples whose normal profile is flat (or fully missing) stay in place.
    """
    s = g.spec
    h = min(s.h1, s.h2)
    poly = np.asarray(polyline, dtype=float)
    length = float(np.sum(np.hypot(*np.diff(poly, axis=0).T)))
    n = n_samples or max(20, int(round(length / h)) + 1)
    pts = _resample(poly, n)
    tang = _tangents(pts)
    normals = np.column_stack([-tang[:, 1], tang[:, 0]])
    offs = np.linspace(-rho, rho, 2 * int(math.ceil(4 * rho / h)) + 1)
    out = pts.copy()
    for k, (x, nrm) in enumerate(zip(pts, normals)):
        vals = np.full(offs.size, np.nan)
        for m, o in enumerate(offs):
            try:
                vals[m] = g.evaluate(x + o * nrm, method, 0)
            except (OutOfBoundsError, MissingDataError):
                pass
        fin = np.isfinite(vals)
        if not fin.any():
            continue
        v = np.where(fin, vals, -np.inf)
        top = float(v.max())
        spread = top - float(vals[fin].min())
        if spread <= 1e-9 * max(abs(top), 1.0):
            continue
        m = int(np.argmax(v))
        o = offs[m]
        if 0 < m < offs.size - 1 and fin[m - 1] and fin[m + 1]:
            den = vals[m - 1] - 2 * vals[m] + vals[m + 1]
            if den < 0:
                o += 0.5 * (vals[m - 1] - vals[m + 1]) / den * (offs[1] - offs[0])
        out[k] = x + o * nrm
    return out


def continue_fsle_ridge(m, fsle_params, curve, rho, cfg=IntegratorConfig(), t0=0.0,
                        spacing=None, match_cells=3.0, threads=None, method=HERMITE):
    """Test whether an FSLE ridge continues into an FTLE ridge at T = mean tau0.

    tau0 and its margin are sampled on a box grid (spacing rho/10 by default)
    covering the tube U of half-width rho around ``curve``.
    """
    from . import kernels
    from .separation import compute_field, isle_batch, FieldKind

    kernels.set_threads(threads)
    poly = np.asarray(curve.points if hasattr(curve, "points") else curve, dtype=float)
    h = rho / 10.0 if spacing is None else spacing
    pad = rho + 4 * h
    lo = poly.min(axis=0) - pad
    hi = poly.max(axis=0) + pad
    nx = int(math.ceil((hi[0] - lo[0]) / h)) + 1
    ny = int(math.ceil((hi[1] - lo[1]) / h)) + 1
    spec = GridSpec(lo[0], lo[0] + (nx - 1) * h, lo[1], lo[1] + (ny - 1) * h, nx, ny)
    pts = spec.points()

    dist, _ = _point_segment_distances(pts, poly)
    in_u = (dist <= rho + 1e-12).reshape(ny, nx)

    b = isle_batch(m, pts, t0, fsle_params, cfg)
    ok = (b.status != 1).reshape(ny, nx)
    tau0 = np.where(ok, b.tau.reshape(ny, nx), np.nan)
    margin = b.margin.reshape(ny, nx)
    n_undefined = int(np.sum(in_u & ~ok))
    degenerate = bool(np.any(in_u & ok & (np.abs(margin) <= fsle_params.tol_deg)))

    use = in_u & ok
    if use.any():
        tau_bar = float(np.mean(tau0[use]))
        d1 = np.gradient(tau0, h, h)
        d2 = [np.gradient(d1[0], h, h), np.gradient(d1[1], h, h)]
        first = np.maximum(np.abs(d1[0]), np.abs(d1[1]))
        second = np.max(np.abs(np.stack([d2[0][0], d2[0][1], d2[1][0], d2[1][1]])), axis=0)
        terms = [np.abs(tau0 - tau_bar), h * first, h ** 2 * second]
        epsilon = float(max(np.nanmax(np.where(use, t, np.nan)) for t in terms))
    else:
        tau_bar, epsilon = math.nan, math.nan

    fsle_grid = compute_field(FieldKind.FSLE, m, spec, t0, fsle_params, cfg)
    fsle_ridge = refine_along_normals(fsle_grid, poly, rho, method=method)

    n_ridges = 0
    matched, dmax, ang = False, math.inf, math.nan
    if math.isfinite(tau_bar) and tau_bar > 0:
        ftle_grid = compute_field(FieldKind.FTLE, m, spec, t0, tau_bar, cfg)
        ridges = extract_ridges(ftle_grid, method=method)
        n_ridges = len(ridges)
        matched, dmax, ang, _ = match_ridges(fsle_ridge, ridges, match_cells * h)
    return ContinuationReport(tau_bar, epsilon, rho, matched, dmax, ang, degenerate, h,
                              n_undefined, n_ridges)
