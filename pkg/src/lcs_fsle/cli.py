"""``lcs`` command-line interface.

Every subcommand prints one machine-readable ``key=value`` summary line.
Exit codes: 0 success, 1 runtime error, 2 usage error.
"""

import argparse
import csv
import math
import sys

import numpy as np

from . import kernels
from .errors import LCSError
from .flows import DEFAULT_PARAMS, FLOW_IDS, FlowModel, parse_params
from .integrator import IntegratorConfig
from .scalar_field import METHODS, GridSpec, ScalarGrid, read_grid, write_grid, write_image


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _summary(**kv):
    parts = []
    for k, v in kv.items():
        if isinstance(v, bool):
            v = "true" if v else "false"
        elif isinstance(v, float):
            v = "%.10g" % v
        parts.append(f"{k}={v}")
    print(" ".join(parts))


def _pos_float(text):
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return v


def _add_flow(p):
    p.add_argument("--flow", required=True, choices=sorted(FLOW_IDS))
    p.add_argument("--param", default="", help="comma-separated key=value flow parameters")
    p.add_argument("--flip-hamiltonian", action="store_true",
                   help="reverse the stream-function sign (moving-separation)")


def _add_integration(p):
    p.add_argument("--t0", type=float, default=0.0)
    p.add_argument("--dt", type=_pos_float, default=1e-3)
    p.add_argument("--threads", type=int, default=None)


def _add_separation(p, probes=True):
    p.add_argument("--r", type=float, required=True)
    p.add_argument("--horizon", "--max-horizon", dest="horizon", type=_pos_float, default=50.0,
                   help="maximum integration time")
    p.add_argument("--event-mode", choices=("step", "bisect"), default="bisect")
    if probes:
        p.add_argument("--delta0", type=_pos_float, default=1e-3)
        p.add_argument("--probes", type=int, default=8)


def _add_output(p):
    p.add_argument("--out", required=True, help="grid file to write")
    p.add_argument("--image", help="optional PGM image path")
    p.add_argument("--lo", type=float, default=None, help="image value mapped to 0")
    p.add_argument("--hi", type=float, default=None, help="image value mapped to 255")


def build_parser():
    ap = _Parser(prog="lcs", description="FTLE / FSLE / ISLE fields, jumps and ridges for 2-D flows")
    sub = ap.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    sub.add_parser("list-flows", help="list flow ids and default parameters")

    p = sub.add_parser("ftle", help="finite-time Lyapunov exponent field")
    _add_flow(p)
    p.add_argument("--grid", required=True)
    _add_integration(p)
    p.add_argument("--horizon", type=_pos_float, required=True, help="integration time T")
    _add_output(p)

    for name, helptext in (("fsle", "finite-size Lyapunov exponent field"),
                           ("isle", "infinitesimal-size Lyapunov exponent field")):
        p = sub.add_parser(name, help=helptext)
        _add_flow(p)
        p.add_argument("--grid", required=True)
        _add_integration(p)
        _add_separation(p, probes=name == "fsle")
        p.add_argument("--field", choices=("fsle", "tau") if name == "fsle" else ("isle", "tau0", "margin"),
                       default=name, help="quantity written to the grid")
        _add_output(p)

    p = sub.add_parser("jumps", help="scan for separation-time jumps (degenerate crossings)")
    _add_flow(p)
    p.add_argument("--grid", required=True)
    _add_integration(p)
    _add_separation(p, probes=False)
    p.add_argument("--out", required=True, help="CSV of flagged points")

    p = sub.add_parser("ridges", help="extract ridges from a grid file")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--out", required=True, help="CSV with curve_id,x1,x2 rows")
    p.add_argument("--method", choices=METHODS, default="hermite")
    p.add_argument("--tol-grad", type=_pos_float, default=None)

    p = sub.add_parser("continue", help="test continuation of an FSLE ridge into an FTLE ridge")
    _add_flow(p)
    _add_integration(p)
    _add_separation(p)
    p.add_argument("--rho", type=_pos_float, required=True)
    p.add_argument("--curve", required=True,
                   help="ridge polyline as 'x1:x2,x1:x2,...' or a CSV file with x1,x2 columns")
    p.add_argument("--spacing", type=_pos_float, default=None, help="box grid spacing (default rho/10)")
    p.add_argument("--match-cells", type=_pos_float, default=3.0)
    p.add_argument("--out", help="optional file for the key=value report")

    p = sub.add_parser("sensitivity", help="separation-time sensitivity to dt and event mode")
    _add_flow(p)
    p.add_argument("--grid", required=True)
    p.add_argument("--t0", type=float, default=0.0)
    p.add_argument("--threads", type=int, default=None)
    _add_separation(p)
    p.add_argument("--coarse-dt", type=_pos_float, default=0.1)
    p.add_argument("--fine-dt", type=_pos_float, default=1e-3)
    p.add_argument("--kind", choices=("tau", "tau0"), default="tau",
                   help="finite-size (tau) or infinitesimal (tau0) separation time")
    p.add_argument("--out", required=True, help="grid file of |delta tau|")
    p.add_argument("--flags-out", help="grid file with 1 at flagged jump points, 0 elsewhere")
    return ap


def _model(a):
    try:
        return FlowModel(a.flow, parse_params(a.param), a.flip_hamiltonian)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _grid(text):
    try:
        return GridSpec.parse(text)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _sep_params(a, event_mode=None):
    from .separation import SeparationParams

    try:
        return SeparationParams(r=a.r, delta0=getattr(a, "delta0", 1e-3),
                                n_probes=getattr(a, "probes", 8), horizon=a.horizon,
                                event_mode=event_mode or a.event_mode)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _cfg(dt):
    try:
        return IntegratorConfig(dt=dt)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _field_stats(g):
    v = g.flat()
    fin = np.isfinite(v)
    n = v.size
    return dict(points=n, missing=int(n - fin.sum()),
                undefined_pct=100.0 * (n - fin.sum()) / n,
                min=float(v[fin].min()) if fin.any() else math.nan,
                max=float(v[fin].max()) if fin.any() else math.nan)


def _write_outputs(a, g):
    if a.lo is not None and a.hi is not None and not a.lo < a.hi:
        raise UsageError("--lo must be smaller than --hi")
    write_grid(g, a.out)
    if a.image:
        st = _field_stats(g)
        lo = a.lo if a.lo is not None else st["min"]
        hi = a.hi if a.hi is not None else st["max"]
        if not (math.isfinite(lo) and math.isfinite(hi)) or not lo < hi:
            lo, hi = (0.0, 1.0) if not math.isfinite(lo) else (lo, lo + 1.0)
        write_image(g, a.image, lo, hi)


def cmd_list_flows(a):
    for name in FLOW_IDS:
        ps = ",".join(f"{k}={v:g}" for k, v in DEFAULT_PARAMS[name].items())
        print(f"{name} {ps}")
    _summary(command="list-flows", flows=len(FLOW_IDS))


def cmd_ftle(a):
    from .separation import FieldKind, compute_field

    m, spec, cfg = _model(a), _grid(a.grid), _cfg(a.dt)
    g = compute_field(FieldKind.FTLE, m, spec, a.t0, a.horizon, cfg, a.threads)
    _write_outputs(a, g)
    _summary(command="ftle", flow=m.kind, nx=spec.nx, ny=spec.ny, horizon=a.horizon,
             out=a.out, **_field_stats(g))


def cmd_separation(a):
    from .separation import FieldKind, compute_field

    m, spec, cfg = _model(a), _grid(a.grid), _cfg(a.dt)
    p = _sep_params(a)
    g = compute_field(FieldKind(a.field), m, spec, a.t0, p, cfg, a.threads)
    _write_outputs(a, g)
    extra = dict(delta0=p.delta0, probes=p.n_probes) if a.command == "fsle" else {}
    _summary(command=a.command, field=a.field, flow=m.kind, nx=spec.nx, ny=spec.ny, r=p.r,
             horizon=p.horizon, event_mode=p.event_mode.value, **extra, out=a.out, **_field_stats(g))


def cmd_jumps(a):
    from .separation import degeneracy_scan

    m, spec, cfg = _model(a), _grid(a.grid), _cfg(a.dt)
    p = _sep_params(a)
    kernels.set_threads(a.threads)
    flags = degeneracy_scan(m, spec, a.t0, p, cfg)
    with open(a.out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x1", "x2", "tau0", "tau0_neighbor", "jump", "margin", "d2t_lambda",
                    "dx1_lambda", "dx2_lambda"])
        for f in flags:
            w.writerow(["%.17g" % v for v in (*f.x, f.tau0, f.tau0_neighbor, f.jump, f.margin,
                                               f.d2t_lambda, *f.dx_lambda)])
    biggest = max((f.jump for f in flags), default=0.0)
    _summary(command="jumps", flow=m.kind, nx=spec.nx, ny=spec.ny, r=p.r, flags=len(flags),
             max_jump=biggest, out=a.out)


def cmd_ridges(a):
    from .ridges import extract_ridges

    g = read_grid(a.inp)
    ridges = extract_ridges(g, a.tol_grad, a.method)
    with open(a.out, "w", newline="") as fh:
        fh.write("curve_id,x1,x2\n")
        for k, rc in enumerate(ridges):
            for x in rc.points:
                fh.write(f"{k},{x[0]:.17g},{x[1]:.17g}\n")
    _summary(command="ridges", curves=len(ridges), points=sum(len(r.points) for r in ridges),
             out=a.out)


def _parse_curve(text):
    if "," in text and ":" in text:
        try:
            return np.array([[float(v) for v in item.split(":")] for item in text.split(",")])
        except ValueError:
            raise UsageError(f"bad curve {text!r}") from None
    rows = []
    with open(text) as fh:
        for row in csv.reader(fh):
            if not row or row[0].strip().lower() in ("x1", "curve_id"):
                continue
            vals = [float(v) for v in row]
            rows.append(vals[-2:])
    return np.array(rows)


def cmd_continue(a):
    from .ridges import continue_fsle_ridge

    m, cfg = _model(a), _cfg(a.dt)
    p = _sep_params(a)
    curve = _parse_curve(a.curve)
    if curve.ndim != 2 or curve.shape[0] < 2 or curve.shape[1] != 2:
        raise UsageError("curve needs at least two x1:x2 points")
    rep = continue_fsle_ridge(m, p, curve, a.rho, cfg, t0=a.t0, spacing=a.spacing,
                              match_cells=a.match_cells, threads=a.threads)
    text = rep.to_text()
    if a.out:
        with open(a.out, "w", newline="\n") as fh:
            fh.write(text + "\n")
    print(" ".join(text.splitlines()))


def cmd_sensitivity(a):
    from .separation import FieldKind, compute_field, degeneracy_scan

    m, spec = _model(a), _grid(a.grid)
    coarse, fine = _cfg(a.coarse_dt), _cfg(a.fine_dt)
    kind = FieldKind.TAU if a.kind == "tau" else FieldKind.TAU0
    p_step, p_bis = _sep_params(a, "step"), _sep_params(a, "bisect")
    g_c = compute_field(kind, m, spec, a.t0, p_step, coarse, a.threads)
    g_f = compute_field(kind, m, spec, a.t0, p_bis, fine, a.threads)
    diff = np.abs(g_c.values - g_f.values)
    write_grid(ScalarGrid(spec, diff), a.out)
    flags = degeneracy_scan(m, spec, a.t0, p_bis, fine)
    if a.flags_out:
        mark = np.zeros((spec.ny, spec.nx))
        for f in flags:
            mark[f.index] = 1.0
        write_grid(ScalarGrid(spec, mark), a.flags_out)
    fin = np.isfinite(diff)
    big = int(np.sum(diff[fin] >= 10 * a.coarse_dt))
    _summary(command="sensitivity", kind=a.kind, flow=m.kind, points=spec.size,
             coarse_dt=a.coarse_dt, fine_dt=a.fine_dt,
             max_dtau=float(diff[fin].max()) if fin.any() else math.nan,
             large_points=big, flags=len(flags), out=a.out)


COMMANDS = {
    "list-flows": cmd_list_flows,
    "ftle": cmd_ftle,
    "fsle": cmd_separation,
    "isle": cmd_separation,
    "jumps": cmd_jumps,
    "ridges": cmd_ridges,
    "continue": cmd_continue,
    "sensitivity": cmd_sensitivity,
}


_VALUE_FLAGS = ("--grid", "--curve")


def _join_values(argv):
    # values such as "-1:1:51,-1:1:51" start with '-' and would be read as flags
    out, it = [], iter(argv)
    for tok in it:
        if tok in _VALUE_FLAGS:
            nxt = next(it, None)
            out.append(tok if nxt is None else f"{tok}={nxt}")
        else:
            out.append(tok)
    return out


def run(argv=None):
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        a = parser.parse_args(_join_values(argv))
        COMMANDS[a.command](a)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (LCSError, OSError, ValueError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
