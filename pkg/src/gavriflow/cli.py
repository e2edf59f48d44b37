"""Command-line front end.

Exit codes: 0 success, 1 numerical failure, 2 input error.
"""

import argparse
import math
import os
import sys
import warnings

import numpy as np

from . import fields as F
from .axisolver import detect_symmetry, extend_periodic, find_pc, solve_f
from .errors import DataError, ParameterError, GavriflowError
from .fileio import read_csv, write_csv, write_json
from .minpoint import (PSI_REF, critical_points, isolines, psi_grid, psi_taylor,
                       component_counts, figure2_levels, is_closed)
from .plotting import GLYPH_SCALE, curve_glyphs, isoline_glyphs, plot_generatrices, plot_isolines, plot_profiles
from .profiles import integrate_profiles, profile_table, series_beta_gamma, series_residuals
from .scenario import figure1_scenario, load_scenario

GEN_HEADER = ["p", "z", "f", "fp", "fz", "residF", "residG", "admissible"]
PROFILE_HEADER = ["p", "alpha", "beta", "gamma", "dbeta", "dgamma"]
PSI_HEADER = ["r", "z", "psi", "p", "resid2"]
AXI_HEADER = ["r", "z", "u_r", "u_z", "u_theta", "p", "mask"]
CART_HEADER = ["x", "y", "z", "u1", "u2", "u3", "p"]
LINE_HEADER = ["level", "component", "vertex", "r", "z"]


def _threads():
    raw = os.environ.get("GAVRIFLOW_THREADS")
    if raw is None:
        return None
    try:
        n = int(raw)
    except ValueError:
        raise DataError(f"GAVRIFLOW_THREADS must be an integer, got {raw!r}")
    if n < 1:
        raise DataError("GAVRIFLOW_THREADS must be at least 1")
    return n


def _scenario(args):
    sc = load_scenario(args.scenario) if args.scenario else figure1_scenario()
    if getattr(args, "step", None):
        sc = sc.with_steps(args.step, args.step)
    if getattr(args, "tol", None):
        from dataclasses import replace
        sc = replace(sc, tol=args.tol)
    sc.check_initial_point()
    return sc


def _out(args, name):
    os.makedirs(args.out, exist_ok=True)
    return os.path.join(args.out, name)


def _profiles(sc, step=None):
    return integrate_profiles(sc, (-1.0, 10.0), step or sc.p_step)


def _interval_summary(tr):
    return {"valid_interval": list(tr.valid_interval),
            "existence_interval": list(tr.existence_interval),
            "termination": dict(tr.termination)}


# ------------------------------------------------------------ commands

def cmd_profiles(args):
    sc = _scenario(args)
    tr = _profiles(sc)
    write_csv(_out(args, "profiles.csv"), PROFILE_HEADER, profile_table(tr))
    summary = _interval_summary(tr)
    write_json(_out(args, "profiles_summary.json"), summary)
    plot_profiles(profile_table(tr), _out(args, "profiles.svg"))
    lo, hi = tr.valid_interval
    print(f"valid interval ({lo:.6g}, {hi:.6g}); lower end: {tr.termination['lower']}, "
          f"upper end: {tr.termination['upper']}")
    return 0


def cmd_series(args):
    order = args.order or 6
    bs, gs = series_beta_gamma(order)
    rb, rg = series_residuals(bs, gs)
    write_json(_out(args, "series.json"), {"order": order, "variable": "alpha",
                                           "beta": bs.to_json(), "gamma": gs.to_json(),
                                           "exact": not any(rb) and not any(rg)})
    print(f"series to order {order} written")
    return 0


def _gen_rows(grid, index=None):
    rows = grid.rows()
    if index is None:
        return rows
    nz = len(grid.z)
    return np.concatenate([rows[i * nz:(i + 1) * nz] for i in index])


def _symmetry_summary(rep):
    return {"period": rep.period, "vertical": rep.vertical,
            "stations": [{"z0": s.z0, "kind": s.kind, "p_lo": s.p_lo, "p_hi": s.p_hi,
                          "spread": s.spread, "fzz_min": s.fzz_min} for s in rep.stations]}


def cmd_solve(args):
    sc = _scenario(args)
    tr = _profiles(sc)
    grid = solve_f(sc, tr)
    write_csv(_out(args, "generatrix.csv"), GEN_HEADER, grid.rows())
    rep = detect_symmetry(grid)
    summary = {"max_residual": grid.max_residual(interior=2), "degenerate": grid.degenerate,
               "notes": grid.notes, **_symmetry_summary(rep)}
    write_json(_out(args, "solve_summary.json"), summary)
    print(f"grid {grid.f.shape}, max residual {summary['max_residual']:.3g}, period {rep.period}")
    return 0


def cmd_fig1(args):
    sc = _scenario(args)
    tr = _profiles(sc)
    grid = solve_f(sc, tr)
    status = 0
    if grid.p[-1] < 0.16 - 1e-9:
        warnings.warn(f"solution stops at p={grid.p[-1]:.4g} before p=0.16; output is partial")
        status = 1
    rep = detect_symmetry(grid)
    targets = [0.02 * i for i in range(9)]
    index = [int(np.argmin(np.abs(grid.p - q))) for q in targets
             if np.min(np.abs(grid.p - q)) < 1e-9]
    write_csv(_out(args, "fig1_generatrix.csv"), GEN_HEADER, _gen_rows(grid, index))
    view = grid
    if rep.period is not None and len(rep.stations) >= 2:
        view = extend_periodic(grid, rep, copies=2)
    # one period centred on the first maximum station
    mx = [s.z0 for s in rep.stations if s.kind == "max"]
    zc = mx[0] if mx else 0.0
    half = (rep.period or (grid.z[-1] - grid.z[0])) / 2
    scale = args.glyph_scale if args.glyph_scale is not None else GLYPH_SCALE
    curves, glyphs = [], []
    for n, q in enumerate(targets):
        i = int(np.argmin(np.abs(view.p - q)))
        if abs(view.p[i] - q) > 1e-9:
            continue
        sel = (view.z >= zc - half - 1e-12) & (view.z <= zc + half + 1e-12)
        z, f, fz = view.z[sel], view.f[i, sel], view.fz[i, sel]
        curves.append((f"G{n}", z, f))
        if n in (0, 8):
            stride = max(1, int(round(0.1 / (z[1] - z[0]))))
            glyphs.append(curve_glyphs(z, f, fz, view.beta[i], scale, stride))
    plot_generatrices(curves, glyphs, _out(args, "fig1.svg"))
    p_c = None if args.no_pc else find_pc(sc, tr)
    summary = {"period": rep.period, "p_c": p_c, "curves": len(curves), "glyph_scale": scale,
               "max_residual": grid.max_residual(interior=2), **_interval_summary(tr),
               "stations": _symmetry_summary(rep)["stations"], "notes": grid.notes}
    write_json(_out(args, "fig1_summary.json"), summary)
    print(f"period {rep.period}, p_c {p_c}, {len(curves)} curves")
    return status


def cmd_fig2(args):
    order = args.order or 5
    poly = psi_taylor(order)
    field = psi_grid(poly)
    write_csv(_out(args, "fig2_psi.csv"), PSI_HEADER, field.rows())
    levels = figure2_levels()
    lines = isolines(field, levels)
    rows = []
    for li, lv in enumerate(levels, start=1):
        for ci, c in enumerate(lines[lv]):
            rows.extend((li, ci, k, x, y) for k, (x, y) in enumerate(c))
    write_csv(_out(args, "fig2_isolines.csv"), LINE_HEADER, rows)
    scale = args.glyph_scale if args.glyph_scale is not None else GLYPH_SCALE
    # glyphs on the closed (torus) components only
    glyphs = [isoline_glyphs(poly, c, levels[i - 1], scale) for i in (3, 5)
              for c in lines[levels[i - 1]] if is_closed(c)]
    crit = critical_points(poly)
    plot_isolines({f"G{i}": lines[lv] for i, lv in enumerate(levels, start=1)}, glyphs,
                  _out(args, "fig2.svg"), points=[(x, y, k) for (x, y), k in crit])
    report = {"order": order, "levels": levels, "pressures": [math.log(i) / 3 for i in range(1, 7)],
              "component_counts": component_counts(lines, levels),
              "critical_points": [{"r": x, "z": y, "type": k} for (x, y), k in crit]}
    write_json(_out(args, "fig2_report.json"), report)
    print(f"components {report['component_counts']}, critical points {[k for _, k in crit]}")
    return 0


def cmd_torus(args):
    order = args.order or 16
    poly = psi_taylor(order)
    h = args.step or 0.01
    n = int(round(1.0 / h)) + 1
    field = psi_grid(poly, window=(0.5, 1.5, -0.5, 0.5), n=(n, n))
    fld = F.reconstruct(field, poly=poly)
    write_csv(_out(args, "torus_field.csv"), AXI_HEADER, fld.rows())
    R, Z = np.meshgrid(fld.r, fld.z, indexing="ij")
    rho = np.hypot(R - 1, Z)
    res = F.euler_residuals(fld, region=(rho > 0.05) & (rho < 0.3))
    write_json(_out(args, "torus_report.json"), {"order": order, "step": h,
                                                 "normalization": F.normalization_error(fld),
                                                 "residuals": res["summary"]})
    print(f"torus field {fld.p.shape} written")
    return 0


def _cartesian_report(g):
    return F.cartesian_euler_residuals(g)["summary"]


def cmd_localize(args):
    fl = F.make_evendim_flow(1, "odd", a=args.a)
    loc = F.localize(fl, args.p0, args.delta)
    h = args.step or 0.02
    ax = [np.arange(-1.5, 1.5 + 1e-12, h)] * 2 + [np.array([-h, 0.0, h])]
    g = loc.sample(ax)
    write_csv(_out(args, "localized.csv"), CART_HEADER, g.rows())
    write_json(_out(args, "localized_report.json"), {"p0": args.p0, "delta": args.delta, "a": args.a,
                                                     "step": h, "residuals": _cartesian_report(g)})
    print(f"localized field {g.P.shape} written")
    return 0


def cmd_plane_section(args):
    poly = psi_taylor(args.order or 16)
    base = F.torus_flow(poly)
    level = math.log(args.psi_level / PSI_REF) / 3
    fld = F.localize(base, level, args.delta)
    nrm = F.tilted_normal(args.tilt)
    _, e1, e2 = F.plane_basis(nrm)
    h = args.step or 0.01
    n = int(round(3.2 / h)) + 1
    out = {"psi_level": args.psi_level, "pressure": level, "tilt_deg": args.tilt,
           "plane_point": [0.0, 0.0, args.z0], "step": h}
    for name, xi in (("xi1", e1), ("xi2", e2)):
        s = F.plane_section_integral(fld, ((0.0, 0.0, args.z0), nrm), fld.level(level), xi, n=n)
        out[name] = {"value": s.value, "magnitude": s.magnitude, "curves": len(s.curves), "empty": s.empty}
    write_json(_out(args, "plane_section.json"), out)
    print(f"section integrals {out['xi1']['value']:.3e}, {out['xi2']['value']:.3e}")
    return 0


def _load_field(path):
    head, rows = read_csv(path)
    if head == AXI_HEADER:
        return F.AxisymField.from_rows(rows)
    if head == CART_HEADER:
        return F.GriddedField.from_rows(rows, 3)
    raise DataError(f"{path}: unknown field header {head}")


def _field_report(fld, p_range):
    if isinstance(fld, F.AxisymField):
        region = None
        if p_range:
            region = (fld.p >= p_range[0]) & (fld.p <= p_range[1])
        rep = F.euler_residuals(fld, region)["summary"]
        return rep, fld.spacing[0], {"normalization": F.normalization_error(fld)}
    region = None
    if p_range:
        region = (fld.P >= p_range[0]) & (fld.P <= p_range[1])
    return F.cartesian_euler_residuals(fld, region)["summary"], fld.axes[0][1] - fld.axes[0][0], {}


def cmd_verify(args):
    fields_ = [_load_field(p) for p in args.fields]
    if len(fields_) == 2 and type(fields_[0]) is not type(fields_[1]):
        raise DataError("the two field files have different formats")
    reports = [_field_report(f, args.p_range) for f in fields_]
    out = {"files": args.fields, "reports": [{"step": h, "residuals": r, **extra} for r, h, extra in reports]}
    if len(reports) == 2:
        (r1, h1, _), (r2, h2, _) = reports
        out["slopes"] = {k: math.log(r1[k]["max"] / r2[k]["max"]) / math.log(h1 / h2)
                         if r1[k]["max"] > 0 and r2[k]["max"] > 0 else None for k in r1}
    write_json(_out(args, "verify_report.json"), out)
    print(" ".join(f"{k}={v['max']:.3e}" for k, v in reports[-1][0].items()))
    return 0


def cmd_plot(args):
    head, rows = read_csv(args.file)
    target = _out(args, os.path.splitext(os.path.basename(args.file))[0] + ".svg")
    if head == GEN_HEADER:
        curves = []
        for p in np.unique(rows[:, 0]):
            sel = rows[:, 0] == p
            curves.append((f"p={p:.3g}", rows[sel, 1], rows[sel, 2]))
        plot_generatrices(curves, [], target)
    elif head == LINE_HEADER:
        lines = {}
        for lv in np.unique(rows[:, 0]):
            for c in np.unique(rows[rows[:, 0] == lv, 1]):
                sel = (rows[:, 0] == lv) & (rows[:, 1] == c)
                lines.setdefault(f"G{int(lv)}", []).append(rows[sel][:, 3:5])
        plot_isolines(lines, [], target)
    elif head == PROFILE_HEADER:
        plot_profiles(rows, target)
    else:
        raise DataError(f"{args.file}: cannot plot header {head}")
    print(target)
    return 0


# --------------------------------------------------------------- parser

def build_parser():
    ap = argparse.ArgumentParser(prog="gavriflow", description="Axisymmetric Gavrilov flow toolkit")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--scenario", help="scenario JSON file (default: Figure-1 constants)")
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("--order", type=int, help="series or Taylor order")
    common.add_argument("--step", type=float, help="grid step")
    common.add_argument("--tol", type=float, help="tolerance override")
    common.add_argument("--glyph-scale", type=float, help="velocity glyph scale (default 0.25)")
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("profiles", parents=[common]).set_defaults(func=cmd_profiles)
    sub.add_parser("series", parents=[common]).set_defaults(func=cmd_series)
    sub.add_parser("solve", parents=[common]).set_defaults(func=cmd_solve)
    p = sub.add_parser("fig1", parents=[common])
    p.add_argument("--no-pc", action="store_true", help="skip the critical-pressure search")
    p.set_defaults(func=cmd_fig1)
    sub.add_parser("fig2", parents=[common]).set_defaults(func=cmd_fig2)
    sub.add_parser("torus", parents=[common]).set_defaults(func=cmd_torus)
    p = sub.add_parser("verify", parents=[common])
    p.add_argument("fields", nargs="+", help="one or two field CSV files")
    p.add_argument("--p-range", type=float, nargs=2, metavar=("LO", "HI"),
                   help="restrict summaries to nodes with LO <= p <= HI")
    p.set_defaults(func=cmd_verify)
    p = sub.add_parser("localize", parents=[common])
    p.add_argument("--p0", type=float, default=0.5)
    p.add_argument("--delta", type=float, default=0.4)
    p.add_argument("--a", type=float, default=0.7)
    p.set_defaults(func=cmd_localize)
    p = sub.add_parser("plane-section", parents=[common])
    p.add_argument("--psi-level", type=float, default=0.08)
    p.add_argument("--delta", type=float, default=0.1)
    p.add_argument("--tilt", type=float, default=5.0)
    p.add_argument("--z0", type=float, default=0.1)
    p.set_defaults(func=cmd_plane_section)
    p = sub.add_parser("plot", parents=[common])
    p.add_argument("file", help="generatrix, isoline or profile CSV")
    p.set_defaults(func=cmd_plot)
    return ap


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        if getattr(args, "fields", None) is not None and len(args.fields) > 2:
            raise DataError("verify takes one or two field files")
        n = _threads()
        if n is not None:
            from threadpoolctl import threadpool_limits
            with threadpool_limits(limits=n):
                return args.func(args)
        return args.func(args)
    except (DataError, ParameterError) as exc:
        print(f"gavriflow: input error: {exc}", file=sys.stderr)
        return 2
    except (GavriflowError, ArithmeticError, RuntimeError) as exc:
        print(f"gavriflow: numerical failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
