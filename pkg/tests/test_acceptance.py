"""Acceptance criteria, one test each.

Every test prints a single line "criterion N: PASS|FAIL ..." with the
measured values and runtime, then asserts the criterion as stated.
"""

import math
import time
from fractions import Fraction as Fr

import numpy as np
import pytest

from gavriflow import fields as F
from gavriflow.axisolver import detect_symmetry, find_pc, solve_f
from gavriflow.consistency import (JetPoint, bracket_scale, closure_jet, eval_FG, is_admissible,
                                   jacobi_bracket, values_at)
from gavriflow.minpoint import (PSI_REF, component_counts, critical_points, figure2_levels, isolines,
                                psi_grid, psi_taylor)
from gavriflow.profiles import consistency_residuals, exceptional_profiles, integrate_profiles, series_beta_gamma
from gavriflow.scenario import figure1_scenario

BETA_SERIES = ["1/3", "-7/6", "13/72", "-133/1728", "575/13824", "-2077/82944", "37/2304"]
GAMMA_SERIES = ["1", "-1/8", "7/144", "-115/4608", "67/4608", "-7/768"]   # gamma = -1 + ...
TAYLOR = {(2, 0): Fr(3, 2), (0, 2): Fr(3, 2), (3, 0): Fr(9, 4), (1, 2): Fr(9, 4), (4, 0): Fr(57, 32),
          (2, 2): Fr(45, 16), (0, 4): Fr(33, 32), (5, 0): Fr(9, 8), (3, 2): Fr(9, 4), (1, 4): Fr(9, 4)}


def report(capsys, n, ok, detail, seconds):
    with capsys.disabled():
        print(f"\ncriterion {n}: {'PASS' if ok else 'FAIL'} {detail} [{seconds:.2f} s]")


def test_criterion_1_series_exactness(capsys):
    t = time.perf_counter()
    bs, gs = series_beta_gamma(6)
    dt = time.perf_counter() - t
    want = [Fr(x) for x in BETA_SERIES] + [Fr(x) for x in GAMMA_SERIES]
    got = list(bs.coefficients) + list(gs.coefficients[1:])
    hits = sum(a == b for a, b in zip(got, want))
    ok = hits == 13 and len(got) == 13 and dt < 1.0
    report(capsys, 1, ok, f"{hits}/13 coefficients bit-equal", dt)
    assert ok


def test_criterion_2_taylor_exactness(capsys):
    t = time.perf_counter()
    poly = psi_taylor(5)
    dt = time.perf_counter() - t
    wrong = {jk: str(poly.coefficient(*jk)) for jk, c in TAYLOR.items() if poly.coefficient(*jk) != c}
    ok = not wrong and dt < 5.0
    report(capsys, 2, ok, f"{10 - len(wrong)}/10 coefficients equal; differing (j,k)->computed: {wrong}", dt)
    assert ok


def test_criterion_3_profile_interval(capsys):
    sc = figure1_scenario()
    t = time.perf_counter()
    tr = integrate_profiles(sc)
    dt = time.perf_counter() - t
    lo, hi = tr.valid_interval
    ok = abs(lo + 0.07) <= 0.02 and abs(hi - 7.48) <= 0.02 and dt < 1.0
    report(capsys, 3, ok, f"valid interval ({lo:.5f}, {hi:.5f}) vs (-0.07, 7.48); existence interval "
           f"({tr.existence_interval[0]:.5f}, {tr.existence_interval[1]:.5f}); ends: {tr.termination}", dt)
    assert ok


def test_criterion_4_periodicity(capsys):
    sc = figure1_scenario()
    t = time.perf_counter()
    tr = integrate_profiles(sc)
    grid = solve_f(sc, tr)
    rep = detect_symmetry(grid)
    p_c = find_pc(sc, tr)
    dt = time.perf_counter() - t
    period = rep.period
    ok = (period is not None and abs(period - 2.8) <= 0.1 and p_c is not None and abs(p_c - 0.25) <= 0.05
          and dt < 30.0)
    report(capsys, 4, ok, f"period {period:.4f} (target 2.8 +- 0.1), p_c {p_c} (target 0.25 +- 0.05), "
           f"stations {[round(s.z0, 4) for s in rep.stations]}", dt)
    assert ok


def test_criterion_5_figure2_topology(capsys):
    t = time.perf_counter()
    p5 = psi_taylor(5)
    counts = component_counts(isolines(psi_grid(p5), figure2_levels()), figure2_levels())
    c5 = critical_points(p5)
    c6 = critical_points(psi_taylor(6))
    dt = time.perf_counter() - t
    s5 = [x for x, k in c5 if k == "saddle"]
    s6 = [x for x, k in c6 if k == "saddle"]
    ok = (counts == [2, 2, 2, 2, 2, 1] and len(s5) == 1 and abs(s5[0][0] - 1 / 3) < 1e-6
          and abs(s5[0][1]) < 1e-6 and not s6 and dt < 10.0)
    report(capsys, 5, ok, f"counts {counts}; degree-5 saddles {s5}; degree-6 saddles {s6}", dt)
    assert ok


def test_criterion_6_completeness(capsys, fig1_profiles):
    rng = np.random.default_rng(7)
    t = time.perf_counter()
    worst, n = 0.0, 0
    while n < 100:
        p = rng.uniform(0.0, 2.0)
        pv = values_at(fig1_profiles, p)
        f = rng.uniform(math.sqrt(pv.beta), math.sqrt(pv.beta) + 3.0)
        if not is_admissible(f, pv):
            continue
        jet = closure_jet(p, 0.0, f, fig1_profiles, zeta_sign=rng.choice([-1, 1]))
        worst = max(worst, abs(jacobi_bracket(jet, fig1_profiles)) / bracket_scale(jet, fig1_profiles))
        n += 1
    tr = exceptional_profiles(0.5)
    fg, cons = 0.0, math.inf
    for p in (0.5, 1.0, 2.0):
        F_, G_ = eval_FG(JetPoint(p, 0.0, 2 * math.sqrt(p), p ** -0.5, 0.0), tr)
        fg = max(fg, abs(F_), abs(G_))
        r = consistency_residuals(tr.beta(p), tr.gamma(p), tr.alpha(p), tr.dbeta(p), tr.dgamma(p), 1)
        cons = min(cons, max(abs(r[0]), abs(r[1])))
    dt = time.perf_counter() - t
    ok = worst <= 1e-9 and fg <= 1e-12 and cons > 0.1
    report(capsys, 6, ok, f"max |bracket|/scale {worst:.2e} over {n} jets; exceptional family "
           f"max|F,G| {fg:.1e}, min consistency residual {cons:.3f}", dt)
    assert ok


def test_criterion_7_euler_verification(capsys, fig1_window, fig1_profiles):
    t = time.perf_counter()
    grid = solve_f(fig1_window, fig1_profiles)
    maxima, norm = {}, 0.0
    for h in (0.02, 0.01, 0.005):
        st = int(round(h / fig1_window.z_step))
        fld = F.reconstruct(grid, fig1_profiles, r_nodes=np.arange(0.6, 1.6 + 1e-12, h), z_nodes=grid.z[::st])
        Z = fld.z[None, :] * np.ones_like(fld.p)
        region = (fld.p >= 0.03) & (fld.p <= 0.13) & (Z >= -0.2) & (Z <= 0.4)
        for k, v in F.euler_residuals(fld, region)["summary"].items():
            maxima.setdefault(k, []).append(v["max"])
        norm = max(norm, F.normalization_error(fld))
    axi = {k: F.refinement_slopes(v) for k, v in maxima.items()}
    loc_slopes = {}
    for name, base, dims in (("even", F.make_evendim_flow(1), 2), ("odd", F.make_evendim_flow(1, "odd", a=0.7), 3)):
        loc = F.localize(base, 0.5, 0.4)
        lm = {}
        for h in (0.01, 0.005, 0.0025):
            axes = [np.arange(-1.4, 1.4 + 1e-12, h)] * 2 + ([np.array([-h, 0.0, h])] if dims == 3 else [])
            for k, v in F.cartesian_euler_residuals(loc.sample(axes))["summary"].items():
                lm.setdefault(k, []).append(v["max"])
        loc_slopes[name] = {k: F.refinement_slopes(v) for k, v in lm.items()}
    dt = time.perf_counter() - t
    low = min(min(s) for s in axi.values())
    low_loc = min(min(s) for d in loc_slopes.values() for s in d.values())
    ok = low >= 1.7 and low_loc >= 1.7 and norm <= 1e-6
    fmt = lambda d: ", ".join(f"{k} {'/'.join(f'{x:.2f}' for x in s)}" for k, s in d.items())
    report(capsys, 7, ok, f"normalization {norm:.1e}; Figure-1 slopes: {fmt(axi)}; localized even: "
           f"{fmt(loc_slopes['even'])}; localized odd: {fmt(loc_slopes['odd'])}", dt)
    assert ok


def test_criterion_8_plane_section(capsys, p16):
    t = time.perf_counter()
    level = math.log(0.08 / PSI_REF) / 3
    loc = F.localize(F.torus_flow(p16), level, 0.1)
    nrm = F.tilted_normal(5)
    _, e1, _ = F.plane_basis(nrm)
    vals = [F.plane_section_integral(loc, ((0, 0, 0.1), nrm), loc.level(level), e1, n=n).value
            for n in (101, 201, 401)]
    miss = F.plane_section_integral(loc, ((0, 0, 3.0), (0, 0, 1)), loc.level(level), (1, 0, 0))
    dt = time.perf_counter() - t
    ratios = [abs(vals[0] / vals[1]), abs(vals[1] / vals[2])]
    ok = min(ratios) >= 2 and miss.value == 0.0 and miss.empty
    report(capsys, 8, ok, f"integrals {['%.2e' % v for v in vals]} ratios {['%.1f' % r for r in ratios]}; "
           f"non-intersecting plane {miss.value}", dt)
    assert ok


def test_criterion_9_cross_march(capsys, fig1_window, fig1_profiles):
    t = time.perf_counter()
    a = solve_f(fig1_window, fig1_profiles)
    b = solve_f(fig1_window, fig1_profiles, order="z-then-p")
    dt = time.perf_counter() - t
    P, Z = np.meshgrid(a.p, a.z, indexing="ij")
    interior = (Z >= -0.3) & (Z <= 0.5)
    d = float(np.abs(a.f - b.f)[interior].max())
    bound = 10 * fig1_window.z_step ** 4
    ok = d <= bound
    report(capsys, 9, ok, f"max |f_pz - f_zp| {d:.2e} vs 10 h^4 = {bound:.1e} on p in [0, 0.16], "
           f"z in [-0.3, 0.5]", dt)
    assert ok
