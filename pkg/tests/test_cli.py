import json
import math
import subprocess
import sys

import numpy as np
import pytest

from gavriflow import fields as F
from gavriflow.cli import AXI_HEADER, CART_HEADER, GEN_HEADER, main
from gavriflow.fileio import read_csv, write_csv
from gavriflow.plotting import curve_glyphs, isoline_glyphs


def run(tmp_path, *argv):
    return main(list(argv) + ["--out", str(tmp_path)])


def load(tmp_path, name):
    return json.loads((tmp_path / name).read_text())


def test_profiles_command(tmp_path):
    assert run(tmp_path, "profiles") == 0
    s = load(tmp_path, "profiles_summary.json")
    assert len(s["valid_interval"]) == 2
    head, rows = read_csv(tmp_path / "profiles.csv")
    assert head == ["p", "alpha", "beta", "gamma", "dbeta", "dgamma"] and len(rows) > 100
    assert (tmp_path / "profiles.svg").read_text().startswith("<?xml")


def test_series_command(tmp_path):
    assert run(tmp_path, "series", "--order", "6") == 0
    s = load(tmp_path, "series.json")
    assert s["exact"] and s["order"] == 6
    assert "7/6" in json.dumps(s["beta"])


def test_malformed_scenario(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{alpha0: 1")
    assert run(tmp_path, "profiles", "--scenario", str(bad)) == 2
    bad.write_text(json.dumps({"alpha0": 1, "beta0": 0.01, "gamma0": 0.5, "f0": 0.01}))
    assert run(tmp_path, "solve", "--scenario", str(bad)) == 2


def test_scenario_file(tmp_path):
    sc = {"alpha0": 1, "beta0": 0.01, "gamma0": 0.5, "f0": 0.97, "epsilon": 1, "p_min": 0.0, "p_max": 0.04,
          "p_step": 0.004, "z_min": -0.2, "z_max": 0.2, "z_step": 0.004, "tol": 1e-6}
    path = tmp_path / "sc.json"
    path.write_text(json.dumps(sc))
    assert run(tmp_path, "solve", "--scenario", str(path)) == 0
    head, rows = read_csv(tmp_path / "generatrix.csv", GEN_HEADER)
    assert len(rows) == 11 * 101
    s = load(tmp_path, "solve_summary.json")
    assert s["max_residual"] < 1e-4 and not s["degenerate"]


def test_fig1_command(tmp_path):
    assert run(tmp_path, "fig1", "--no-pc") == 0
    s = load(tmp_path, "fig1_summary.json")
    assert s["curves"] == 9 and s["glyph_scale"] == 0.25 and s["p_c"] is None
    _, rows = read_csv(tmp_path / "fig1_generatrix.csv", GEN_HEADER)
    np.testing.assert_allclose(np.unique(rows[:, 0]), 0.02 * np.arange(9), atol=1e-12)
    svg = (tmp_path / "fig1.svg").read_text()
    assert svg.count("<path") >= 9


def test_glyph_magnitude(fig1_full_grid):
    g = fig1_full_grid
    rows = curve_glyphs(g.z, g.f[0], g.fz[0], g.beta[0], 0.25, stride=50)
    assert len(rows) > 10
    length = np.sqrt(np.sum(rows[:, 2:] ** 2, axis=1))
    np.testing.assert_allclose(length, 0.25, atol=1e-12)
    # meridian glyph along the curve, swirl glyph normal to it
    np.testing.assert_allclose(rows[:, 2] * rows[:, 4] + rows[:, 3] * rows[:, 5], 0, atol=1e-15)


def test_isoline_glyph_magnitude(p5):
    t = np.linspace(0, 2 * math.pi, 200)
    loop = np.column_stack([1 + 0.15 * np.cos(t), 0.15 * np.sin(t)])
    rows = isoline_glyphs(p5, loop, 0.04, 0.25, stride=10)
    np.testing.assert_allclose(np.sqrt(np.sum(rows[:, 2:] ** 2, axis=1)), 0.25, atol=1e-12)


def test_fig2_command(tmp_path):
    assert run(tmp_path, "fig2") == 0
    r = load(tmp_path, "fig2_report.json")
    assert r["component_counts"] == [2, 2, 2, 2, 2, 1]
    assert r["pressures"] == [math.log(i) / 3 for i in range(1, 7)]
    kinds = {c["type"] for c in r["critical_points"]}
    assert kinds == {"min", "saddle"}
    assert run(tmp_path, "fig2", "--order", "6") == 0
    assert {c["type"] for c in load(tmp_path, "fig2_report.json")["critical_points"]} == {"min"}


def test_outputs_are_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert run(d, "fig2") == 0
        assert run(d, "localize", "--step", "0.05") == 0
    for name in ("fig2_psi.csv", "fig2_isolines.csv", "fig2_report.json", "fig2.svg",
                 "localized.csv", "localized_report.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes(), name


def test_verify_two_resolutions(tmp_path, fig1_grid, fig1_profiles):
    files = []
    for h in (0.02, 0.01):
        st = int(round(h / 1e-3))
        z = fig1_grid.z[::st]
        fld = F.reconstruct(fig1_grid, fig1_profiles, r_nodes=np.arange(0.6, 1.6 + 1e-12, h),
                            z_nodes=z[(z >= -0.2 - h) & (z <= 0.4 + h)])
        path = tmp_path / f"fig1_{h}.csv"
        write_csv(path, AXI_HEADER, fld.rows())
        files.append(str(path))
    assert run(tmp_path, "verify", *files, "--p-range", "0.03", "0.13") == 0
    rep = load(tmp_path, "verify_report.json")
    for k, v in rep["slopes"].items():
        assert 1.7 <= v <= 2.3, (k, v)
    assert rep["reports"][1]["normalization"] <= 1e-6


def test_verify_exact_even_flow(tmp_path):
    x = np.linspace(-1, 1, 11)
    g = F.make_evendim_flow(1, "odd", a=0.3).sample([x, x, x])
    write_csv(tmp_path / "f.csv", CART_HEADER, g.rows())
    assert run(tmp_path, "verify", str(tmp_path / "f.csv")) == 0
    rep = load(tmp_path, "verify_report.json")
    assert all(v["max"] <= 1e-10 for v in rep["reports"][0]["residuals"].values())


def test_verify_rejects_bad_files(tmp_path):
    x = np.linspace(-1, 1, 5)
    g = F.make_evendim_flow(1, "odd").sample([x, x, x])
    path = tmp_path / "f.csv"
    write_csv(path, CART_HEADER, g.rows())
    lines = path.read_text().splitlines()
    lines[3] = ",".join(lines[3].split(",")[:-1] + ["oops"])
    path.write_text("\n".join(lines) + "\n")
    assert run(tmp_path, "verify", str(path)) == 2
    other = tmp_path / "o.csv"
    other.write_text("a,b\n1,2\n")
    assert run(tmp_path, "verify", str(other)) == 2
    assert run(tmp_path, "verify", str(tmp_path / "none.csv")) == 2


def test_torus_and_plane_section(tmp_path):
    assert run(tmp_path, "torus", "--step", "0.02") == 0
    rep = load(tmp_path, "torus_report.json")
    assert rep["normalization"] < 1e-12
    head, _ = read_csv(tmp_path / "torus_field.csv", AXI_HEADER)
    assert run(tmp_path, "plane-section", "--step", "0.01") == 0
    s = load(tmp_path, "plane_section.json")
    for key in ("xi1", "xi2"):
        assert not s[key]["empty"] and abs(s[key]["value"]) < 1e-3 * s[key]["magnitude"]
    assert run(tmp_path, "plane-section", "--z0", "3.0") == 0
    s = load(tmp_path, "plane_section.json")
    assert s["xi1"]["empty"] and s["xi1"]["value"] == 0.0


def test_localize_band_error(tmp_path):
    assert run(tmp_path, "localize", "--p0", "0.1", "--delta", "0.3") == 2


def test_plot_command(tmp_path):
    assert run(tmp_path, "profiles") == 0
    assert run(tmp_path / "plots", "plot", str(tmp_path / "profiles.csv")) == 0
    assert (tmp_path / "plots" / "profiles.svg").exists()
    bad = tmp_path / "x.csv"
    bad.write_text("q,w\n1,2\n")
    assert run(tmp_path, "plot", str(bad)) == 2


def test_thread_cap(tmp_path, monkeypatch):
    monkeypatch.setenv("GAVRIFLOW_THREADS", "1")
    assert run(tmp_path, "series") == 0
    monkeypatch.setenv("GAVRIFLOW_THREADS", "zero")
    assert run(tmp_path, "series") == 2


def test_console_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "gavriflow.cli", "series", "--out", str(tmp_path)],
                         capture_output=True, text=True)
    assert out.returncode == 0 and "series" in out.stdout
    out = subprocess.run([sys.executable, "-m", "gavriflow.cli", "nonsense"], capture_output=True, text=True)
    assert out.returncode == 2
