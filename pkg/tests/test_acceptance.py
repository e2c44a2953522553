"""Acceptance checks for the headline claims, at the stated tolerances.

Each check prints one ``PASS``/``FAIL`` line with the measured value and
the tolerance.  Lines are repeated in the pytest terminal summary; running
this file directly prints them as the checks go.
"""
import json
import math
import time
from pathlib import Path

import numpy as np
import pytest

from dnmaps.beltrami import BeltramiGrid, coordinates, solve_beltrami, swirl_bump
from dnmaps.boundary import resample_operator
from dnmaps.dn import (comparison_window, defect_gain, defect_operator, dn_distance, dn_matrix,
                       hilbert_transform)
from dnmaps.experiments import load_config, run_experiment
from dnmaps.mesh import (attach_handle, make_flat_disk, nearest_vertex, scale_conformal,
                         schottky_double)
from dnmaps.moduli import annulus_for_triangle_count, conformal_modulus, handle_annuli_on_double

ROOT = Path(__file__).resolve().parents[1]
N = 256
RESULTS: list[str] = []


def verdict(criterion: str, passed: bool, value: str, tolerance: str) -> bool:
    line = f"{'PASS' if passed else 'FAIL'}  {criterion}: {value} (tolerance {tolerance})"
    RESULTS.append(line)
    print(line, flush=True)
    return passed


def check(criterion, passed, value, tolerance):
    assert verdict(criterion, passed, value, tolerance), criterion


def _timed(fn):
    t = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t


def _symbol_error(mesh, top=16):
    D = dn_matrix(mesh)
    theta = 2 * np.pi * np.arange(D.n) / D.n
    worst = 0.0
    for k in range(1, top + 1):
        for f in (np.cos(k * theta), np.sin(k * theta)):
            lam = (f @ (D.mass * (D.matrix @ f))) / (f @ (D.mass * f))
            worst = max(worst, abs(lam / k - 1))
    return worst


@pytest.mark.parametrize("rings", [None, 80], ids=["default-mesh", "2e4-triangles"])
def test_disk_dn_spectrum(rings):
    (mesh, err), secs = _timed(lambda: (m := make_flat_disk(N, rings), _symbol_error(m)))
    ok = err <= 0.02 and secs <= 60
    check(f"disk DN spectrum, N={N}, {mesh.n_triangles} triangles, 1<=k<=16",
          ok, f"max rel. error {err:.2e}, {secs:.1f} s", "2e-2, 60 s")


def test_genus_law():
    report, secs = _timed(lambda: run_experiment(load_config(ROOT / "configs/genus.json"), 1))
    for row in report.rows:
        ok = row["estimated_genus"] == row["euler_genus"] and row.get("gap", 0) >= 10
        verdict(f"genus law [{row['surface']}]", ok,
                f"estimated {row['estimated_genus']} vs Euler {row['euler_genus']}, "
                f"gap {row.get('gap', float('nan')):.1f}", "exact, gap >= 10")
    check("genus law runtime", report.passed and secs <= 300, f"{secs:.1f} s", "300 s")


def test_defect_nullity_on_disk():
    D = defect_operator(hilbert_transform(dn_matrix(make_flat_disk(N))))
    gain = defect_gain(D, N // 8)
    check(f"defect nullity on the disk, k <= {N // 8}", gain <= 3e-2,
          f"max |Df|/|f| {gain:.2e}", "3e-2")


def test_gauge_invariance_against_self_convergence():
    disk = make_flat_disk(N)
    dn0 = dn_matrix(disk)
    fine = resample_operator(dn_matrix(make_flat_disk(2 * N)).operator, N)
    p = disk.positions
    # conformal factor equal to 1 on the boundary circle
    phi = np.exp(0.3 * (1 - (p ** 2).sum(axis=1)) * (1 + 0.5 * p[:, 0]))
    dn_scaled = dn_matrix(scale_conformal(disk, phi))
    ok = True
    for window in (comparison_window(N), None):
        self_conv = dn_distance(dn0, fine, window)
        scaled = dn_distance(dn_scaled, dn0, window)
        ok &= verdict(f"gauge invariance, modes |k| <= {window or N // 2 - 1}",
                      scaled <= self_conv,
                      f"scaled-vs-unscaled {scaled:.3e} | self-convergence {self_conv:.3e}",
                      "scaled <= self-convergence")
    assert ok


def test_beltrami_solver():
    M = 512
    mu = swirl_bump(M, 1.0, 0.3, 0.2)
    sol, secs = _timed(lambda: solve_beltrami(mu, k_max=30, tol=1e-10))
    verdict(f"Beltrami residual, sup|mu| = {mu.sup():.3f}, {M}^2 grid",
            sol.residual <= 1e-6 and sol.terms_used <= 30,
            f"{sol.residual:.2e} after {sol.terms_used} terms, {secs:.1f} s", "1e-6, 30 terms")
    rate = float(np.mean(sol.term_ratios[-3:]))
    verdict("Beltrami term decay ratio", abs(rate - 0.3) <= 0.1,
            f"{rate:.3f} (ratios {sol.term_ratios[0]:.3f} .. {sol.term_ratios[-1]:.3f})",
            "0.3 +- 0.1")
    ident = solve_beltrami(BeltramiGrid(np.zeros((M, M)), 1.0))
    dev = float(np.abs(ident.map.values - coordinates(M, 1.0)).max())
    verdict("Beltrami mu = 0 gives the identity", dev <= 1e-15, f"max |f - z| = {dev:.1e}",
            "1e-15")
    assert all(line.startswith("PASS") for line in RESULTS[-3:])


def test_modulus_accuracy():
    a = annulus_for_triangle_count(1.0, 2.0, 10_000)
    exact = math.log(2) / (2 * math.pi)
    err = abs(conformal_modulus(a) / exact - 1)
    ok1 = verdict(f"round annulus modulus, {a.mesh.n_triangles} triangles", err <= 1e-2,
                  f"rel. error {err:.2e}", "1e-2")
    disk = make_flat_disk(N)
    worst = 0.0
    for eps in (0.2, 0.1, 0.05, 0.025):
        m = attach_handle(disk, nearest_vertex(disk, (-0.45, 0)),
                          nearest_vertex(disk, (0.45, 0)), eps, 0.5)
        spec = m.recipe.handles[0]
        for region in handle_annuli_on_double(schottky_double(m)[0]):
            worst = max(worst, abs(conformal_modulus(region) - spec.modulus))
    ok2 = verdict("flat handle cylinders vs h/c (eps 0.2 .. 0.025)", worst <= 1e-10,
                  f"max abs. error {worst:.1e}", "1e-10")
    assert ok1 and ok2


def test_instability_sweep():
    report, secs = _timed(
        lambda: run_experiment(load_config(ROOT / "configs/instability.json"), 1))
    d = [r["d_eps"] for r in report.rows]
    b = [r["b_eps"] for r in report.rows]
    eps = [r["eps"] for r in report.rows]
    decreasing = all(x > y for x, y in zip(d, d[1:]))
    verdict("instability sweep: d_eps strictly decreasing", decreasing,
            " > ".join(f"{x:.4f}" for x in d), "strict")
    closed = max(abs(r["b_eps"] / r["b_closed_form"] - 1) for r in report.rows)
    halving = max(abs((y / x) / (e2 / e1) - 1) for x, y, e1, e2 in zip(b, b[1:], eps, eps[1:]))
    verdict("instability sweep: systole bound follows pi c / h and halves with eps",
            closed <= 1e-9 and halving <= 1e-9,
            f"closed-form dev {closed:.1e}, halving dev {halving:.1e}", "1e-9")
    check("instability sweep runtime", report.passed and secs <= 900, f"{secs:.1f} s", "900 s")


def test_double_symmetry():
    report = run_experiment(load_config(ROOT / "configs/double_symmetry.json"), 1)
    for v in report.verdicts:
        value = v["value"] if not isinstance(v["value"], float) else f"{v['value']:.2e}"
        verdict(f"double symmetry: {v['criterion']}", v["passed"], value, v["tolerance"])
    assert report.passed


def test_determinism(tmp_path):
    from dnmaps.cli import main
    texts = []
    for run in ("a", "b"):
        out = tmp_path / run
        assert main(["experiment", "run", str(ROOT / "configs/double_symmetry.json"),
                     "--threads", "1", "--out", str(out)]) == 0
        texts.append((out / "double-symmetry.json").read_bytes())
    check("determinism: two 1-thread runs", texts[0] == texts[1],
          "bit-identical" if texts[0] == texts[1] else "reports differ", "bit-identical")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q", "-s"]))
