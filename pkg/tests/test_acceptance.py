"""Acceptance criteria, one test each, at the contract tolerances.

Every test records a PASS/FAIL line; the lines are printed in the terminal
summary (see conftest.py) and by ``python tests/test_acceptance.py``.
"""
import math
import time

import numpy as np
import pytest

from mcflow import diagnostics as dg
from mcflow import exact, flow
from mcflow import geometry as geo
from mcflow import rescaling as rs
from mcflow.scenario import ScenarioConfig, run_scenario
from oracle_values import (
    FOUR_OVER_E,
    H4_HALVING_INCREMENT,
    LS4_SPHERE,
    SQRT_2PI_OVER_E,
)

RESULTS = {}

SPHERE = exact.ShrinkingSphere()
CYL = exact.ShrinkingCylinder()
PLANE = exact.PlaneSolution()


def record(num, title, ok, detail):
    line = f"criterion {num:2d} {'PASS' if ok else 'FAIL'}  {title}: {detail}"
    RESULTS[num] = line
    print(line)
    assert ok, line


def _exact(sol, stop):
    return flow.run_until(sol.state(0.0), stop)


def _mesh_sphere_track():
    return flow.run_until(geo.icosphere(4), flow.StopCriterion(max_A2=200.0), flow.DtPolicy(c_stab=0.02))


def test_c01_sphere_density():
    t0 = time.perf_counter()
    tr = _exact(SPHERE, flow.StopCriterion(max_A2=1e3))
    th_exact = dg.gaussian_density(tr, dg.SpacetimePoint(np.zeros(3), SPHERE.T), tr.times[-1])
    # pilot run for the discrete singular time, then a run stopping at (T - t)/T = 0.1
    est = flow.detect_singularity(_mesh_sphere_track())
    sp = dg.SpacetimePoint(np.array(est.y0_est), est.T_est)
    mesh = flow.run_until(geo.icosphere(4), flow.StopCriterion(t_max=0.9 * sp.T), flow.DtPolicy(c_stab=0.02))
    t = mesh.times[-1]
    th_mesh = dg.gaussian_density(mesh, sp, t)
    elapsed = time.perf_counter() - t0
    frac = (sp.T - t) / sp.T
    ok = abs(th_exact - FOUR_OVER_E) < 1e-3 and abs(th_mesh / FOUR_OVER_E - 1) < 0.01 and elapsed < 30
    record(
        1,
        "sphere Gaussian density",
        ok,
        f"analytic {th_exact:.6f}, mesh {th_mesh:.5f} at (T-t)/T = {frac:.3f}, anchor {FOUR_OVER_E:.5f}, {elapsed:.1f} s",
    )


def test_c02_cylinder_density():
    t0 = time.perf_counter()
    t = 0.45
    L = 12 * math.sqrt(CYL.T - t)
    sol = exact.ShrinkingCylinder(half_length=L)
    th = dg.density_of_state(sol.state(t), dg.SpacetimePoint(np.zeros(3), sol.T))
    elapsed = time.perf_counter() - t0
    ok = abs(th - SQRT_2PI_OVER_E) < 1e-3 and elapsed < 10
    record(2, "cylinder Gaussian density", ok, f"{th:.6f} with L = {L:.3f}, anchor {SQRT_2PI_OVER_E:.5f}, {elapsed:.2f} s")


def test_c03_plane_density_and_threshold():
    tr = flow.exact_track(PLANE, flow.geometric_times(1.0, 1.0, 1e-4))
    sp = dg.SpacetimePoint(np.array([0.3, -0.2, 0.0]), 1.0)
    th = max(abs(dg.gaussian_density(tr, sp, t) - 1) for t in tr.times)
    plane_lim = dg.density_limit(tr, sp)
    sph = _exact(SPHERE, flow.StopCriterion(max_A2=1e3))
    sph_lim = dg.density_limit(sph, dg.SpacetimePoint(np.zeros(3), SPHERE.T))
    regular = {"regular_white", "regular_below2"}
    ok = (
        th < 1e-6
        and plane_lim.verdict in regular
        and sph_lim.verdict in regular
        and max(plane_lim.limit, sph_lim.limit) < 2 - 0.05
    )
    record(
        3,
        "plane density and density-below-2 verdicts",
        ok,
        f"max |Theta - 1| = {th:.1e}; plane {plane_lim.limit:.4f} {plane_lim.verdict}, sphere {sph_lim.limit:.4f} {sph_lim.verdict}",
    )


def test_c04_monotonicity_suite():
    rng = np.random.default_rng(2024)
    tracks = {
        "sphere": _exact(SPHERE, flow.StopCriterion(max_A2=1e3)),
        "cylinder": _exact(CYL, flow.StopCriterion(max_A2=1e3)),
        "plane": flow.exact_track(PLANE, np.linspace(0, 1, 21)),
    }
    bad = []
    for name, tr in tracks.items():
        for _ in range(20):
            y0 = rng.uniform(-1.0, 1.0, 3)
            T = rng.uniform(0.2, 1.0) if name != "plane" else rng.uniform(0.3, 2.0)
            rep = dg.monotonicity_audit(tr, dg.SpacetimePoint(y0, T), tol=1e-6)
            if rep.violations:
                bad.append((name, y0, T))
    mesh = _mesh_sphere_track()
    for _ in range(20):
        y0 = rng.uniform(-1.0, 1.0, 3)
        T = rng.uniform(0.1, 0.5)
        rep = dg.monotonicity_audit(mesh, dg.SpacetimePoint(y0, T), tol=1e-3)
        if rep.violations:
            bad.append(("mesh sphere", y0, T))
    record(4, "monotonicity of Theta", not bad, f"{4 * 20} random points, {len(bad)} with violations")


def test_c05_type_one_fit():
    rows = []
    ok = True
    # r0^2 / (2n) for the sphere, r0^2 / 2 for the cylinder
    for name, sol, T_ref in (("sphere", SPHERE, 1.0 / 4), ("cylinder", CYL, 1.0 / 2)):
        est = flow.detect_singularity(_exact(sol, flow.StopCriterion(max_A2=1e3)))
        ok &= abs(est.C0_est / 0.5 - 1) < 0.01 and abs(est.T_est / T_ref - 1) < 1e-3 and est.fit_quality >= 0.9999
        rows.append(f"{name} C0 {est.C0_est:.6f} T {est.T_est:.6f} R^2 {est.fit_quality:.8f}")
    record(5, "type-I fit", ok, "; ".join(rows))


def test_c06_alpha_optimality():
    t0 = time.perf_counter()
    tr = _exact(SPHERE, flow.StopCriterion(max_A2=1e3))
    eps = [0.064 / 2**k for k in range(7)]  # down to 1e-3, inside the track span
    v4 = np.array([dg.spacetime_H_norm(tr, 4, SPHERE.T - e) ** 4 for e in eps])
    v2 = np.array([dg.spacetime_H_norm(tr, 2, SPHERE.T - e) ** 2 for e in eps])
    inc4 = np.diff(v4)
    inc2 = np.diff(v2)
    spread = np.max(np.abs(inc4 / inc4.mean() - 1))
    ratio = np.max(inc2[1:] / inc2[:-1])
    elapsed = time.perf_counter() - t0
    ok = spread < 0.05 and abs(inc4.mean() / H4_HALVING_INCREMENT - 1) < 0.05 and ratio <= 0.75 and elapsed < 10
    record(
        6,
        "alpha-optimality on the sphere",
        ok,
        f"alpha=4 increment {inc4.mean():.4f} (spread {spread:.1e}, 16 pi ln 2 = {H4_HALVING_INCREMENT:.4f}); "
        f"alpha=2 increment ratio {ratio:.4f}; {elapsed:.2f} s",
    )


def test_c07_scale_invariance():
    tr = flow.exact_track(SPHERE, np.linspace(0.0, 0.2, 11))
    sp = dg.SpacetimePoint(np.array([0.1, 0.0, 0.0]), 0.3)
    x0, sigma, t_loc = np.array([0.0, 0.0, 0.85]), 0.3, 0.15
    ref = (
        dg.spacetime_H_norm(tr, 4, 0.2),
        dg.lpq_A_norm(tr, 4, 4, 0.2),
        dg.local_energy(tr, x0, sigma, t_loc),
    )
    worst = 0.0
    for lam in (2.0, 10.0, 100.0):
        rt = rs.parabolic_dilate(tr, sp, lam)
        s_end = lam**2 * (0.2 - sp.T)
        got = (
            dg.spacetime_H_norm(rt, 4, s_end),
            dg.lpq_A_norm(rt, 4, 4, s_end),
            dg.local_energy(rt, lam * (x0 - sp.y0), lam * sigma, lam**2 * (t_loc - sp.T)),
        )
        worst = max(worst, max(abs(g / r - 1) for g, r in zip(got, ref)))
    record(7, "scale invariance under parabolic dilation", worst < 1e-9 and ref[2] > 0, f"max relative change {worst:.1e}")


def test_c08_shrinker_residuals():
    pointwise = 0.0
    for tag in ("sphere", "cylinder", "plane"):
        for s in (-0.5, -1.0, -2.0):
            pointwise = max(pointwise, exact.self_shrinker_residual_exact(exact.SelfShrinkerSample(tag, s)))
    tr = _exact(SPHERE, flow.StopCriterion(max_A2=1e3))
    integrated = 0.0
    for lam in (1.0, 10.0, 100.0):
        rt = rs.parabolic_dilate(tr, dg.SpacetimePoint(np.zeros(3), SPHERE.T), lam)
        integrated = max(integrated, abs(rs.shrinker_residual(rt, (-0.2 * lam**2, -0.1 * lam**2))))
    ok = pointwise < 1e-12 and integrated < 1e-10
    record(8, "shrinker residuals", ok, f"pointwise {pointwise:.1e}, rescaled sphere {integrated:.1e}")


def test_c09_neckpinch_end_to_end(tmp_path):
    t0 = time.perf_counter()
    rep = run_scenario(ScenarioConfig.load("dumbbell_neckpinch"), tmp_path)
    elapsed = time.perf_counter() - t0
    d = rep["diagnostics"]
    neck = d["density_limit"]["value"]
    bulb = d["density_limit_bulb"]
    label = d["tangent_flow_classify"]["verdict"]
    ok = (
        rep["track"]["stop_reason"] == "curvature_threshold"
        and d["detect_singularity"]["error"] is None
        and label == "cylinder"
        and abs(neck / SQRT_2PI_OVER_E - 1) < 0.05
        and bulb["verdict"] in ("regular_white", "regular_below2")
        and elapsed < 300
    )
    record(
        9,
        "neckpinch end to end",
        ok,
        f"{label}, neck {neck:.4f}, bulb {bulb['value']:.4f} {bulb['verdict']}, {elapsed:.1f} s",
    )


def test_c10_slice_Ls_equality():
    tr = _exact(SPHERE, flow.StopCriterion(max_A2=1e3))
    r4 = dg.slice_Ls_product(tr, 4, SPHERE.T)
    r8 = dg.slice_Ls_product(tr, 8, SPHERE.T)
    spread = max(np.ptp(r4.product), np.ptp(r8.product))
    ok = spread < 1e-6 and abs(r4.product[0] - LS4_SPHERE) < 1e-6
    record(10, "slice L^s product on the sphere", ok, f"s=4 value {r4.product[0]:.10f} ({LS4_SPHERE:.10f}), spread {spread:.1e}")


def test_c11_simons_identity():
    worst = 0.0
    for sol, times in ((SPHERE, (0.0, 0.1, 0.2)), (CYL, (0.0, 0.2, 0.4)), (PLANE, (0.0, 1.0, 5.0))):
        for t in times:
            worst = max(worst, abs(exact.simons_identity_residual(sol, t)))
    record(11, "evolution identity for |A|^2", worst < 1e-12, f"max residual {worst:.1e}")


def test_c12_distance_estimate():
    sph = dg.distance_bound_audit(_exact(SPHERE, flow.StopCriterion(max_A2=1e3)), dg.SpacetimePoint(np.zeros(3), SPHERE.T))
    cyl = dg.distance_bound_audit(_exact(CYL, flow.StopCriterion(max_A2=1e3)), dg.SpacetimePoint(np.array([0.4, 0, 0]), CYL.T))
    pl = dg.distance_bound_audit(flow.exact_track(PLANE, np.linspace(0, 1, 11)), dg.SpacetimePoint(np.zeros(3), 1.5))
    sphere_slack = float(np.max(np.abs(sph.slack)))
    most_negative = min(float(a.slack.min()) for a in (sph, cyl, pl))
    ok = sphere_slack < 1e-6 and most_negative > -1e-6
    record(12, "distance estimate", ok, f"sphere |slack| {sphere_slack:.1e}, min slack over oracles {most_negative:.2e}")


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
