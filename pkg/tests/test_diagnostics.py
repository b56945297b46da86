import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mcflow import diagnostics as dg
from mcflow import exact, flow
from mcflow import geometry as geo
from oracle_values import (
    CAP_AREA_UNIT_SPHERE_SIGMA1,
    CYLINDER_OFFAXIS_DENSITY,
    FOUR_OVER_E,
    LS4_SPHERE,
    LS8_SPHERE,
    SPHERE_OFFSET_DENSITY,
    SPHERE_OFFSET_DISSIPATION,
    SQRT_2PI_OVER_E,
)

SPHERE = exact.ShrinkingSphere()
ORIGIN_T = dg.SpacetimePoint(np.zeros(3), 0.25)


def test_kernel_normalisation_and_cutoff():
    sp = dg.SpacetimePoint(np.array([0.3, -1.0, 2.0]), 1.0)
    t = 1.0 - 1 / (4 * math.pi)
    assert dg.backward_heat_kernel(sp, sp.y0, t) == pytest.approx(1.0, abs=1e-12)
    tau = 0.01
    far = sp.y0 + np.array([math.sqrt(4 * tau * 40) * (1 + 1e-12), 0, 0])
    assert dg.backward_heat_kernel(sp, far, 1.0 - tau) == 0.0
    with pytest.raises(ValueError):
        dg.backward_heat_kernel(sp, sp.y0, 1.0)


@given(st.floats(-2, 2), st.floats(-2, 2), st.floats(-2, 2), st.floats(0, 2 * math.pi), st.floats(0, math.pi))
def test_kernel_radial_symmetry(x, y, z, a, b):
    sp = dg.SpacetimePoint(np.zeros(3), 1.0)
    v = np.array([x, y, z])
    Rz = np.array([[math.cos(a), -math.sin(a), 0], [math.sin(a), math.cos(a), 0], [0, 0, 1]])
    Rx = np.array([[1, 0, 0], [0, math.cos(b), -math.sin(b)], [0, math.sin(b), math.cos(b)]])
    k1 = dg.backward_heat_kernel(sp, v, 0.5)
    k2 = dg.backward_heat_kernel(sp, Rx @ Rz @ v, 0.5)
    assert k1 == pytest.approx(k2, rel=1e-14, abs=1e-15)


def test_gaussian_density_examples(sphere_track, cylinder_track, plane_track):
    s = exact_track_at(SPHERE, 0.9 * SPHERE.T)
    assert dg.gaussian_density(s, ORIGIN_T, 0.9 * SPHERE.T) == pytest.approx(FOUR_OVER_E, abs=1e-3)
    cyl = exact.ShrinkingCylinder()
    c = exact_track_at(cyl, 0.9 * cyl.T)
    sp = dg.SpacetimePoint(np.array([0.7, 0, 0]), cyl.T)
    assert dg.gaussian_density(c, sp, 0.9 * cyl.T) == pytest.approx(SQRT_2PI_OVER_E, abs=1e-3)
    sp = dg.SpacetimePoint(np.array([0.4, -0.3, 0.0]), 2.0)
    for t in plane_track.times[::5]:
        assert dg.gaussian_density(plane_track, sp, t) == pytest.approx(1.0, abs=1e-6)
    with pytest.raises(ValueError):
        dg.gaussian_density(sphere_track, dg.SpacetimePoint(np.zeros(3), 0.1), 0.2)
    with pytest.raises(ValueError):
        dg.gaussian_density(sphere_track, dg.SpacetimePoint(np.zeros(4), 0.25), 0.1)


def exact_track_at(sol, *times):
    return flow.exact_track(sol, sorted(times))


def test_density_against_independent_oracles():
    sp = dg.SpacetimePoint(np.array([0.5, 0, 0]), 0.25)
    for t, ref in SPHERE_OFFSET_DENSITY.items():
        assert dg.density_of_state(SPHERE.state(t), sp) == pytest.approx(ref, rel=1e-12)
        assert dg.dissipation_of_state(SPHERE.state(t), sp) == pytest.approx(SPHERE_OFFSET_DISSIPATION[t], rel=1e-10)
    cyl = exact.ShrinkingCylinder()
    sp = dg.SpacetimePoint(np.array([0.3, 0.4, 0.2]), 0.5)
    assert dg.density_of_state(cyl.state(0.2), sp) == pytest.approx(CYLINDER_OFFAXIS_DENSITY, rel=1e-12)
    # the same off-axis density through the profile (meridian) path
    prof = exact.sample_state(cyl, 0.2, 2000)
    assert dg.density_of_state(prof, sp) == pytest.approx(CYLINDER_OFFAXIS_DENSITY, rel=1e-10)


def test_exact_and_node_quadrature_agree():
    # analytic closed forms against the Gauss-Legendre node route
    s = SPHERE.state(0.1)
    sp = dg.SpacetimePoint(np.array([0.2, -0.4, 0.3]), 0.3)
    q = geo.exact_quadrature(s, order=64)
    rho = dg.backward_heat_kernel(sp, q.points, s.time)
    assert q.integrate(rho) == pytest.approx(dg.analytic_density(s, sp), rel=1e-12)


def test_monotonicity_audit_examples(sphere_track):
    rep = dg.monotonicity_audit(sphere_track, ORIGIN_T)
    assert rep.path == "analytic" and rep.tol == 1e-6
    assert not rep.violations
    assert np.ptp(rep.values) < 1e-10
    assert np.max(np.abs(rep.dissipation)) < 1e-10
    off = dg.monotonicity_audit(sphere_track, dg.SpacetimePoint(np.array([0.5, 0, 0]), 0.25))
    assert np.all(np.diff(off.values) < 0)
    assert np.all(off.dissipation > 0)


def test_monotonicity_audit_needs_three_times():
    tr = exact_track_at(SPHERE, 0.0, 0.1)
    with pytest.raises(ValueError):
        dg.monotonicity_audit(tr, ORIGIN_T)


def test_density_derivative_matches_dissipation():
    # d/dt Theta = -int rho |H + F_perp / 2 tau|^2
    sp = dg.SpacetimePoint(np.array([0.5, 0.1, 0]), 0.3)
    t, h = 0.1, 1e-5
    d = (dg.density_of_state(SPHERE.state(t + h), sp) - dg.density_of_state(SPHERE.state(t - h), sp)) / (2 * h)
    assert -d == pytest.approx(dg.dissipation_of_state(SPHERE.state(t), sp), rel=1e-6)


def test_density_limit_examples(sphere_track, plane_track, cylinder_track):
    rep = dg.density_limit(sphere_track, ORIGIN_T)
    assert rep.limit == pytest.approx(FOUR_OVER_E, abs=1e-2)
    assert rep.verdict == "regular_below2"
    plane = flow.exact_track(exact.PlaneSolution(), flow.geometric_times(1.0, 0.5, 1e-3))
    rep = dg.density_limit(plane, dg.SpacetimePoint(np.zeros(3), 1.0))
    assert rep.limit == pytest.approx(1.0, abs=1e-2)
    assert rep.verdict == "regular_white"
    rep = dg.density_limit(cylinder_track, dg.SpacetimePoint(np.zeros(3), 0.5))
    assert rep.limit == pytest.approx(SQRT_2PI_OVER_E, abs=1e-3)


def test_density_limit_inconclusive_without_approach():
    tr = flow.exact_track(SPHERE, np.linspace(0.0, 0.05, 6))
    assert dg.density_limit(tr, ORIGIN_T).verdict == "inconclusive"
    assert dg.density_limit(tr, ORIGIN_T, k=10).verdict == "inconclusive"


def test_density_verdict_thresholds():
    assert dg.density_verdict(1.01) == "regular_white"
    assert dg.density_verdict(1.9) == "regular_below2"
    assert dg.density_verdict(1.96) == "inconclusive"
    assert dg.density_verdict(1.96, margin=0.01) == "regular_below2"


@given(st.floats(0.01, 0.24), st.floats(0, 2 * math.pi), st.floats(-1, 1))
def test_density_lower_bound_at_reached_points(t1, phi, z):
    # (y, t1) with y on M_t1 is reached by the flow
    r = SPHERE.radius(t1)
    rho = math.sqrt(1 - z * z)
    y = r * np.array([rho * math.cos(phi), rho * math.sin(phi), z])
    sp = dg.SpacetimePoint(y, t1)
    for t in np.linspace(0.0, t1, 6)[:-1]:
        assert dg.density_of_state(SPHERE.state(t), sp) >= 1 - 1e-2


@given(st.floats(-1.5, 1.5), st.floats(-1.5, 1.5), st.floats(-1.5, 1.5), st.floats(0.25, 0.5))
def test_monotone_for_any_point(x, y, z, T):
    tr = flow.exact_track(SPHERE, [0.0, 0.05, 0.1, 0.15, 0.2, 0.24])
    rep = dg.monotonicity_audit(tr, dg.SpacetimePoint(np.array([x, y, z]), T))
    assert not rep.violations


def test_quadrature_refinement_factor():
    for sp in (ORIGIN_T, dg.SpacetimePoint(np.array([0.5, 0, 0]), 0.25)):
        ref = dg.density_of_state(SPHERE.state(0.0), sp)
        err = [abs(dg.density_of_state(geo.icosphere(k), sp) - ref) for k in (3, 4, 5)]
        assert err[0] / err[1] >= 3 and err[1] / err[2] >= 3


def test_spacetime_H_norm_sphere_rates(sphere_track):
    T = 0.25
    eps = [1e-2 / 2**k for k in range(5)]
    v4 = [dg.spacetime_H_norm(sphere_track, 4, T - e) ** 4 for e in eps]
    inc = np.diff(v4)
    # 16 pi ln 2 per halving: constant increments
    assert np.allclose(inc, 16 * math.pi * math.log(2), rtol=1e-8)
    v2 = [dg.spacetime_H_norm(sphere_track, 2, T - e) ** 2 for e in eps]
    inc2 = np.diff(v2)
    assert np.all(inc2[1:] / inc2[:-1] <= 0.75)


def test_spacetime_H_norm_errors_and_plane(plane_track, sphere_track):
    assert dg.spacetime_H_norm(plane_track, 4) == 0.0
    with pytest.raises(ValueError):
        dg.spacetime_H_norm(sphere_track, 0.0)
    with pytest.raises(ValueError):
        dg.spacetime_H_norm(sphere_track, 4, 0.2499999)


def test_lpq_closed_form(sphere_track, plane_track):
    eps = 1e-3
    val = dg.lpq_A_norm(sphere_track, 4, 4, 0.25 - eps)
    assert val**4 == pytest.approx(4 * math.pi * math.log(0.25 / eps), rel=1e-6)
    assert dg.lpq_A_norm(plane_track, 4, 4) == 0.0
    with pytest.warns(UserWarning, match="scale invariant"):
        dg.lpq_A_norm(sphere_track, 2, 2, 0.2)
    with pytest.raises(ValueError):
        dg.lpq_A_norm(sphere_track, -1, 4)


def test_discrete_norms_follow_exact(sphere_track):
    # mesh slices of the exact radii: trapezoid in t on the same schedule
    times = sphere_track.times[:15]
    mesh_track = flow.FlowTrack([geo.icosphere(3, SPHERE.radius(t), time=t) for t in times])
    exact_sub = flow.exact_track(SPHERE, times)
    a = dg.spacetime_H_norm(mesh_track, 2)
    b = dg.spacetime_H_norm(exact_sub, 2)
    assert a == pytest.approx(b, rel=0.02)


def test_local_energy_examples(plane_track, sphere_track):
    assert dg.local_energy(plane_track, np.zeros(3), 0.5, 0.9) == 0.0
    # ball far from every slice
    assert dg.local_energy(sphere_track, np.array([5.0, 0, 0]), 0.3, 0.2) == 0.0
    with pytest.raises(ValueError):
        dg.local_energy(sphere_track, np.zeros(3), 0.0, 0.2)
    with pytest.raises(ValueError):
        dg.local_energy(sphere_track, np.zeros(3), 1.0, 0.2)


def test_cap_area_closed_form():
    s = SPHERE.state(0.0)
    assert dg.exact_ball_area(s, np.array([0, 0, 1.0]), 1.0) == pytest.approx(CAP_AREA_UNIT_SPHERE_SIGMA1, rel=1e-12)


def test_local_energy_analytic_matches_sampled_meshes():
    # the closed-form cap route against vertex restriction on fine icospheres
    times = np.linspace(0.0, 0.1, 21)
    x0, sigma, t0 = np.array([0, 0, 0.9]), 0.3, 0.1
    E = dg.local_energy(flow.exact_track(SPHERE, times), x0, sigma, t0)
    meshes = flow.FlowTrack([geo.icosphere(5, SPHERE.radius(t), time=t) for t in times])
    E_mesh = dg.local_energy(meshes, x0, sigma, t0)
    assert E_mesh == pytest.approx(E, rel=2e-2)


def test_eps_regularity_examples(plane_track, sphere_track):
    r = dg.eps_regularity_check(plane_track, np.zeros(3), 0.5, 0.8, 1e-3)
    assert r.lhs == 0.0 and r.satisfied
    x0 = np.array([0, 0, SPHERE.radius(0.15) + 0.05])
    r = dg.eps_regularity_check(sphere_track, x0, 0.1, 0.15, 1e-2)
    assert r.branch == "verdict" and 0 < r.energy < 1e-2
    assert r.satisfied and r.lhs < r.rhs
    r = dg.eps_regularity_check(sphere_track, np.array([0, 0, SPHERE.radius(0.2)]), 0.2, 0.2, 1e-2)
    assert r.branch == "energy_not_small" and r.satisfied is None


def test_pinching_ratio_examples():
    assert dg.pinching_ratio(SPHERE.state(0.1)) == pytest.approx(0.5, abs=1e-12)
    assert dg.pinching_ratio(exact.ShrinkingCylinder().state(0.1)) == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(ValueError, match="vanishes"):
        dg.pinching_ratio(exact.PlaneSolution().state(0.0))
    with pytest.raises(ValueError, match="vertex"):
        dg.pinching_ratio(geo.flat_patch(5))


def test_distance_bound_audit_examples(sphere_track, plane_track):
    a = dg.distance_bound_audit(sphere_track, ORIGIN_T)
    assert np.max(np.abs(a.slack)) < 1e-6 and not a.flagged
    sp = dg.SpacetimePoint(np.array([0.3, 0.1, 0.0]), 2.0)
    a = dg.distance_bound_audit(plane_track, sp)
    assert np.allclose(a.slack, np.sqrt(4 * (2.0 - a.times)))
    a = dg.distance_bound_audit(sphere_track, dg.SpacetimePoint(np.array([10.0, 0, 0]), 0.25))
    assert a.flagged


def test_slice_Ls_product_sphere(sphere_track, plane_track):
    r4 = dg.slice_Ls_product(sphere_track, 4, 0.25)
    assert np.ptp(r4.product) < 1e-6
    assert r4.extreme == pytest.approx(LS4_SPHERE, rel=1e-12)
    r8 = dg.slice_Ls_product(sphere_track, 8, 0.25)
    assert np.ptp(r8.product) < 1e-6
    assert r8.extreme == pytest.approx(LS8_SPHERE, rel=1e-12)
    assert dg.slice_Ls_product(plane_track, 4, 2.0).extreme == 0.0
    with pytest.raises(ValueError):
        dg.slice_Ls_product(sphere_track, 2, 0.25)


def test_running_sup_Ls(sphere_track, plane_track, dumbbell_track):
    r = dg.running_sup_Ls(sphere_track, 4, 0.25)
    assert np.all(np.diff(r.norms) >= 0)
    assert r.extreme == pytest.approx(LS4_SPHERE, rel=1e-12)
    assert np.all(dg.running_sup_Ls(plane_track, 4, 2.0).norms == 0)
    est = flow.detect_singularity(dumbbell_track)
    assert dg.running_sup_Ls(dumbbell_track, 4, est.T_est).extreme > 0


def test_sup_A2_times_time_to_blowup_is_one_half(sphere_track):
    # the measured constant in sup|A|^2 >= C / (T - t) on the round sphere
    c = sphere_track.column("max_A2") * (0.25 - sphere_track.times)
    assert np.allclose(c, 0.5, rtol=1e-12)


def test_dumbbell_neck_and_bulb_densities(dumbbell_track):
    from mcflow.scenario import singular_point

    sp, prov, est = singular_point(dumbbell_track, None)
    assert prov == "detect_singularity"
    neck = dg.density_limit(dumbbell_track, sp)
    assert neck.limit == pytest.approx(SQRT_2PI_OVER_E, rel=0.05)
    assert neck.verdict == "regular_below2"
    last = dumbbell_track.states[-1]
    bulb_y = np.array([3.0, np.interp(3.0, last.grid, last.radii), 0.0])
    bulb = dg.density_limit(dumbbell_track, dg.SpacetimePoint(bulb_y, sp.T))
    assert bulb.limit == pytest.approx(1.0, abs=0.02)
    assert bulb.verdict == "regular_white"


def test_dumbbell_energy_not_small_near_neck(dumbbell_track):
    est = flow.detect_singularity(dumbbell_track)
    x0 = np.array([est.y0_est[0], 0.0, 0.0])
    energies = []
    # the window closes in on T: the scale-invariant energy concentrates
    for t0 in (est.T_est - 4e-3, est.T_est - 1e-3, dumbbell_track.times[-1]):
        r = dg.eps_regularity_check(dumbbell_track, x0, 0.2, t0, 1e-2)
        energies.append(r.energy)
    assert r.branch == "energy_not_small"
    assert np.all(np.diff(energies) > 0)


@pytest.mark.parametrize("lam", [2.0, 10.0, 100.0])
def test_scale_invariant_norms_under_dilation(sphere_track, lam):
    from mcflow.rescaling import parabolic_dilate

    sp = dg.SpacetimePoint(np.array([0.1, 0.0, 0.0]), 0.3)
    tr = flow.exact_track(SPHERE, np.linspace(0.0, 0.2, 11))
    rt = parabolic_dilate(tr, sp, lam)
    t_end = 0.2
    s_end = lam**2 * (t_end - sp.T)
    assert dg.spacetime_H_norm(rt, 4, s_end) == pytest.approx(dg.spacetime_H_norm(tr, 4, t_end), rel=1e-9)
    assert dg.lpq_A_norm(rt, 4, 4, s_end) == pytest.approx(dg.lpq_A_norm(tr, 4, 4, t_end), rel=1e-9)
    x0 = np.array([0.0, 0.0, 0.85])
    e = dg.local_energy(tr, x0, 0.3, 0.15)
    e_rt = dg.local_energy(rt, lam * (x0 - sp.y0), 0.3 * lam, lam**2 * (0.15 - sp.T))
    assert e > 0
    assert e_rt == pytest.approx(e, rel=1e-9)


def test_gaussian_density_time_rules(sphere_track, dumbbell_track):
    # analytic tracks take any time, sampled tracks only snapshot times
    sp = dg.SpacetimePoint(np.array([0.5, 0, 0]), 0.25)
    assert dg.gaussian_density(sphere_track, sp, 0.1) == pytest.approx(SPHERE_OFFSET_DENSITY[0.1], rel=1e-12)
    with pytest.raises(ValueError, match="not a track time"):
        dg.gaussian_density(dumbbell_track, dg.SpacetimePoint(np.zeros(3), 0.07), 0.0123456)
