"""Gaussian densities, monotonicity audits, curvature norms and local energies.

Tracks whose states all come from one closed-form solution are evaluated on
the *analytic* path (closed forms, adaptive quadrature in time); everything
else goes through the *discrete* path (surface quadrature per snapshot,
trapezoid in time). ``path_of`` reports which one a track uses.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, interpolate, special

from . import geometry as geo
from .flow import FlowTrack
from .geometry import AxisymProfile, ExactSurface, TriMesh

KERNEL_CUTOFF = -40.0
VERDICT_MARGIN = 0.05
WHITE_TOL = 0.02

_QUAD = dict(epsabs=1e-14, epsrel=1e-13, limit=400)  # absolute floor for integrands at roundoff level


@dataclass(frozen=True)
class SpacetimePoint:
    y0: np.ndarray
    T: float

    def __post_init__(self):
        object.__setattr__(self, "y0", np.asarray(self.y0, dtype=float))
        if not np.isfinite(self.T):
            raise ValueError("T must be finite")


@dataclass
class DensityReport:
    times: np.ndarray
    values: np.ndarray
    dissipation: np.ndarray | None = None
    violations: list = field(default_factory=list)
    limit: float | None = None
    verdict: str = "inconclusive"
    path: str = "discrete"
    tol: float = 0.0


def path_of(track: FlowTrack) -> str:
    return "analytic" if track.solution is not None else "discrete"


# ---------------------------------------------------------------------------
# kernel and density
# ---------------------------------------------------------------------------


def backward_heat_kernel(sp: SpacetimePoint, y, t: float, n: int = 2) -> float | np.ndarray:
    """(4 pi (T - t))^{-n/2} exp(-|y - y0|^2 / (4 (T - t))); exponents below -40 give 0."""
    tau = sp.T - t
    if not tau > 0:
        raise ValueError(f"t = {t} must be earlier than T = {sp.T}")
    y = np.asarray(y, dtype=float)
    d2 = np.sum((y - sp.y0) ** 2, axis=-1)
    expo = -d2 / (4 * tau)
    out = np.where(expo < KERNEL_CUTOFF, 0.0, np.exp(np.maximum(expo, KERNEL_CUTOFF)))
    out = out * (4 * math.pi * tau) ** (-n / 2)
    return float(out) if out.ndim == 0 else out


def _sphere_terms(s: ExactSurface, y0, tau):
    d = float(np.linalg.norm(y0 - s.center))
    return s.radius, d


def _angular(n, r, d, tau, g):
    """|S^{n-1}| r^n (4 pi tau)^{-n/2} int_0^pi exp(-(r^2+d^2-2rd cos)/4tau) g(theta) sin^{n-1}."""
    pref = geo.sphere_area(n - 1) * r**n * (4 * math.pi * tau) ** (-n / 2)
    base = -((r - d) ** 2) / (4 * tau)

    def f(th):
        return math.exp(base - r * d * (1 - math.cos(th)) / (2 * tau)) * g(th) * math.sin(th) ** (n - 1)

    val, _ = integrate.quad(f, 0.0, math.pi, **_QUAD)
    return pref * val


def _cylinder_axial(s: ExactSurface, y0, tau):
    rel = y0 - s.center
    z0 = float(rel @ s.direction)
    d = float(np.linalg.norm(rel - z0 * s.direction))
    L = s.half_length
    if np.isfinite(L):
        Z = 0.5 * math.sqrt(4 * math.pi * tau) * (
            special.erf((L - z0) / (2 * math.sqrt(tau))) + special.erf((L + z0) / (2 * math.sqrt(tau)))
        )
    else:
        Z = math.sqrt(4 * math.pi * tau)
    return Z, d


def analytic_density(s: ExactSurface, sp: SpacetimePoint) -> float:
    tau = sp.T - s.time
    if not tau > 0:
        raise ValueError(f"t = {s.time} must be earlier than T = {sp.T}")
    y0 = sp.y0
    if s.kind == "plane":
        dist = float((y0 - s.center) @ s.direction)
        return math.exp(-(dist**2) / (4 * tau))
    if s.kind == "sphere":
        r, d = _sphere_terms(s, y0, tau)
        n = s.n
        if d == 0.0:
            return geo.sphere_area(n) * r**n * (4 * math.pi * tau) ** (-n / 2) * math.exp(-(r**2) / (4 * tau))
        if n == 2:
            return -(r / d) * math.exp(-((r - d) ** 2) / (4 * tau)) * math.expm1(-r * d / tau)
        return _angular(n, r, d, tau, lambda th: 1.0)
    Z, d = _cylinder_axial(s, y0, tau)
    r = s.radius
    ring = 2 * math.pi * r * math.exp(-((r - d) ** 2) / (4 * tau)) * special.i0e(r * d / (2 * tau))
    return Z * ring / (4 * math.pi * tau)


def analytic_dissipation(s: ExactSurface, sp: SpacetimePoint) -> float:
    """int rho |H_vec + F_perp / (2 (T - t))|^2 dmu with F measured from y0."""
    tau = sp.T - s.time
    if not tau > 0:
        raise ValueError(f"t = {s.time} must be earlier than T = {sp.T}")
    y0 = sp.y0
    if s.kind == "plane":
        dist = float((y0 - s.center) @ s.direction)
        return math.exp(-(dist**2) / (4 * tau)) * (dist / (2 * tau)) ** 2
    if s.kind == "sphere":
        r, d = _sphere_terms(s, y0, tau)
        n = s.n
        if d == 0.0:
            return analytic_density(s, sp) * (-n / r + r / (2 * tau)) ** 2
        # theta measured from the direction of y0 - centre: <x - y0, nu> = r - d cos(theta)
        return _angular(n, r, d, tau, lambda th: (-n / r + (r - d * math.cos(th)) / (2 * tau)) ** 2)
    Z, d = _cylinder_axial(s, y0, tau)
    r = s.radius

    def f(ph):
        w = math.exp(-((r - d) ** 2) / (4 * tau) - r * d * (1 - math.cos(ph)) / (2 * tau))
        return w * (-1 / r + (r - d * math.cos(ph)) / (2 * tau)) ** 2

    val, _ = integrate.quad(f, 0.0, 2 * math.pi, **_QUAD)
    return Z * r * val / (4 * math.pi * tau)


KERNEL_RESOLUTION = 0.5  # max node spacing in units of sqrt(tau) before refining


@dataclass
class _Meridian:
    x: np.ndarray
    u: np.ndarray
    nx: np.ndarray
    nr: np.ndarray
    H: np.ndarray
    w: np.ndarray  # 2 pi u ds, the full-circle area weight

    def integrate(self, f):
        return float(np.dot(self.w, f))


def _meridian(state: AxisymProfile, x0: float, tau: float) -> _Meridian:
    """Meridian nodes (with images) for kernel integrals centred at x0.

    When the grid is too coarse for the kernel width sqrt(tau) near x0, the
    unfolded profile is resampled by a cubic spline on a window of +-10
    kernel widths.
    """
    q = geo.quadrature(state, n_angle=1, images=1)
    x, u = q.points[:, 0], q.points[:, 1]
    merid = _Meridian(x, u, q.normals[:, 0], q.normals[:, 1], q.H, q.weights)
    width = math.sqrt(tau)
    near = np.abs(state.grid - x0) < 10 * width
    spacing = np.diff(state.grid)
    local = spacing[near[1:] | near[:-1]]
    if local.size == 0 or local.max() <= KERNEL_RESOLUTION * width:
        return merid
    order = np.argsort(x, kind="stable")
    xs, us = x[order], u[order]
    keep = np.concatenate([[True], np.diff(xs) > 1e-12 * max(1.0, abs(xs).max())])
    spline = interpolate.CubicSpline(xs[keep], us[keep])
    lo, hi = max(xs[0], x0 - 10 * width), min(xs[-1], x0 + 10 * width)
    m = int(np.ceil((hi - lo) / (width / 8))) + 1
    xf = np.linspace(lo, hi, m)
    uf, d1, d2 = spline(xf), spline(xf, 1), spline(xf, 2)
    g = np.sqrt(1 + d1**2)
    H = 1 / (uf * g) - d2 / g**3
    w = np.full(m, xf[1] - xf[0])
    w[[0, -1]] /= 2
    return _Meridian(xf, uf, -d1 / g, 1 / g, H, 2 * np.pi * w * uf * g)


def _profile_kernel_terms(state: AxisymProfile, sp: SpacetimePoint):
    """Meridian nodes with the angular integral of the kernel done in closed form.

    With y0 = (x0, r0, 0) (rotated into the meridian), the angle enters only
    through exp(c cos(phi)), c = u r0 / (2 tau), whose average is I0(c).
    """
    tau = sp.T - state.time
    if not tau > 0:
        raise ValueError(f"t = {state.time} must be earlier than T = {sp.T}")
    x0, r0 = sp.y0[0], math.hypot(sp.y0[1], sp.y0[2])
    q = _meridian(state, x0, tau)
    c = q.u * r0 / (2 * tau)
    gauss = np.exp(-((q.x - x0) ** 2 + (q.u - r0) ** 2) / (4 * tau)) / (4 * np.pi * tau)
    return q, gauss, c, tau, x0, r0


def density_of_state(state, sp: SpacetimePoint) -> float:
    """int rho_{y0,T} dmu_t on one slice (analytic for exact surfaces)."""
    if isinstance(state, ExactSurface):
        return analytic_density(state, sp)
    if isinstance(state, AxisymProfile):
        q, gauss, c, *_ = _profile_kernel_terms(state, sp)
        return q.integrate(gauss * special.i0e(c))
    tau = sp.T - state.time
    if not tau > 0:
        raise ValueError(f"t = {state.time} must be earlier than T = {sp.T}")
    q = geo.quadrature(state)
    return q.integrate(backward_heat_kernel(sp, q.points, state.time, q.n))


def dissipation_of_state(state, sp: SpacetimePoint) -> float:
    """int rho |H - <x - y0, nu>/(2 tau)|^2 dmu on one slice."""
    if isinstance(state, ExactSurface):
        return analytic_dissipation(state, sp)
    if isinstance(state, AxisymProfile):
        q, gauss, c, tau, x0, r0 = _profile_kernel_terms(state, sp)
        # integrand (a - b cos(phi))^2 against exp(c (cos(phi) - 1))
        a = -q.H + ((q.x - x0) * q.nx + q.u * q.nr) / (2 * tau)
        b = r0 * q.nr / (2 * tau)
        i0, i1, i2 = special.ive(0, c), special.ive(1, c), special.ive(2, c)
        return q.integrate(gauss * (a**2 * i0 - 2 * a * b * i1 + b**2 * (i0 + i2) / 2))
    tau = sp.T - state.time
    if not tau > 0:
        raise ValueError(f"t = {state.time} must be earlier than T = {sp.T}")
    q = geo.quadrature(state)
    rho = backward_heat_kernel(sp, q.points, state.time, q.n)
    support = np.einsum("ij,ij->i", q.points - sp.y0, q.normals)
    return q.integrate(rho * (-q.H + support / (2 * tau)) ** 2)


def _check_dim(track: FlowTrack, sp: SpacetimePoint):
    n = geo.dimension(track.states[0])
    if sp.y0.shape != (n + 1,):
        raise ValueError(f"spacetime point has dimension {sp.y0.shape}, surface lives in R^{n + 1}")


def gaussian_density(track: FlowTrack, sp: SpacetimePoint, t: float) -> float:
    """Theta(t) = int rho_{y0,T} dmu_t at a track time t < T.

    Analytic tracks accept any time before the solution's extinction.
    """
    _check_dim(track, sp)
    if t >= sp.T:
        raise ValueError(f"t = {t} must be earlier than T = {sp.T}")
    sol = track.solution
    if sol is not None and path_of(track) == "analytic":
        return density_of_state(sol.state(t), sp)
    return density_of_state(track.states[track.index_of(t)], sp)


def monotonicity_audit(track: FlowTrack, sp: SpacetimePoint, tol: float | None = None) -> DensityReport:
    """Density series, dissipation proxy and any increases beyond ``tol``."""
    _check_dim(track, sp)
    states = [s for s in track.states if s.time < sp.T]
    if len(states) < 3:
        raise ValueError("need at least 3 track times below T")
    path = path_of(track)
    if tol is None:
        tol = 1e-6 if path == "analytic" else 1e-3
    t = np.array([s.time for s in states])
    vals = np.array([density_of_state(s, sp) for s in states])
    diss = np.array([dissipation_of_state(s, sp) for s in states])
    inc = np.diff(vals)
    violations = [(float(t[i + 1]), float(inc[i])) for i in np.flatnonzero(inc > tol)]
    return DensityReport(t, vals, diss, violations, path=path, tol=tol)


def density_verdict(theta: float, margin: float = VERDICT_MARGIN, white_tol: float = WHITE_TOL) -> str:
    if abs(theta - 1.0) < white_tol:
        return "regular_white"
    if theta < 2.0 - margin:
        return "regular_below2"
    return "inconclusive"


def density_limit(
    track: FlowTrack,
    sp: SpacetimePoint,
    k: int = 5,
    degree: int = 1,
    margin: float = VERDICT_MARGIN,
    white_tol: float = WHITE_TOL,
    min_approach: float = 0.5,
) -> DensityReport:
    """Richardson-type extrapolation of Theta to T - t = 0 over the last k snapshots.

    A polynomial of ``degree`` in (T - t) is least-squares fitted and evaluated
    at zero. The verdict is inconclusive when the last snapshot is not at
    least ``min_approach`` times closer to T than the first one used.
    """
    _check_dim(track, sp)
    states = [s for s in track.states if s.time < sp.T]
    if len(states) < k:
        rep = DensityReport(np.zeros(0), np.zeros(0), path=path_of(track))
        return rep
    use = states[-k:]
    t = np.array([s.time for s in use])
    tau = sp.T - t
    vals = np.array([density_of_state(s, sp) for s in use])
    rep = DensityReport(t, vals, path=path_of(track))
    if tau[-1] > min_approach * tau[0]:
        return rep
    if np.ptp(vals) <= 1e-14 * max(1.0, abs(vals).max()):
        lim = float(vals[-1])
    else:
        coef = np.polyfit(tau / tau[0], vals, min(degree, k - 1))
        lim = float(coef[-1])
    rep.limit = lim
    rep.verdict = density_verdict(lim, margin, white_tol)
    return rep


# ---------------------------------------------------------------------------
# time integration helpers
# ---------------------------------------------------------------------------


def _time_integral(times: np.ndarray, values: np.ndarray, a: float, b: float) -> float:
    """Trapezoid of the piecewise-linear interpolant of (times, values) over [a, b]."""
    if a < times[0] - 1e-12 * max(1, abs(times[0])) or b > times[-1] + 1e-12 * max(1, abs(times[-1])):
        raise ValueError(f"interval [{a}, {b}] is outside the track span [{times[0]}, {times[-1]}]")
    if b <= a:
        return 0.0
    inner = (times > a) & (times < b)
    tt = np.concatenate([[a], times[inner], [b]])
    vv = np.concatenate([[np.interp(a, times, values)], values[inner], [np.interp(b, times, values)]])
    return float(np.trapezoid(vv, tt))


def _analytic_time_integral(sol, g, a: float, b: float, points=()) -> float:
    """int_a^b g(sol.state(t)) dt; log-time substitution when T is finite."""
    if b <= a:
        return 0.0
    T = sol.T
    if np.isfinite(T):
        lo, hi = math.log(T - b), math.log(T - a)
        pts = sorted(math.log(T - p) for p in points if a < p < b)

        def f(u):
            w = math.exp(u)
            return g(sol.state(T - w)) * w

        val, _ = integrate.quad(f, lo, hi, points=pts or None, **_QUAD)
        return val
    val, _ = integrate.quad(lambda t: g(sol.state(t)), a, b, points=[p for p in points if a < p < b] or None, **_QUAD)
    return val


def _exact_integral_of_power(s: ExactSurface, key: str, power: float) -> float:
    """int |H|^power or int |A|^power over an exact slice."""
    val = abs(s.H) if key == "H" else math.sqrt(s.A2)
    if val == 0.0:
        return 0.0
    return val**power * geo.area(s)


def _slice_power(state, key: str, power: float) -> float:
    if isinstance(state, ExactSurface):
        return _exact_integral_of_power(state, key, power)
    q = geo.quadrature(state)
    vals = np.abs(q.H) if key == "H" else np.sqrt(q.A2)
    return q.integrate(vals**power)


def _t_end(track: FlowTrack, t_end):
    times = track.times
    if t_end is None:
        return float(times[-1])
    if t_end > times[-1] * (1 + 1e-14) + 1e-300 and t_end > times[-1]:
        raise ValueError("t_end is past the last track time")
    return float(t_end)


# ---------------------------------------------------------------------------
# global norms
# ---------------------------------------------------------------------------


def spacetime_H_norm(track: FlowTrack, alpha: float, t_end: float | None = None) -> float:
    """(int_{t_0}^{t_end} int |H|^alpha dmu dt)^{1/alpha}, t_0 the first track time."""
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    t_end = _t_end(track, t_end)
    t0 = float(track.times[0])
    sol = track.solution
    if sol is not None:
        total = _analytic_time_integral(sol, lambda s: _exact_integral_of_power(s, "H", alpha), t0, t_end)
    else:
        vals = np.array([_slice_power(s, "H", alpha) for s in track.states])
        total = _time_integral(track.times, vals, t0, t_end)
    return total ** (1 / alpha)


def lpq_A_norm(track: FlowTrack, p: float, q: float, t_end: float | None = None) -> float:
    """(int (int |A|^q dmu)^{p/q} dt)^{1/p}; warns off the scale-invariant line n/q + 2/p = 1."""
    if not (p > 0 and q > 0):
        raise ValueError("p and q must be positive")
    n = geo.dimension(track.states[0])
    if abs(n / q + 2 / p - 1) > 1e-12:
        warnings.warn(f"n/q + 2/p = {n / q + 2 / p:.6g} != 1: norm is not scale invariant", stacklevel=2)
    t_end = _t_end(track, t_end)
    t0 = float(track.times[0])
    sol = track.solution
    if sol is not None:
        total = _analytic_time_integral(
            sol, lambda s: _exact_integral_of_power(s, "A", q) ** (p / q), t0, t_end
        )
    else:
        vals = np.array([_slice_power(s, "A", q) ** (p / q) for s in track.states])
        total = _time_integral(track.times, vals, t0, t_end)
    return total ** (1 / p)


# ---------------------------------------------------------------------------
# local energies
# ---------------------------------------------------------------------------


def _sphere_ball_area(s: ExactSurface, x0, sigma) -> float:
    r = s.radius
    d = float(np.linalg.norm(x0 - s.center))
    n = s.n
    if d == 0.0:
        return geo.area(s) if r < sigma else 0.0
    c = (r**2 + d**2 - sigma**2) / (2 * r * d)
    if c >= 1:
        return 0.0
    if c <= -1:
        return geo.area(s)
    if n == 2:
        return 2 * math.pi * r**2 * (1 - c)
    if n == 1:
        return 2 * r * math.acos(c)
    val, _ = integrate.quad(lambda th: math.sin(th) ** (n - 1), 0.0, math.acos(c), **_QUAD)
    return geo.sphere_area(n - 1) * r**n * val


def _cylinder_ball_area(s: ExactSurface, x0, sigma) -> float:
    rel = x0 - s.center
    z0 = float(rel @ s.direction)
    d = float(np.linalg.norm(rel - z0 * s.direction))
    r = s.radius
    lo, hi = max(-s.half_length, z0 - sigma), min(s.half_length, z0 + sigma)
    if lo >= hi:
        return 0.0

    def arc(z):
        rho2 = sigma**2 - (z - z0) ** 2
        if d == 0.0:
            return 2 * math.pi * r if r**2 < rho2 else 0.0
        c = (r**2 + d**2 - rho2) / (2 * r * d)
        if c >= 1:
            return 0.0
        return 2 * r * math.acos(max(c, -1.0))

    val, _ = integrate.quad(arc, lo, hi, epsabs=0.0, epsrel=1e-12, limit=400)
    return val


def exact_ball_area(s: ExactSurface, x0, sigma) -> float:
    """Area of the exact slice inside B(x0, sigma)."""
    x0 = np.asarray(x0, dtype=float)
    if s.kind == "sphere":
        return _sphere_ball_area(s, x0, sigma)
    if s.kind == "cylinder":
        return _cylinder_ball_area(s, x0, sigma)
    dist = abs(float((x0 - s.center) @ s.direction))
    if dist >= sigma:
        return 0.0
    rho2 = sigma**2 - dist**2
    n = s.n
    return math.pi ** (n / 2) / special.gamma(n / 2 + 1) * rho2 ** (n / 2)


def _local_slice_energy(state, x0, sigma, power) -> float:
    if isinstance(state, ExactSurface):
        if state.A2 == 0.0:
            return 0.0
        return state.A2 ** (power / 2) * exact_ball_area(state, x0, sigma)
    q = geo.restrict_to_ball(state, x0, sigma)
    return q.integrate(q.A2 ** (power / 2))


def _sphere_breakpoints(sol, x0, sigma):
    """Times where an exact sphere becomes tangent to the ball boundary."""
    from .exact import ShrinkingSphere

    if not isinstance(sol, ShrinkingSphere):
        return []
    d = float(np.linalg.norm(np.asarray(x0) - sol.center))
    out = []
    for rho in (d + sigma, abs(d - sigma)):
        if rho > 0:
            out.append(sol.t_ref + (sol.r0**2 - rho**2) / (2 * sol.n))
    return out


def local_energy(track: FlowTrack, x0, sigma: float, t0: float, power: float | None = None) -> float:
    """int_{t0 - sigma^2}^{t0} int_{M_t cap B(x0, sigma)} |A|^{n+2} dmu dt."""
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    x0 = np.asarray(x0, dtype=float)
    n = geo.dimension(track.states[0])
    power = n + 2 if power is None else power
    a, b = t0 - sigma**2, t0
    times = track.times
    span_tol = 1e-12 * max(1.0, abs(times[0]), abs(times[-1]))
    if a < times[0] - span_tol or b > times[-1] + span_tol:
        raise ValueError(f"window [{a}, {b}] is outside the track span [{times[0]}, {times[-1]}]")
    sol = track.solution
    if sol is not None:
        return _analytic_time_integral(
            sol, lambda s: _local_slice_energy(s, x0, sigma, power), a, b, _sphere_breakpoints(sol, x0, sigma)
        )
    vals = np.array([_local_slice_energy(s, x0, sigma, power) for s in track.states])
    return _time_integral(times, vals, max(a, times[0]), min(b, times[-1]))


@dataclass
class EpsRegularityResult:
    lhs: float | None
    rhs: float | None
    energy: float
    eps0: float
    satisfied: bool | None
    branch: str


def _sup_A2_in_ball(state, x0, radius) -> float:
    if radius <= 0:
        return 0.0
    if isinstance(state, ExactSurface):
        return state.A2 if geo.distance_to_surface(state, x0) < radius else 0.0
    if isinstance(state, TriMesh):
        A2 = geo.second_form_norm(state)
        inside = np.linalg.norm(state.vertices - x0, axis=1) < radius
        return float(A2[inside].max()) if inside.any() else 0.0
    q = geo.quadrature(state, n_angle=64)
    inside = np.linalg.norm(q.points - x0, axis=1) < radius
    return float(q.A2[inside].max()) if inside.any() else 0.0


def eps_regularity_check(
    track: FlowTrack, x0, sigma: float, t0: float, eps0: float, n_delta: int = 32
) -> EpsRegularityResult:
    """Both sides of the local curvature estimate on a delta-grid in [0, sigma/2].

    lhs = max_delta delta^2 sup_{window, ball} |A|^2,
    rhs = eps0^{-2/(n+2)} E^{2/(n+2)} with E the local energy. When E >= eps0
    the estimate does not apply and no verdict is given.
    """
    x0 = np.asarray(x0, dtype=float)
    n = geo.dimension(track.states[0])
    E = local_energy(track, x0, sigma, t0)
    if E >= eps0:
        return EpsRegularityResult(None, None, E, eps0, None, "energy_not_small")
    sol = track.solution
    lhs = 0.0
    for delta in np.linspace(0.0, sigma / 2, n_delta):
        lo = t0 - (sigma - delta) ** 2
        states = [s for s in track.states if lo <= s.time <= t0]
        if sol is not None:
            states += [sol.state(lo), sol.state(t0)]
        sup = max((_sup_A2_in_ball(s, x0, sigma - delta) for s in states), default=0.0)
        lhs = max(lhs, delta**2 * sup)
    rhs = eps0 ** (-2 / (n + 2)) * E ** (2 / (n + 2))
    # zero energy gives lhs = rhs = 0: the estimate holds trivially
    ok = lhs < rhs or (lhs == 0.0 and rhs == 0.0)
    return EpsRegularityResult(lhs, rhs, E, eps0, bool(ok), "verdict")


# ---------------------------------------------------------------------------
# slice quantities
# ---------------------------------------------------------------------------


def pinching_ratio(state, h_min: float = 1e-8) -> float:
    """sup |A|^2 / H^2; refuses where |H| < h_min."""
    if isinstance(state, ExactSurface):
        if abs(state.H) < h_min:
            raise ValueError(f"mean curvature vanishes on the exact {state.kind}")
        return state.A2 / state.H**2
    H, _ = geo.mean_curvature(state)
    A2 = geo.second_form_norm(state)
    small = np.abs(H) < h_min
    if small.any():
        i = int(np.flatnonzero(small)[0])
        raise ValueError(f"|H| < {h_min} at vertex {i}")
    return float(np.max(A2 / H**2))


@dataclass
class DistanceAudit:
    times: np.ndarray
    slack: np.ndarray
    flagged: list


def distance_bound_audit(track: FlowTrack, sp: SpacetimePoint, tol: float = 1e-6) -> DistanceAudit:
    """slack(t) = sqrt(2n(T - t)) - dist(M_t, y0); slack < -tol is flagged."""
    n = geo.dimension(track.states[0])
    states = [s for s in track.states if s.time < sp.T]
    if len(states) != len(track.states):
        raise ValueError("all audited times must be earlier than T")
    t = np.array([s.time for s in states])
    slack = np.array([math.sqrt(2 * n * (sp.T - s.time)) - geo.distance_to_surface(s, sp.y0) for s in states])
    flagged = [(float(t[i]), float(slack[i])) for i in np.flatnonzero(slack < -tol)]
    return DistanceAudit(t, slack, flagged)


def _Ls_norms(track: FlowTrack, s: float, T: float):
    n = geo.dimension(track.states[0])
    if not s > n:
        raise ValueError(f"s = {s} must exceed n = {n}")
    states = [st for st in track.states if st.time < T]
    t = np.array([st.time for st in states])
    norms = np.array([_slice_power(st, "A", s) ** (1 / s) for st in states])
    return t, norms, (T - t) ** ((s - n) / (2 * s))


@dataclass
class LsSeries:
    times: np.ndarray
    norms: np.ndarray
    product: np.ndarray
    extreme: float


def slice_Ls_product(track: FlowTrack, s: float, T: float) -> LsSeries:
    """||A||_{L^s(M_t)} (T - t)^{(s-n)/(2s)} per snapshot; ``extreme`` is its max."""
    t, norms, w = _Ls_norms(track, s, T)
    prod = norms * w
    return LsSeries(t, norms, prod, float(prod.max()))


def running_sup_Ls(track: FlowTrack, s: float, T: float) -> LsSeries:
    """f(t) = sup_{t1 <= t} ||A||_{L^s(M_t1)} and f(t)(T - t)^{(s-n)/(2s)}; ``extreme`` is the min."""
    t, norms, w = _Ls_norms(track, s, T)
    f = np.maximum.accumulate(norms)
    prod = f * w
    return LsSeries(t, f, prod, float(prod.min()))
