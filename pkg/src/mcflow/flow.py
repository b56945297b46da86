"""Time integration of mean curvature flow and singular-time estimation."""
from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy import linalg

from . import geometry as geo
from .geometry import AxisymProfile, DegenerateMeshError, ExactSurface, TriMesh

logger = logging.getLogger(__name__)

STOP_REASONS = ("time_reached", "curvature_threshold", "degenerate", "extinction")
SUMMARY_COLUMNS = ("step", "t", "max_A2", "area", "min_u", "dt")


class StepError(RuntimeError):
    """Linear solve failed to reach the residual tolerance."""


class ProfilePinch(RuntimeError):
    """The profile radius would cross zero within the requested step."""


class NoBlowUp(ValueError):
    """Curvature is not growing; no singular time can be fitted."""


@dataclass
class FlowTrack:
    states: list
    summaries: list[dict] = field(default_factory=list)
    stop_reason: str = "time_reached"

    def __post_init__(self):
        if not self.summaries:
            self.summaries = [summarize(s, step=i) for i, s in enumerate(self.states)]
        if len(self.summaries) != len(self.states):
            raise ValueError("summaries and states differ in length")
        t = self.times
        if len(t) > 1 and (np.diff(t) <= 0).any():
            raise ValueError("track times must be strictly increasing")
        if self.stop_reason not in STOP_REASONS:
            raise ValueError(f"unknown stop reason {self.stop_reason!r}")

    @property
    def times(self) -> np.ndarray:
        return np.array([s.time for s in self.states], dtype=float)

    def column(self, name: str) -> np.ndarray:
        return np.array([row[name] for row in self.summaries], dtype=float)

    def __len__(self):
        return len(self.states)

    def index_of(self, t: float, rtol: float = 1e-12) -> int:
        times = self.times
        i = int(np.argmin(np.abs(times - t)))
        if abs(times[i] - t) > rtol * max(1.0, abs(t)):
            raise ValueError(f"t = {t} is not a track time")
        return i

    @property
    def solution(self):
        """The closed-form solution behind every state, or None."""
        if not all(isinstance(s, ExactSurface) and s.solution is not None for s in self.states):
            return None
        keys = {json.dumps(_solution_to_dict(s.solution), sort_keys=True) for s in self.states}
        if len(keys) == 1:
            return self.states[0].solution
        return None


@dataclass
class SingularityEstimate:
    T_est: float
    y0_est: np.ndarray
    C0_est: float
    fit_quality: float
    type_one: bool
    distance_flag: bool = False
    window: int = 0


@dataclass
class DtPolicy:
    c_stab: float = 0.1
    c_mesh: float = 0.5
    dt_max: float = 1e-2
    dt_min: float = 1e-14
    snapshot_ratio: float = 0.8
    snapshot_max_gap: float = 0.02
    explicit: bool = False

    def __post_init__(self):
        if not (self.c_stab > 0 and self.dt_max > 0 and 0 < self.snapshot_ratio < 1):
            raise ValueError("invalid dt policy")


@dataclass
class StopCriterion:
    t_max: float | None = None
    max_A2: float | None = None
    min_u: float | None = None
    max_steps: int = 1_000_000

    def __post_init__(self):
        if self.t_max is None and self.max_A2 is None and self.min_u is None:
            raise ValueError("stop criterion needs t_max, max_A2 or min_u")


def summarize(state, step: int = 0, dt: float = 0.0) -> dict:
    min_u = float(np.min(state.radii[state.active])) if isinstance(state, AxisymProfile) else math.nan
    return {
        "step": step,
        "t": float(state.time),
        "max_A2": geo.max_A2(state),
        "area": geo.area(state),
        "min_u": min_u,
        "dt": float(dt),
    }


# ---------------------------------------------------------------------------
# steppers
# ---------------------------------------------------------------------------


def laplace_beltrami(mesh: TriMesh) -> sp.csr_matrix:
    """Area-normalised cotangent operator L = M^{-1} W, so L X = H nu."""
    areas, _ = geo.mixed_areas(mesh)
    return sp.diags(1.0 / areas) @ geo.cotan_stiffness(mesh)


def step_semi_implicit(mesh: TriMesh, dt: float, tol: float = 1e-10) -> TriMesh:
    """One backward-Euler step (Id + dt L_t) X_new = X_old.

    Boundary vertices of open meshes are held fixed.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    W = geo.cotan_stiffness(mesh)
    areas, _ = geo.mixed_areas(mesh)
    X = mesh.vertices
    A = (sp.diags(areas) + dt * W).tocsr()
    rhs = areas[:, None] * X
    fixed = mesh.boundary_vertices() if not mesh.closed else np.zeros(0, dtype=np.int64)
    if len(fixed):
        keep = np.ones(len(X), dtype=bool)
        keep[fixed] = False
        D = sp.diags(keep.astype(float))
        A = (D @ A + sp.diags((~keep).astype(float))).tocsr()
        rhs = np.where(keep[:, None], rhs, X)
    try:
        X_new = spla.splu(A.tocsc()).solve(rhs)
    except RuntimeError as exc:  # singular factorisation
        raise StepError(f"factorisation failed at t = {mesh.time}: {exc}") from exc
    res = np.linalg.norm(A @ X_new - rhs) / max(np.linalg.norm(rhs), 1e-300)
    if not np.isfinite(res) or res > tol:
        raise StepError(f"linear solve residual {res:.3e} exceeds {tol:.0e} at t = {mesh.time}")
    return mesh.with_vertices(X_new, mesh.time + dt)


def step_explicit(mesh: TriMesh, dt: float) -> TriMesh:
    """Forward-Euler step X_new = X - dt H nu; kept as a test oracle."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    HN = laplace_beltrami(mesh) @ mesh.vertices
    if not mesh.closed:
        HN[mesh.boundary_vertices()] = 0.0
    return mesh.with_vertices(mesh.vertices - dt * HN, mesh.time + dt)


def delaunay_flip(mesh: TriMesh) -> TriMesh:
    """One pass of intrinsic edge flips removing non-Delaunay interior edges."""
    F = mesh.faces.copy()
    V = mesh.vertices
    flipped = True
    while flipped:
        flipped = False
        owner = {}
        for f, (a, b, c) in enumerate(F):
            owner[(a, b)] = (f, c)
            owner[(b, c)] = (f, a)
            owner[(c, a)] = (f, b)
        touched = set()
        for (i, j), (f1, k) in list(owner.items()):
            if (j, i) not in owner or i > j:
                continue
            f2, l = owner[(j, i)]
            if f1 in touched or f2 in touched or (k, l) in owner or (l, k) in owner:
                continue
            ang = 0.0
            for apex, p, q in ((k, i, j), (l, i, j)):
                u, w = V[p] - V[apex], V[q] - V[apex]
                ang += math.atan2(np.linalg.norm(np.cross(u, w)), float(u @ w))
            if ang > math.pi + 1e-12:
                F[f1] = (i, l, k)
                F[f2] = (l, j, k)
                touched |= {f1, f2}
                flipped = True
    return TriMesh(V, F, mesh.time, mesh.closed)


class _AxisymStencil:
    """Grid-only data for the profile update, reusable across steps."""

    def __init__(self, profile: AxisymProfile):
        im, ip, hm, hp = geo._profile_neighbours(profile)
        den = hm * hp * (hm + hp)
        self.im, self.ip = im, ip
        self.m = len(im)
        self.periodic = profile.boundary == "periodic"
        # first derivative weights (ip, centre, im) and D2 couplings
        self.d1 = (hm**2 / den, (hp**2 - hm**2) / den, -(hp**2) / den)
        self.c_ip, self.c_0, self.c_im = 2 * hm / den, -2 * (hm + hp) / den, 2 * hp / den

    def solve(self, k: np.ndarray, rhs: np.ndarray) -> np.ndarray:
        """Solve (I - diag(k) D2) v = rhs; tridiagonal, cyclic when periodic."""
        m = self.m
        up, lo = -k * self.c_ip, -k * self.c_im
        diag = 1.0 - k * self.c_0
        if m < 3:
            A = np.diag(diag)
            np.add.at(A, (np.arange(m), self.ip), up)
            np.add.at(A, (np.arange(m), self.im), lo)
            return np.linalg.solve(A, rhs)
        ab = np.zeros((3, m))
        ab[0, 1:] = up[:-1]
        ab[1] = diag
        ab[2, :-1] = lo[1:]
        if not self.periodic:
            # mirror ghosts fold both couplings onto the single neighbour
            ab[0, 1] += lo[0]
            ab[2, -2] += up[-1]
            return linalg.solve_banded((1, 1), ab, rhs, check_finite=False)
        # Sherman-Morrison for the cyclic corners A[0, m-1] and A[m-1, 0]
        top, bottom = lo[0], up[-1]
        gamma = -diag[0]
        ab[1, 0] -= gamma
        ab[1, -1] -= top * bottom / gamma
        w = np.zeros(m)
        w[0], w[-1] = gamma, bottom
        y, z = linalg.solve_banded((1, 1), ab, np.column_stack([rhs, w]), check_finite=False).T
        vy = y[0] + top * y[-1] / gamma
        vz = z[0] + top * z[-1] / gamma
        return y - z * vy / (1.0 + vz)

    def update(self, u: np.ndarray, dt: float, x_of=None) -> np.ndarray:
        wp, w0, wm = self.d1
        ux = wp * u[self.ip] + w0 * u + wm * u[self.im]
        rhs = u - dt / u
        if (rhs <= 0).any():
            where = "" if x_of is None else f" at x = {x_of(int(np.argmin(rhs))):.6g}"
            raise ProfilePinch(f"radius would cross zero{where}")
        u_new = self.solve(dt / (1.0 + ux**2), rhs)
        if (u_new <= 0).any() or not np.isfinite(u_new).all():
            raise ProfilePinch("radius crossed zero in the implicit solve")
        return u_new


def step_axisym(profile: AxisymProfile, dt: float) -> AxisymProfile:
    """u_t = u_xx/(1+u_x^2) - 1/u with the diffusion implicit (frozen coefficient)
    and the reaction explicit."""
    return evolve_axisym(profile, dt, 1)


def evolve_axisym(profile: AxisymProfile, dt: float, n_steps: int) -> AxisymProfile:
    """``n_steps`` fixed steps of :func:`step_axisym`, reusing the grid stencil."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    st = _AxisymStencil(profile)
    u = profile.radii[profile.active]
    t = profile.time
    for _ in range(n_steps):
        try:
            u = st.update(u, dt, lambda i: profile.grid[i])
        except ProfilePinch as exc:
            raise ProfilePinch(f"{exc}, t = {t:.10g}") from None
        t += dt
    if profile.boundary == "periodic":
        u = np.append(u, u[0])
    return AxisymProfile(profile.grid, u, profile.boundary, t)


# ---------------------------------------------------------------------------
# driver
# ---------------------------------------------------------------------------


def _min_edge(mesh: TriMesh) -> float:
    v = mesh.vertices[mesh.faces]
    return float(min(np.linalg.norm(v[:, i] - v[:, (i + 1) % 3], axis=1).min() for i in range(3)))


def _advance(state, dt, policy: DtPolicy, remesh: bool):
    if isinstance(state, TriMesh):
        nxt = step_explicit(state, dt) if policy.explicit else step_semi_implicit(state, dt)
        return delaunay_flip(nxt) if remesh else nxt
    if isinstance(state, AxisymProfile):
        return step_axisym(state, dt)
    if state.solution is None:
        raise ValueError("exact surface has no attached solution to advance")
    return state.solution.state(state.time + dt)


def run_until(initial, stop: StopCriterion, policy: DtPolicy | None = None, remesh: bool = False) -> FlowTrack:
    """Evolve ``initial`` until ``stop`` fires; snapshot on a geometric schedule.

    dt = c_stab / max|A|^2 (capped by ``dt_max`` and, for explicit mesh steps,
    by c_mesh * h_min^2). A snapshot is recorded whenever the type-I guess of
    the remaining time, 1/(2 max|A|^2), has shrunk by ``snapshot_ratio``
    since the previous one, or ``snapshot_max_gap`` has elapsed.
    """
    policy = policy or DtPolicy()
    state = initial
    step = 0
    summ = summarize(state, 0)
    states, summaries = [state], [summ]
    tau_last = math.inf if summ["max_A2"] <= 0 else 1 / (2 * summ["max_A2"])
    t_last = state.time
    reason = None
    pending = None
    while reason is None:
        A2 = summ["max_A2"]
        t = state.time
        if stop.t_max is not None and t >= stop.t_max * (1 - 1e-14):
            reason = "time_reached"
            break
        if stop.max_A2 is not None and A2 >= stop.max_A2:
            reason = "curvature_threshold"
            break
        if stop.min_u is not None and summ["min_u"] <= stop.min_u:
            reason = "curvature_threshold"
            break
        if step >= stop.max_steps:
            reason = "time_reached"
            break
        dt = policy.dt_max if A2 <= 0 else min(policy.c_stab / A2, policy.dt_max)
        if policy.explicit and isinstance(state, TriMesh):
            dt = min(dt, policy.c_mesh * _min_edge(state) ** 2)
        if stop.t_max is not None:
            dt = min(dt, stop.t_max - t)
        if dt < policy.dt_min:
            reason = "degenerate"
            break
        try:
            nxt = _advance(state, dt, policy, remesh)
        except (DegenerateMeshError, StepError, ProfilePinch) as exc:
            logger.info("stopping: %s", exc)
            reason = "degenerate"
            break
        except ValueError as exc:
            if isinstance(state, ExactSurface):
                reason = "extinction"
                break
            raise
        step += 1
        state = nxt
        summ = summarize(state, step, dt)
        tau = math.inf if summ["max_A2"] <= 0 else 1 / (2 * summ["max_A2"])
        # relative slack: exact solutions shrink tau by exactly the ratio per step
        if tau <= policy.snapshot_ratio * tau_last * (1 + 1e-9) or state.time - t_last >= policy.snapshot_max_gap:
            states.append(state)
            summaries.append(summ)
            tau_last, t_last = tau, state.time
            pending = None
        else:
            pending = (state, summ)
    if pending is not None:
        states.append(pending[0])
        summaries.append(pending[1])
    return FlowTrack(states, summaries, reason)


def exact_track(solution, times) -> FlowTrack:
    """Track of analytic slices of ``solution`` at the given times."""
    return FlowTrack([solution.state(float(t)) for t in times])


def geometric_times(T: float, tau0: float, tau_end: float, ratio: float = 0.8, t0: float = 0.0) -> np.ndarray:
    """Times t0 and T - tau0 * ratio**k down to T - tau_end (increasing)."""
    k = int(math.ceil(math.log(tau_end / tau0) / math.log(ratio)))
    tau = tau0 * ratio ** np.arange(k + 1)
    t = T - tau
    t = t[t > t0]
    return np.concatenate([[t0], t])


# ---------------------------------------------------------------------------
# singular point estimation
# ---------------------------------------------------------------------------


def detect_singularity(track: FlowTrack, k: int = 12, r2_type_one: float = 0.999) -> SingularityEstimate:
    """Fit 1/max|A|^2 = (T - t)/C0 over the last ``k`` snapshots.

    The blow-up location is the argmax-|A| vertex extrapolated to T with a
    fit x(t) = y0 + b sqrt(T - t).
    """
    if len(track) < 8:
        raise ValueError(f"need at least 8 snapshots, got {len(track)}")
    sl = slice(max(0, len(track) - k), len(track))
    t = track.times[sl]
    A2 = track.column("max_A2")[sl]
    if (A2 <= 0).any() or (np.diff(A2) <= 0).any():
        raise NoBlowUp("max|A|^2 is not increasing over the fit window: no blow-up")
    y = 1.0 / A2
    b, a = np.polyfit(t, y, 1)
    if b >= 0:
        raise NoBlowUp("1/max|A|^2 is not decreasing: no blow-up")
    pred = a + b * t
    ss_res = float(np.sum((y - pred) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    T_est = -a / b
    C0 = -1.0 / b
    if T_est <= t[-1]:
        raise NoBlowUp(f"fitted singular time {T_est} precedes the last snapshot")

    states = track.states[sl]
    pos = [geo.vertex_positions(s) for s in states]
    last_A2 = geo.second_form_norm(states[-1])
    idx = int(np.argmax(last_A2))
    if len({len(p) for p in pos}) == 1:
        traj = np.array([p[idx] for p in pos])
    else:
        traj = np.array([p[int(np.argmax(geo.second_form_norm(s)))] for p, s in zip(pos, states)])
    basis = np.column_stack([np.ones_like(t), np.sqrt(T_est - t)])
    coef, *_ = np.linalg.lstsq(basis, traj, rcond=None)
    y0 = coef[0]

    n = geo.dimension(states[-1])
    flag = False
    for s in states:
        bound = math.sqrt(2 * n * (T_est - s.time))
        if geo.distance_to_surface(s, y0) > 1.05 * bound:
            flag = True
    return SingularityEstimate(T_est, y0, C0, r2, r2 >= r2_type_one, flag, len(t))


# ---------------------------------------------------------------------------
# track I/O
# ---------------------------------------------------------------------------


def _solution_to_dict(sol) -> dict | None:
    if sol is None:
        return None
    d = {"type": type(sol).__name__}
    for k, v in sol.__dict__.items():
        d[k] = v.tolist() if isinstance(v, np.ndarray) else v
    return d


def _solution_from_dict(d):
    if d is None:
        return None
    from . import exact

    d = dict(d)
    cls = getattr(exact, d.pop("type"))
    return cls(**d)


def _fmt(x) -> str:
    return f"{x:.17g}" if isinstance(x, float) else str(x)


def write_track(track: FlowTrack, out_dir, extra_columns: dict | None = None) -> Path:
    """OFF (mesh), CSV (profile) or JSON (exact) per snapshot plus summary.csv."""
    from .meshio import write_off

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = {"stop_reason": track.stop_reason, "states": []}
    for i, s in enumerate(track.states):
        entry = {"time": float(s.time)}
        if isinstance(s, TriMesh):
            name = f"state_{i:04d}.off"
            write_off(s, out / name)
            entry.update(kind="mesh", closed=s.closed)
        elif isinstance(s, AxisymProfile):
            name = f"state_{i:04d}.csv"
            with open(out / name, "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(["x", "u"])
                for x, u in zip(s.grid, s.radii):
                    w.writerow([_fmt(float(x)), _fmt(float(u))])
            entry.update(kind="profile", boundary=s.boundary)
        else:
            name = f"state_{i:04d}.json"
            payload = {
                "kind": s.kind,
                "center": s.center.tolist(),
                "radius": s.radius,
                "n": s.n,
                "time": s.time,
                "direction": None if s.direction is None else s.direction.tolist(),
                "half_length": s.half_length if np.isfinite(s.half_length) else None,
                "solution": _solution_to_dict(s.solution),
            }
            (out / name).write_text(json.dumps(payload, indent=1, sort_keys=True))
            entry.update(kind="exact")
        entry["file"] = name
        manifest["states"].append(entry)
    (out / "track.json").write_text(json.dumps(manifest, indent=1, sort_keys=True))
    cols = list(SUMMARY_COLUMNS) + list((extra_columns or {}).keys())
    with open(out / "summary.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(cols)
        for i, row in enumerate(track.summaries):
            vals = [row[c] for c in SUMMARY_COLUMNS] + [extra_columns[c][i] for c in cols[len(SUMMARY_COLUMNS):]]
            w.writerow([_fmt(float(v)) if not isinstance(v, (int, np.integer)) else str(v) for v in vals])
    return out


def read_track(track_dir) -> FlowTrack:
    from .meshio import read_off

    d = Path(track_dir)
    manifest = json.loads((d / "track.json").read_text())
    states = []
    for e in manifest["states"]:
        if e["kind"] == "mesh":
            states.append(read_off(d / e["file"], time=e["time"], closed=e["closed"]))
        elif e["kind"] == "profile":
            arr = np.loadtxt(d / e["file"], delimiter=",", skiprows=1, ndmin=2)
            states.append(AxisymProfile(arr[:, 0], arr[:, 1], e["boundary"], e["time"]))
        else:
            p = json.loads((d / e["file"]).read_text())
            hl = p["half_length"]
            states.append(
                ExactSurface(
                    p["kind"], p["center"], p["radius"], p["n"], p["time"], p["direction"],
                    np.inf if hl is None else hl, solution=_solution_from_dict(p["solution"]),
                )
            )
    summaries = []
    with open(d / "summary.csv") as fh:
        for row in csv.DictReader(fh):
            summaries.append({k: (int(row[k]) if k == "step" else float(row[k])) for k in SUMMARY_COLUMNS})
    return FlowTrack(states, summaries, manifest["stop_reason"])
