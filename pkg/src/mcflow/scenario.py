"""Reproducible scenario runs: config -> track -> diagnostics -> report bundle.

Bundle layout under the output directory::

    report.json            verdicts, values, anchors, provenance, config echo
    track/                 snapshots + summary.csv (step, t, max_A2, area, min_u, dt)
    diagnostics/<label>.csv  series outputs (t, value[, extra...])
    rescaled/lambda_<l>/   rescaled tracks (summary.csv gains an ``s`` column)
"""
from __future__ import annotations

import csv
import json
import logging
import math
import traceback
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from . import diagnostics as dg
from . import exact, flow, rescaling
from . import geometry as geo
from .meshio import read_mesh

logger = logging.getLogger(__name__)

ANCHORS = {
    "4/e": 4 / math.e,
    "sqrt(2pi/e)": math.sqrt(2 * math.pi / math.e),
    "1": 1.0,
    "0": 0.0,
    "1/2": 0.5,
    "(4pi)^(1/4)": (4 * math.pi) ** 0.25,
}
CATALOG = ("sphere", "cylinder", "plane", "dumbbell")
SOLVERS = ("exact", "mesh_semi_implicit", "axisym")


class ConfigError(ValueError):
    """Invalid scenario configuration; the message starts with the field path."""


# ---------------------------------------------------------------------------
# config
# ---------------------------------------------------------------------------


@dataclass
class GeometryConfig:
    catalog: str | None = None
    mesh: str | None = None
    params: dict = field(default_factory=dict)
    resolution: int = 4


@dataclass
class SolverConfig:
    method: str = "exact"
    c_stab: float = 0.1
    dt_max: float = 1e-2
    snapshot_ratio: float = 0.8
    snapshot_max_gap: float = 0.02
    remesh: bool = False


@dataclass
class DiagnosticRequest:
    op: str
    label: str
    params: dict = field(default_factory=dict)
    point: object = "singular"
    anchor: object = None
    tolerance: float | None = None
    rel_tolerance: float | None = None
    expect: object = None


@dataclass
class RescalingConfig:
    lambdas: list = field(default_factory=list)
    window: list = field(default_factory=lambda: [-2.0, -1.0])


@dataclass
class ScenarioConfig:
    name: str
    geometry: GeometryConfig
    solver: SolverConfig
    stop: dict
    diagnostics: list
    rescaling: RescalingConfig = field(default_factory=RescalingConfig)
    output: str | None = None
    seed: int = 0
    perturbation: float = 0.0
    base_dir: str = "."

    @classmethod
    def from_dict(cls, d: dict, base_dir=".") -> "ScenarioConfig":
        def need(obj, key, path):
            if key not in obj:
                raise ConfigError(f"{path}.{key}: required field missing")
            return obj[key]

        def typed(cfg_cls, obj, path):
            if not isinstance(obj, dict):
                raise ConfigError(f"{path}: expected an object")
            known = set(cfg_cls.__dataclass_fields__)
            extra = set(obj) - known
            if extra:
                raise ConfigError(f"{path}.{sorted(extra)[0]}: unknown field")
            return cfg_cls(**obj)

        if not isinstance(d, dict):
            raise ConfigError("config: expected a JSON object")
        top = {f for f in cls.__dataclass_fields__ if f != "base_dir"}
        extra = set(d) - top
        if extra:
            raise ConfigError(f"config.{sorted(extra)[0]}: unknown field")
        name = need(d, "name", "config")
        geom = typed(GeometryConfig, need(d, "geometry", "config"), "geometry")
        if (geom.catalog is None) == (geom.mesh is None):
            raise ConfigError("geometry: exactly one of catalog or mesh is required")
        if geom.catalog is not None and geom.catalog not in CATALOG:
            raise ConfigError(f"geometry.catalog: unknown {geom.catalog!r}, expected one of {CATALOG}")
        if geom.mesh is not None and not (Path(base_dir) / geom.mesh).exists():
            raise ConfigError(f"geometry.mesh: file {geom.mesh!r} does not exist")
        if not (isinstance(geom.resolution, int) and geom.resolution > 0):
            raise ConfigError("geometry.resolution: must be a positive integer")
        solver = typed(SolverConfig, d.get("solver", {}), "solver")
        if solver.method not in SOLVERS:
            raise ConfigError(f"solver.method: unknown {solver.method!r}, expected one of {SOLVERS}")
        for key in ("c_stab", "dt_max", "snapshot_max_gap"):
            if not getattr(solver, key) > 0:
                raise ConfigError(f"solver.{key}: must be > 0")
        if not 0 < solver.snapshot_ratio < 1:
            raise ConfigError("solver.snapshot_ratio: must lie in (0, 1)")
        stop = need(d, "stop", "config")
        if not isinstance(stop, dict) or not set(stop) <= {"t_max", "max_A2", "min_u", "max_steps"}:
            raise ConfigError("stop: expected keys among t_max, max_A2, min_u, max_steps")
        if not any(stop.get(k) is not None for k in ("t_max", "max_A2", "min_u")):
            raise ConfigError("stop: one of t_max, max_A2, min_u is required")
        diags, labels = [], set()
        for i, raw in enumerate(d.get("diagnostics", [])):
            path = f"diagnostics[{i}]"
            if not isinstance(raw, dict):
                raise ConfigError(f"{path}: expected an object")
            op = need(raw, "op", path)
            if op not in OPERATIONS:
                raise ConfigError(f"{path}.op: unknown operation {op!r}")
            raw = {"label": op, **raw}
            req = typed(DiagnosticRequest, raw, path)
            if req.label in labels:
                raise ConfigError(f"{path}.label: duplicate label {req.label!r}")
            if isinstance(req.anchor, str) and req.anchor not in ANCHORS and req.op != "tangent_flow_classify":
                raise ConfigError(f"{path}.anchor: unknown anchor {req.anchor!r}")
            labels.add(req.label)
            diags.append(req)
        resc = typed(RescalingConfig, d.get("rescaling", {}), "rescaling")
        if any(not (isinstance(l, (int, float)) and l > 0) for l in resc.lambdas):
            raise ConfigError("rescaling.lambdas: must be positive numbers")
        return cls(
            name, geom, solver, stop, diags, resc, d.get("output"), int(d.get("seed", 0)),
            float(d.get("perturbation", 0.0)), str(base_dir),
        )

    @classmethod
    def load(cls, path) -> "ScenarioConfig":
        path = Path(path)
        if not path.exists():
            bundled = resources.files("mcflow") / "scenarios" / f"{path.name.removesuffix('.json')}.json"
            if not bundled.is_file():
                raise ConfigError(f"config: no file or bundled scenario named {str(path)!r}")
            return cls.from_dict(json.loads(bundled.read_text()), base_dir=".")
        return cls.from_dict(json.loads(path.read_text()), base_dir=path.parent)

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("base_dir")
        return d


def bundled_scenarios() -> list[str]:
    root = resources.files("mcflow") / "scenarios"
    return sorted(p.name.removesuffix(".json") for p in root.iterdir() if p.name.endswith(".json"))


# ---------------------------------------------------------------------------
# initial data
# ---------------------------------------------------------------------------


def dumbbell_profile(
    neck: float = 0.35, bulb: float = 1.0, length: float = 6.0, nodes: int = 801, grading: float = 5.0
) -> geo.AxisymProfile:
    """Even profile with radius ``neck`` at x = 0 and ``bulb`` at the reflecting ends.

    Nodes are graded toward the neck with x = (L/2) sinh(g xi)/sinh(g).
    """
    half = length / 2
    xi = np.linspace(-1.0, 1.0, nodes)
    x = half * np.sinh(grading * xi) / np.sinh(grading) if grading > 0 else half * xi
    u = bulb - (bulb - neck) * np.cos(np.pi * x / (2 * half)) ** 2
    return geo.AxisymProfile(x, u, "reflecting")


def _solution(geom: GeometryConfig):
    p = dict(geom.params)
    if geom.catalog == "sphere":
        return exact.ShrinkingSphere(**p)
    if geom.catalog == "cylinder":
        return exact.ShrinkingCylinder(**p)
    if geom.catalog == "plane":
        return exact.PlaneSolution(**p)
    return None


def initial_state(cfg: ScenarioConfig):
    geom = cfg.geometry
    method = cfg.solver.method
    try:
        if geom.mesh is not None:
            state = read_mesh(Path(cfg.base_dir) / geom.mesh)
            sol = None
        elif geom.catalog == "dumbbell":
            state, sol = dumbbell_profile(**geom.params), None
        else:
            sol = _solution(geom)
            t0 = 0.0
            if method == "exact":
                state = sol.state(t0)
            else:
                state = exact.sample_state(sol, t0, geom.resolution)
    except TypeError as exc:
        raise ConfigError(f"geometry.params: {exc}") from exc
    kind = {geo.TriMesh: "mesh_semi_implicit", geo.AxisymProfile: "axisym", geo.ExactSurface: "exact"}[type(state)]
    if kind != method:
        raise ConfigError(f"solver.method: {method!r} cannot evolve a {type(state).__name__}")
    if cfg.perturbation:
        rng = np.random.default_rng(cfg.seed)
        if isinstance(state, geo.TriMesh):
            _, nrm = geo.mean_curvature(state)
            V = state.vertices + cfg.perturbation * rng.standard_normal(len(nrm))[:, None] * nrm
            state = geo.TriMesh(V, state.faces, state.time, state.closed)
        elif isinstance(state, geo.AxisymProfile):
            u = state.radii * (1 + cfg.perturbation * rng.standard_normal(len(state.radii)))
            state = state.with_radii(u, state.time)
        else:
            raise ConfigError("perturbation: exact solutions cannot be perturbed")
    return state, sol


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------


@dataclass
class Context:
    track: flow.FlowTrack
    singular: dg.SpacetimePoint | None
    provenance: str
    estimate: flow.SingularityEstimate | None = None


def _sp(ctx: Context, point) -> dg.SpacetimePoint:
    if point == "singular" or point is None:
        if ctx.singular is None:
            raise ValueError("no singular point available (no blow-up detected)")
        return ctx.singular
    y0 = point.get("y0", "singular")
    T = point.get("T", "singular")
    if "surface_x" in point:
        # the profile's surface point (x, u(x), 0) on the last snapshot
        last = ctx.track.states[-1]
        if not isinstance(last, geo.AxisymProfile):
            raise ValueError("surface_x points need a profile track")
        x = float(point["surface_x"])
        y0 = [x, float(np.interp(x, last.grid, last.radii)), 0.0]
    if y0 == "singular" or T == "singular":
        if ctx.singular is None:
            raise ValueError("no singular point available (no blow-up detected)")
    y0 = ctx.singular.y0 if y0 == "singular" else np.asarray(y0, float)
    T = ctx.singular.T if T == "singular" else float(T)
    return dg.SpacetimePoint(y0, T)


def _series(t, **cols):
    return {"t": np.asarray(t, float), **{k: np.asarray(v, float) for k, v in cols.items()}}


def op_gaussian_density(ctx, sp, t=None, tau_fraction=None):
    """Density at ``t``, at the snapshot nearest (T - t)/T = tau_fraction, or at the last snapshot."""
    before = ctx.track.times[ctx.track.times < sp.T]
    if tau_fraction is not None:
        t = float(before[np.argmin(np.abs(sp.T - before - tau_fraction * sp.T))])
    t = float(before[-1]) if t is None else float(t)
    return {"value": dg.gaussian_density(ctx.track, sp, t), "extra": {"t": t}}


def op_density_limit(ctx, sp, k=5, degree=1, margin=dg.VERDICT_MARGIN, white_tol=dg.WHITE_TOL):
    rep = dg.density_limit(ctx.track, sp, k, degree, margin, white_tol)
    return {
        "value": rep.limit,
        "verdict": rep.verdict,
        "extra": {"margin": margin, "white_tol": white_tol, "k": k, "degree": degree},
        "series": _series(rep.times, value=rep.values),
    }


def op_monotonicity_audit(ctx, sp, tol=None):
    rep = dg.monotonicity_audit(ctx.track, sp, tol)
    return {
        "value": float(len(rep.violations)),
        "verdict": "monotone" if not rep.violations else "violations",
        "extra": {"tol": rep.tol, "violations": rep.violations, "max_dissipation": float(rep.dissipation.max())},
        "series": _series(rep.times, value=rep.values, dissipation=rep.dissipation),
    }


def _slice_series(track, key, power, exponent=1.0):
    vals = [dg._slice_power(s, key, power) ** exponent for s in track.states]
    return _series(track.times, value=vals)


def op_spacetime_H_norm(ctx, sp, alpha, t_end=None):
    return {
        "value": dg.spacetime_H_norm(ctx.track, alpha, t_end),
        "extra": {"alpha": alpha, "t_end": t_end},
        "series": _slice_series(ctx.track, "H", alpha),
    }


def op_lpq_A_norm(ctx, sp, p, q, t_end=None):
    return {
        "value": dg.lpq_A_norm(ctx.track, p, q, t_end),
        "extra": {"p": p, "q": q, "t_end": t_end},
        "series": _slice_series(ctx.track, "A", q, p / q),
    }


def _ball_args(ctx, sp, x0, sigma, t0):
    x0 = sp.y0 if x0 is None else np.asarray(x0, float)
    t0 = float(ctx.track.times[-1]) if t0 is None else float(t0)
    return x0, float(sigma), t0


def op_local_energy(ctx, sp, sigma, x0=None, t0=None):
    x0, sigma, t0 = _ball_args(ctx, sp, x0, sigma, t0)
    return {"value": dg.local_energy(ctx.track, x0, sigma, t0), "extra": {"x0": x0.tolist(), "sigma": sigma, "t0": t0}}


def op_eps_regularity_check(ctx, sp, sigma, eps0, x0=None, t0=None):
    x0, sigma, t0 = _ball_args(ctx, sp, x0, sigma, t0)
    r = dg.eps_regularity_check(ctx.track, x0, sigma, t0, eps0)
    return {
        "value": r.lhs if r.lhs is not None else r.energy,
        "verdict": r.branch if r.satisfied is None else ("satisfied" if r.satisfied else "violated"),
        "extra": {"lhs": r.lhs, "rhs": r.rhs, "energy": r.energy, "eps0": eps0, "x0": x0.tolist(), "sigma": sigma, "t0": t0},
    }


def op_pinching_ratio(ctx, sp, index=-1, h_min=1e-8):
    return {"value": dg.pinching_ratio(ctx.track.states[index], h_min), "extra": {"index": index}}


def op_distance_bound_audit(ctx, sp, tol=1e-6):
    a = dg.distance_bound_audit(ctx.track, sp, tol)
    return {
        "value": float(a.slack.min()),
        "verdict": "ok" if not a.flagged else "violations",
        "extra": {"tol": tol, "flagged": a.flagged},
        "series": _series(a.times, value=a.slack),
    }


def op_slice_Ls_product(ctx, sp, s):
    r = dg.slice_Ls_product(ctx.track, s, sp.T)
    spread = float(np.ptp(r.product) / r.extreme) if r.extreme else 0.0
    return {"value": r.extreme, "extra": {"s": s, "relative_spread": spread}, "series": _series(r.times, value=r.product, norm=r.norms)}


def op_running_sup_Ls(ctx, sp, s):
    r = dg.running_sup_Ls(ctx.track, s, sp.T)
    return {"value": r.extreme, "extra": {"s": s}, "series": _series(r.times, value=r.product, f=r.norms)}


def op_detect_singularity(ctx, sp, k=12):
    est = flow.detect_singularity(ctx.track, k)
    return {
        "value": est.C0_est,
        "verdict": "type_one" if est.type_one else "not_type_one",
        "extra": {
            "T_est": est.T_est,
            "y0_est": np.asarray(est.y0_est).tolist(),
            "fit_quality": est.fit_quality,
            "distance_flag": est.distance_flag,
        },
    }


def op_shrinker_residual(ctx, sp, lam, window=(-2.0, -1.0)):
    rt = rescaling.parabolic_dilate(ctx.track, sp, lam)
    return {"value": rescaling.shrinker_residual(rt, window), "extra": {"lambda": lam, "window": list(window)}}


def op_tangent_flow_classify(ctx, sp, lam, window=None, threshold=rescaling.RESIDUAL_THRESHOLD, gap=rescaling.DENSITY_GAP):
    rep = dg.density_limit(ctx.track, sp)
    dens = rep.limit if rep.limit is not None else float(rep.values[-1]) if len(rep.values) else math.nan
    rt = rescaling.parabolic_dilate(ctx.track, sp, lam)
    res = rescaling.tangent_flow_classify(rt, dens, window, threshold, gap)
    return {
        "value": res.density,
        "verdict": res.label,
        "extra": {
            "label": res.label,
            "confidence": res.confidence,
            "residual": res.residual,
            "relative_gap": res.relative_gap,
            "window": list(res.window),
            "lambda": lam,
        },
    }


OPERATIONS = {
    "gaussian_density": op_gaussian_density,
    "density_limit": op_density_limit,
    "monotonicity_audit": op_monotonicity_audit,
    "spacetime_H_norm": op_spacetime_H_norm,
    "lpq_A_norm": op_lpq_A_norm,
    "local_energy": op_local_energy,
    "eps_regularity_check": op_eps_regularity_check,
    "pinching_ratio": op_pinching_ratio,
    "distance_bound_audit": op_distance_bound_audit,
    "slice_Ls_product": op_slice_Ls_product,
    "running_sup_Ls": op_running_sup_Ls,
    "detect_singularity": op_detect_singularity,
    "shrinker_residual": op_shrinker_residual,
    "tangent_flow_classify": op_tangent_flow_classify,
}
# operations that never use a spacetime point
_POINTLESS = {"spacetime_H_norm", "lpq_A_norm", "pinching_ratio", "detect_singularity"}


def singular_point(track: flow.FlowTrack, sol=None):
    """Exact singular point for analytic tracks, else detect_singularity.

    A discrete sample of a catalog solution has its own singular time, which
    differs from the smooth one by the discretisation error.
    """
    if sol is not None and np.isfinite(sol.T) and dg.path_of(track) == "analytic":
        return dg.SpacetimePoint(sol.center, sol.T), "exact", None
    try:
        est = flow.detect_singularity(track)
    except (flow.NoBlowUp, ValueError) as exc:
        logger.info("no singular point: %s", exc)
        return None, "none", None
    y0 = np.asarray(est.y0_est, float)
    if isinstance(track.states[-1], geo.AxisymProfile):
        y0 = np.array([y0[0], 0.0, 0.0])  # profile singularities sit on the axis
    return dg.SpacetimePoint(y0, est.T_est), "detect_singularity", est


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else str(x)
    if isinstance(x, np.integer):
        return int(x)
    return x


def run_operation(ctx: Context, req: DiagnosticRequest) -> dict:
    """Evaluate one request; failures are captured, never raised."""
    entry = {
        "op": req.op,
        "params": _jsonable(req.params),
        "path": dg.path_of(ctx.track),
        "T_provenance": ctx.provenance,
        "value": None,
        "verdict": None,
        "anchor": req.anchor,
        "tolerance": req.tolerance,
        "rel_tolerance": req.rel_tolerance,
        "expect": req.expect,
        "pass": None,
        "residual": None,
        "error": None,
    }
    series = None
    try:
        sp = None if req.op in _POINTLESS else _sp(ctx, req.point)
        if sp is not None:
            entry["point"] = {"y0": sp.y0.tolist(), "T": sp.T}
        out = OPERATIONS[req.op](ctx, sp, **req.params)
        series = out.pop("series", None)
        entry.update(_jsonable(out))
    except Exception as exc:  # recorded in the report, partial results kept
        entry["error"] = f"{type(exc).__name__}: {exc}"
        logger.debug("%s failed:\n%s", req.label, traceback.format_exc())
        entry["pass"] = False
        return entry, series

    checks = []
    if req.anchor is not None and entry["value"] is not None and req.op != "tangent_flow_classify":
        anchor = ANCHORS[req.anchor] if isinstance(req.anchor, str) else float(req.anchor)
        resid = abs(float(entry["value"]) - anchor)
        entry["residual"] = resid
        tol = req.tolerance if req.tolerance is not None else (req.rel_tolerance or 0.0) * abs(anchor)
        checks.append(resid <= tol)
    if req.expect is not None:
        checks.append(entry.get("verdict") == req.expect)
    if req.op == "tangent_flow_classify" and req.anchor is not None:
        checks.append(entry.get("verdict") == req.anchor)
    entry["pass"] = all(checks) if checks else None
    return entry, series


def _write_series(path: Path, series: dict):
    cols = list(series)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(cols)
        for row in zip(*(series[c] for c in cols)):
            w.writerow([f"{float(v):.17g}" for v in row])


def run_scenario(cfg: ScenarioConfig, out_dir=None) -> dict:
    """Run the whole pipeline and write the bundle; returns the report dict."""
    out = Path(out_dir or cfg.output or cfg.name)
    out.mkdir(parents=True, exist_ok=True)
    report = {"scenario": cfg.name, "config": _jsonable(cfg.to_dict()), "errors": []}

    state, sol = initial_state(cfg)
    policy = flow.DtPolicy(
        c_stab=cfg.solver.c_stab,
        dt_max=cfg.solver.dt_max,
        snapshot_ratio=cfg.solver.snapshot_ratio,
        snapshot_max_gap=cfg.solver.snapshot_max_gap,
    )
    stop = flow.StopCriterion(**cfg.stop)
    try:
        track = flow.run_until(state, stop, policy, remesh=cfg.solver.remesh)
    except Exception as exc:
        report["errors"].append(f"run_until: {type(exc).__name__}: {exc}")
        _dump(out, report)
        return report
    flow.write_track(track, out / "track")
    report["track"] = {
        "snapshots": len(track),
        "stop_reason": track.stop_reason,
        "t_first": float(track.times[0]),
        "t_last": float(track.times[-1]),
        "max_A2_last": track.summaries[-1]["max_A2"],
        "path": dg.path_of(track),
    }
    sp, prov, est = singular_point(track, sol)
    report["singular_point"] = None if sp is None else {"y0": sp.y0.tolist(), "T": sp.T, "provenance": prov}
    ctx = Context(track, sp, prov, est)

    report["diagnostics"] = {}
    diag_dir = out / "diagnostics"
    for req in cfg.diagnostics:
        entry, series = run_operation(ctx, req)
        if series is not None:
            diag_dir.mkdir(exist_ok=True)
            _write_series(diag_dir / f"{req.label}.csv", series)
            entry["csv"] = f"diagnostics/{req.label}.csv"
        report["diagnostics"][req.label] = entry

    if cfg.rescaling.lambdas and sp is not None:
        report["rescaling"] = {}
        for lam in cfg.rescaling.lambdas:
            key = f"lambda_{lam:g}"
            try:
                rt = rescaling.parabolic_dilate(track, sp, float(lam))
                flow.write_track(rt, out / "rescaled" / key, {"s": rt.times})
                report["rescaling"][key] = {
                    "lambda": float(lam),
                    "window": list(cfg.rescaling.window),
                    "shrinker_residual": rescaling.shrinker_residual(rt, cfg.rescaling.window),
                }
            except Exception as exc:
                report["rescaling"][key] = {"lambda": float(lam), "error": f"{type(exc).__name__}: {exc}"}
    _dump(out, report)
    return report


def _dump(out: Path, report: dict):
    (out / "report.json").write_text(json.dumps(_jsonable(report), indent=1, sort_keys=True) + "\n")


# ---------------------------------------------------------------------------
# human-readable summary
# ---------------------------------------------------------------------------


def emit_report(bundle_dir) -> str:
    """One row per diagnostic: label, value, anchor, PASS/FAIL."""
    path = Path(bundle_dir) / "report.json"
    if not path.exists():
        raise FileNotFoundError(f"no report.json in {bundle_dir}")
    report = json.loads(path.read_text())
    diags = report.get("diagnostics") or {}
    if not diags:
        raise ValueError(f"bundle {bundle_dir} has no diagnostics")
    rows = [f"scenario {report['scenario']}"]
    for label, e in diags.items():
        val = e.get("value")
        sval = f"{val:.4f}" if isinstance(val, (int, float)) else str(val)
        parts = [label, sval]
        if e.get("verdict") is not None:
            parts.append(f"[{e['verdict']}]")
        if e.get("anchor") is not None:
            parts += ["anchor", str(e["anchor"])]
        if e.get("error"):
            parts += ["FAIL", f"(error: {e['error']})"]
        elif e.get("pass") is True:
            parts.append("PASS")
        elif e.get("pass") is False:
            parts.append("FAIL")
            if e.get("residual") is not None:
                parts.append(f"(residual {e['residual']:.3e})")
        rows.append(" ".join(parts))
    return "\n".join(rows)
