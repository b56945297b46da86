"""Parabolic rescaling about a candidate singular point and tangent-flow heuristics."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .diagnostics import (
    SpacetimePoint,
    _analytic_time_integral,
    _time_integral,
    dissipation_of_state,
)
from .flow import FlowTrack
from .geometry import AxisymProfile, ExactSurface, TriMesh

CATALOG_DENSITIES = {
    "plane": 1.0,
    "sphere": 4 / math.e,
    "cylinder": math.sqrt(2 * math.pi / math.e),
}
RESIDUAL_THRESHOLD = 1e-2
DENSITY_GAP = 0.05
ORIGIN = SpacetimePoint(np.zeros(3), 0.0)


@dataclass
class RescaledTrack(FlowTrack):
    """A FlowTrack in coordinates x' = lam (x - y0), s = lam^2 (t - T)."""

    base: FlowTrack | None = None
    sp: SpacetimePoint | None = None
    lam: float = 1.0


def dilate_state(state, y0: np.ndarray, T: float, lam: float):
    s = lam**2 * (state.time - T)
    if isinstance(state, TriMesh):
        return TriMesh(lam * (state.vertices - y0), state.faces, s, state.closed)
    if isinstance(state, AxisymProfile):
        if y0[1] != 0.0 or y0[2] != 0.0:
            raise ValueError("profiles can only be dilated about points on their axis")
        return AxisymProfile(lam * (state.grid - y0[0]), lam * state.radii, state.boundary, s)
    sol = None if state.solution is None else state.solution.dilate(y0, T, lam)
    return ExactSurface(
        state.kind,
        lam * (state.center - y0),
        lam * state.radius,
        state.n,
        s,
        state.direction,
        lam * state.half_length,
        solution=sol,
    )


def parabolic_dilate(track: FlowTrack, sp: SpacetimePoint, lam: float) -> RescaledTrack:
    """Exact coordinate transform D_lam of every snapshot (no resampling)."""
    if not lam > 0:
        raise ValueError("lambda must be positive")
    if (track.times >= sp.T).any():
        raise ValueError("track contains times at or after T")
    states = [dilate_state(s, sp.y0, sp.T, lam) for s in track.states]
    n = states[0].n if isinstance(states[0], ExactSurface) else 2
    summaries = []
    for row, st in zip(track.summaries, states):
        summaries.append(
            {
                "step": row["step"],
                "t": st.time,
                "max_A2": row["max_A2"] / lam**2,
                "area": row["area"] * lam**n,
                "min_u": row["min_u"] * lam,
                "dt": row["dt"] * lam**2,
            }
        )
    return RescaledTrack(states, summaries, track.stop_reason, base=track, sp=sp, lam=lam)


def _origin(state) -> SpacetimePoint:
    n = state.n if isinstance(state, ExactSurface) else 2
    return SpacetimePoint(np.zeros(n + 1), 0.0)


def shrinker_residual(rtrack: FlowTrack, s_window=(-2.0, -1.0)) -> float:
    """int_window int rho_{0,0} |H - <x, nu>/(-2s)|^2 dmu ds on a rescaled track."""
    a, b = map(float, s_window)
    if not (a < b < 0):
        raise ValueError("window must satisfy a < b < 0")
    times = rtrack.times
    if len(times) == 0 or a < times[0] or b > times[-1]:
        raise ValueError(f"window [{a}, {b}] is not covered by the track span [{times[0]}, {times[-1]}]")
    org = _origin(rtrack.states[0])
    sol = rtrack.solution
    if sol is not None:
        return _analytic_time_integral(sol, lambda s: dissipation_of_state(s, org), a, b)
    vals = np.array([dissipation_of_state(s, org) if s.time < 0 else np.nan for s in rtrack.states])
    return _time_integral(times, vals, a, b)


@dataclass
class TangentFlowResult:
    label: str
    confidence: str
    residual: float
    density: float
    relative_gap: float
    window: tuple


def tangent_flow_classify(
    rtrack: FlowTrack,
    density_at_sp: float,
    s_window=None,
    residual_threshold: float = RESIDUAL_THRESHOLD,
    gap: float = DENSITY_GAP,
) -> TangentFlowResult:
    """Nearest catalog shrinker by density, gated on a small shrinker residual.

    Labels are heuristic: a sampled flow cannot certify multiplicity one.
    """
    times = rtrack.times
    if s_window is None:
        s_last = float(times[-1])
        s_window = (max(float(times[0]), 2 * s_last), s_last)
    res = shrinker_residual(rtrack, s_window)
    name, val = min(CATALOG_DENSITIES.items(), key=lambda kv: abs(density_at_sp - kv[1]))
    rel = abs(density_at_sp - val) / val
    if res > residual_threshold or rel > gap:
        return TangentFlowResult("unknown", "heuristic", res, density_at_sp, rel, tuple(s_window))
    return TangentFlowResult(name, "heuristic", res, density_at_sp, rel, tuple(s_window))
