"""Dumbbell neckpinch: neck radius against the cylinder rate and tangent-flow checks.

Usage: python scripts/neckpinch.py [--neck 0.35] [--nodes 801]
"""
import argparse
import math

import numpy as np

from mcflow import diagnostics as dg
from mcflow import flow
from mcflow import rescaling as rs
from mcflow.scenario import dumbbell_profile, singular_point


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--neck", type=float, default=0.35)
    ap.add_argument("--nodes", type=int, default=801)
    ap.add_argument("--max-A2", type=float, default=1e4)
    args = ap.parse_args()

    prof = dumbbell_profile(neck=args.neck, nodes=args.nodes)
    track = flow.run_until(prof, flow.StopCriterion(max_A2=args.max_A2), flow.DtPolicy(c_stab=0.01))
    sp, _, est = singular_point(track)
    print(f"stop: {track.stop_reason}, {len(track)} snapshots, T_est {est.T_est:.6f}, C0 {est.C0_est:.4f}, R^2 {est.fit_quality:.6f}")
    print(f"neck at x = {sp.y0[0]:+.4f}")

    # a round neck shrinks like sqrt(2 (T - t))
    print("\n   T - t      min u   min u / sqrt(2(T-t))")
    for s in track.states[-12:]:
        tau = sp.T - s.time
        u = float(s.radii.min())
        print(f"{tau:9.3e}  {u:9.5f}  {u / math.sqrt(2 * tau):9.5f}")

    neck = dg.density_limit(track, sp)
    print(f"\nneck density {neck.limit:.5f} ({neck.verdict}), cylinder value {math.sqrt(2 * math.pi / math.e):.5f}")
    last = track.states[-1]
    for x in (1.5, 2.5, 3.0):
        y = np.array([x, np.interp(x, last.grid, last.radii), 0.0])
        rep = dg.density_limit(track, dg.SpacetimePoint(y, sp.T))
        print(f"density at x = {x}: {rep.limit:.5f} ({rep.verdict})")

    print("\nlambda  shrinker residual on s in [-0.25, -0.125]")
    for lam in (2, 4, 8, 16):
        rt = rs.parabolic_dilate(track, sp, lam)
        try:
            print(f"{lam:6d}  {rs.shrinker_residual(rt, (-0.25, -0.125)):.3e}")
        except ValueError as exc:
            print(f"{lam:6d}  {exc}")
    rt = rs.parabolic_dilate(track, sp, 16)
    res = rs.tangent_flow_classify(rt, neck.limit, (-0.25, -0.125))
    print(f"tangent flow: {res.label} ({res.confidence}), residual {res.residual:.2e}, gap {res.relative_gap:.3f}")


if __name__ == "__main__":
    main()
