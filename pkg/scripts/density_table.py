"""Gaussian densities of the catalog solutions by every available route.

Columns: closed form, analytic slice, discrete sample (mesh or profile).
"""
import math

import numpy as np

from mcflow import diagnostics as dg
from mcflow import exact


def main():
    rows = []
    sph = exact.ShrinkingSphere()
    sp = dg.SpacetimePoint(np.zeros(3), sph.T)
    for frac in (0.9, 0.5, 0.1):
        t = sph.T * (1 - frac)
        rows.append(
            (
                "sphere",
                frac,
                exact.closed_form_density(sph),
                dg.density_of_state(sph.state(t), sp),
                dg.density_of_state(exact.sample_state(sph, t, 5), sp),
            )
        )
    cyl = exact.ShrinkingCylinder()
    sp = dg.SpacetimePoint(np.zeros(3), cyl.T)
    for frac in (0.9, 0.5, 0.1):
        t = cyl.T * (1 - frac)
        rows.append(
            (
                "cylinder",
                frac,
                exact.closed_form_density(cyl),
                dg.density_of_state(cyl.state(t), sp),
                dg.density_of_state(exact.sample_state(cyl, t, 400), sp),
            )
        )
    pl = exact.PlaneSolution()
    sp = dg.SpacetimePoint(np.zeros(3), 1.0)
    for frac in (0.9, 0.5, 0.1):
        t = 1.0 - frac
        rows.append(("plane", frac, exact.closed_form_density(pl), dg.density_of_state(pl.state(t), sp), float("nan")))
    print(f"{'solution':9s} {'(T-t)/T':>8s} {'closed':>10s} {'analytic':>10s} {'sampled':>10s}")
    for name, frac, a, b, c in rows:
        print(f"{name:9s} {frac:8.2f} {a:10.6f} {b:10.6f} {c:10.6f}")
    print(f"\n4/e = {4 / math.e:.6f}, sqrt(2 pi / e) = {math.sqrt(2 * math.pi / math.e):.6f}")


if __name__ == "__main__":
    main()
