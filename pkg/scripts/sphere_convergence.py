"""Radius-law error of the semi-implicit mesh flow on the unit sphere.

Sweeps the time step at fixed resolution and the resolution at fixed step,
reporting |mean radius - sqrt(1 - 4t)| at t = 0.05.
"""
import math

import numpy as np

from mcflow import flow
from mcflow import geometry as geo

T_END = 0.05


def radius_error(level, dt):
    m = geo.icosphere(level)
    for _ in range(int(round(T_END / dt))):
        m = flow.step_semi_implicit(m, dt)
    r = np.linalg.norm(m.vertices, axis=1).mean()
    return abs(r - math.sqrt(1 - 4 * T_END))


def main():
    print("dt sweep, icosphere level 4")
    prev = None
    for dt in (0.01, 0.005, 0.0025, 0.00125):
        e = radius_error(4, dt)
        ratio = "" if prev is None else f"  ratio {prev / e:.2f}"
        print(f"  dt {dt:.5f}  error {e:.3e}{ratio}")
        prev = e
    print("resolution sweep, dt = 1e-3")
    for level in (2, 3, 4, 5):
        print(f"  level {level}  error {radius_error(level, 1e-3):.3e}")


if __name__ == "__main__":
    main()
