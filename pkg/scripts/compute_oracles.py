"""Independent reference values for the test suite, computed with mpmath.

Nothing here imports the package: every number comes from the defining
integral in plain coordinates. The output is pasted into
tests/oracle_values.py.
"""
from __future__ import annotations

import mpmath as mp

mp.mp.dps = 30


def sphere_density(r, d, tau):
    """int over the sphere |y| = r of (4 pi tau)^-1 exp(-|y - (d,0,0)|^2 / 4 tau), 2-D quadrature."""

    def f(theta, phi):
        y = (r * mp.sin(theta) * mp.cos(phi), r * mp.sin(theta) * mp.sin(phi), r * mp.cos(theta))
        dist2 = (y[0] - d) ** 2 + y[1] ** 2 + y[2] ** 2
        return mp.exp(-dist2 / (4 * tau)) / (4 * mp.pi * tau) * r**2 * mp.sin(theta)

    return mp.quad(f, [0, mp.pi / 2, mp.pi], [0, mp.pi / 2, mp.pi, 3 * mp.pi / 2, 2 * mp.pi])


def sphere_dissipation(r, d, tau):
    """int rho |-H + <y - y0, nu>/(2 tau)|^2 on the sphere |y| = r, y0 = (d, 0, 0)."""

    def f(theta, phi):
        nu = (mp.sin(theta) * mp.cos(phi), mp.sin(theta) * mp.sin(phi), mp.cos(theta))
        y = tuple(r * c for c in nu)
        dy = (y[0] - d, y[1], y[2])
        dist2 = sum(c * c for c in dy)
        support = sum(a * b for a, b in zip(dy, nu))
        rho = mp.exp(-dist2 / (4 * tau)) / (4 * mp.pi * tau)
        return rho * (-2 / r + support / (2 * tau)) ** 2 * r**2 * mp.sin(theta)

    return mp.quad(f, [0, mp.pi / 2, mp.pi], [0, mp.pi / 2, mp.pi, 3 * mp.pi / 2, 2 * mp.pi])


def cylinder_density(r, a, b, tau):
    """Infinite cylinder about the x-axis; the axial Gaussian integrates to sqrt(4 pi tau)."""

    def f(phi):
        dist2 = (r * mp.cos(phi) - a) ** 2 + (r * mp.sin(phi) - b) ** 2
        return mp.exp(-dist2 / (4 * tau)) * r

    return mp.quad(f, [0, mp.pi / 2, mp.pi, 3 * mp.pi / 2, 2 * mp.pi]) / mp.sqrt(4 * mp.pi * tau)


def sphere_density_n3(r, tau):
    """Centred round S^3 of radius r in R^4: |S^3| r^3 (4 pi tau)^-3/2 e^{-r^2/4 tau}, via a 3-angle quadrature."""

    def f(a, b):
        # volume element of S^3 in hyperspherical angles, third angle integrated (2 pi)
        return 2 * mp.pi * mp.sin(a) ** 2 * mp.sin(b)

    area = mp.quad(f, [0, mp.pi], [0, mp.pi]) * r**3
    return area * (4 * mp.pi * tau) ** (-1.5) * mp.exp(-(r**2) / (4 * tau))


def main():
    out = {}
    out["FOUR_OVER_E"] = 4 / mp.e
    out["SQRT_2PI_OVER_E"] = mp.sqrt(2 * mp.pi / mp.e)
    out["LS4_SPHERE"] = (4 * mp.pi) ** mp.mpf("0.25")
    out["LS8_SPHERE"] = mp.sqrt(2) * (4 * mp.pi) ** (mp.mpf(1) / 8) * 2 ** (-mp.mpf(6) / 8)
    # unit sphere, y0 = (0.5, 0, 0), T = 0.25, at t = 0, 0.1, 0.2 (r = sqrt(1 - 4t))
    for t in ("0", "0.1", "0.2"):
        tt = mp.mpf(t)
        r = mp.sqrt(1 - 4 * tt)
        out[f"SPHERE_OFFSET_DENSITY_t{t}"] = sphere_density(r, mp.mpf("0.5"), mp.mpf("0.25") - tt)
        out[f"SPHERE_OFFSET_DISSIPATION_t{t}"] = sphere_dissipation(r, mp.mpf("0.5"), mp.mpf("0.25") - tt)
    # unit cylinder (T = 0.5) at t = 0.2, y0 = (0.3, 0.4, 0.2)
    out["CYLINDER_OFFAXIS_DENSITY"] = cylinder_density(mp.sqrt(1 - 2 * mp.mpf("0.2")), mp.mpf("0.4"), mp.mpf("0.2"), mp.mpf("0.3"))
    # S^3 with r0 = sqrt(6): T = 1; at t = 0.5, r = sqrt(3), tau = 0.5
    out["SPHERE_N3_DENSITY"] = sphere_density_n3(mp.sqrt(3), mp.mpf("0.5"))
    # integral of 16 pi/(T - t) over one epsilon-halving
    out["H4_HALVING_INCREMENT"] = 16 * mp.pi * mp.log(2)
    for k, v in out.items():
        print(f"{k} = {mp.nstr(v, 17)}")


if __name__ == "__main__":
    main()
