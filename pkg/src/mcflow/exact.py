"""Closed-form mean curvature flows used as oracles.

Each solution carries a reference time ``t_ref`` at which its radius equals
``r0``; this lets a parabolically rescaled solution remain a member of the
same family.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import (
    AxisymProfile,
    ExactSurface,
    SurfaceState,
    exact_quadrature,
    flat_patch,
    icosphere,
    sphere_area,
)


def _vec(v, dim):
    v = np.zeros(dim) if v is None else np.asarray(v, dtype=float)
    if v.shape != (dim,):
        raise ValueError(f"expected a point in R^{dim}, got shape {v.shape}")
    return v


@dataclass(frozen=True)
class ShrinkingSphere:
    r0: float = 1.0
    n: int = 2
    center: np.ndarray | None = None
    t_ref: float = 0.0

    def __post_init__(self):
        if not self.r0 > 0:
            raise ValueError("r0 must be positive")
        if self.n < 1:
            raise ValueError("n must be >= 1")
        object.__setattr__(self, "center", _vec(self.center, self.n + 1))

    @property
    def T(self) -> float:
        return self.t_ref + self.r0**2 / (2 * self.n)

    def radius(self, t: float) -> float:
        r2 = self.r0**2 - 2 * self.n * (t - self.t_ref)
        if r2 <= 0:
            raise ValueError(f"t = {t} is at or past the extinction time {self.T}")
        return math.sqrt(r2)

    def A2(self, t: float) -> float:
        return self.n / self.radius(t) ** 2

    def dA2_dt(self, t: float) -> float:
        # d/dt [n / (r0^2 - 2n(t - t_ref))]
        R = self.r0**2 - 2 * self.n * (t - self.t_ref)
        return 2 * self.n**2 / R**2

    def state(self, t: float) -> ExactSurface:
        return ExactSurface("sphere", self.center, self.radius(t), self.n, t, solution=self)

    def dilate(self, y0, T, lam) -> "ShrinkingSphere":
        return ShrinkingSphere(lam * self.r0, self.n, lam * (self.center - y0), lam**2 * (self.t_ref - T))


@dataclass(frozen=True)
class ShrinkingCylinder:
    """Round cylinder S^1 x R in R^3, truncated at ``half_length`` for sampling."""

    r0: float = 1.0
    half_length: float = 15.0
    center: np.ndarray | None = None
    axis: np.ndarray = field(default_factory=lambda: np.array([1.0, 0.0, 0.0]))
    t_ref: float = 0.0

    def __post_init__(self):
        if not self.r0 > 0:
            raise ValueError("r0 must be positive")
        object.__setattr__(self, "center", _vec(self.center, 3))
        a = np.asarray(self.axis, dtype=float)
        object.__setattr__(self, "axis", a / np.linalg.norm(a))

    n = 2

    @property
    def T(self) -> float:
        return self.t_ref + self.r0**2 / 2

    def radius(self, t: float) -> float:
        r2 = self.r0**2 - 2 * (t - self.t_ref)
        if r2 <= 0:
            raise ValueError(f"t = {t} is at or past the extinction time {self.T}")
        return math.sqrt(r2)

    def A2(self, t: float) -> float:
        return 1.0 / self.radius(t) ** 2

    def dA2_dt(self, t: float) -> float:
        R = self.r0**2 - 2 * (t - self.t_ref)
        return 2.0 / R**2

    def state(self, t: float) -> ExactSurface:
        return ExactSurface(
            "cylinder", self.center, self.radius(t), 2, t, self.axis, self.half_length, solution=self
        )

    def dilate(self, y0, T, lam) -> "ShrinkingCylinder":
        return ShrinkingCylinder(
            lam * self.r0, lam * self.half_length, lam * (self.center - y0), self.axis, lam**2 * (self.t_ref - T)
        )


@dataclass(frozen=True)
class PlaneSolution:
    point: np.ndarray | None = None
    normal: np.ndarray | None = None
    n: int = 2
    extent: float = 12.0

    def __post_init__(self):
        object.__setattr__(self, "point", _vec(self.point, self.n + 1))
        nrm = np.eye(self.n + 1)[-1] if self.normal is None else np.asarray(self.normal, float)
        object.__setattr__(self, "normal", nrm / np.linalg.norm(nrm))

    T = math.inf

    def A2(self, t: float) -> float:
        return 0.0

    def dA2_dt(self, t: float) -> float:
        return 0.0

    def state(self, t: float) -> ExactSurface:
        return ExactSurface("plane", self.point, 0.0, self.n, t, self.normal, self.extent, solution=self)

    def dilate(self, y0, T, lam) -> "PlaneSolution":
        return PlaneSolution(lam * (self.point - y0), self.normal, self.n, lam * self.extent)


Solution = ShrinkingSphere | ShrinkingCylinder | PlaneSolution


def extinction_time(solution) -> float:
    """First time at which the solution's radius reaches zero (inf for planes)."""
    return solution.T


def closed_form_density(solution) -> float:
    """Gaussian density at the solution's own singular point (any point for planes)."""
    if isinstance(solution, ShrinkingSphere):
        n = solution.n
        return sphere_area(n) * (n / (2 * math.pi * math.e)) ** (n / 2)
    if isinstance(solution, ShrinkingCylinder):
        return math.sqrt(2 * math.pi / math.e)
    if isinstance(solution, PlaneSolution):
        return 1.0
    raise TypeError(f"no closed-form density for {type(solution).__name__}")


def simons_identity_residual(solution, t: float) -> float:
    """|d/dt |A|^2 - (Lap |A|^2 - 2|grad A|^2 + 2|A|^4)| on a homogeneous solution.

    All spatial derivative terms vanish because |A| is constant on each slice.
    """
    if t >= solution.T:
        raise ValueError(f"t = {t} must be before the extinction time {solution.T}")
    A2 = solution.A2(t)
    laplacian, grad2 = 0.0, 0.0
    return abs(solution.dA2_dt(t) - (laplacian - 2 * grad2 + 2 * A2**2))


def sample_state(solution, t: float, resolution: int = 4, kind: str = "discrete") -> SurfaceState:
    """Discrete sample of the solution at time ``t``.

    ``kind="discrete"`` gives an icosphere (``resolution`` = subdivision level),
    a flat patch (``resolution`` cells per side) or a periodic profile
    (``resolution`` nodes); ``kind="exact"`` returns the analytic slice.
    """
    if not resolution > 0:
        raise ValueError("resolution must be positive")
    if t >= solution.T:
        raise ValueError(f"t = {t} must be before the extinction time {solution.T}")
    if kind == "exact":
        return solution.state(t)
    if isinstance(solution, ShrinkingSphere):
        if solution.n != 2:
            raise NotImplementedError("discrete sphere samples exist only for n = 2")
        return icosphere(resolution, solution.radius(t), solution.center, t)
    if isinstance(solution, PlaneSolution):
        if solution.n != 2:
            raise NotImplementedError("discrete plane samples exist only for n = 2")
        m = flat_patch(resolution, 2 * solution.extent, t)
        e = np.eye(3)
        # rotate z to the plane normal and centre the patch on the base point
        z = solution.normal
        a = e[np.argmin(np.abs(z))]
        x = np.cross(z, a)
        x /= np.linalg.norm(x)
        y = np.cross(z, x)
        local = m.vertices - np.array([solution.extent, solution.extent, 0.0])
        V = solution.point + local[:, :1] * x + local[:, 1:2] * y
        return type(m)(V, m.faces, t, closed=False)
    if isinstance(solution, ShrinkingCylinder):
        need = 12 * math.sqrt(solution.T - t)
        if solution.half_length < need:
            raise ValueError(
                f"half_length {solution.half_length} < 12*sqrt(T - t) = {need:.4g}: "
                "kernel tail exp(-L^2/(4(T-t))) would exceed e^-36"
            )
        if not np.allclose(solution.axis, [1, 0, 0]) or np.any(solution.center[1:] != 0):
            raise NotImplementedError("profile samples need the cylinder axis on the x-axis")
        L = solution.half_length
        grid = solution.center[0] + np.linspace(-L, L, resolution + 1)
        return AxisymProfile(grid, np.full(resolution + 1, solution.radius(t)), "periodic", t)
    raise TypeError(f"cannot sample {type(solution).__name__}")


@dataclass(frozen=True)
class SelfShrinkerSample:
    """A catalog shrinker (plane, sphere, cylinder) centred at the origin at time s < 0.

    ``radius`` defaults to the self-similar value (sqrt(-2ns) for spheres,
    sqrt(-2s) for cylinders); pass another value to get an off-scale sample.
    """

    tag: str
    s: float = -1.0
    n: int = 2
    radius: float | None = None

    def __post_init__(self):
        if self.tag not in ("plane", "sphere", "cylinder"):
            raise ValueError(f"unknown shrinker tag {self.tag!r}")

    def natural_radius(self) -> float:
        if self.tag == "sphere":
            return math.sqrt(-2 * self.n * self.s)
        if self.tag == "cylinder":
            return math.sqrt(-2 * self.s)
        return 0.0

    def surface(self) -> ExactSurface:
        r = self.natural_radius() if self.radius is None else self.radius
        if self.tag == "sphere":
            return ExactSurface("sphere", np.zeros(self.n + 1), r, self.n, self.s)
        if self.tag == "cylinder":
            return ExactSurface("cylinder", np.zeros(3), r, 2, self.s, [1.0, 0, 0], 6.0)
        return ExactSurface("plane", np.zeros(self.n + 1), 0.0, self.n, self.s, np.eye(self.n + 1)[-1], 6.0)


def self_shrinker_residual_exact(sample: SelfShrinkerSample) -> float:
    """sup |H - <x, nu>/(-2s)| over the sample's quadrature nodes."""
    if not sample.s < 0:
        raise ValueError("s must be negative")
    surf = sample.surface()
    if surf.kind == "sphere" and surf.n > 2:
        # |A| and <x, nu> are constant on a round sphere about the origin
        return abs(surf.H - surf.radius / (-2 * sample.s))
    q = exact_quadrature(surf, order=16)
    support = np.einsum("ij,ij->i", q.points, q.normals)
    return float(np.max(np.abs(q.H - support / (-2 * sample.s))))
