"""Mass under harmonic conformal change, the invariants I1 and I2, and mu(A)."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from hconf import _projection
from hconf.errors import DomainError, UnsupportedGridError
from hconf.geometry import AngularGrid, BaseGeometry, constants, sphere_quadrature
from hconf.harmonic import (
    BoundaryData,
    HarmonicFunction,
    boundary_density_V,
    capacity,
    conformal_quotient,
    expansion_coefficient,
    harmonic_extension,
    normal_derivative_phi,
    phi_function,
)


@dataclass(frozen=True)
class InvariantSet:
    I1: float
    I2: float
    capacity: float
    adm_mass_base: float
    n: int = 3

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "I1": self.I1,
            "I2": self.I2,
            "capacity": self.capacity,
            "adm_mass_base": self.adm_mass_base,
        }

    @classmethod
    def from_json(cls, data: dict) -> "InvariantSet":
        vals = {k: float(data[k]) for k in ("I1", "I2", "capacity", "adm_mass_base")}
        return cls(**vals, n=int(data.get("n", 3)))


@dataclass(frozen=True, eq=False)
class MuResult:
    A: float
    mu: float
    maximizer_f0: BoundaryData
    method: str
    converged: bool = True
    start_values: tuple[float, ...] = field(default=())


def adm_mass(base: BaseGeometry, u: HarmonicFunction) -> float:
    """ADM mass of u^k g for u harmonic with u -> 1 at infinity."""
    if abs(u.value_at_infinity - 1.0) > 1e-14:
        raise DomainError("u must tend to one at infinity")
    return base.adm_mass_base + 2.0 * expansion_coefficient(u)


def _i2_from_density(n: int, dnu: np.ndarray, area_weights: np.ndarray) -> float:
    c = constants(n)
    q = 2.0 * (n - 1) / n
    inner = float(np.dot(area_weights, np.abs(dnu) ** q)) / c.omega
    return 2.0 / (n - 2) ** 2 * inner ** (n / (n - 1.0))


def invariant_I1(base: BaseGeometry) -> float:
    return base.adm_mass_base - 2.0 * capacity(base)


def invariant_I2(base: BaseGeometry) -> float:
    grid = sphere_quadrature(base.n, 0)
    dnu = np.full(grid.size, normal_derivative_phi(base))
    return _i2_from_density(base.n, dnu, grid.weights * base.boundary_area_element)


def invariant_set(base: BaseGeometry) -> InvariantSet:
    cap = capacity(base)
    m = base.adm_mass_base
    return InvariantSet(
        I1=m - 2.0 * cap, I2=invariant_I2(base), capacity=cap, adm_mass_base=m, n=base.n
    )


@dataclass(frozen=True)
class RepresentativeQuantities:
    """Mass, capacity and invariants of u^k g computed from u^k g-data alone."""

    adm_mass: float
    capacity: float
    I1: float
    I2: float


def representative_invariants(base: BaseGeometry, u: HarmonicFunction) -> RepresentativeQuantities:
    """Recompute I1 and I2 for gbar = u^k g.

    The capacity comes from the far field of phi/u (the gbar-harmonic function
    vanishing on Sigma), the normal derivative from the radial derivative of
    phi/u rescaled to the gbar unit normal, and the area form from f^p dA.
    """
    n = base.n
    g = u.grid
    f = u.value(np.full(g.size, base.r0), g.theta, g.phi)
    if np.any(f <= 0):
        raise DomainError("representative needs positive boundary data")
    phi = phi_function(base, u.grid)
    q = conformal_quotient(phi, u)
    cap = -q.expansion_coefficient()
    d_quot = q.radial_derivative(np.full(g.size, base.r0), g.theta, g.phi)
    dnu_bar = f ** (-2.0 / (n - 2)) * d_quot
    area_w = u.boundary_data.area_weights * f ** base.consts.p
    mass = adm_mass(base, u)
    return RepresentativeQuantities(
        adm_mass=mass,
        capacity=cap,
        I1=mass - 2.0 * cap,
        I2=_i2_from_density(n, dnu_bar, area_w),
    )


def mu_formula(inv: InvariantSet, A: float) -> float:
    """mu(A) = I1 + sqrt(2 I2) (A/omega)^{1/p}."""
    if A <= 0:
        raise DomainError("A must be positive")
    c = constants(inv.n)
    return inv.I1 + math.sqrt(2.0 * inv.I2) * (A / c.omega) ** (1.0 / c.p)


def _default_grid(base: BaseGeometry) -> AngularGrid:
    if base.n == 3:
        return sphere_quadrature(3, 6)
    return sphere_quadrature(base.n, 0)


def mu_maximizer_data(base: BaseGeometry, A: float, grid: AngularGrid | None = None) -> BoundaryData:
    """Boundary data f0 proportional to V^{(n-2)/n}, scaled so that int f0^p dA = A."""
    if A <= 0:
        raise DomainError("A must be positive")
    grid = grid or _default_grid(base)
    n = base.n
    V = boundary_density_V(base, grid)
    dA = grid.weights * base.boundary_area_element
    norm = float(np.dot(dA, V ** (2.0 * (n - 1) / n)))
    e = (n - 2) / (2.0 * (n - 1))
    f0 = A**e * norm ** (-e) * V ** ((n - 2) / n)
    return BoundaryData(base, grid, f0)


def mass_of_data(base: BaseGeometry, f: BoundaryData) -> float:
    return adm_mass(base, harmonic_extension(base, f, 1.0))


def mu_direct(
    base: BaseGeometry,
    A: float,
    starts: int = 4,
    grid: AngularGrid | None = None,
    seed: int = 0,
    max_iter: int = 500,
    tol: float = 1e-12,
) -> MuResult:
    """Maximise ADM mass over boundary data with int f^p dA = A.

    The mass is affine in f with gradient 2V, so each start runs projected
    ascent on the p-ball; a growing step drives iterates to the boundary.
    """
    if A <= 0:
        raise DomainError("A must be positive")
    grid = grid or _default_grid(base)
    p = base.consts.p
    dA = grid.weights * base.boundary_area_element
    V = boundary_density_V(base, grid)
    rng = np.random.default_rng(seed)
    best = None
    values = []
    all_converged = True
    for s in range(max(1, starts)):
        f = rng.uniform(0.05, 1.0, grid.size) if s else np.ones(grid.size)
        f = _projection.saturate(f, dA, p, A)
        eta = float(np.max(f) / np.max(V))
        converged = False
        for _ in range(max_iter):
            new = _projection.saturate(_projection.project(f + eta * V, dA, p, A), dA, p, A)
            step = float(np.max(np.abs(new - f)))
            f = new
            if step <= tol * max(1.0, float(np.max(f))):
                converged = True
                break
            eta *= 1.5
        all_converged &= converged
        data = BoundaryData(base, grid, f)
        mass = mass_of_data(base, data)
        values.append(mass)
        if best is None or mass > best[0]:
            best = (mass, data)
    return MuResult(A, best[0], best[1], "direct", all_converged, tuple(values))


def mu_formula_result(base: BaseGeometry, A: float, grid: AngularGrid | None = None) -> MuResult:
    inv = invariant_set(base)
    return MuResult(A, mu_formula(inv, A), mu_maximizer_data(base, A, grid), "formula")


def normalized_segment(f0: BoundaryData, f1: BoundaryData, t: float, A: float) -> BoundaryData:
    """Convex combination of f0, f1 rescaled back to int f^p dA = A."""
    mix = (1.0 - t) * f0.values + t * f1.values
    tmp = BoundaryData(f0.base, f0.grid, mix)
    return BoundaryData(f0.base, f0.grid, mix * (A / tmp.area) ** (1.0 / f0.base.consts.p))


def mu_lower_demo(
    base: BaseGeometry,
    A: float,
    cap_half_angles,
    resolution: int = 256,
) -> list[tuple[float, float]]:
    """ADM masses of cap-supported data of fixed boundary area A."""
    if base.n != 3:
        raise UnsupportedGridError("cap data needs angular resolution (n = 3)")
    if A <= 0:
        raise DomainError("A must be positive")
    grid = sphere_quadrature(3, resolution - 1, axisymmetric=True)
    out = []
    for eps in cap_half_angles:
        mask = grid.theta <= eps + 1e-14
        if not np.any(mask):
            raise UnsupportedGridError(f"cap half-angle {eps} is below the grid resolution")
        f = mask.astype(float)
        f = _projection.saturate(f, grid.weights * base.boundary_area_element, base.consts.p, A)
        out.append((float(eps), mass_of_data(base, BoundaryData(base, grid, f))))
    return out
