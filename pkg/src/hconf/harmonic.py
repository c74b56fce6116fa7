"""Exterior Dirichlet problem by separation of variables.

A g-harmonic function on the exterior is written as

    u(r, theta) = u_inf + sum_{l,m} c_{lm} u_l(r) Y_{lm}(theta)

where u_l is the decaying radial solution of degree l normalised to
u_l(r0) = 1 and c_{lm} are the quadrature coefficients of (f - u_inf).
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import quad, solve_ivp

from hconf.errors import DomainError, SolverError, UnsupportedGridError
from hconf.geometry import AngularGrid, BaseGeometry, constants, sphere_quadrature

ODE_RTOL = 1e-13
ODE_ATOL = 1e-15
POSITIVITY_FLOOR = 1e-12


@dataclass(frozen=True, eq=False)
class ModeSolution:
    """Decaying radial solution of degree l, normalised to one on Sigma.

    ``far_coefficient`` is lim r^{n-2+l} u_l(r). For l = 0 it is read from the
    conserved flux rho^{n-1} u_0', which equals the limit exactly.
    """

    base: BaseGeometry
    l: int
    derivative_at_r0: float
    decay_exponent: float
    far_coefficient: float
    _profile: Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]]

    def profile(self, r):
        return self._profile(np.asarray(r, float))[0]

    def profile_and_derivative(self, r):
        return self._profile(np.asarray(r, float))

    def __call__(self, r):
        return self.profile(r)

    def ode_residual(self, r, h_rel: float = 1e-5) -> np.ndarray:
        """Relative residual of the mode ODE at radii r > r0 (1 + h_rel).

        u'' is a central difference of the analytic u'. The scale is
        |u''| + (n-1)|u'|/rho + l(l+n-2)|u|/rho^2, which stays nondegenerate
        where rho' vanishes.
        """
        n = self.base.n
        r = np.asarray(r, float)
        h = h_rel * r
        if np.any(r - h < self.base.r0):
            raise DomainError("residual stencil reaches inside the boundary")
        u, du = self.profile_and_derivative(r)
        d2 = (self.profile_and_derivative(r + h)[1] - self.profile_and_derivative(r - h)[1]) / (2 * h)
        rho, drho, _ = self.base.rho_derivatives(r)
        lam = self.l * (self.l + n - 2)
        res = d2 + (n - 1) * drho / rho * du - lam * u / rho**2
        scale = np.abs(d2) + (n - 1) * np.abs(du) / rho + lam * np.abs(u) / rho**2
        return np.abs(res) / scale


def _flat_mode(base: BaseGeometry, l: int) -> ModeSolution:
    e = base.n - 2 + l
    r0 = base.r0

    def prof(r):
        if np.any(r < r0 * (1 - 1e-12)):
            raise DomainError("radius inside the boundary")
        v = (r0 / r) ** e
        return v, -e * v / r

    return ModeSolution(base, l, -e / r0, float(e), r0**e, prof)


def _schwarzschild_tail(n: int, rho_end: float, mass: float) -> float:
    """int_{r_end}^inf rho^{1-n} dr assuming a scalar-flat continuation."""

    def integrand(x):
        # x = rho_end / rho in (0, 1]
        rho = rho_end / x
        lapse = math.sqrt(max(1.0 - 2.0 * mass * rho ** (2 - n), 1e-300))
        return rho ** (1 - n) / lapse * rho_end / x**2

    val, _ = quad(integrand, 0.0, 1.0, epsabs=0.0, epsrel=1e-13, limit=200)
    return val


def _warped_l0(base: BaseGeometry) -> ModeSolution:
    n = base.n
    t0, t_end = math.log(base.r0), math.log(base.r_max)
    rho_end = float(base.rho(base.r_max))
    tail = _schwarzschild_tail(n, rho_end, base.adm_mass_base)
    spline = base._spline

    def rhs(t, y):
        return [-math.exp(t + (1 - n) * float(spline(t)))]

    sol = solve_ivp(
        rhs, (t_end, t0), [tail], method="DOP853", dense_output=True, rtol=1e-12, atol=tail * 1e-12
    )
    if not sol.success:
        raise SolverError(f"l=0 quadrature failed: {sol.message}")
    J0 = float(sol.sol(t0)[0])
    J_end = tail
    rho0 = base.rho0

    def prof(r):
        r = np.asarray(r, float)
        if np.any(r < base.r0 * (1 - 1e-12)):
            raise DomainError("radius inside the boundary")
        inside = r <= base.r_max
        J = np.empty_like(r)
        dJ = np.empty_like(r)
        ri = r[inside]
        if ri.size:
            J[inside] = sol.sol(np.log(ri))[0]
            dJ[inside] = -base.rho(ri) ** (1 - n)
        ro = r[~inside]
        if ro.size:
            J[~inside] = J_end * (base.r_max / ro) ** (n - 2)
            dJ[~inside] = -(n - 2) * J[~inside] / ro
        return J / J0, dJ / J0

    return ModeSolution(
        base=base,
        l=0,
        derivative_at_r0=-(rho0 ** (1 - n)) / J0,
        decay_exponent=float(n - 2),
        far_coefficient=1.0 / ((n - 2) * J0),
        _profile=prof,
    )


def _warped_riccati(base: BaseGeometry, l: int) -> ModeSolution:
    """Backward integration of the log-derivative z = r u'/u in t = log r.

    Contamination by the growing solution is damped like (r/R_max)^{2l+n-2}
    when integrating inwards, so the asymptotic seed needs no correction.
    """
    n = base.n
    lam = l * (l + n - 2)
    e = n - 2 + l
    t0, t_end = math.log(base.r0), math.log(base.r_max)
    spline = base._spline

    def rhs(t, y):
        z = y[0]
        s = float(spline(t))
        s1 = float(spline(t, 1))
        return [z - (n - 1) * s1 * z + lam * math.exp(2.0 * (t - s)) - z * z, z]

    sol = solve_ivp(
        rhs, (t_end, t0), [-float(e), 0.0], method="DOP853", dense_output=True, rtol=ODE_RTOL, atol=ODE_ATOL
    )
    if not sol.success:
        raise SolverError(f"mode l={l} integration failed: {sol.message}")
    z0, w0 = sol.sol(t0)
    log_far = e * t_end - w0

    def prof(r):
        r = np.asarray(r, float)
        if np.any(r < base.r0 * (1 - 1e-12)):
            raise DomainError("radius inside the boundary")
        inside = r <= base.r_max
        v = np.empty_like(r)
        dv = np.empty_like(r)
        ri = r[inside]
        if ri.size:
            z, w = sol.sol(np.log(ri))
            v[inside] = np.exp(w - w0)
            dv[inside] = z * v[inside] / ri
        ro = r[~inside]
        if ro.size:
            v[~inside] = np.exp(log_far - e * np.log(ro))
            dv[~inside] = -e * v[~inside] / ro
        return v, dv

    return ModeSolution(base, l, float(z0) / base.r0, float(e), float(math.exp(log_far)), prof)


@functools.lru_cache(maxsize=2048)
def solve_radial_mode(base: BaseGeometry, l: int) -> ModeSolution:
    """Decaying solution of u'' + (n-1)(rho'/rho) u' - l(l+n-2)/rho^2 u = 0."""
    if l < 0:
        raise ValueError("degree must be nonnegative")
    if base.is_flat:
        return _flat_mode(base, l)
    if l == 0:
        return _warped_l0(base)
    return _warped_riccati(base, l)


@dataclass(frozen=True, eq=False)
class BoundaryData:
    """Node values of a conformal boundary factor f on Sigma."""

    base: BaseGeometry
    grid: AngularGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != (self.grid.size,):
            raise UnsupportedGridError(f"expected {self.grid.size} node values, got {v.shape}")
        if self.grid.n != self.base.n:
            raise UnsupportedGridError("grid and base have different dimensions")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def area_weights(self) -> np.ndarray:
        """Quadrature weights for the g-area measure on Sigma."""
        return self.grid.weights * self.base.boundary_area_element

    def integrate(self, g) -> float:
        return float(np.dot(self.area_weights, g))

    @property
    def area(self) -> float:
        """|Sigma| in the metric u^k g, i.e. the integral of f^p."""
        p = self.base.consts.p
        return self.integrate(np.abs(self.values) ** p)

    @property
    def lp_norm_p(self) -> float:
        return self.area ** (1.0 / self.base.consts.p)

    @classmethod
    def constant(cls, base: BaseGeometry, grid: AngularGrid, c: float) -> "BoundaryData":
        return cls(base, grid, np.full(grid.size, float(c)))

    def to_json(self) -> dict:
        return {"grid": self.grid.to_json(), "values": [float(x) for x in self.values]}

    @classmethod
    def from_json(cls, data: dict, base: BaseGeometry) -> "BoundaryData":
        grid = AngularGrid.from_json(data["grid"])
        return cls(base, grid, np.asarray(data["values"], float))


@dataclass(frozen=True, eq=False)
class HarmonicFunction:
    base: BaseGeometry
    grid: AngularGrid
    value_at_infinity: float
    coefficients: np.ndarray
    boundary_data: BoundaryData

    @property
    def modes(self) -> tuple[ModeSolution, ...]:
        return tuple(solve_radial_mode(self.base, l) for l in range(self.grid.L_max + 1))

    @property
    def coeffs(self) -> dict[str, float]:
        return {f"{l},{m}": float(c) for (l, m), c in zip(self.grid.modes, self.coefficients)}

    def is_radial(self, tol: float = 1e-13) -> bool:
        hi = self.grid.degrees > 0
        scale = max(1.0, float(np.abs(self.coefficients).max(initial=0.0)))
        return bool(np.all(np.abs(self.coefficients[hi]) <= tol * scale))

    def _profiles(self, r: np.ndarray):
        vals = np.empty((self.grid.L_max + 1,) + r.shape)
        ders = np.empty_like(vals)
        for l, mode in enumerate(self.modes):
            vals[l], ders[l] = mode.profile_and_derivative(r)
        return vals, ders

    def _combine(self, r, Y, with_derivatives=False, dY=None):
        r = np.asarray(r, float)
        if np.any(r < self.base.r0 * (1 - 1e-12)):
            raise DomainError("cannot evaluate inside the boundary")
        P, dP = self._profiles(r)
        deg = self.grid.degrees
        c = self.coefficients.reshape((-1,) + (1,) * r.ndim)
        value = self.value_at_infinity + np.sum(c * P[deg] * Y, axis=0)
        if not with_derivatives:
            return value
        du_dr = np.sum(c * dP[deg] * Y, axis=0)
        du_dth = np.sum(c * P[deg] * dY, axis=0) if dY is not None else None
        return value, du_dr, du_dth

    def at_nodes(self, r) -> np.ndarray:
        """Values at the grid nodes on the sphere(s) of radius r (scalar or per node)."""
        r = np.broadcast_to(np.asarray(r, float), (self.grid.size,))
        out = self._combine(r, self.grid.basis)
        on_sigma = r <= self.base.r0 * (1 + 1e-15)
        if np.any(on_sigma):
            out = np.where(on_sigma, self.boundary_data.values, out)
        return out

    def value(self, r, theta, phi=None):
        """Mode-sum value at arbitrary points (no boundary-trace substitution)."""
        r, theta = np.broadcast_arrays(np.asarray(r, float), np.asarray(theta, float))
        if phi is not None:
            phi = np.broadcast_to(np.asarray(phi, float), theta.shape)
        return self._combine(r, self.grid.basis_at(theta, phi))

    def gradient_polar(self, r, theta):
        """(u, du/dr, du/dtheta) at points, axisymmetric grids only."""
        r, theta = np.broadcast_arrays(np.asarray(r, float), np.asarray(theta, float))
        return self._combine(
            r, self.grid.basis_at(theta), with_derivatives=True, dY=self.grid.dtheta_basis_at(theta)
        )

    def radial_derivative(self, r, theta, phi=None):
        r, theta = np.broadcast_arrays(np.asarray(r, float), np.asarray(theta, float))
        if phi is not None:
            phi = np.broadcast_to(np.asarray(phi, float), theta.shape)
        return self._combine(r, self.grid.basis_at(theta, phi), with_derivatives=True)[1]

    def node_kernel(self, r, theta) -> np.ndarray:
        """d u(r_i, theta_i) / d f_j, the discrete Poisson kernel, shape (points, nodes)."""
        r, theta = np.broadcast_arrays(np.asarray(r, float), np.asarray(theta, float))
        P, _ = self._profiles(r)
        Y = self.grid.basis_at(theta)
        rows = P[self.grid.degrees] * Y  # (modes, points)
        return rows.T @ (self.grid.basis * self.grid.weights)

    def to_json(self) -> dict:
        return {"value_at_infinity": float(self.value_at_infinity), "coeffs": self.coeffs}

    @classmethod
    def from_json(cls, data: dict, base: BaseGeometry, grid: AngularGrid) -> "HarmonicFunction":
        lookup = {tuple(int(x) for x in key.split(",")): float(v) for key, v in data["coeffs"].items()}
        coeffs = np.array([lookup.get(mode, 0.0) for mode in grid.modes])
        v_inf = float(data["value_at_infinity"])
        values = v_inf + coeffs @ grid.basis
        return cls(base, grid, v_inf, coeffs, BoundaryData(base, grid, values))


def harmonic_extension(base: BaseGeometry, f: BoundaryData, value_at_infinity: float = 1.0) -> HarmonicFunction:
    """The g-harmonic function with boundary data f and the given limit at infinity."""
    if f.base is not base:
        if f.base.n != base.n or f.base.r0 != base.r0 or f.base.kind != base.kind:
            raise UnsupportedGridError("boundary data belongs to a different base geometry")
    if value_at_infinity > 0 and np.any(f.values < -1e-14):
        raise DomainError("class members need nonnegative boundary data")
    grid = f.grid
    coeffs = grid.basis @ (grid.weights * (f.values - value_at_infinity))
    return HarmonicFunction(base, grid, float(value_at_infinity), coeffs, f)


def evaluate(u: HarmonicFunction, r, theta=None, phi=None):
    """Value of u at radius r.

    ``theta`` may be an integer node index (or array of them), an angle, or
    None for all nodes. On Sigma node values return the boundary data.
    """
    if np.any(np.asarray(r) < u.base.r0 * (1 - 1e-12)):
        raise DomainError("r < r0")
    if theta is None:
        return u.at_nodes(r)
    if np.issubdtype(np.asarray(theta).dtype, np.integer):
        return u.at_nodes(r)[theta]
    out = u.value(r, theta, phi)
    return float(out) if np.ndim(out) == 0 else out


def sphere_mean(u: HarmonicFunction, r: float) -> float:
    """Average of u over the coordinate sphere of radius r."""
    g = u.grid
    vals = u._combine(np.full(g.size, float(r)), g.basis)
    return float(np.dot(g.weights, vals) / constants(u.base.n).omega)


def expansion_coefficient(u: HarmonicFunction, method: str = "flux") -> float:
    """Coefficient a in u = u_inf + a / |x|^{n-2} + O(|x|^{1-n}).

    ``flux`` reads it off the degree-0 coefficient and the conserved radial
    flux; ``far`` extrapolates r^{n-2} (mean of u - u_inf over S_r) from three
    large radii (Richardson in 1/r) and is used as an independent check.
    """
    n = u.base.n
    omega = constants(n).omega
    if method == "flux":
        c00 = u.coefficients[0]
        return float(c00 / math.sqrt(omega) * u.modes[0].far_coefficient)
    if method == "far":
        return far_field_coefficient(lambda r: sphere_mean(u, r) - u.value_at_infinity, u.base)
    raise ValueError(f"unknown method {method!r}")


def far_field_coefficient(mean_fn: Callable[[float], float], base: BaseGeometry) -> float:
    n = base.n
    r_far = min(base.r_max, 1.0e4 * base.r0)
    radii = np.array([r_far / 4.0, r_far / 2.0, r_far])
    g = np.array([r ** (n - 2) * mean_fn(r) for r in radii])
    # g(r) = a + b/r + c/r^2
    M = np.stack([np.ones(3), 1.0 / radii, 1.0 / radii**2], axis=1)
    return float(np.linalg.solve(M, g)[0])


def _radial_grid(base: BaseGeometry) -> AngularGrid:
    return sphere_quadrature(base.n, 0)


def phi_function(base: BaseGeometry, grid: AngularGrid | None = None) -> HarmonicFunction:
    """The harmonic function vanishing on Sigma and tending to one at infinity."""
    grid = grid or _radial_grid(base)
    return harmonic_extension(base, BoundaryData.constant(base, grid, 0.0), 1.0)


def capacity(base: BaseGeometry) -> float:
    return -expansion_coefficient(phi_function(base))


def normal_derivative_phi(base: BaseGeometry) -> float:
    """d_nu phi on Sigma; constant on the radial bases supported here."""
    return -solve_radial_mode(base, 0).derivative_at_r0


def boundary_density_V(base: BaseGeometry, grid: AngularGrid | None = None) -> np.ndarray:
    """Node values of V = d_nu phi / ((n-2) omega)."""
    grid = grid or _radial_grid(base)
    c = constants(base.n)
    return np.full(grid.size, normal_derivative_phi(base) / ((base.n - 2) * c.omega))


@dataclass(frozen=True, eq=False)
class QuotientFunction:
    """Pointwise quotient phi / u of two g-harmonic functions.

    By the conformal Laplacian identity it is harmonic for u^k g whenever phi
    is g-harmonic.
    """

    phi: HarmonicFunction
    u: HarmonicFunction

    @property
    def base(self) -> BaseGeometry:
        return self.u.base

    def _den(self, vals):
        if np.any(vals < POSITIVITY_FLOOR):
            raise DomainError("conformal factor below positivity floor")
        return vals

    def value(self, r, theta, phi=None):
        return self.phi.value(r, theta, phi) / self._den(self.u.value(r, theta, phi))

    def at_nodes(self, r):
        return self.phi.at_nodes(r) / self._den(self.u.at_nodes(r))

    def radial_derivative(self, r, theta, phi=None):
        a = self.phi.value(r, theta, phi)
        b = self._den(self.u.value(r, theta, phi))
        da = self.phi.radial_derivative(r, theta, phi)
        db = self.u.radial_derivative(r, theta, phi)
        return (da * b - a * db) / b**2

    def sphere_mean(self, r: float) -> float:
        g = self.u.grid
        vals = self.value(np.full(g.size, float(r)), g.theta, g.phi)
        return float(np.dot(g.weights, vals) / constants(self.base.n).omega)

    def expansion_coefficient(self) -> float:
        v_inf = self.phi.value_at_infinity / self.u.value_at_infinity
        return far_field_coefficient(lambda r: self.sphere_mean(r) - v_inf, self.base)

    def laplacian_residual(self, points: np.ndarray, h: float = 1e-3) -> np.ndarray:
        """u^k g-Laplacian of the quotient at Cartesian points (flat n = 3 only).

        For gbar = u^k g, Delta_gbar q = u^{-k} (Delta q + 2 <grad u, grad q> / u);
        both terms are evaluated by fourth-order central differences.
        """
        if not (self.base.is_flat and self.base.n == 3):
            raise UnsupportedGridError("residual check implemented for the flat 3-d exterior")
        pts = np.atleast_2d(np.asarray(points, float))

        def sph(x):
            r = np.linalg.norm(x, axis=-1)
            th = np.arccos(np.clip(x[..., 2] / r, -1, 1))
            ph = np.arctan2(x[..., 1], x[..., 0])
            return r, th, ph

        def q(x):
            return self.value(*sph(x))

        def uu(x):
            return self.u.value(*sph(x))

        stencil = [(-2, 1 / 12), (-1, -8 / 12), (1, 8 / 12), (2, -1 / 12)]
        stencil2 = [(-2, -1 / 12), (-1, 16 / 12), (0, -30 / 12), (1, 16 / 12), (2, -1 / 12)]
        lap = np.zeros(len(pts))
        dot = np.zeros(len(pts))
        for axis in range(3):
            e = np.zeros(3)
            e[axis] = h
            lap += sum(w * q(pts + s * e) for s, w in stencil2) / h**2
            dq = sum(w * q(pts + s * e) for s, w in stencil) / h
            du = sum(w * uu(pts + s * e) for s, w in stencil) / h
            dot += dq * du
        u0 = uu(pts)
        k = constants(3).k
        return u0 ** (-k) * (lap + 2.0 * dot / u0)


def conformal_quotient(phi: HarmonicFunction, u: HarmonicFunction) -> QuotientFunction:
    if phi.base is not u.base:
        raise UnsupportedGridError("functions live on different bases")
    return QuotientFunction(phi, u)
