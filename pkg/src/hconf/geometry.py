"""Background geometries, dimensional constants and angular quadrature.

Two kinds of base manifold are supported: the flat exterior of a round ball,
and a radial warped product ``dr^2 + rho(r)^2 g_sphere`` given by samples of
the warping factor. Angular integrals use tensor Gauss-Legendre rules.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicSpline
from scipy.special import gamma, sph_harm_y

from hconf.errors import DimensionError, DomainError, SolverError, UnsupportedGridError

FLAT_EXTERIOR = "flat_exterior"
WARPED_PRODUCT = "warped_product"

# R_max / r0 for sampled warping factors.
DEFAULT_RANGE_FACTOR = 1.0e4
DEFAULT_SAMPLES = 8001


@dataclass(frozen=True)
class Constants:
    n: int
    p: float
    k: float
    omega: float


def constants(n: int) -> Constants:
    """Area exponent p, conformal exponent k and unit-sphere area for dimension n."""
    if not isinstance(n, (int, np.integer)) or not 3 <= n <= 7:
        raise DimensionError(f"dimension must be an integer in [3, 7], got {n!r}")
    n = int(n)
    p = 2.0 * (n - 1) / (n - 2)
    k = 4.0 / (n - 2)
    omega = 2.0 * math.pi ** (n / 2.0) / gamma(n / 2.0)
    return Constants(n=n, p=p, k=k, omega=float(omega))


@dataclass(frozen=True, eq=False)
class BaseGeometry:
    """The manifold (M, g) with boundary Sigma = {r = r0}.

    For ``kind == "warped_product"`` the warping factor is interpolated by a
    cubic spline of log(rho) against log(r), which keeps derivatives well
    conditioned on the geometric sample grid. The flat exterior is the special
    case rho(r) = r and is handled in closed form everywhere.
    """

    kind: str
    n: int
    r0: float
    r_samples: np.ndarray | None = None
    rho_samples: np.ndarray | None = None
    _spline: CubicSpline | None = field(default=None, init=False, repr=False)

    def __post_init__(self):
        constants(self.n)
        if not self.r0 > 0:
            raise DomainError("r0 must be positive")
        if self.kind == FLAT_EXTERIOR:
            return
        if self.kind != WARPED_PRODUCT:
            raise ValueError(f"unknown geometry kind {self.kind!r}")
        r = np.asarray(self.r_samples, dtype=float)
        rho = np.asarray(self.rho_samples, dtype=float)
        if r.ndim != 1 or r.shape != rho.shape or r.size < 8:
            raise ValueError("warped product needs at least 8 matching (r, rho) samples")
        if np.any(np.diff(r) <= 0):
            raise ValueError("radial samples must be strictly increasing")
        if np.any(rho <= 0):
            raise ValueError("warping factor must be positive")
        if abs(r[0] - self.r0) > 1e-12 * self.r0:
            raise ValueError("first radial sample must equal r0")
        r.setflags(write=False)
        rho.setflags(write=False)
        object.__setattr__(self, "r_samples", r)
        object.__setattr__(self, "rho_samples", rho)
        object.__setattr__(self, "_spline", CubicSpline(np.log(r), np.log(rho)))

    @property
    def is_flat(self) -> bool:
        return self.kind == FLAT_EXTERIOR

    @property
    def consts(self) -> Constants:
        return constants(self.n)

    @property
    def r_max(self) -> float:
        if self.is_flat:
            return math.inf
        return float(self.r_samples[-1])

    def _check_range(self, r):
        r = np.asarray(r, dtype=float)
        lo = self.r0 * (1 - 1e-12)
        hi = self.r_max * (1 + 1e-12)
        if np.any(r < lo) or np.any(r > hi):
            raise DomainError(f"radius outside [{self.r0}, {self.r_max}]")
        return r

    def rho(self, r):
        r = self._check_range(r)
        if self.is_flat:
            return r.copy() if r.ndim else float(r)
        return np.exp(self._spline(np.log(r)))

    def rho_derivatives(self, r):
        """Return (rho, rho', rho'') at r."""
        r = self._check_range(r)
        if self.is_flat:
            return r, np.ones_like(r), np.zeros_like(r)
        t = np.log(r)
        rho = np.exp(self._spline(t))
        s1 = self._spline(t, 1)
        s2 = self._spline(t, 2)
        d1 = rho * s1 / r
        d2 = rho / r**2 * (s1 * s1 + s2 - s1)
        return rho, d1, d2

    @property
    def rho0(self) -> float:
        return float(self.rho(self.r0))

    @property
    def boundary_area_element(self) -> float:
        """Ratio of the g-area element on Sigma to the unit-sphere element."""
        return self.rho0 ** (self.n - 1)

    @property
    def boundary_area(self) -> float:
        """|Sigma|_g."""
        return self.consts.omega * self.boundary_area_element

    @property
    def boundary_mean_curvature(self) -> float:
        """Mean curvature of Sigma (normal pointing to infinity)."""
        rho, d1, _ = self.rho_derivatives(self.r0)
        return float((self.n - 1) * d1 / rho)

    def mass_function(self, r):
        """(rho^{n-2}/2)(1 - rho'^2); constant and equal to m on Schwarzschild."""
        rho, d1, _ = self.rho_derivatives(r)
        return 0.5 * rho ** (self.n - 2) * (1.0 - d1 * d1)

    @property
    def adm_mass_base(self) -> float:
        if self.is_flat:
            return 0.0
        # 1 - rho'^2 ~ 2m / r^{n-2} cancels catastrophically at large r, so the
        # mass function is read where it is still ~1e-3 of its boundary scale.
        r_eval = min(self.r0 * 1.0e3 ** (1.0 / (self.n - 2)), self.r_max / 10.0)
        return float(self.mass_function(r_eval))

    def to_json(self) -> dict:
        out = {"n": self.n, "kind": self.kind, "r0": self.r0}
        if not self.is_flat:
            out["rho"] = [[float(a), float(b)] for a, b in zip(self.r_samples, self.rho_samples)]
        return out

    @classmethod
    def from_json(cls, data: dict | str) -> "BaseGeometry":
        if isinstance(data, str):
            data = json.loads(data)
        kind = data["kind"]
        n = int(data["n"])
        r0 = float(data["r0"])
        if kind == FLAT_EXTERIOR:
            return flat_exterior(n, r0)
        pairs = np.asarray(data["rho"], dtype=float)
        return cls(kind=WARPED_PRODUCT, n=n, r0=r0, r_samples=pairs[:, 0], rho_samples=pairs[:, 1])


def flat_exterior(n: int, r0: float = 1.0) -> BaseGeometry:
    return BaseGeometry(kind=FLAT_EXTERIOR, n=n, r0=float(r0))


def geometric_grid(r0: float, r_max: float, num: int) -> np.ndarray:
    r = np.geomspace(r0, r_max, num)
    r[0] = r0
    return r


def warped_product(
    n: int,
    rho_fn: Callable[[np.ndarray], np.ndarray],
    r0: float,
    r_max: float | None = None,
    num: int = DEFAULT_SAMPLES,
) -> BaseGeometry:
    """Sample ``rho_fn`` on a geometric grid over [r0, r_max] and wrap it."""
    r_max = DEFAULT_RANGE_FACTOR * r0 if r_max is None else r_max
    r = geometric_grid(r0, r_max, num)
    return BaseGeometry(
        kind=WARPED_PRODUCT, n=n, r0=float(r0), r_samples=r, rho_samples=np.asarray(rho_fn(r), float)
    )


def schwarzschild_base(
    n: int,
    mass: float,
    boundary_rho: float | None = None,
    range_factor: float = DEFAULT_RANGE_FACTOR,
    num: int = DEFAULT_SAMPLES,
) -> BaseGeometry:
    """Spatial Schwarzschild exterior written as a warped product.

    The radial coordinate is geodesic distance shifted so that r0 equals the
    area radius of the boundary. The profile solves rho'' = m(n-2) rho^{1-n}
    with rho'(r0)^2 = 1 - 2m rho0^{2-n}; by default the boundary is the horizon.
    """
    constants(n)
    if boundary_rho is None:
        if mass <= 0:
            raise DomainError("horizon boundary requires positive mass")
        boundary_rho = (2.0 * mass) ** (1.0 / (n - 2))
    slope2 = 1.0 - 2.0 * mass * boundary_rho ** (2 - n)
    if slope2 < -1e-14:
        raise DomainError("boundary lies inside the horizon")
    r0 = float(boundary_rho)
    r = geometric_grid(r0, range_factor * r0, num)

    def rhs(_, y):
        return [y[1], mass * (n - 2) * y[0] ** (1 - n)]

    sol = solve_ivp(
        rhs,
        (r0, r[-1]),
        [boundary_rho, math.sqrt(max(slope2, 0.0))],
        method="DOP853",
        t_eval=r,
        rtol=1e-13,
        atol=1e-13 * r0,
    )
    if not sol.success:  # pragma: no cover - smooth problem
        raise SolverError(sol.message)
    return BaseGeometry(kind=WARPED_PRODUCT, n=n, r0=r0, r_samples=r, rho_samples=sol.y[0])


def scalar_curvature_radial(base: BaseGeometry, r) -> np.ndarray | float:
    """Scalar curvature of dr^2 + rho(r)^2 g_sphere at r."""
    if base.is_flat:
        base._check_range(r)
        return np.zeros_like(np.asarray(r, float)) if np.ndim(r) else 0.0
    n = base.n
    rho, d1, d2 = base.rho_derivatives(r)
    out = (n - 1) * ((n - 2) * (1.0 - d1 * d1) / rho**2 - 2.0 * d2 / rho)
    return out if np.ndim(out) else float(out)


@dataclass(frozen=True)
class AFReport:
    decay_exponent_estimate: float
    curvature_decay_estimate: float
    scalar_curvature_samples: list[tuple[float, float]]
    passed: bool

    @property
    def pass_(self) -> bool:
        return self.passed


def _fit_decay(r: np.ndarray, y: np.ndarray, floor: float) -> float:
    y = np.abs(y)
    if np.all(y <= floor):
        return math.inf
    keep = y > floor
    if keep.sum() < 4:
        return math.inf
    slope, _ = np.polyfit(np.log(r[keep]), np.log(y[keep]), 1)
    return float(-slope)


def check_asymptotic_flatness(base: BaseGeometry, fit_decades: float = 2.0) -> AFReport:
    """Fit decay exponents of |g - delta| and |R| over the outer sampled range.

    In the chart x = r * theta the only nonzero component of g - delta is the
    angular one, of size |rho^2/r^2 - 1|. Curvature below a dimensionless noise
    floor (|R| rho^2 < 1e-7) is treated as exactly zero.
    """
    n = base.n
    if base.is_flat:
        rs = np.geomspace(base.r0, 100 * base.r0, 5)
        return AFReport(math.inf, math.inf, [(float(x), 0.0) for x in rs], True)
    r_all = base.r_samples
    lo = base.r_max / 10.0**fit_decades
    r = r_all[(r_all >= lo) & (r_all <= base.r_max / 2)]
    if r.size < 8:
        raise DomainError("insufficient radial samples to fit decay exponents")
    rho = base.rho(r)
    p_est = _fit_decay(r, rho**2 / r**2 - 1.0, 1e-13)
    R = scalar_curvature_radial(base, r)
    q_est = _fit_decay(r, R * rho**2, 1e-7)
    if math.isfinite(q_est):
        q_est += 2.0  # undo the rho^2 normalisation
    sample_idx = np.unique(np.linspace(0, r_all.size - 1, 25).astype(int))
    samples = [(float(r_all[i]), float(scalar_curvature_radial(base, r_all[i]))) for i in sample_idx]
    passed = p_est > (n - 2) / 2.0 and q_est > n
    return AFReport(p_est, q_est, samples, bool(passed))


def _legendre_table(L: int, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """P_l(x) and dP_l/dx for l = 0..L by the three-term recurrence."""
    x = np.asarray(x, float)
    P = np.zeros((L + 1,) + x.shape)
    dP = np.zeros_like(P)
    P[0] = 1.0
    if L >= 1:
        P[1] = x
        dP[1] = 1.0
    for l in range(1, L):
        P[l + 1] = ((2 * l + 1) * x * P[l] - l * P[l - 1]) / (l + 1)
        dP[l + 1] = dP[l - 1] + (2 * l + 1) * P[l]
    return P, dP


def _real_sph_harm(l: int, m: int, theta, phi):
    if m == 0:
        return np.real(sph_harm_y(l, 0, theta, phi))
    y = sph_harm_y(l, abs(m), theta, phi)
    sign = (-1) ** m
    if m > 0:
        return math.sqrt(2.0) * sign * np.real(y)
    return math.sqrt(2.0) * sign * np.imag(y)


@dataclass(frozen=True, eq=False)
class AngularGrid:
    """Quadrature nodes on S^{n-1} with an orthonormal harmonic basis.

    ``axisymmetric`` grids carry polar rings only (weights include the 2*pi
    azimuthal factor) and the zonal basis Y_{l,0}. ``basis`` has shape
    (n_modes, n_nodes).
    """

    n: int
    L_max: int
    theta: np.ndarray
    phi: np.ndarray
    weights: np.ndarray
    modes: tuple[tuple[int, int], ...]
    basis: np.ndarray
    axisymmetric: bool

    @property
    def size(self) -> int:
        return self.weights.size

    @property
    def degrees(self) -> np.ndarray:
        return np.array([l for l, _ in self.modes])

    def integrate(self, values) -> float:
        return float(np.dot(self.weights, values))

    def basis_at(self, theta, phi=None) -> np.ndarray:
        theta = np.asarray(theta, float)
        if self.n > 3:
            return np.full((1,) + theta.shape, 1.0 / math.sqrt(constants(self.n).omega))
        if self.axisymmetric:
            P, _ = _legendre_table(self.L_max, np.cos(theta))
            norms = np.sqrt((2 * np.arange(self.L_max + 1) + 1) / (4 * math.pi))
            return P * norms.reshape((-1,) + (1,) * theta.ndim)
        phi = np.zeros_like(theta) if phi is None else np.asarray(phi, float)
        return np.array([_real_sph_harm(l, m, theta, phi) for l, m in self.modes])

    def dtheta_basis_at(self, theta) -> np.ndarray:
        """Polar derivative of the zonal basis (axisymmetric grids only)."""
        theta = np.asarray(theta, float)
        if self.n > 3:
            return np.zeros((1,) + theta.shape)
        if not self.axisymmetric:
            raise UnsupportedGridError("polar derivatives need an axisymmetric grid")
        _, dP = _legendre_table(self.L_max, np.cos(theta))
        norms = np.sqrt((2 * np.arange(self.L_max + 1) + 1) / (4 * math.pi))
        return -np.sin(theta) * dP * norms.reshape((-1,) + (1,) * theta.ndim)

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "L_max": self.L_max,
            "resolution": int(len(np.unique(self.theta))),
            "axisymmetric": self.axisymmetric,
        }

    @classmethod
    def from_json(cls, data: dict) -> "AngularGrid":
        return sphere_quadrature(
            data["n"], data["L_max"], data.get("resolution"), data.get("axisymmetric", False)
        )


def sphere_quadrature(
    n: int, L_max: int, resolution: int | None = None, axisymmetric: bool = False
) -> AngularGrid:
    """Product Gauss-Legendre x trapezoid rule exact to degree 2*L_max.

    ``resolution`` is the number of polar nodes (at least L_max + 1). For
    n > 3 only constant data (L_max = 0) is supported and the grid is a single
    node carrying the whole sphere area.
    """
    c = constants(n)
    if L_max < 0:
        raise UnsupportedGridError("L_max must be nonnegative")
    if n > 3:
        if L_max != 0:
            raise UnsupportedGridError(f"only L_max = 0 is supported for n = {n}")
        return AngularGrid(
            n=n,
            L_max=0,
            theta=np.zeros(1),
            phi=np.zeros(1),
            weights=np.array([c.omega]),
            modes=((0, 0),),
            basis=np.array([[1.0 / math.sqrt(c.omega)]]),
            axisymmetric=True,
        )
    n_theta = max(L_max + 1, resolution or 0)
    x, wx = np.polynomial.legendre.leggauss(n_theta)
    # Order nodes from the north pole southwards.
    x, wx = x[::-1], wx[::-1]
    theta_rings = np.arccos(x)
    if axisymmetric:
        theta = theta_rings
        phi = np.zeros_like(theta)
        weights = 2.0 * math.pi * wx
        modes = tuple((l, 0) for l in range(L_max + 1))
    else:
        n_phi = 2 * n_theta - 1
        phis = 2.0 * math.pi * np.arange(n_phi) / n_phi
        T, F = np.meshgrid(theta_rings, phis, indexing="ij")
        theta, phi = T.ravel(), F.ravel()
        weights = np.repeat(wx, n_phi) * (2.0 * math.pi / n_phi)
        modes = tuple((l, m) for l in range(L_max + 1) for m in range(-l, l + 1))
    grid = AngularGrid(
        n=n,
        L_max=L_max,
        theta=theta,
        phi=phi,
        weights=weights,
        modes=modes,
        basis=np.zeros((0, 0)),
        axisymmetric=axisymmetric,
    )
    object.__setattr__(grid, "basis", grid.basis_at(theta, phi))
    return grid
