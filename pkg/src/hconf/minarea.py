"""Areas of enclosing surfaces and the minimal enclosing area.

Surfaces are radial graphs r = R(theta) sampled at the nodes of an angular
grid. Nodes with R - r0 <= SNAP_TOL * r0 lie on Sigma: there the conformal
factor is the boundary data f, elsewhere it is the harmonic extension u.
General graphs are supported for n = 3 on axisymmetric grids; spheres in every
dimension.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize, minimize_scalar

from hconf.errors import DomainError, SolverError, UnsupportedGridError
from hconf.geometry import AngularGrid, BaseGeometry, constants
from hconf.harmonic import HarmonicFunction

SNAP_TOL = 1e-9
SCAN_FACTOR = 1e3
SCAN_POINTS = 2001
AREA_TIE_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class EnclosingSurface:
    grid: AngularGrid
    radii: np.ndarray
    r0: float
    solver_message: str = ""
    coincidence_mask: np.ndarray = field(init=False)

    def __post_init__(self):
        R = np.array(np.broadcast_to(np.asarray(self.radii, float), (self.grid.size,)))
        if np.any(R < self.r0 * (1 - 1e-12)):
            raise DomainError("enclosing surface dips inside the boundary")
        mask = R - self.r0 <= SNAP_TOL * self.r0
        R[mask] = self.r0
        R.setflags(write=False)
        mask.setflags(write=False)
        object.__setattr__(self, "radii", R)
        object.__setattr__(self, "coincidence_mask", mask)

    @classmethod
    def sphere(cls, grid: AngularGrid, r0: float, r: float) -> "EnclosingSurface":
        return cls(grid, np.full(grid.size, float(r)), r0)

    @property
    def is_sphere(self) -> bool:
        return bool(np.ptp(self.radii) == 0.0)

    @property
    def is_sigma(self) -> bool:
        return bool(np.all(self.coincidence_mask))

    def to_json(self) -> dict:
        return {"radii": [float(x) for x in self.radii], "r0": self.r0, "grid_ref": self.grid.to_json()}

    @classmethod
    def from_json(cls, data: dict) -> "EnclosingSurface":
        return cls(AngularGrid.from_json(data["grid_ref"]), np.asarray(data["radii"], float), float(data["r0"]))


@dataclass(frozen=True)
class AreaBreakdown:
    area_on_sigma: float
    area_off_sigma: float
    total: float

    def to_json(self) -> dict:
        return {"on_sigma": self.area_on_sigma, "off_sigma": self.area_off_sigma, "total": self.total}


def _theta_difference_matrices(theta: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Three-point d/dtheta and d^2/dtheta^2 on nonuniform polar nodes.

    Graphs are even about both poles, so ghost nodes are mirror images.
    """
    N = theta.size
    D1 = np.zeros((N, N))
    D2 = np.zeros((N, N))
    if N == 1:
        return D1, D2
    for i in range(N):
        im = i - 1 if i > 0 else 0
        ip = i + 1 if i < N - 1 else N - 1
        tm = theta[i - 1] if i > 0 else -theta[0]
        tp = theta[i + 1] if i < N - 1 else 2.0 * math.pi - theta[-1]
        h1 = theta[i] - tm
        h2 = tp - theta[i]
        D1[i, im] += -h2 / (h1 * (h1 + h2))
        D1[i, i] += (h2 - h1) / (h1 * h2)
        D1[i, ip] += h1 / (h2 * (h1 + h2))
        D2[i, im] += 2.0 / (h1 * (h1 + h2))
        D2[i, i] += -2.0 / (h1 * h2)
        D2[i, ip] += 2.0 / (h2 * (h1 + h2))
    return D1, D2


def _u_at(u: HarmonicFunction, S: EnclosingSurface) -> np.ndarray:
    if S.grid is u.grid:
        return u.at_nodes(S.radii)
    vals = u.value(S.radii, S.grid.theta, S.grid.phi)
    if np.any(S.coincidence_mask):
        raise UnsupportedGridError("surface touching Sigma must share the boundary-data grid")
    return vals


def _check_graph_support(base: BaseGeometry, S: EnclosingSurface):
    if S.is_sphere:
        return
    if base.n != 3 or not S.grid.axisymmetric:
        raise UnsupportedGridError("non-spherical surfaces need n = 3 and an axisymmetric grid")


def surface_area(base: BaseGeometry, u: HarmonicFunction, S: EnclosingSurface) -> AreaBreakdown:
    """Area of S in u^k g, split into the parts on and off Sigma."""
    _check_graph_support(base, S)
    p = base.consts.p
    U = _u_at(u, S)
    if np.any(U < 0):
        raise DomainError("conformal factor negative on the surface")
    rho = np.asarray(base.rho(S.radii), float)
    if S.is_sphere:
        elem = rho ** (base.n - 1)
    else:
        D1, _ = _theta_difference_matrices(S.grid.theta)
        dR = D1 @ S.radii
        elem = rho * np.sqrt(dR**2 + rho**2)
    contrib = S.grid.weights * elem * U**p
    on = float(np.sum(contrib[S.coincidence_mask]))
    off = float(np.sum(contrib[~S.coincidence_mask]))
    return AreaBreakdown(on, off, on + off)


def scan_limit(base: BaseGeometry) -> float:
    return min(SCAN_FACTOR * base.r0, base.r_max)


def _radial_area_fn(base: BaseGeometry, u: HarmonicFunction):
    n = base.n
    omega = constants(n).omega
    p = base.consts.p
    f_area = float(np.dot(u.grid.weights, u.boundary_data.values**p)) * base.boundary_area_element

    def area(r):
        r = np.asarray(r, float)
        vals = u.value(r, np.zeros_like(r)) ** p * omega * np.asarray(base.rho(r)) ** (n - 1)
        return np.where(r <= base.r0, f_area, vals)

    return area


def min_area_radial(base: BaseGeometry, u: HarmonicFunction) -> tuple[float, EnclosingSurface]:
    """Minimal area among coordinate spheres; outermost sphere on ties."""
    if not u.is_radial():
        raise UnsupportedGridError("radial scan needs radial data")
    area = _radial_area_fn(base, u)
    r0 = base.r0
    r_hi = scan_limit(base)
    rs = r0 * (r_hi / r0) ** np.linspace(0.0, 1.0, SCAN_POINTS)
    rs[0] = r0
    vals = area(rs)
    cands = []
    for i in range(len(rs)):
        left = vals[i - 1] if i > 0 else math.inf
        right = vals[i + 1] if i < len(rs) - 1 else math.inf
        if vals[i] <= left and vals[i] <= right:
            if i == 0 or i == len(rs) - 1:
                cands.append((float(vals[i]), float(rs[i])))
                if i == 0:
                    continue
            lo, hi = rs[max(i - 1, 0)], rs[min(i + 1, len(rs) - 1)]
            res = minimize_scalar(
                lambda r: float(area(r)), bounds=(lo, hi), method="bounded", options={"xatol": 1e-13 * hi}
            )
            cands.append(min((float(res.fun), float(res.x)), (float(vals[i]), float(rs[i]))))
    best = min(v for v, _ in cands)
    r_star = max(r for v, r in cands if v <= best * (1 + AREA_TIE_TOL))
    return best, EnclosingSurface.sphere(u.grid, r0, r_star)


def _graph_objective(base: BaseGeometry, u: HarmonicFunction, D1: np.ndarray):
    p = base.consts.p
    w = u.grid.weights
    theta = u.grid.theta
    r0 = base.r0
    f = u.boundary_data.values

    def fun(R):
        U, Ur, _ = u.gradient_polar(R, theta)
        on = R <= r0
        U = np.where(on, f, U)
        rho, drho, _ = base.rho_derivatives(R)
        dR = D1 @ R
        S = np.sqrt(dR**2 + rho**2)
        Up = U**p
        total = float(np.dot(w, Up * rho * S))
        dF_dR = w * (p * U ** (p - 1) * Ur * rho * S + Up * drho * S + Up * rho * rho * drho / S)
        dF_ddR = w * Up * rho * dR / S
        return total, dF_dR + D1.T @ dF_ddR

    return fun


def _local_graph_descent(base, u, R_init, D1, upper):
    fun = _graph_objective(base, u, D1)
    res = minimize(
        fun,
        np.clip(R_init, base.r0, upper),
        jac=True,
        method="L-BFGS-B",
        bounds=[(base.r0, upper)] * R_init.size,
        options={"maxiter": 20000, "ftol": 1e-15, "gtol": 1e-12, "maxcor": 30},
    )
    return res


def best_sphere_radius(base: BaseGeometry, u: HarmonicFunction, points: int = 160) -> float:
    """Radius of the least-area coordinate sphere on a geometric scan."""
    D1, _ = _theta_difference_matrices(u.grid.theta)
    fun = _graph_objective(base, u, D1)
    rs = base.r0 * (scan_limit(base) / base.r0) ** np.linspace(0.0, 1.0, points)
    vals = [fun(np.full(u.grid.size, r))[0] for r in rs]
    return float(rs[int(np.argmin(vals))])


def graph_local_minima(
    base: BaseGeometry, u: HarmonicFunction, seeds: list[np.ndarray]
) -> list[tuple[float, EnclosingSurface]]:
    """Local descent from each seed; results sorted by area, outermost first on ties."""
    if base.n != 3 or not u.grid.axisymmetric:
        raise UnsupportedGridError("graph solver needs n = 3 and axisymmetric data")
    D1, _ = _theta_difference_matrices(u.grid.theta)
    upper = scan_limit(base)
    out = []
    for R0 in seeds:
        res = _local_graph_descent(base, u, np.asarray(R0, float), D1, upper)
        if not np.isfinite(res.fun):
            continue
        S = EnclosingSurface(u.grid, res.x, base.r0, solver_message=str(res.message))
        out.append((surface_area(base, u, S).total, S))
    if not out:
        raise SolverError("graph descent diverged from every start")
    best = min(v for v, _ in out)
    tied = lambda v: v <= best * (1 + AREA_TIE_TOL)
    out.sort(key=lambda t: (0 if tied(t[0]) else 1, -float(np.mean(t[1].radii)) if tied(t[0]) else t[0]))
    return out


def min_area_graph(
    base: BaseGeometry,
    u: HarmonicFunction,
    init: EnclosingSurface | None = None,
    starts: int = 4,
    seed: int = 0,
) -> tuple[float, EnclosingSurface]:
    """Minimise surface area over axisymmetric graphs R(theta) >= r0 (n = 3).

    Uses bound-constrained quasi-Newton descent with exact gradients. Starts:
    init, Sigma, the best coordinate sphere and a large sphere, then random
    smooth perturbations of the best sphere.
    """
    if base.n != 3 or not u.grid.axisymmetric:
        raise UnsupportedGridError("graph solver needs n = 3 and axisymmetric data")
    grid = u.grid
    r0 = base.r0
    r_best = best_sphere_radius(base, u)
    seeds = []
    if init is not None:
        seeds.append(np.asarray(init.radii, float))
    seeds += [np.full(grid.size, r0), np.full(grid.size, r_best), np.full(grid.size, max(4 * r_best, 10 * r0))]
    rng = np.random.default_rng(seed)
    x = np.cos(grid.theta)
    while len(seeds) < starts:
        coef = rng.normal(scale=0.1, size=4)
        bump = np.polynomial.legendre.legval(x, np.concatenate([[0.0], coef]))
        seeds.append(r_best * (1.0 + bump))
    seeds = seeds[: max(starts, 1 if init is None else 2)]
    return graph_local_minima(base, u, seeds)[0]


def outermost_enclosure(
    candidates: list[EnclosingSurface],
    u: HarmonicFunction,
    base: BaseGeometry,
    tol: float = 1e-6,
) -> EnclosingSurface:
    """Node-wise maximum of near-minimal candidates, locally re-minimised."""
    if not candidates:
        raise ValueError("no candidates")
    if len(candidates) == 1:
        return candidates[0]
    grid = candidates[0].grid
    areas = [surface_area(base, u, S).total for S in candidates]
    a_min = min(areas)
    R = np.max(np.stack([S.radii for S in candidates]), axis=0)
    if all(S.is_sphere for S in candidates):
        out = EnclosingSurface(grid, R, base.r0)
    else:
        D1, _ = _theta_difference_matrices(grid.theta)
        res = _local_graph_descent(base, u, R, D1, scan_limit(base))
        out = EnclosingSurface(grid, res.x, base.r0, solver_message=str(res.message))
    a_out = surface_area(base, u, out).total
    if a_out > a_min * (1 + tol):
        raise SolverError(f"ambiguous outermost enclosure: area {a_out} exceeds minimum {a_min}")
    return out


def mean_curvature_conformal(base: BaseGeometry, u: HarmonicFunction, S: EnclosingSurface, node: int) -> float:
    """Mean curvature of S at a node in u^k g (outward normal)."""
    n = base.n
    R = S.radii
    mask = S.coincidence_mask
    if not S.is_sphere:
        _check_graph_support(base, S)
        nbrs = [j for j in (node - 1, node + 1) if 0 <= j < R.size]
        if any(mask[j] != mask[node] for j in nbrs):
            raise DomainError(f"mean curvature undefined at contact-edge node {node}")
    Ri = float(R[node])
    th = float(S.grid.theta[node])
    ph = float(S.grid.phi[node])
    rho, drho, _ = (float(v) for v in base.rho_derivatives(Ri))
    if mask[node] and S.grid is u.grid:
        U = float(u.boundary_data.values[node])
    else:
        U = float(u.value(Ri, th, ph))
    if S.is_sphere:
        H = (n - 1) * drho / rho
        dnu_u = float(u.radial_derivative(Ri, th, ph))
    else:
        D1, D2 = _theta_difference_matrices(S.grid.theta)
        d1 = float(D1[node] @ R)
        d2 = float(D2[node] @ R)
        N = math.sqrt(1.0 + d1**2 / rho**2)
        H = (
            2.0 * drho / (rho * N)
            + d1**2 * drho / (N**3 * rho**3)
            - (d1 / (math.tan(th) * N) + d2 / N**3) / rho**2
        )
        _, ur, uth = u.gradient_polar(Ri, th)
        dnu_u = (float(ur) - d1 * float(uth) / rho**2) / N
    if U <= 0:
        raise DomainError("conformal factor vanishes at the node")
    return U ** (-2.0 / (n - 2)) * H + (2.0 * (n - 1) / (n - 2)) * U ** (-n / (n - 2.0)) * dnu_u


def schwarzschild_min_area_oracle(n: int, A: float) -> float:
    """Minimal enclosing area of the radial class member with boundary area A."""
    if A <= 0:
        raise DomainError("A must be positive")
    c = constants(n)
    if A <= 2.0**c.p * c.omega:
        return float(A)
    return float(((A / c.omega) ** (1.0 / c.p) - 1.0) ** ((n - 1) / (n - 2)) * 2.0**c.p * c.omega)
