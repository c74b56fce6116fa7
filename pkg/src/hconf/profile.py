"""The area profile alpha_C(A), its C -> infinity limit and maximizer diagnostics."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from hconf import _projection
from hconf.errors import DomainError, InfeasibleConstraintError, UnsupportedGridError
from hconf.geometry import AngularGrid, BaseGeometry, sphere_quadrature
from hconf.harmonic import BoundaryData, HarmonicFunction, harmonic_extension
from hconf.invariants import mu_maximizer_data
from hconf.minarea import (
    AREA_TIE_TOL,
    EnclosingSurface,
    _theta_difference_matrices,
    mean_curvature_conformal,
    best_sphere_radius,
    graph_local_minima,
    min_area_radial,
    outermost_enclosure,
    surface_area,
)

DEFAULT_RINGS = 24
EXCEEDANCE_TOL = 1e-2


@dataclass(frozen=True, eq=False)
class AlphaResult:
    A: float
    C: float
    value: float
    maximizer: BoundaryData
    boundary_area_achieved: float
    converged: bool
    radial_value: float = math.nan
    surface: EnclosingSurface | None = None
    counterexample_candidate: dict | None = None
    start_values: tuple[float, ...] = field(default=())

    def to_json(self) -> dict:
        return {
            "A": self.A,
            "C": self.C,
            "value": self.value,
            "radial_value": self.radial_value,
            "boundary_area_achieved": self.boundary_area_achieved,
            "converged": self.converged,
            "maximizer": self.maximizer.to_json(),
            "counterexample_candidate": self.counterexample_candidate,
        }


@dataclass(frozen=True)
class MaximizerDiagnostics:
    contact_measure: float
    contact_bound: float
    hbar_min: float
    hbar_max: float
    eta0: float
    hbar_bound: float
    hbar_off_max: float
    f_contact_deviation: float
    contact_ok: bool
    hbar_ok: bool

    def to_json(self) -> dict:
        return dict(self.__dict__)


def default_grid(rings: int = DEFAULT_RINGS) -> AngularGrid:
    return sphere_quadrature(3, rings - 1, axisymmetric=True)


def _radial_constant(base: BaseGeometry, A: float) -> float:
    return (A / base.boundary_area) ** (1.0 / base.consts.p)


def alpha_radial(base: BaseGeometry, A: float) -> float:
    """Minimal enclosing area for the constant boundary data of area A."""
    if A <= 0:
        raise DomainError("A must be positive")
    grid = sphere_quadrature(base.n, 0)
    f = BoundaryData.constant(base, grid, _radial_constant(base, A))
    return min_area_radial(base, harmonic_extension(base, f, 1.0))[0]


def _local_minima(base, u, prev: EnclosingSurface | None, seed: int):
    """Near-minimal enclosures from warm-started descents, sorted by area."""
    n_nodes = u.grid.size
    seeds = [np.full(n_nodes, base.r0), np.full(n_nodes, best_sphere_radius(base, u))]
    if prev is not None:
        seeds.append(prev.radii)
    return graph_local_minima(base, u, seeds)


def _active(found):
    best = found[0][0]
    return [S for v, S in found if v <= best * (1 + AREA_TIE_TOL)]


def _area_gradient(base: BaseGeometry, u: HarmonicFunction, S: EnclosingSurface) -> np.ndarray:
    """d |S|_{u_f} / d f_j for a fixed surface S."""
    p = base.consts.p
    grid = u.grid
    R = S.radii
    rho = np.asarray(base.rho(R), float)
    D1, _ = _theta_difference_matrices(grid.theta)
    elem = rho * np.sqrt((D1 @ R) ** 2 + rho**2)
    U = u.at_nodes(R)
    scale = grid.weights * elem * p * np.maximum(U, 0.0) ** (p - 1)
    mask = S.coincidence_mask
    grad = np.zeros(grid.size)
    grad[mask] = scale[mask]
    off = ~mask
    if np.any(off):
        K = u.node_kernel(R[off], grid.theta[off])
        grad += scale[off] @ K
    return grad


def _ascent(base, grid, f, A, C, dA, seed, max_iter, tol):
    p = base.consts.p

    def evaluate(vals, prev):
        u = harmonic_extension(base, BoundaryData(base, grid, vals), 1.0)
        found = _local_minima(base, u, prev, seed)
        return found[0][0], u, found

    val, u, found = evaluate(f, None)
    g0 = float(np.max(np.abs(_area_gradient(base, u, found[0][1]) / dA)))
    eta = 0.05 * float(np.max(f)) / max(g0, 1e-300)
    converged = False
    for _ in range(max_iter):
        if val >= A * (1 - 1e-12):
            converged = True
            break
        grads = [_area_gradient(base, u, S) for S in _active(found)]
        g = np.mean(grads, axis=0) / dA
        improved = False
        while eta > 1e-14:
            trial = _projection.saturate(_projection.project(f + eta * g, dA, p, A, C), dA, p, A, C)
            tval, tu, tfound = evaluate(trial, found[0][1])
            if tval > val:
                gain = tval - val
                f, val, u, found = trial, tval, tu, tfound
                eta *= 1.5
                improved = True
                break
            eta *= 0.5
        if not improved or gain <= tol * val:
            converged = True
            break
    return f, val, found[0][1], converged


def alpha_C(
    base: BaseGeometry,
    A: float,
    C: float,
    starts: int = 4,
    grid: AngularGrid | None = None,
    seed: int = 0,
    max_iter: int = 40,
    tol: float = 1e-9,
) -> AlphaResult:
    """Maximise the minimal enclosing area over 0 <= f <= C with int f^p dA = A.

    Axisymmetric search at n = 3. Starts: the constant data, the mass-profile
    maximizer, then seeded random smooth perturbations.
    """
    if A <= 0:
        raise DomainError("A must be positive")
    if C < 1:
        raise DomainError("C must be at least one")
    if base.n != 3:
        raise UnsupportedGridError("the area-profile search is implemented for n = 3")
    p = base.consts.p
    if C**p * base.boundary_area < A * (1 - 1e-14):
        raise InfeasibleConstraintError(f"C^p |Sigma| = {C**p * base.boundary_area} < A = {A}")
    grid = grid or default_grid()
    if not grid.axisymmetric:
        raise UnsupportedGridError("search space is axisymmetric data")
    dA = grid.weights * base.boundary_area_element
    rng = np.random.default_rng(seed)
    radial_value = alpha_radial(base, A)

    c_rad = _radial_constant(base, A)
    inits = [np.full(grid.size, c_rad), mu_maximizer_data(base, A, grid).values]
    x = np.cos(grid.theta)
    while len(inits) < starts:
        coef = rng.normal(scale=0.3, size=5)
        bump = np.polynomial.legendre.legval(x, np.concatenate([[0.0], coef]))
        inits.append(c_rad * np.exp(bump))
    inits = inits[: max(starts, 1)]

    best = None
    values = []
    for f in inits:
        f = _projection.saturate(np.clip(f, 0.0, C), dA, p, A, C)
        f, val, S, conv = _ascent(base, grid, f, A, C, dA, seed, max_iter, tol)
        values.append(val)
        if best is None or val > best[1]:
            best = (f, val, S, conv)
    f, val, S, best_conv = best
    data = BoundaryData(base, grid, f)
    record = None
    if val > radial_value * (1 + EXCEEDANCE_TOL):
        record = {
            "kind": "conjecture-counterexample candidate",
            "A": A,
            "C": C,
            "value": val,
            "radial_value": radial_value,
            "boundary_data": [float(v) for v in f],
        }
    return AlphaResult(
        A=A,
        C=C,
        value=val,
        maximizer=data,
        boundary_area_achieved=data.area,
        converged=best_conv,
        radial_value=radial_value,
        surface=S,
        counterexample_candidate=record,
        start_values=tuple(values),
    )


class AlphaLimit(NamedTuple):
    value: float
    trail: list
    converged: bool


def alpha_limit(base: BaseGeometry, A: float, C_schedule, rel_tol: float = 1e-3, **kwargs) -> AlphaLimit:
    """alpha_C along an increasing C schedule until successive values settle."""
    sched = [float(c) for c in C_schedule]
    if not sched or any(b <= a for a, b in zip(sched, sched[1:])):
        raise DomainError("C schedule must be nonempty and increasing")
    need = max(1.0, _radial_constant(base, A))
    if sched[0] < need * (1 - 1e-12):
        raise DomainError(f"first C must be at least {need}")
    trail = []
    for C in sched:
        trail.append(alpha_C(base, A, C, **kwargs))
        if len(trail) > 1 and abs(trail[-1].value - trail[-2].value) <= rel_tol * abs(trail[-2].value):
            return AlphaLimit(trail[-1].value, trail, True)
    return AlphaLimit(trail[-1].value, trail, False)


@dataclass(frozen=True)
class PropertyReport:
    A_grid: tuple[float, ...]
    values: tuple[float, ...]
    checks: dict

    @property
    def all_pass(self) -> bool:
        return all(self.checks.values())


def profile_properties(
    base: BaseGeometry,
    A_grid,
    C: float,
    values=None,
    lipschitz_tol: float = 1e-3,
    rel_tol: float = 1e-6,
    **kwargs,
) -> PropertyReport:
    """Monotonicity, the bound alpha <= A, ratio monotonicity and Lipschitz checks.

    ``values`` skips the optimisation and checks the given profile instead.
    """
    A = np.asarray([float(a) for a in A_grid])
    if np.any(np.diff(A) <= 0):
        raise DomainError("A grid must be increasing")
    if values is None:
        values = [alpha_C(base, a, C, **kwargs).value for a in A]
    al = np.asarray(values, float)
    ratio = al / A
    strict = al < A * (1 - rel_tol)
    first = int(np.argmax(strict)) if np.any(strict) else len(A)
    checks = {
        "nondecreasing": bool(np.all(np.diff(al) >= -rel_tol * al[:-1])),
        "bounded_by_A": bool(np.all(al <= A * (1 + rel_tol))),
        "ratio_nonincreasing": bool(np.all(np.diff(ratio) <= rel_tol)),
        "lipschitz": bool(np.all(np.abs(np.diff(al)) / np.diff(A) <= 1 + lipschitz_tol)),
        "strict_persists": bool(np.all(strict[first:])),
    }
    return PropertyReport(tuple(A), tuple(al), checks)


def maximizer_diagnostics(base: BaseGeometry, result: AlphaResult) -> MaximizerDiagnostics:
    """Contact set measure and conformal mean curvature of the outermost enclosure."""
    n = base.n
    f = result.maximizer
    u = harmonic_extension(base, f, 1.0)
    if u.is_radial() and np.ptp(f.values) <= 1e-12 * np.max(f.values):
        _, S_rad = min_area_radial(base, u)
        enclosure = S_rad
    else:
        found = _local_minima(base, u, result.surface, 0)
        enclosure = outermost_enclosure(_active(found), u, base)
    mask = enclosure.coincidence_mask
    grid = enclosure.grid
    contact = float(np.sum(grid.weights[mask])) * base.boundary_area_element
    C = result.C
    bound = result.A * C ** (-base.consts.p)
    eta0 = abs(base.boundary_mean_curvature)
    hbar_bound = eta0 * C ** (-2.0 / (n - 2))

    def safe_h(j):
        try:
            return mean_curvature_conformal(base, u, enclosure, j)
        except DomainError:
            return None

    on = [h for j in np.flatnonzero(mask) if (h := safe_h(j)) is not None]
    off = [h for j in np.flatnonzero(~mask) if (h := safe_h(j)) is not None]
    hmin = min(on) if on else math.nan
    hmax = max(on) if on else math.nan
    dev = float(np.max(np.abs(f.values[mask] - C))) if np.any(mask) else 0.0
    return MaximizerDiagnostics(
        contact_measure=contact,
        contact_bound=bound,
        hbar_min=hmin,
        hbar_max=hmax,
        eta0=eta0,
        hbar_bound=hbar_bound,
        hbar_off_max=max((abs(h) for h in off), default=0.0),
        f_contact_deviation=dev,
        contact_ok=contact <= bound * (1 + 1e-9),
        hbar_ok=(not on) or (hmin >= -1e-6 and hmax <= hbar_bound * (1 + 1e-6)),
    )
