"""Conditional consequence checks relating mass, area profile and invariants.

Each report compares two computed quantities. None of them asserts a Penrose
type inequality for the limiting metrics; a violation is returned as a
finding, never raised.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from hconf.errors import DomainError
from hconf.geometry import BaseGeometry, constants, scalar_curvature_radial
from hconf.invariants import invariant_set, mu_formula

MASS_TOL = 1e-6
LABEL = "conditional consequence check"


@dataclass(frozen=True)
class InequalityReport:
    name: str
    lhs: float
    rhs: float
    satisfied: bool
    margin: float
    hypotheses_note: str
    applicable: bool = True

    def to_json(self) -> dict:
        return dict(self.__dict__)

    @classmethod
    def from_json(cls, data: dict) -> "InequalityReport":
        return cls(**data)


def scalar_curvature_note(base: BaseGeometry, tol: float = 1e-8, samples: int = 400) -> str:
    """States whether R >= -tol held on sampled radii; never empty."""
    if base.is_flat:
        return f"{LABEL}; nonnegative scalar curvature verified (flat base)"
    r = np.geomspace(base.r0, base.r_max, samples)
    R = np.asarray(scalar_curvature_radial(base, r))
    worst = float(np.min(R))
    if worst >= -tol:
        return f"{LABEL}; nonnegative scalar curvature verified on {samples} radii (min {worst:.3e})"
    return f"{LABEL}; scalar curvature NOT nonnegative on sampled range (min {worst:.3e})"


def _report(name, lhs, rhs, note, applicable=True) -> InequalityReport:
    margin = float(lhs - rhs)
    return InequalityReport(name, float(lhs), float(rhs), bool(margin >= -MASS_TOL), margin, note, applicable)


def penrose_rhs(n: int, area: float) -> float:
    """(1/2) (area / omega)^{(n-2)/(n-1)}."""
    if area <= 0:
        raise DomainError("area must be positive")
    c = constants(n)
    return 0.5 * (area / c.omega) ** ((n - 2) / (n - 1.0))


def check_mu_alpha(base: BaseGeometry, A: float, alpha_value: float, strict_tol: float = 1e-9) -> InequalityReport:
    """mu(A) against the Penrose right side at area alpha(A).

    Applicable only when alpha(A) < A; otherwise the report is marked
    inapplicable and carries the values for reference.
    """
    note = scalar_curvature_note(base)
    lhs = mu_formula(invariant_set(base), A)
    rhs = penrose_rhs(base.n, alpha_value)
    if alpha_value >= A * (1 - strict_tol):
        return InequalityReport(
            "mu_vs_alpha", lhs, rhs, True, lhs - rhs, note + "; inapplicable: alpha(A) = A", False
        )
    return _report("mu_vs_alpha", lhs, rhs, note)


def check_I_sum(base: BaseGeometry) -> InequalityReport:
    inv = invariant_set(base)
    return _report("I1_plus_I2", inv.I1 + inv.I2, 0.0, scalar_curvature_note(base))


@dataclass(frozen=True)
class ZASMass:
    zas_mass: float
    adm_mass_phi: float

    def to_json(self) -> dict:
        return dict(self.__dict__)


def zas_mass(base: BaseGeometry) -> ZASMass:
    """Mass of the zero area singularity of phi^k g, and the ADM mass of phi^k g."""
    inv = invariant_set(base)
    return ZASMass(zas_mass=-inv.I2, adm_mass_phi=inv.I1)


def check_zas_estimate(base: BaseGeometry) -> InequalityReport:
    """m_ADM(phi^k g) >= m_ZAS; its margin equals I1 + I2."""
    z = zas_mass(base)
    return _report("zas_mass_estimate", z.adm_mass_phi, z.zas_mass, scalar_curvature_note(base))
