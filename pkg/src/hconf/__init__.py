"""Invariants of the harmonic conformal class of an asymptotically flat exterior.

Capacity, ADM mass, the numerical invariants I1 and I2, the mass profile and the
area profile, computed with exterior harmonic-function solvers and constrained
optimization over boundary data.
"""

from hconf.geometry import (
    AFReport,
    AngularGrid,
    BaseGeometry,
    Constants,
    check_asymptotic_flatness,
    constants,
    flat_exterior,
    schwarzschild_base,
    scalar_curvature_radial,
    sphere_quadrature,
    warped_product,
)
from hconf.harmonic import (
    BoundaryData,
    HarmonicFunction,
    ModeSolution,
    boundary_density_V,
    capacity,
    conformal_quotient,
    evaluate,
    expansion_coefficient,
    harmonic_extension,
    solve_radial_mode,
)
from hconf.invariants import (
    InvariantSet,
    MuResult,
    adm_mass,
    invariant_I1,
    invariant_I2,
    invariant_set,
    mu_direct,
    mu_formula,
    mu_lower_demo,
    mu_maximizer_data,
    representative_invariants,
)
from hconf.minarea import (
    AreaBreakdown,
    EnclosingSurface,
    mean_curvature_conformal,
    min_area_graph,
    min_area_radial,
    outermost_enclosure,
    schwarzschild_min_area_oracle,
    surface_area,
)
from hconf.profile import (
    AlphaResult,
    MaximizerDiagnostics,
    alpha_C,
    alpha_limit,
    alpha_radial,
    maximizer_diagnostics,
    profile_properties,
)
from hconf.masschecks import (
    InequalityReport,
    check_I_sum,
    check_mu_alpha,
    check_zas_estimate,
    penrose_rhs,
    zas_mass,
)

__version__ = "0.1.0"
