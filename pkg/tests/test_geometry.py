import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hconf.errors import DimensionError, DomainError, UnsupportedGridError
from hconf.geometry import (
    AngularGrid,
    BaseGeometry,
    check_asymptotic_flatness,
    constants,
    flat_exterior,
    scalar_curvature_radial,
    schwarzschild_base,
    sphere_quadrature,
    warped_product,
)


@pytest.mark.parametrize("n", [3, 4, 5, 6, 7])
def test_constants(n):
    c = constants(n)
    assert c.p == pytest.approx(2 * (n - 1) / (n - 2))
    assert c.k == pytest.approx(4 / (n - 2))
    assert c.omega == pytest.approx(2 * math.pi ** (n / 2) / math.gamma(n / 2))


def test_constants_known_values():
    assert constants(3).p == 4.0
    assert constants(3).omega == pytest.approx(4 * math.pi)
    assert constants(4).p == 3.0
    assert constants(4).omega == pytest.approx(2 * math.pi**2)


@pytest.mark.parametrize("n", [2, 8, 1])
def test_constants_rejects_dimension(n):
    with pytest.raises(DimensionError):
        constants(n)


def test_flat_geometry_closed_forms(flat3):
    assert flat3.rho(2.5) == 2.5
    assert flat3.boundary_area == pytest.approx(4 * math.pi)
    assert flat3.boundary_mean_curvature == pytest.approx(2.0)
    assert flat3.adm_mass_base == 0.0
    with pytest.raises(DomainError):
        flat3.rho(0.5)


def test_schwarzschild_mass_function_constant(schw3):
    r = np.geomspace(schw3.r0, 1e3, 50)
    m = schw3.mass_function(r)
    assert np.max(np.abs(m - 2.0)) < 1e-6
    assert schw3.adm_mass_base == pytest.approx(2.0, abs=1e-7)
    # horizon is minimal
    assert abs(schw3.boundary_mean_curvature) < 1e-5


@pytest.mark.parametrize("n", [4, 5, 7])
def test_schwarzschild_mass_higher_dimensions(n):
    b = schwarzschild_base(n, 1.0)
    assert b.adm_mass_base == pytest.approx(1.0, abs=1e-6)
    r = np.geomspace(b.r0 * 1.01, b.r0 * 50, 30)
    scale = (n - 1) * (n - 2) / b.rho(r) ** 2
    assert np.max(np.abs(scalar_curvature_radial(b, r)) / scale) < 1e-5


def test_warped_round_trip_json(schw3):
    data = json.loads(json.dumps(schw3.to_json()))
    back = BaseGeometry.from_json(data)
    r = np.geomspace(schw3.r0, 1e3, 17)
    assert np.allclose(back.rho(r), schw3.rho(r), rtol=1e-14)
    assert BaseGeometry.from_json(flat_exterior(5, 2.0).to_json()).r0 == 2.0


def test_warped_validation():
    with pytest.raises(ValueError):
        BaseGeometry("warped_product", 3, 1.0, np.linspace(1, 2, 4), np.ones(4))
    with pytest.raises(ValueError):
        warped_product(3, lambda r: -r, 1.0)
    with pytest.raises(DomainError):
        flat_exterior(3, 0.0)


def test_asymptotic_flatness_reports(schw3):
    rep = check_asymptotic_flatness(schw3)
    assert rep.passed
    assert rep.decay_exponent_estimate > 0.5
    bad = warped_product(3, lambda r: r + r**0.9, 1.0)
    assert not check_asymptotic_flatness(bad).passed
    good = warped_product(3, lambda r: r * (1 + r**-2.0), 1.0)
    rep = check_asymptotic_flatness(good)
    assert rep.passed and rep.decay_exponent_estimate == pytest.approx(2.0, abs=0.1)


def _gram(grid: AngularGrid):
    return grid.basis @ (grid.weights[:, None] * grid.basis.T)


@pytest.mark.parametrize("L", [0, 3, 8])
def test_full_grid_orthonormal(L):
    g = sphere_quadrature(3, L)
    assert len(g.modes) == (L + 1) ** 2
    assert np.allclose(_gram(g), np.eye(len(g.modes)), atol=1e-13)
    assert g.weights.sum() == pytest.approx(4 * math.pi)


@pytest.mark.parametrize("L", [0, 5, 31])
def test_axisymmetric_grid_orthonormal(L):
    g = sphere_quadrature(3, L, axisymmetric=True)
    assert np.allclose(_gram(g), np.eye(L + 1), atol=1e-12)
    assert np.all(np.diff(g.theta) > 0)


def test_high_dimension_grid_is_radial_only():
    g = sphere_quadrature(5, 0)
    assert g.size == 1 and g.weights[0] == pytest.approx(constants(5).omega)
    with pytest.raises(UnsupportedGridError):
        sphere_quadrature(4, 2)


def test_grid_json_round_trip():
    g = sphere_quadrature(3, 4, resolution=9, axisymmetric=True)
    back = AngularGrid.from_json(json.loads(json.dumps(g.to_json())))
    assert np.array_equal(back.theta, g.theta) and np.array_equal(back.weights, g.weights)


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(-1, 1), min_size=16, max_size=16))
def test_quadrature_integrates_products_exactly(coefs):
    """Products of two degree-<=3 expansions are integrated exactly on an L=3 grid."""
    g = sphere_quadrature(3, 3)
    c = np.array(coefs)
    f = c @ g.basis
    assert g.integrate(f * f) == pytest.approx(float(c @ c), abs=1e-12)


def test_dtheta_basis_matches_finite_difference():
    g = sphere_quadrature(3, 6, axisymmetric=True)
    th = np.array([0.3, 1.1, 2.5])
    h = 1e-6
    fd = (g.basis_at(th + h) - g.basis_at(th - h)) / (2 * h)
    assert np.allclose(g.dtheta_basis_at(th), fd, atol=1e-8)
