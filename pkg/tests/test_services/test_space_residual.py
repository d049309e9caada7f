import numpy as np
import pytest

from app.core.exceptions import ConfigurationError
from app.models.basis import BasisFamily, BasisSpec
from app.models.bathymetry import Bathymetry
from app.models.discretization import Discretization
from app.models.mesh import build_uniform_mesh
from app.models.swe import PhysParams, flux, source
from app.services.global_flux import global_flux
from app.services.space_residual import (
    SpaceScheme,
    assemble_space_residual,
    get_space_scheme,
    space_residual,
    wb_hs_hydrostatic_term,
)

WELL_BALANCED = [SpaceScheme.WB_HS, SpaceScheme.WB_GF]


@pytest.mark.parametrize("scheme", WELL_BALANCED, ids=lambda s: s.value)
@pytest.mark.parametrize("bathy", [Bathymetry.c0_parabola(), Bathymetry.smooth_bump()], ids=["c0", "smooth"])
def test_lake_at_rest_residual_vanishes(make_disc, lake_state, spec, scheme, bathy):
    disc = make_disc(spec, n_elem=10, bathymetry=bathy)
    residual = space_residual(scheme, disc, lake_state(disc))
    np.testing.assert_allclose(residual, 0.0, atol=1e-12)


def test_non_well_balanced_residual_at_rest(make_disc, lake_state):
    disc = make_disc(BasisSpec(BasisFamily.BERNSTEIN, 4), n_elem=10)
    residual = space_residual(SpaceScheme.NON_WB, disc, lake_state(disc))
    assert np.abs(residual[:, 1]).max() > 1e-6
    np.testing.assert_allclose(residual[:, 0], 0.0, atol=1e-14)


@pytest.mark.parametrize("scheme", list(SpaceScheme), ids=lambda s: s.value)
def test_flat_bottom_residuals_telescope_to_boundary_flux(make_disc, random_state, spec, scheme, params):
    disc = make_disc(spec, n_elem=6, bathymetry=Bathymetry.flat())
    state = random_state(disc)
    nodal = disc.to_nodal(state)
    total = space_residual(scheme, disc, state).sum(axis=0)
    expected = flux(nodal[-1], params) - flux(nodal[0], params)
    np.testing.assert_allclose(total, expected, rtol=1e-11, atol=1e-11)


@pytest.mark.parametrize("scheme", [SpaceScheme.NON_WB, SpaceScheme.WB_GF], ids=lambda s: s.value)
def test_bump_residuals_telescope_to_boundary_flux_and_source(make_disc, random_state, spec, scheme, params):
    disc = make_disc(spec, n_elem=6, bathymetry=Bathymetry.smooth_bump())
    state = random_state(disc)
    nodal = disc.to_nodal(state)
    if scheme is SpaceScheme.WB_GF:
        gflux = global_flux(disc, state)
        expected = gflux.nodal[-1] - gflux.nodal[0]
    else:
        S = disc.to_coefficients(source(disc.mesh.dof_coords, nodal, disc.bathy.slope_nodal, params))
        expected = flux(nodal[-1], params) - flux(nodal[0], params) - disc.lumped @ S
    total = space_residual(scheme, disc, state).sum(axis=0)
    np.testing.assert_allclose(total, expected, rtol=1e-11, atol=1e-11)


WAVENUMBER = 2.0 * np.pi / 25.0


def _smooth_flow(x):
    return np.column_stack([2.0 + 0.3 * np.sin(WAVENUMBER * x), 3.0 + 0.5 * np.cos(WAVENUMBER * x)])


def _weight(x):
    return 1.0 + 0.5 * np.sin(WAVENUMBER * x)


def _divergence_minus_source(x, bathy, p):
    """dF/dx - S of the smooth flow, exactly"""
    H, q = _smooth_flow(x).T
    dH = 0.3 * WAVENUMBER * np.cos(WAVENUMBER * x)
    dq = -0.5 * WAVENUMBER * np.sin(WAVENUMBER * x)
    momentum = 2.0 * q * dq / H - q * q * dH / (H * H) + p.g * H * dH + p.g * H * bathy.slope(x)
    return np.column_stack([dq, momentum])


@pytest.mark.parametrize("scheme", list(SpaceScheme), ids=lambda s: s.value)
def test_residuals_are_consistent_with_the_balance_law(make_disc, spec, scheme, params):
    bathy = Bathymetry.smooth_bump()

    # composite Gauss-Legendre over 200 cells
    points, weights = np.polynomial.legendre.leggauss(8)
    half = 25.0 / 400.0
    centers = np.linspace(half, 25.0 - half, 200)
    x = (centers[:, None] + half * points[None, :]).ravel()
    w = np.tile(half * weights, 200)
    exact = (w * _weight(x)) @ _divergence_minus_source(x, bathy, params)

    sizes = [20, 40, 80]
    errors = []
    for n_elem in sizes:
        disc = make_disc(spec, n_elem=n_elem, bathymetry=bathy)
        dofs = disc.mesh.dof_coords
        state = disc.states_from_nodal(_smooth_flow(dofs))
        psi = disc.to_coefficients(_weight(dofs))
        errors.append(np.abs(psi @ space_residual(scheme, disc, state) - exact).max())
    order = -np.polyfit(np.log(sizes), np.log(errors), 1)[0]
    assert order >= spec.degree - 0.2


def test_assemble_matches_prepared_discretization(random_state, params):
    spec = BasisSpec(BasisFamily.LAGRANGE_GAUSS_LOBATTO, 3)
    mesh = build_uniform_mesh(0.0, 25.0, 5, spec)
    bathy = Bathymetry.smooth_bump()
    disc = Discretization(mesh, bathy, params)
    state = random_state(disc)
    np.testing.assert_array_equal(
        assemble_space_residual("wbhs", mesh, spec, state, bathy, params),
        space_residual(SpaceScheme.WB_HS, disc, state),
    )


def test_assemble_rejects_mismatched_basis(params):
    mesh = build_uniform_mesh(0.0, 25.0, 4, BasisSpec(BasisFamily.BERNSTEIN, 2))
    with pytest.raises(ConfigurationError):
        assemble_space_residual(
            "wbhs", mesh, BasisSpec(BasisFamily.BERNSTEIN, 3), np.ones((mesh.n_dofs, 2)), Bathymetry.flat(), params
        )


def test_hydrostatic_term_of_linear_height(params):
    spec = BasisSpec(BasisFamily.LAGRANGE_EQUISPACED, 1)
    mesh = build_uniform_mesh(0.0, 2.0, 2, spec)
    state = np.column_stack([[1.0, 2.0, 2.5], np.zeros(3)])
    term = wb_hs_hydrostatic_term(0, spec, state, Bathymetry.flat(), params, mesh)
    np.testing.assert_allclose(term[:, 0], 0.0)
    assert term[:, 1].sum() == pytest.approx(0.5 * params.g * (2.0**2 - 1.0**2), rel=1e-13)


def test_hydrostatic_term_needs_mesh(params):
    with pytest.raises(ConfigurationError):
        wb_hs_hydrostatic_term(0, BasisSpec(BasisFamily.BERNSTEIN, 1), np.ones((3, 2)), Bathymetry.flat(), params)


def test_friction_enters_the_velocity_source(make_disc):
    spec = BasisSpec(BasisFamily.LAGRANGE_GAUSS_LOBATTO, 2)
    plain = make_disc(spec, bathymetry=Bathymetry.flat())
    rough = make_disc(spec, bathymetry=Bathymetry.flat(), p=PhysParams(n_M=0.03))
    state = np.column_stack([np.ones(plain.n_dofs), np.ones(plain.n_dofs)])
    difference = space_residual("wbhs", rough, state) - space_residual("wbhs", plain, state)
    # -int S_V phi_i = + g n^2 |q| q / H^(7/3) * C_i
    np.testing.assert_allclose(difference[:, 1], 9.81 * 0.03**2 * plain.lumped, rtol=1e-12)


def test_unknown_scheme():
    with pytest.raises(ConfigurationError):
        get_space_scheme("upwind")
    assert get_space_scheme(" WBGF ") is SpaceScheme.WB_GF
