import numpy as np
import pytest
import sympy as sp

from app.core.exceptions import ConfigurationError, InputDomainError, StateError, StepFailureError
from app.models.basis import BasisFamily, BasisSpec
from app.models.bathymetry import Bathymetry
from app.models.mesh import build_uniform_mesh
from app.services.dec_integrator import (
    BoundaryCondition,
    DeCConfig,
    DeCIntegrator,
    DeCVariant,
    apply_strong_bc,
    bdec_step,
    bdecu_step,
    compute_dt,
    theta_coefficients,
)
from app.services.simulation import SchemeConfig, Simulation

# PGL mass is diagonal, so with G(c) = C c one step integrates du/dt = -u
PGL2 = BasisSpec(BasisFamily.LAGRANGE_GAUSS_LOBATTO, 2)


def _sympy_theta(M):
    t = sp.Symbol("t")
    nodes = [sp.Rational(k, M) for k in range(M + 1)]
    table = np.zeros((M + 1, M + 1))
    for ell in range(M + 1):
        psi = sp.prod([(t - nodes[k]) / (nodes[ell] - nodes[k]) for k in range(M + 1) if k != ell])
        for m in range(1, M + 1):
            table[m, ell] = float(sp.integrate(psi, (t, 0, nodes[m])))
    return table


@pytest.fixture
def mesh():
    return build_uniform_mesh(0.0, 4.0, 4, PGL2)


def _decay(integrator):
    return lambda c: integrator.lumped[:, None] * c


def _integrate(config, mesh, T, n_steps):
    integrator = DeCIntegrator(config, mesh)
    state = np.ones((mesh.n_dofs, 2))
    dt = T / n_steps
    for _ in range(n_steps):
        state = integrator.step(state, dt, _decay(integrator))
    return state


class TestThetaTable:
    @pytest.mark.parametrize("M", range(1, 7))
    def test_matches_exact_integrals(self, M):
        np.testing.assert_allclose(theta_coefficients(M).theta, _sympy_theta(M), rtol=1e-12, atol=1e-14)

    def test_two_subintervals(self):
        theta = theta_coefficients(2).theta
        np.testing.assert_allclose(theta[1], [5 / 24, 1 / 3, -1 / 24], rtol=1e-13)
        np.testing.assert_allclose(theta[2], [1 / 6, 2 / 3, 1 / 6], rtol=1e-13)
        np.testing.assert_array_equal(theta[0], 0.0)

    def test_rows_sum_to_subtimenode(self):
        table = theta_coefficients(4)
        np.testing.assert_allclose(table.beta, table.nodes, atol=1e-14)

    @pytest.mark.parametrize("M", [0, 7])
    def test_out_of_range(self, M):
        with pytest.raises(InputDomainError):
            theta_coefficients(M)


class TestScalarModel:
    def test_one_iteration_is_forward_euler(self, mesh):
        integrator = DeCIntegrator(DeCConfig(M=1, P=1), mesh)
        out = integrator.step(np.full((mesh.n_dofs, 2), 2.0), 0.1, _decay(integrator))
        np.testing.assert_allclose(out, 2.0 * 0.9, rtol=1e-14)

    def test_second_order_step_is_taylor_polynomial(self, mesh):
        integrator = DeCIntegrator(DeCConfig(M=1), mesh)
        dt = 0.2
        out = integrator.step(np.ones((mesh.n_dofs, 2)), dt, _decay(integrator))
        np.testing.assert_allclose(out, 1.0 - dt + dt**2 / 2, rtol=1e-14)

    @pytest.mark.parametrize("variant", list(DeCVariant))
    def test_zero_residual_leaves_state_unchanged(self, mesh, variant, rng):
        integrator = DeCIntegrator(DeCConfig(M=4, variant=variant), mesh)
        state = np.column_stack([rng.uniform(1.0, 2.0, mesh.n_dofs), rng.normal(size=mesh.n_dofs)])
        out = integrator.step(state, 0.5, lambda c: np.zeros_like(c))
        np.testing.assert_array_equal(out, state)

    @pytest.mark.parametrize("variant", list(DeCVariant))
    @pytest.mark.parametrize("M", [2, 3])
    def test_convergence_order(self, mesh, variant, M):
        config = DeCConfig(M=M, variant=variant)
        errors = [np.abs(_integrate(config, mesh, 1.0, n)[0, 0] - np.exp(-1.0)) for n in (8, 16, 32)]
        orders = np.log2(np.array(errors[:-1]) / np.array(errors[1:]))
        assert np.all(orders > config.order - 0.5)

    def test_step_wrappers_force_the_variant(self, mesh):
        config = DeCConfig(M=3, variant=DeCVariant.BDECU)
        integrator = DeCIntegrator(DeCConfig(M=3), mesh)
        state = np.ones((mesh.n_dofs, 2))
        plain = bdec_step(state, 0.1, _decay(integrator), config, PGL2, mesh)
        np.testing.assert_array_equal(plain, integrator.step(state, 0.1, _decay(integrator)))
        updated = bdecu_step(state, 0.1, _decay(integrator), config, PGL2, mesh)
        np.testing.assert_allclose(updated, np.exp(-0.1), rtol=1e-5)


# Supercritical inflow over the smooth bump with a height pulse; PGL keeps the
# mass diagonal so only the time error is measured
SW_DT = 2.5e-3
SW_STEPS = (16, 32, 64)


def _shallow_water(M, variant=DeCVariant.BDEC):
    mesh = build_uniform_mesh(0.0, 25.0, 50, PGL2)
    bc = BoundaryCondition(left_H=2.0, left_q=24.0)
    return Simulation(mesh, Bathymetry.smooth_bump(), SchemeConfig(), DeCConfig(M=M, variant=variant), bc)


def _march(sim, n_steps):
    x = sim.mesh.dof_coords
    nodal = np.column_stack([2.0 + 0.3 * np.exp(-((x - 8.0) ** 2)), np.full_like(x, 24.0)])
    state = sim.disc.to_coefficients(nodal)
    dt = SW_DT * SW_STEPS[0] / n_steps
    for k in range(n_steps):
        state = sim.integrator.step(state, dt, sim.residual, k, k * dt)
    return state


@pytest.fixture(scope="module")
def shallow_water_reference():
    return _march(_shallow_water(3), 32 * SW_STEPS[0])


class TestShallowWaterOrder:
    @pytest.mark.parametrize("variant", list(DeCVariant))
    @pytest.mark.parametrize("M", [1, 2, 3])
    def test_temporal_order(self, shallow_water_reference, variant, M):
        sim = _shallow_water(M, variant)
        errors = [np.max(np.abs(_march(sim, n) - shallow_water_reference)) for n in SW_STEPS]
        dts = SW_DT * SW_STEPS[0] / np.array(SW_STEPS)
        order = np.polyfit(np.log(dts), np.log(errors), 1)[0]
        assert abs(order - (M + 1)) <= 0.3


class TestFailures:
    def test_dry_state_raises_step_failure(self, mesh):
        integrator = DeCIntegrator(DeCConfig(M=2), mesh)
        with pytest.raises(StepFailureError) as info:
            integrator.step(np.ones((mesh.n_dofs, 2)), 1.0, lambda c: 100.0 * integrator.lumped[:, None])
        assert info.value.details["H"] < 0
        assert "x" in info.value.details

    def test_state_error_in_provider_becomes_step_failure(self, mesh):
        def provider(c):
            raise StateError("Dry state", details={"index": 3})

        integrator = DeCIntegrator(DeCConfig(M=2), mesh)
        with pytest.raises(StepFailureError) as info:
            integrator.step(np.ones((mesh.n_dofs, 2)), 0.1, provider, step_index=7, time=1.5)
        assert info.value.details["step"] == 7
        assert info.value.details["index"] == 3

    def test_wrappers_check_the_basis(self, mesh):
        with pytest.raises(ConfigurationError):
            bdec_step(np.ones((mesh.n_dofs, 2)), 0.1, np.zeros_like, DeCConfig(M=2), BasisSpec(BasisFamily.BERNSTEIN, 2), mesh)


class TestBoundaryConditions:
    def test_strong_values_are_imposed(self, mesh):
        bc = BoundaryCondition(left_q=4.42, right_H=2.0)
        out = apply_strong_bc(np.ones((mesh.n_dofs, 2)), bc)
        assert out[0, 1] == 4.42 and out[0, 0] == 1.0
        assert out[-1, 0] == 2.0 and out[-1, 1] == 1.0
        assert bc.describe() == "q(x_L)=4.42, H(x_R)=2"

    def test_boundary_values_survive_the_step(self, mesh):
        bc = BoundaryCondition(left_H=1.0, left_q=0.5)
        integrator = DeCIntegrator(DeCConfig(M=2), mesh, bc)
        out = integrator.step(np.ones((mesh.n_dofs, 2)), 0.1, _decay(integrator))
        np.testing.assert_array_equal(out[0], [1.0, 0.5])
        assert out[-1, 0] < 1.0

    def test_no_condition(self):
        assert BoundaryCondition().is_empty
        assert BoundaryCondition().describe() == "none"
        np.testing.assert_array_equal(apply_strong_bc(np.ones((3, 2)), None), 1.0)

    def test_non_positive_height(self):
        with pytest.raises(ConfigurationError):
            BoundaryCondition(right_H=0.0)


class TestTimeStep:
    @pytest.mark.parametrize("family", list(BasisFamily))
    def test_lake_at_rest_time_step(self, family, params):
        spec = BasisSpec(family, 2)
        mesh = build_uniform_mesh(0.0, 5.0, 5, spec)
        state = np.column_stack([np.ones(mesh.n_dofs), np.zeros(mesh.n_dofs)])
        assert compute_dt(0.1, mesh, state, params) == pytest.approx(0.1 / np.sqrt(params.g), rel=1e-13)

    def test_fastest_element_controls_dt(self, params):
        spec = BasisSpec(BasisFamily.LAGRANGE_EQUISPACED, 1)
        mesh = build_uniform_mesh(0.0, 3.0, 3, spec)
        state = np.column_stack([np.ones(4), [0.0, 0.0, 0.0, 3.0]])
        assert compute_dt(1.0, mesh, state, params) == pytest.approx(1.0 / (3.0 + np.sqrt(params.g)))

    def test_dry_state(self, params):
        mesh = build_uniform_mesh(0.0, 3.0, 3, BasisSpec(BasisFamily.LAGRANGE_EQUISPACED, 1))
        with pytest.raises(StateError):
            compute_dt(0.1, mesh, np.array([[1.0, 0.0], [0.0, 0.0], [1.0, 0.0], [1.0, 0.0]]), params)


class TestConfig:
    def test_defaults(self):
        config = DeCConfig(M=3)
        assert config.iterations == 4
        assert config.order == 4
        assert DeCConfig(M=3, P=2).order == 2
        assert DeCConfig(M=2, variant="bdecu").variant is DeCVariant.BDECU

    @pytest.mark.parametrize("kwargs", [{"M": 0}, {"M": 7}, {"M": 2, "P": 0}, {"M": 2, "cfl": 0.0}])
    def test_invalid(self, kwargs):
        with pytest.raises(ConfigurationError):
            DeCConfig(**kwargs)
