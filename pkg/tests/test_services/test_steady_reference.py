import numpy as np
import pytest

from app.core.exceptions import ConfigurationError, InfeasibleSteadyStateError
from app.models.basis import BasisFamily, BasisSpec
from app.models.bathymetry import Bathymetry
from app.models.discretization import Discretization
from app.models.mesh import build_uniform_mesh
from app.models.swe import PhysParams
from app.services.steady_reference import (
    ErrorMode,
    Regime,
    SteadyData,
    build_reference,
    critical_height,
    default_steady_data,
    energy_residual,
    friction_ode_reference,
    friction_simulation_reference,
    l1_error,
    solve_friction_steady,
    solve_frictionless_steady,
    specific_energy,
)

XS = np.linspace(0.0, 25.0, 101)
MOVING = [Regime.SUPERCRITICAL, Regime.SUBCRITICAL, Regime.TRANSCRITICAL]


def _froude(samples, p):
    return np.abs(samples[:, 1]) / (samples[:, 0] * np.sqrt(p.g * samples[:, 0]))


class TestFrictionless:
    def test_lake_at_rest(self, params):
        bathy = Bathymetry.c0_parabola()
        samples = solve_frictionless_steady("lake", default_steady_data("lake"), bathy, XS, params)
        np.testing.assert_allclose(samples[:, 0] + bathy.value(XS), 0.5)
        np.testing.assert_array_equal(samples[:, 1], 0.0)

    @pytest.mark.parametrize("regime", MOVING, ids=lambda r: r.value)
    @pytest.mark.parametrize("bathy", [Bathymetry.smooth_bump(), Bathymetry.c0_parabola()], ids=["smooth", "c0"])
    def test_energy_is_constant(self, regime, bathy, params):
        ref = build_reference(regime, bathy, params)
        samples = ref.sample(XS)
        assert energy_residual(samples, XS, ref) <= 1e-11
        np.testing.assert_array_equal(samples[:, 1], default_steady_data(regime).q_bar)

    def test_supercritical_flat_region(self, params):
        samples = solve_frictionless_steady("super", default_steady_data("super"), Bathymetry.c0_parabola(), XS, params)
        flat = XS < 8.0
        np.testing.assert_allclose(samples[flat, 0], 2.0, rtol=1e-12)
        assert np.all(_froude(samples, params) > 1.0)
        # the flow thins over the bump
        assert samples[XS == 10.0, 0][0] < 2.0

    def test_subcritical_branch(self, params):
        samples = solve_frictionless_steady("sub", default_steady_data("sub"), Bathymetry.smooth_bump(), XS, params)
        assert samples[-1, 0] == pytest.approx(2.0, rel=1e-12)
        assert np.all(_froude(samples, params) < 1.0)
        assert samples[XS == 10.0, 0][0] < 2.0

    def test_transcritical_switches_branch_at_crest(self, params):
        bathy = Bathymetry.smooth_bump()
        samples = solve_frictionless_steady("trans", default_steady_data("trans"), bathy, XS, params)
        froude = _froude(samples, params)
        assert np.all(froude[XS < 10.0] < 1.0)
        assert np.all(froude[XS > 10.0] > 1.0)
        H_c = critical_height(1.53, params)
        assert samples[XS == 10.0, 0][0] == H_c
        near = solve_frictionless_steady("trans", default_steady_data("trans"), bathy, [10.0 - 1e-4, 10.0 + 1e-4], params)
        np.testing.assert_allclose(near[:, 0], H_c, rtol=1e-2)

    def test_critical_height_minimizes_energy(self, params):
        H_c = critical_height(1.53, params)
        E_c = specific_energy(H_c, 1.53, 0.0, params)
        assert specific_energy([0.9 * H_c, 1.1 * H_c], 1.53, 0.0, params).min() > E_c

    def test_infeasible_bump(self, params):
        bathy = Bathymetry.tabulated([0.0, 10.0, 25.0], [0.0, 4.0, 0.0])
        with pytest.raises(InfeasibleSteadyStateError) as info:
            solve_frictionless_steady("super", default_steady_data("super"), bathy, XS, params)
        assert "x" in info.value.details

    def test_dry_lake(self, params):
        with pytest.raises(InfeasibleSteadyStateError):
            solve_frictionless_steady("lake", SteadyData(eta_bar=0.1), Bathymetry.c0_parabola(), XS, params)

    def test_moving_state_needs_momentum(self, params):
        with pytest.raises(ConfigurationError):
            solve_frictionless_steady("super", SteadyData(q_bar=0.0, H_left=2.0), Bathymetry.flat(), XS, params)


class TestFriction:
    @pytest.mark.parametrize("regime", [Regime.SUPERCRITICAL, Regime.SUBCRITICAL], ids=lambda r: r.value)
    def test_vanishing_friction_matches_energy_solution(self, regime, params):
        bathy = Bathymetry.c0_parabola()
        data = default_steady_data(regime)
        with_ode = solve_friction_steady(regime, data, bathy, 0.0, XS[:-1] + 0.0625, params)
        exact = solve_frictionless_steady(regime, data, bathy, XS[:-1] + 0.0625, params)
        np.testing.assert_allclose(with_ode, exact, rtol=1e-9)

    def test_supercritical_friction_raises_the_surface(self, params):
        rough = PhysParams(g=params.g, n_M=0.01)
        ref = friction_ode_reference("super", default_steady_data("super"), Bathymetry.smooth_bump(), rough)
        eta = ref.eta([0.0, 25.0])
        assert eta[1] > eta[0]
        np.testing.assert_array_equal(ref.sample(XS)[:, 1], 24.0)
        assert ref.method == "ode"

    def test_subcritical_friction_deepens_upstream(self, params):
        rough = PhysParams(g=params.g, n_M=0.02)
        ref = friction_ode_reference("sub", default_steady_data("sub"), Bathymetry.flat(), rough)
        H = ref.sample([0.0, 12.5, 25.0])[:, 0]
        assert H[2] == pytest.approx(2.0)
        assert H[0] > H[1] > H[2]

    def test_transcritical_friction_is_unsupported(self, params):
        with pytest.raises(ConfigurationError):
            friction_ode_reference("trans", default_steady_data("trans"), Bathymetry.smooth_bump(), params)

    def test_build_reference_dispatches_on_friction(self):
        ref = build_reference("sub", Bathymetry.smooth_bump(), PhysParams(n_M=0.01))
        assert ref.n_M == 0.01
        assert ref.energy is None

    @pytest.mark.slow
    @pytest.mark.parametrize("regime", ["super", "sub"])
    def test_long_run_matches_ode(self, params, regime):
        rough = PhysParams(g=params.g, n_M=0.03)
        data = default_steady_data(regime)
        bathy = Bathymetry.smooth_bump()
        ode = friction_ode_reference(regime, data, bathy, rough)
        run = friction_simulation_reference(regime, data, bathy, rough, n_elem=2048)
        # midpoint rule on a fine grid
        xs = np.linspace(0.0, 25.0, 4001)
        mid = 0.5 * (xs[1:] + xs[:-1])
        ode_values, run_values = ode.sample(mid), run.sample(mid)
        assert np.mean(np.abs(run_values[:, 0] - ode_values[:, 0])) * 25.0 <= 1e-5
        assert np.max(np.abs(ode_values[:, 1] - data.q_bar)) <= 1e-10
        assert np.max(np.abs(run_values[:, 1] - data.q_bar)) <= 1e-3


class TestBoundaryConditions:
    def test_lake_prescribes_everything(self, params):
        bc = build_reference("lake", Bathymetry.c0_parabola(), params).boundary_condition()
        assert (bc.left_H, bc.left_q, bc.right_H, bc.right_q) == (0.5, 0.0, 0.5, 0.0)

    def test_regime_specific_data(self, params):
        bathy = Bathymetry.smooth_bump()
        sup = build_reference("super", bathy, params).boundary_condition()
        assert sup.left_H == pytest.approx(2.0) and sup.left_q == 24.0 and sup.right_H is None
        sub = build_reference("sub", bathy, params).boundary_condition()
        assert sub.left_q == 4.42 and sub.right_H == pytest.approx(2.0) and sub.left_H is None
        trans = build_reference("trans", bathy, params).boundary_condition()
        assert trans.left_q == 1.53 and trans.right_H is None


class TestL1Error:
    @pytest.fixture
    def setup(self, params):
        spec = BasisSpec(BasisFamily.BERNSTEIN, 3)
        mesh = build_uniform_mesh(0.0, 25.0, 10, spec)
        disc = Discretization(mesh, Bathymetry.smooth_bump(), params)
        ref = build_reference("sub", Bathymetry.smooth_bump(), params)
        return spec, mesh, disc, ref

    def test_constant_offset(self, setup):
        spec, mesh, disc, ref = setup
        nodal = ref.sample(mesh.dof_coords)
        state = disc.states_from_nodal(nodal + np.array([1e-3, 0.0]))
        err_H, err_q = l1_error(state, ref, mesh, spec)
        assert err_H == pytest.approx(25e-3, rel=1e-10)
        assert err_q == pytest.approx(0.0, abs=1e-12)
        assert l1_error(state, nodal, mesh, spec) == (err_H, err_q)

    def test_exact_mode_matches_fine_midpoint_rule(self, setup):
        spec, mesh, disc, ref = setup
        state = disc.states_from_nodal(np.column_stack([np.full(mesh.n_dofs, 2.0), np.full(mesh.n_dofs, 4.0)]))
        err_H, err_q = l1_error(state, ref, mesh, spec, mode=ErrorMode.EXACT)
        x = (np.arange(5000) + 0.5) * 25.0 / 5000
        samples = ref.sample(x)
        assert err_H == pytest.approx(np.abs(2.0 - samples[:, 0]).sum() * 25.0 / 5000, rel=1e-3)
        assert err_q == pytest.approx(0.42 * 25.0, rel=1e-12)

    def test_exact_mode_needs_reference(self, setup):
        spec, mesh, disc, ref = setup
        with pytest.raises(ConfigurationError):
            l1_error(np.ones((mesh.n_dofs, 2)), np.ones((mesh.n_dofs, 2)), mesh, spec, mode="exact")
