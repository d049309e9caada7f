import numpy as np
import pytest

from app.core.exceptions import ConfigurationError, InputDomainError
from app.models.basis import BasisFamily, BasisSpec
from app.models.mesh import Side, build_uniform_mesh, one_sided_eval


def test_uniform_mesh_layout():
    mesh = build_uniform_mesh(0.0, 25.0, 4, BasisSpec(BasisFamily.BERNSTEIN, 2))
    assert mesh.n_elem == 4
    assert mesh.n_dofs == 9
    assert len(mesh.faces) == 3
    np.testing.assert_allclose(mesh.element_lengths, 6.25)
    np.testing.assert_array_equal(mesh.elem_to_dofs[1], [2, 3, 4])
    assert mesh.faces[0].shared_dof == 2
    assert mesh.faces[-1].x_f == pytest.approx(18.75)


def test_shared_dofs_sit_on_element_bounds(spec):
    mesh = build_uniform_mesh(0.0, 25.0, 7, spec)
    np.testing.assert_array_equal(mesh.dof_coords[:: spec.degree], mesh.element_bounds)
    assert np.all(np.diff(mesh.dof_coords) > 0)
    for face in mesh.faces:
        assert mesh.elem_to_dofs[face.left_elem][-1] == mesh.elem_to_dofs[face.right_elem][0] == face.shared_dof


def test_element_of():
    mesh = build_uniform_mesh(0.0, 10.0, 5, BasisSpec(BasisFamily.LAGRANGE_EQUISPACED, 1))
    assert mesh.element_of(0.0) == 0
    assert mesh.element_of(3.0) == 1
    assert mesh.element_of(4.0) == 1
    assert mesh.element_of(10.0) == 4


@pytest.mark.parametrize("n_elem", [0, 1])
def test_rejects_fewer_than_two_elements(n_elem):
    with pytest.raises(ConfigurationError):
        build_uniform_mesh(0.0, 1.0, n_elem, BasisSpec(BasisFamily.BERNSTEIN, 1))


def test_rejects_empty_domain():
    with pytest.raises(ConfigurationError):
        build_uniform_mesh(1.0, 1.0, 4, BasisSpec(BasisFamily.BERNSTEIN, 1))


class TestOneSidedEval:
    def test_continuous_values_agree(self, spec, rng):
        mesh = build_uniform_mesh(0.0, 25.0, 5, spec)
        coeffs = rng.normal(size=mesh.n_dofs)
        for face in mesh.faces:
            left = one_sided_eval(mesh, coeffs, face, Side.LEFT, 0)
            right = one_sided_eval(mesh, coeffs, face, Side.RIGHT, 0)
            assert left == pytest.approx(right, abs=1e-13)
            assert left == pytest.approx(coeffs[face.shared_dof], abs=1e-13)

    def test_derivative_of_linear_function_has_no_jump(self):
        spec = BasisSpec(BasisFamily.LAGRANGE_GAUSS_LOBATTO, 3)
        mesh = build_uniform_mesh(0.0, 25.0, 4, spec)
        coeffs = 2.0 * mesh.dof_coords + 1.0
        face = mesh.faces[1]
        assert one_sided_eval(mesh, coeffs, face, Side.LEFT, 1) == pytest.approx(2.0, rel=1e-12)
        assert one_sided_eval(mesh, coeffs, face, Side.RIGHT, 1) == pytest.approx(2.0, rel=1e-12)
        assert one_sided_eval(mesh, coeffs, face, "left", 2) == pytest.approx(0.0, abs=1e-12)

    def test_kink_produces_derivative_jump(self):
        spec = BasisSpec(BasisFamily.LAGRANGE_EQUISPACED, 1)
        mesh = build_uniform_mesh(-1.0, 1.0, 2, spec)
        coeffs = np.abs(mesh.dof_coords)
        face = mesh.faces[0]
        assert one_sided_eval(mesh, coeffs, face, Side.LEFT, 1) == pytest.approx(-1.0)
        assert one_sided_eval(mesh, coeffs, face, Side.RIGHT, 1) == pytest.approx(1.0)

    def test_rejects_bad_order(self):
        mesh = build_uniform_mesh(0.0, 1.0, 2, BasisSpec(BasisFamily.BERNSTEIN, 1))
        with pytest.raises(InputDomainError):
            one_sided_eval(mesh, np.zeros(mesh.n_dofs), mesh.faces[0], Side.LEFT, 3)
