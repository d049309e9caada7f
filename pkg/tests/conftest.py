import numpy as np
import pytest

from app.models.basis import BasisFamily, BasisSpec
from app.models.bathymetry import Bathymetry
from app.models.discretization import Discretization
from app.models.mesh import build_uniform_mesh
from app.models.swe import PhysParams

ALL_SPECS = [
    BasisSpec(family, degree)
    for family in BasisFamily
    for degree in range(1, 5)
    if not (family is BasisFamily.LAGRANGE_EQUISPACED and degree == 4)
]

DOMAIN = (0.0, 25.0)
ETA_BAR = 0.5


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run slow tests")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def params():
    return PhysParams(g=9.81)


@pytest.fixture(params=ALL_SPECS, ids=lambda spec: spec.label)
def spec(request):
    return request.param


@pytest.fixture
def make_disc(params):
    """Discretization factory: (spec, n_elem, bathymetry) -> Discretization"""

    def _make(spec, n_elem=8, bathymetry=None, p=None):
        mesh = build_uniform_mesh(DOMAIN[0], DOMAIN[1], n_elem, spec)
        return Discretization(mesh, bathymetry or Bathymetry.c0_parabola(), p or params)

    return _make


@pytest.fixture
def lake_state():
    """Coefficients of the lake at rest eta = ETA_BAR on a discretization"""

    def _make(disc, eta_bar=ETA_BAR):
        nodal = np.zeros((disc.n_dofs, 2))
        nodal[:, 0] = eta_bar - disc.bathy.nodal
        return disc.states_from_nodal(nodal)

    return _make


@pytest.fixture
def random_state(rng):
    """Smooth-ish random positive states: H in [1, 2], q in [-1, 1] at the DoFs"""

    def _make(disc):
        nodal = np.empty((disc.n_dofs, 2))
        nodal[:, 0] = rng.uniform(1.0, 2.0, disc.n_dofs)
        nodal[:, 1] = rng.uniform(-1.0, 1.0, disc.n_dofs)
        return disc.states_from_nodal(nodal)

    return _make
