import pytest
from pydantic import ValidationError

from app.core.exceptions import ConfigurationError
from app.models.basis import BasisFamily
from app.models.bathymetry import BathymetryKind
from app.schemas.experiment import (
    ExperimentCase,
    ExperimentConfig,
    config_to_sections,
    dump_config,
    load_config,
    parse_config,
    save_config,
)
from app.services.dec_integrator import DeCVariant
from app.services.steady_reference import ErrorMode, Regime

CONFIG_TEXT = """
case:
  test: perturb-sub
discretization:
  basis: pgl
  degree: 3
  elems: [40, 80]
  stab: JE
  dec: bdecu
physics:
  friction: 0.01
time:
  cfl: 0.08
perturbation:
  amp: 0.001
"""


class TestExperimentCase:
    def test_perturbation_cases(self):
        assert ExperimentCase.PERTURB_TRANS.is_perturbation
        assert ExperimentCase.PERTURB_TRANS.regime is Regime.TRANSCRITICAL
        assert not ExperimentCase.LAKE.is_perturbation

    @pytest.mark.parametrize(
        "case,t_final,amp,bathy",
        [
            ("lake", 10.0, None, BathymetryKind.C0_PARABOLA),
            ("sub", 100.0, None, BathymetryKind.SMOOTH_BUMP),
            ("perturb-super", 1.0, 5e-5, BathymetryKind.C0_PARABOLA),
            ("perturb-trans", 1.5, 5e-4, BathymetryKind.C0_PARABOLA),
        ],
    )
    def test_defaults(self, case, t_final, amp, bathy):
        case = ExperimentCase(case)
        assert case.default_t_final == t_final
        assert case.default_amplitude == amp
        assert case.default_bathymetry is bathy


class TestResolvedValues:
    def test_defaults(self):
        config = ExperimentConfig()
        assert config.spec.label == "B4"
        assert config.resolved_cfl == 0.05
        assert config.resolved_deltas == (0.5, 0.01)
        assert config.resolved_t_final == 10.0
        assert config.resolved_amplitude == 0.0
        assert config.resolved_bathymetry_kind is BathymetryKind.C0_PARABOLA
        assert config.threshold == 1e-11
        assert config.error_mode is ErrorMode.EXACT
        dec = config.dec_config()
        assert (dec.M, dec.iterations, dec.variant) == (4, 5, DeCVariant.BDEC)

    def test_explicit_values_win(self):
        config = ExperimentConfig(
            test="perturb-sub", degree=2, delta1=0.4, cfl=0.2, tfinal=3.0, amp=1e-3,
            dec_subintervals=3, dec_iterations=2, g=10.0, friction=0.02,
        )
        assert config.resolved_deltas == (0.4, 0.2)
        assert config.resolved_cfl == 0.2
        assert config.resolved_t_final == 3.0
        assert config.resolved_amplitude == 1e-3
        assert config.params().g == 10.0 and config.params().n_M == 0.02
        assert config.scheme_config().label == "wbhs+jt"
        assert (config.dec_config().M, config.dec_config().P) == (3, 2)

    def test_bathymetry_file_implies_tabulated(self):
        assert ExperimentConfig(bathymetry_file="b.csv").resolved_bathymetry_kind is BathymetryKind.TABULATED

    def test_with_overrides_skips_none(self):
        config = ExperimentConfig(degree=2, elems=[10, 20])
        updated = config.with_overrides(degree=None, basis="p", elems=None)
        assert updated.degree == 2
        assert updated.elems == [10, 20]
        assert updated.basis is BasisFamily.LAGRANGE_EQUISPACED


class TestValidation:
    @pytest.mark.parametrize(
        "kwargs",
        [
            {"basis": "p", "degree": 4},
            {"degree": 5},
            {"elems": []},
            {"elems": [1, 10]},
            {"stab": "jx"},
            {"test": "trans", "friction": 0.01},
            {"bathymetry": "tabulated"},
            {"snapshots": 1},
            {"unknown": 1},
        ],
    )
    def test_rejects(self, kwargs):
        with pytest.raises(ValidationError):
            ExperimentConfig(**kwargs)

    def test_stab_is_normalized(self):
        assert ExperimentConfig(stab=" JG ").stab == "jg"


class TestConfigFiles:
    def test_parse(self):
        config = parse_config(CONFIG_TEXT)
        assert config.test is ExperimentCase.PERTURB_SUB
        assert config.spec.label == "PGL3"
        assert config.elems == [40, 80]
        assert config.stab == "je"
        assert config.dec is DeCVariant.BDECU
        assert config.friction == 0.01
        assert config.resolved_amplitude == 0.001

    def test_dump_is_idempotent(self):
        config = parse_config(CONFIG_TEXT)
        text = dump_config(config)
        assert parse_config(text) == config
        assert dump_config(parse_config(text)) == text
        assert list(config_to_sections(config)) == ["case", "discretization", "physics", "time", "perturbation"]

    def test_save_and_load(self, tmp_path):
        config = ExperimentConfig(test="sub", elems=[16, 32, 64])
        path = save_config(config, tmp_path / "cfg" / "sub.yaml")
        assert load_config(path) == config

    def test_empty_file_gives_defaults(self):
        assert parse_config("") == ExperimentConfig()

    @pytest.mark.parametrize(
        "text",
        [
            "solver:\n  degree: 2\n",
            "discretization:\n  friction: 0.1\n",
            "discretization:\n  degree: 9\n",
            "- a\n- b\n",
            "case: [unclosed\n",
        ],
    )
    def test_invalid_files(self, text):
        with pytest.raises(ConfigurationError):
            parse_config(text)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigurationError):
            load_config(tmp_path / "absent.yaml")
