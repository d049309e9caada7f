import functools
import logging
from typing import Any, List, Optional

import click

from app.core.config import settings
from app.core.error_handlers import handle_exception, register_exception_handlers
from app.models.basis import BasisFamily
from app.schemas.experiment import ExperimentCase, ExperimentConfig, load_config, save_config
from app.services.dec_integrator import DeCVariant
from app.services.experiments import ExperimentService
from app.services.space_residual import SpaceScheme
from app.services.stabilizations import STABILIZATIONS
from app.services.steady_reference import ErrorMode, FrictionMethod

logger = logging.getLogger(__name__)

# Exit code of a wb-check whose drift exceeds the threshold
WB_CHECK_FAILED = 5


class SolverGroup(click.Group):
    """Click group that turns solver exceptions into diagnostics and exit codes"""

    exception_handlers: List = []

    def invoke(self, ctx: click.Context) -> Any:
        try:
            return super().invoke(ctx)
        except (click.exceptions.Exit, click.ClickException, click.Abort):
            raise
        except Exception as exc:
            ctx.exit(handle_exception(exc, self.exception_handlers))


def parse_elems(ctx, param, value: Optional[str]) -> Optional[List[int]]:
    if value is None:
        return None
    try:
        return [int(part) for part in value.split(",") if part.strip()]
    except ValueError:
        raise click.BadParameter(f"expected N or N,N,..., got {value!r}")


def _choices(enum_type) -> click.Choice:
    return click.Choice([member.value for member in enum_type], case_sensitive=False)


def experiment_options(command):
    """Flags shared by every subcommand; unset flags keep the config-file values"""
    options = [
        click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), help="YAML config file"),
        click.option("--test", type=_choices(ExperimentCase), help="Test case"),
        click.option("--basis", type=_choices(BasisFamily), help="Basis family"),
        click.option("--degree", type=click.IntRange(1, 4), help="Polynomial degree M"),
        click.option("--elems", callback=parse_elems, help="Element count(s), N[,N...]"),
        click.option("--scheme", type=_choices(SpaceScheme), help="Space discretization"),
        click.option("--stab", type=click.Choice(sorted(STABILIZATIONS), case_sensitive=False), help="Jump stabilization"),
        click.option("--delta1", type=float, help="First-derivative CIP coefficient"),
        click.option("--delta2", type=float, help="Second-derivative CIP coefficient"),
        click.option("--dec", type=_choices(DeCVariant), help="DeC variant"),
        click.option("--cfl", type=float, help="CFL number"),
        click.option("--tfinal", type=float, help="Final time"),
        click.option("--friction", type=float, help="Manning coefficient n_M"),
        click.option("--friction-method", type=_choices(FrictionMethod), help="Friction reference construction"),
        click.option("--bathymetry-file", type=click.Path(exists=True, dir_okay=False), help="CSV with columns x,B"),
        click.option("--amp", type=float, help="Perturbation amplitude A"),
        click.option("--snapshots", type=int, help="Output times of perturbation runs"),
        click.option("--fair/--no-fair", default=None, help="Constant-DoF PGL mesh pairs"),
        click.option("--error-mode", type=_choices(ErrorMode), help="Reference used by the L1 error"),
        click.option("--out", type=click.Path(file_okay=False), help="Output directory"),
        click.option("--save-config", "save_path", type=click.Path(dir_okay=False), help="Write the effective config here"),
    ]
    for option in reversed(options):
        command = option(command)
    return command


def build_config(config_path: Optional[str], save_path: Optional[str] = None, **flags: Any) -> ExperimentConfig:
    """Config file (or defaults) with the given flags applied on top"""
    base = load_config(config_path) if config_path else ExperimentConfig()
    config = base.with_overrides(**flags)
    if save_path:
        save_config(config, save_path)
        logger.info(f"[CLI] effective config written to {save_path}")
    return config


def get_experiment_service(config: ExperimentConfig) -> ExperimentService:
    return ExperimentService(config)


def with_config(command):
    """Collapse the shared flags into an ExperimentConfig argument"""

    @functools.wraps(command)
    def wrapper(config_path, save_path, **flags):
        config = build_config(config_path, save_path, **flags)
        return command(config)

    return wrapper


def _echo(model) -> None:
    click.echo(model.model_dump_json(indent=2))


@click.group(cls=SolverGroup)
@click.version_option(settings.VERSION, prog_name=settings.APP_NAME)
def cli():
    """Well-balanced shallow-water CG/RD experiments"""


register_exception_handlers(cli)


@cli.command()
@experiment_options
@with_config
def run(config: ExperimentConfig):
    """Run one test case and write the solution and its L1 errors"""
    service = get_experiment_service(config)
    for n_elem in config.elems:
        _echo(service.run_case(n_elem))


@cli.command()
@experiment_options
@with_config
def converge(config: ExperimentConfig):
    """Convergence study over the element list"""
    _echo(get_experiment_service(config).convergence_suite())


@cli.command("wb-check")
@experiment_options
@with_config
def wb_check(config: ExperimentConfig):
    """Lake-at-rest preservation check"""
    service = get_experiment_service(config)
    reports = [service.wb_check(n_elem) for n_elem in config.elems]
    for report in reports:
        _echo(report)
        click.echo(f"{report.status}: {report.basis} {report.scheme} N={report.n_elem}", err=True)
    if not all(report.passed for report in reports):
        raise click.exceptions.Exit(WB_CHECK_FAILED)


@cli.command()
@experiment_options
@with_config
def perturb(config: ExperimentConfig):
    """Perturbation of a steady state, with eta - eta_s snapshots"""
    if not config.test.is_perturbation:
        config = config.with_overrides(test=f"perturb-{config.test.value}")
    for report in get_experiment_service(config).perturbation_run():
        _echo(report)


@cli.command()
@experiment_options
@with_config
def steady(config: ExperimentConfig):
    """Sample the reference steady state at the DoFs and write it"""
    for path in get_experiment_service(config).export_steady_state():
        click.echo(str(path))
