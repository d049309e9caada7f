"""
Experiment operations behind the CLI: single runs, convergence studies,
lake-at-rest checks, perturbation runs and steady-state export.
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np
import numpy.typing as npt

from app.core.config import settings
from app.core.exceptions import ConfigurationError
from app.models.basis import BasisFamily
from app.models.bathymetry import Bathymetry
from app.models.mesh import Mesh1D, build_uniform_mesh
from app.models.swe import PhysParams
from app.schemas.experiment import ExperimentConfig
from app.schemas.results import (
    ConvergenceReport,
    ConvergenceRow,
    PerturbationReport,
    RunSummary,
    WBCheckReport,
)
from app.services import output
from app.services.simulation import (
    PERTURBATION_CENTER,
    PERTURBATION_HALF_WIDTH,
    Simulation,
    perturbed_state,
)
from app.services.steady_reference import (
    Regime,
    SteadyData,
    SteadyReference,
    build_reference,
    default_steady_data,
    l1_error,
)

logger = logging.getLogger(__name__)

FloatArray = npt.NDArray[np.float64]

# Constant-DoF mesh pairs (coarse, refined) per PGL degree
FAIR_MESHES: Tuple[Tuple[int, Tuple[int, int]], ...] = (
    (4, (30, 128)),
    (3, (40, 256)),
    (2, (60, 512)),
)


@dataclass
class PreparedCase:
    """Mesh, simulation, reference and steady DoF values of one level"""

    mesh: Mesh1D
    simulation: Simulation
    reference: SteadyReference
    steady_nodal: FloatArray


class ExperimentService:
    """Runs the experiments of one ExperimentConfig"""

    def __init__(self, config: ExperimentConfig):
        self.config = config
        self.out_dir = Path(config.out)
        self.bathymetry: Bathymetry = config.build_bathymetry()
        self.params = config.params()
        self.scheme = config.scheme_config()
        self.domain = settings.domain
        logger.info(
            f"[EXPERIMENTS] {config.test.value}: {config.spec.label}, {self.scheme.label}, "
            f"elements {config.elems}, T_f={config.resolved_t_final:g}"
        )

    # ------------------------------------------------------------------
    # Operations
    # ------------------------------------------------------------------

    def run_case(self, n_elem: Optional[int] = None, write: bool = True) -> RunSummary:
        """Run the configured test to T_f and write the solution and error summary"""
        n_elem = self.config.elems[0] if n_elem is None else n_elem
        case = self._prepare(n_elem)
        state0 = self._initial_state(case)
        result = case.simulation.run(state0, self.config.resolved_t_final)

        errH, errq = l1_error(
            result.state, case.reference, case.mesh, case.mesh.spec, self.config.error_mode
        )
        summary = RunSummary(
            test=self.config.test.value,
            basis=case.mesh.spec.label,
            scheme=self.scheme.label,
            n_elem=n_elem,
            h=case.mesh.h,
            t_final=result.time,
            steps=result.steps,
            retries=result.retries,
            errH_L1=errH,
            errq_L1=errq,
            runtime_s=result.runtime_s,
        )
        if write:
            path = self._write_solution(case, result.state, "solution")
            summary.solution_path = str(path)
            output.write_summary_csv(self._path(n_elem, "errors", case.mesh), [summary])
        logger.info(
            f"[EXPERIMENTS] {summary.basis} {summary.scheme} N={n_elem}: "
            f"errH={errH:.3e}, errq={errq:.3e} in {summary.steps} steps"
        )
        return summary

    def convergence_suite(self, write: bool = True) -> ConvergenceReport:
        """
        Errors on every mesh level with pairwise and least-squares orders.

        Raises:
            ConfigurationError: fewer than three mesh levels
        """
        levels = sorted(set(self.config.elems))
        if len(levels) < 3:
            raise ConfigurationError(
                "Convergence studies need at least three mesh levels", details={"elems": levels}
            )

        summaries = [self.run_case(n, write=False) for n in levels]
        rows: List[ConvergenceRow] = []
        for k, summary in enumerate(summaries):
            previous = summaries[k - 1] if k > 0 else None
            rows.append(
                ConvergenceRow(
                    n_elem=summary.n_elem,
                    h=summary.h,
                    errH=summary.errH_L1,
                    orderH=_pairwise_order(previous, summary, "errH_L1"),
                    errq=summary.errq_L1,
                    orderq=_pairwise_order(previous, summary, "errq_L1"),
                )
            )

        flagged = _non_monotone_levels(rows)
        if flagged:
            logger.warning(f"[EXPERIMENTS] error did not decrease on levels {flagged}")

        report = ConvergenceReport(
            test=self.config.test.value,
            basis=self.config.spec.label,
            scheme=self.scheme.label,
            rows=rows,
            fitted_orderH=_fitted_order([r.h for r in rows], [r.errH for r in rows]),
            fitted_orderq=_fitted_order([r.h for r in rows], [r.errq for r in rows]),
            flagged_levels=flagged,
        )
        if write:
            stem = self._stem("convergence")
            report.csv_path = str(output.write_convergence_csv(self.out_dir / f"{stem}.csv", rows))
            report.dat_path = str(
                output.write_gnuplot_dat(self.out_dir / f"{stem}.dat", rows, title=stem)
            )
        logger.info(
            f"[EXPERIMENTS] convergence {report.basis} {report.scheme}: "
            f"fitted orders H={report.fitted_orderH}, q={report.fitted_orderq}"
        )
        return report

    def wb_check(self, n_elem: Optional[int] = None, write: bool = True) -> WBCheckReport:
        """Start from the lake at rest, run to T_f and measure the drift of eta and q"""
        n_elem = self.config.elems[0] if n_elem is None else n_elem
        case = self._prepare(n_elem, Regime.LAKE_AT_REST)
        state0 = case.simulation.disc.states_from_nodal(case.steady_nodal)
        result = case.simulation.run(state0, self.config.resolved_t_final)

        disc = case.simulation.disc
        nodal = disc.to_nodal(result.state)
        eta_bar = self.config.resolved_eta_bar
        drift_eta = np.abs(nodal[:, 0] + disc.bathy.nodal - eta_bar)
        drift_q = np.abs(nodal[:, 1])
        eta_L1, q_L1 = l1_error(result.state, case.steady_nodal, case.mesh, case.mesh.spec)

        threshold = self.config.threshold
        values = (eta_L1, float(drift_eta.max()), q_L1, float(drift_q.max()))
        report = WBCheckReport(
            basis=case.mesh.spec.label,
            scheme=self.scheme.label,
            n_elem=n_elem,
            t_final=result.time,
            eta_L1=values[0],
            eta_Linf=values[1],
            q_L1=values[2],
            q_Linf=values[3],
            threshold=threshold,
            passed=bool(max(values) <= threshold),
        )
        if write:
            self._write_solution(case, result.state, "wbcheck")
        log = logger.info if report.passed else logger.warning
        log(
            f"[EXPERIMENTS] wb-check {report.basis} {report.scheme}: {report.status} "
            f"(eta L1={eta_L1:.3e}, Linf={values[1]:.3e}; q L1={q_L1:.3e}, Linf={values[3]:.3e})"
        )
        return report

    def perturbation_run(self, write: bool = True) -> List[PerturbationReport]:
        """Perturb the steady state, run to T_f and record eta - eta_s over time"""
        reports: List[PerturbationReport] = []
        for config, n_elem in self._perturbation_levels():
            service = self if config is self.config else ExperimentService(config)
            reports.append(service._perturb_one(n_elem, write))
        return reports

    def export_steady_state(self) -> List[Path]:
        """Write the reference steady state sampled at the DoFs of every mesh level"""
        paths: List[Path] = []
        for n_elem in self.config.elems:
            case = self._prepare(n_elem)
            state = case.simulation.disc.states_from_nodal(case.steady_nodal)
            paths.append(self._write_solution(case, state, "steady"))
        return paths

    # ------------------------------------------------------------------
    # Internal helpers
    # ------------------------------------------------------------------

    def _prepare(self, n_elem: int, regime: Optional[Regime] = None) -> PreparedCase:
        regime = self.config.test.regime if regime is None else regime
        mesh = build_uniform_mesh(self.domain[0], self.domain[1], n_elem, self.config.spec)
        reference = build_reference(
            regime,
            self.bathymetry,
            self.params,
            data=self._steady_data(regime),
            domain=self.domain,
            friction_method=self.config.friction_method,
        )
        simulation = Simulation(
            mesh, self.bathymetry, self.scheme, self.config.dec_config(), reference.boundary_condition()
        )
        return PreparedCase(
            mesh=mesh,
            simulation=simulation,
            reference=reference,
            steady_nodal=reference.sample(mesh.dof_coords),
        )

    def _steady_data(self, regime: Regime) -> SteadyData:
        if regime is Regime.LAKE_AT_REST:
            return SteadyData(q_bar=0.0, eta_bar=self.config.resolved_eta_bar)
        return default_steady_data(regime)

    def _initial_state(self, case: PreparedCase) -> FloatArray:
        disc = case.simulation.disc
        if self.config.test.is_perturbation:
            return perturbed_state(disc, case.steady_nodal, self.config.resolved_amplitude)
        return disc.states_from_nodal(case.steady_nodal)

    def _numerical_steady(self, case: PreparedCase) -> FloatArray:
        """
        Steady DoF values the perturbation is measured against. With friction
        the same scheme is marched to steady from the reference.
        """
        if not self.params.has_friction or case.reference.regime is Regime.LAKE_AT_REST:
            return case.steady_nodal
        disc = case.simulation.disc
        result = case.simulation.run_to_steady(disc.states_from_nodal(case.steady_nodal))
        logger.info(
            f"[EXPERIMENTS] same-setting steady state on {case.mesh.n_elem} elements "
            f"after t={result.time:.4g} (converged={result.converged})"
        )
        return disc.to_nodal(result.state)

    def _perturbation_levels(self) -> List[Tuple[ExperimentConfig, int]]:
        if not self.config.fair:
            return [(self.config, n) for n in self.config.elems]
        levels = []
        for degree, meshes in FAIR_MESHES:
            config = self.config.with_overrides(
                basis=BasisFamily.LAGRANGE_GAUSS_LOBATTO, degree=degree, fair=False
            )
            levels.extend((config, n) for n in meshes)
        return levels

    def _perturb_one(self, n_elem: int, write: bool) -> PerturbationReport:
        case = self._prepare(n_elem)
        disc = case.simulation.disc
        steady = self._numerical_steady(case)
        eta_steady = steady[:, 0] + disc.bathy.nodal

        amplitude = self.config.resolved_amplitude
        t_final = self.config.resolved_t_final
        times = np.linspace(0.0, t_final, self.config.snapshots)
        result = case.simulation.run(perturbed_state(disc, steady, amplitude), t_final, times)

        x = case.mesh.dof_coords
        series = [(t, disc.to_nodal(state)[:, 0] + disc.bathy.nodal) for t, state in result.snapshots]
        eta_final = disc.to_nodal(result.state)[:, 0] + disc.bathy.nodal
        deviation = np.abs(eta_final - eta_steady)

        window = list(wave_region(steady, self.params, result.time))
        quiet = (x < window[0]) | (x > window[1])
        quiet_metric = float(deviation[quiet].max()) if np.any(quiet) else 0.0

        report = PerturbationReport(
            test=self.config.test.value,
            basis=case.mesh.spec.label,
            scheme=self.scheme.label,
            n_elem=n_elem,
            amplitude=amplitude,
            t_final=result.time,
            quiet_metric=quiet_metric,
            quiet_window=window,
            max_deviation=float(deviation.max()),
        )
        if write:
            report.series_path = str(
                output.write_series_csv(self._path(n_elem, "series", case.mesh), x, series, eta_steady)
            )
            report.solution_path = str(self._write_solution(case, result.state, "perturbed"))
        logger.info(
            f"[EXPERIMENTS] perturbation {report.basis} {report.scheme} N={n_elem}: "
            f"quiet metric {quiet_metric:.3e} outside [{window[0]:.3f}, {window[1]:.3f}] "
            f"(A={amplitude:g})"
        )
        return report

    def _write_solution(self, case: PreparedCase, state: FloatArray, kind: str) -> Path:
        disc = case.simulation.disc
        return output.write_solution_csv(
            self._path(case.mesh.n_elem, kind, case.mesh),
            case.mesh.dof_coords,
            disc.to_nodal(state),
            disc.bathy.nodal,
        )

    def _stem(self, kind: str, label: Optional[str] = None) -> str:
        label = self.config.spec.label if label is None else label
        scheme = self.scheme.label.replace("+", "_")
        return f"{self.config.test.value}_{label}_{scheme}_{kind}"

    def _path(self, n_elem: int, kind: str, mesh: Mesh1D) -> Path:
        return self.out_dir / f"{self._stem(kind, mesh.spec.label)}_N{n_elem}.csv"


# ----------------------------------------------------------------------
# Perturbation wave region
# ----------------------------------------------------------------------


def wave_region(steady: FloatArray, p: PhysParams, t: float) -> Tuple[float, float]:
    """
    Interval reachable at time ``t`` by characteristics leaving the bump window.

    The left edge travels with the slowest v - c of the steady state and the
    right edge with the fastest v + c, so in supercritical flow both edges move
    downstream and the region upstream of the wave stays in the quiet set.
    """
    H = steady[:, 0]
    v = steady[:, 1] / H
    c = np.sqrt(p.g * H)
    left = PERTURBATION_CENTER - PERTURBATION_HALF_WIDTH + float(np.min(v - c)) * t
    right = PERTURBATION_CENTER + PERTURBATION_HALF_WIDTH + float(np.max(v + c)) * t
    return left, right


# ----------------------------------------------------------------------
# Order estimates
# ----------------------------------------------------------------------


def _pairwise_order(previous: Optional[RunSummary], current: RunSummary, field: str) -> Optional[float]:
    if previous is None:
        return None
    e0, e1 = getattr(previous, field), getattr(current, field)
    if e0 is None or e1 is None or e0 <= 0.0 or e1 <= 0.0:
        return None
    return float(np.log(e0 / e1) / np.log(previous.h / current.h))


def _fitted_order(h: Sequence[float], errors: Sequence[float]) -> Optional[float]:
    """Least-squares slope of log(err) against log(h) over the positive errors"""
    pairs = [(hh, e) for hh, e in zip(h, errors) if e > 0.0]
    if len(pairs) < 2:
        return None
    log_h = np.log([p[0] for p in pairs])
    log_e = np.log([p[1] for p in pairs])
    return float(np.polyfit(log_h, log_e, 1)[0])


def _non_monotone_levels(rows: Sequence[ConvergenceRow]) -> List[int]:
    """Levels whose H or q error did not decrease; typical once round-off is reached"""
    return [
        row.n_elem
        for previous, row in zip(rows, rows[1:])
        if row.errH >= previous.errH or row.errq >= previous.errq
    ]
