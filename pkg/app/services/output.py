"""
CSV and gnuplot writers. Floats are written with CSV_FLOAT_FORMAT (17
significant digits by default) so identical runs give identical files.
"""

import logging
from pathlib import Path
from typing import Iterable, List, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel

from app.core.config import settings
from app.schemas.results import ConvergenceRow

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

SOLUTION_COLUMNS = ["x", "H", "q", "eta", "B"]
CONVERGENCE_COLUMNS = ["n_elem", "h", "errH", "orderH", "errq", "orderq"]
SERIES_COLUMNS = ["t", "x", "eta", "eta_minus_steady"]


def _prepare(path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def solution_frame(x, nodal_state, B) -> pd.DataFrame:
    """One row per DoF: x, H, q, eta, B"""
    nodal_state = np.asarray(nodal_state, dtype=float)
    B = np.asarray(B, dtype=float)
    return pd.DataFrame(
        {
            "x": np.asarray(x, dtype=float),
            "H": nodal_state[:, 0],
            "q": nodal_state[:, 1],
            "eta": nodal_state[:, 0] + B,
            "B": B,
        },
        columns=SOLUTION_COLUMNS,
    )


def write_solution_csv(path: PathLike, x, nodal_state, B) -> Path:
    path = _prepare(path)
    solution_frame(x, nodal_state, B).to_csv(path, index=False, float_format=settings.CSV_FLOAT_FORMAT)
    logger.info(f"[OUTPUT] solution written to {path}")
    return path


def convergence_frame(rows: Sequence[ConvergenceRow]) -> pd.DataFrame:
    frame = pd.DataFrame([row.model_dump() for row in rows], columns=CONVERGENCE_COLUMNS)
    return frame.astype({"n_elem": int})


def write_convergence_csv(path: PathLike, rows: Sequence[ConvergenceRow]) -> Path:
    """Orders of the first level are left empty"""
    path = _prepare(path)
    convergence_frame(rows).to_csv(
        path, index=False, float_format=settings.CSV_FLOAT_FORMAT, na_rep=""
    )
    logger.info(f"[OUTPUT] convergence table written to {path}")
    return path


def write_gnuplot_dat(path: PathLike, rows: Sequence[ConvergenceRow], title: str = "") -> Path:
    """Whitespace-separated columns with a commented header, missing orders as '-'"""
    path = _prepare(path)
    frame = convergence_frame(rows)
    with path.open("w", encoding="utf-8") as handle:
        if title:
            handle.write(f"# {title}\n")
        handle.write("# " + " ".join(CONVERGENCE_COLUMNS) + "\n")
        frame.to_csv(
            handle,
            sep=" ",
            index=False,
            header=False,
            float_format=settings.CSV_FLOAT_FORMAT,
            na_rep="-",
        )
    logger.info(f"[OUTPUT] gnuplot data written to {path}")
    return path


def series_frame(x, snapshots: Iterable[Tuple[float, np.ndarray]], eta_steady) -> pd.DataFrame:
    """Long format: one row per (t, x) with eta and eta - eta_s"""
    x = np.asarray(x, dtype=float)
    eta_steady = np.asarray(eta_steady, dtype=float)
    blocks: List[pd.DataFrame] = []
    for t, eta in snapshots:
        eta = np.asarray(eta, dtype=float)
        blocks.append(
            pd.DataFrame(
                {
                    "t": np.full_like(x, t),
                    "x": x,
                    "eta": eta,
                    "eta_minus_steady": eta - eta_steady,
                },
                columns=SERIES_COLUMNS,
            )
        )
    if not blocks:
        return pd.DataFrame(columns=SERIES_COLUMNS)
    return pd.concat(blocks, ignore_index=True)


def write_series_csv(path: PathLike, x, snapshots, eta_steady) -> Path:
    path = _prepare(path)
    series_frame(x, snapshots, eta_steady).to_csv(
        path, index=False, float_format=settings.CSV_FLOAT_FORMAT
    )
    logger.info(f"[OUTPUT] time series written to {path}")
    return path


def read_solution_csv(path: PathLike) -> pd.DataFrame:
    return pd.read_csv(path)


def write_summary_csv(path: PathLike, records: Sequence[BaseModel]) -> Path:
    """One row per summary model, columns in field order"""
    path = _prepare(path)
    frame = pd.DataFrame([record.model_dump() for record in records])
    frame.to_csv(path, index=False, float_format=settings.CSV_FLOAT_FORMAT, na_rep="")
    logger.info(f"[OUTPUT] summary written to {path}")
    return path
