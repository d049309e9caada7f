import logging
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Optional, Tuple, Union

import numpy as np
import numpy.typing as npt
import pandas as pd

from app.core.exceptions import ConfigurationError

logger = logging.getLogger(__name__)

FloatArray = npt.NDArray[np.float64]

BUMP_CENTER = 10.0
SMOOTH_HALF_WIDTH = 5.0
SMOOTH_AMPLITUDE = 0.2
C0_HALF_WIDTH = 2.0
C0_TOP = 0.2
C0_CURVATURE = 0.05


class BathymetryKind(str, Enum):
    FLAT = "flat"
    SMOOTH_BUMP = "smooth"
    C0_PARABOLA = "c0"
    TABULATED = "tabulated"


@dataclass(frozen=True, eq=False)
class Bathymetry:
    """
    Bottom topography B(x) with its exact slope.

    ``SMOOTH_BUMP`` is the C-infinity bump 0.2 exp(1 - 1/(1 - ((x-10)/5)^2)) on
    (5, 15); ``C0_PARABOLA`` is 0.2 - 0.05 (x-10)^2 on (8, 12); ``TABULATED``
    interpolates (x, B) pairs linearly.
    """

    kind: BathymetryKind
    x_table: Optional[FloatArray] = None
    b_table: Optional[FloatArray] = None

    # ------------------------------------------------------------------
    # Constructors
    # ------------------------------------------------------------------

    @classmethod
    def flat(cls) -> "Bathymetry":
        return cls(BathymetryKind.FLAT)

    @classmethod
    def smooth_bump(cls) -> "Bathymetry":
        return cls(BathymetryKind.SMOOTH_BUMP)

    @classmethod
    def c0_parabola(cls) -> "Bathymetry":
        return cls(BathymetryKind.C0_PARABOLA)

    @classmethod
    def tabulated(cls, x, b) -> "Bathymetry":
        x = np.asarray(x, dtype=float)
        b = np.asarray(b, dtype=float)
        if x.ndim != 1 or x.shape != b.shape or len(x) < 2:
            raise ConfigurationError(
                "Tabulated bathymetry needs two equally long 1D arrays with >= 2 points",
                details={"x_shape": list(x.shape), "b_shape": list(b.shape)},
            )
        if np.any(np.diff(x) <= 0):
            raise ConfigurationError("Tabulated bathymetry abscissae must be strictly increasing")
        return cls(BathymetryKind.TABULATED, x_table=x, b_table=b)

    @classmethod
    def from_csv(cls, path: Union[str, Path]) -> "Bathymetry":
        """Read a tabulated bathymetry from a CSV file with columns ``x,B``"""
        try:
            frame = pd.read_csv(path)
        except (OSError, pd.errors.ParserError) as exc:
            raise ConfigurationError(
                f"Cannot read bathymetry file {path}", details={"error": str(exc)}
            ) from exc
        missing = {"x", "B"} - set(frame.columns)
        if missing:
            raise ConfigurationError(
                f"Bathymetry file {path} lacks columns {sorted(missing)}"
            )
        logger.info(f"[BATHYMETRY] loaded {len(frame)} points from {path}")
        return cls.tabulated(frame["x"].to_numpy(), frame["B"].to_numpy())

    @classmethod
    def from_kind(cls, kind: Union[str, BathymetryKind], path: Optional[str] = None) -> "Bathymetry":
        kind = BathymetryKind(kind)
        if kind is BathymetryKind.TABULATED:
            if path is None:
                raise ConfigurationError("Tabulated bathymetry requires a file path")
            return cls.from_csv(path)
        return {
            BathymetryKind.FLAT: cls.flat,
            BathymetryKind.SMOOTH_BUMP: cls.smooth_bump,
            BathymetryKind.C0_PARABOLA: cls.c0_parabola,
        }[kind]()

    # ------------------------------------------------------------------
    # Evaluation
    # ------------------------------------------------------------------

    def __call__(self, x) -> FloatArray:
        return self.value(x)

    def value(self, x) -> FloatArray:
        x = np.asarray(x, dtype=float)
        if self.kind is BathymetryKind.FLAT:
            return np.zeros_like(x)
        if self.kind is BathymetryKind.SMOOTH_BUMP:
            s = (x - BUMP_CENTER) / SMOOTH_HALF_WIDTH
            inside = np.abs(s) < 1.0
            with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
                bump = SMOOTH_AMPLITUDE * np.exp(1.0 - 1.0 / (1.0 - s * s))
            return np.where(inside, bump, 0.0)
        if self.kind is BathymetryKind.C0_PARABOLA:
            inside = np.abs(x - BUMP_CENTER) < C0_HALF_WIDTH
            return np.where(inside, C0_TOP - C0_CURVATURE * (x - BUMP_CENTER) ** 2, 0.0)
        return np.interp(x, self.x_table, self.b_table)

    def slope(self, x) -> FloatArray:
        """dB/dx; at kinks the value of the open-interval formula is used"""
        x = np.asarray(x, dtype=float)
        if self.kind is BathymetryKind.FLAT:
            return np.zeros_like(x)
        if self.kind is BathymetryKind.SMOOTH_BUMP:
            s = (x - BUMP_CENTER) / SMOOTH_HALF_WIDTH
            inside = np.abs(s) < 1.0
            with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
                one_minus = 1.0 - s * s
                d = self.value(x) * (-2.0 * s) / (SMOOTH_HALF_WIDTH * one_minus * one_minus)
            return np.where(inside, d, 0.0)
        if self.kind is BathymetryKind.C0_PARABOLA:
            inside = np.abs(x - BUMP_CENTER) < C0_HALF_WIDTH
            return np.where(inside, -2.0 * C0_CURVATURE * (x - BUMP_CENTER), 0.0)
        idx = np.clip(np.searchsorted(self.x_table, x, side="right") - 1, 0, len(self.x_table) - 2)
        return (self.b_table[idx + 1] - self.b_table[idx]) / (
            self.x_table[idx + 1] - self.x_table[idx]
        )

    @property
    def breakpoints(self) -> Tuple[float, ...]:
        """Abscissae where B is not smooth (or where its support starts/ends)"""
        if self.kind is BathymetryKind.SMOOTH_BUMP:
            return (BUMP_CENTER - SMOOTH_HALF_WIDTH, BUMP_CENTER + SMOOTH_HALF_WIDTH)
        if self.kind is BathymetryKind.C0_PARABOLA:
            return (BUMP_CENTER - C0_HALF_WIDTH, BUMP_CENTER + C0_HALF_WIDTH)
        if self.kind is BathymetryKind.TABULATED:
            return tuple(float(x) for x in self.x_table)
        return ()

    def crest(self, x_L: float, x_R: float) -> float:
        """Abscissa of the maximum of B on [x_L, x_R]"""
        if self.kind in (BathymetryKind.SMOOTH_BUMP, BathymetryKind.C0_PARABOLA):
            if x_L <= BUMP_CENTER <= x_R:
                return BUMP_CENTER
        if self.kind is BathymetryKind.TABULATED:
            inside = (self.x_table >= x_L) & (self.x_table <= x_R)
            if np.any(inside):
                xs = self.x_table[inside]
                return float(xs[np.argmax(self.b_table[inside])])
        grid = np.linspace(x_L, x_R, 10001)
        return float(grid[np.argmax(self.value(grid))])
