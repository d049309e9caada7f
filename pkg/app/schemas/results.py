from typing import List, Optional

from pydantic import BaseModel, Field


class RunSummary(BaseModel):
    """Outcome of one simulation on one mesh"""

    test: str = Field(..., description="Test case")
    basis: str = Field(..., description="Basis label such as B4 or PGL3")
    scheme: str = Field(..., description="Space scheme + stabilization, e.g. wbhs+jt")
    n_elem: int = Field(..., ge=2)
    h: float = Field(..., gt=0, description="Element length")
    t_final: float = Field(..., ge=0)
    steps: int = Field(..., ge=0)
    retries: int = Field(0, ge=0, description="Time-step halvings after failed steps")
    errH_L1: Optional[float] = Field(None, ge=0)
    errq_L1: Optional[float] = Field(None, ge=0)
    runtime_s: float = Field(0.0, ge=0)
    solution_path: Optional[str] = None


class ConvergenceRow(BaseModel):
    n_elem: int = Field(..., ge=2)
    h: float = Field(..., gt=0)
    errH: float = Field(..., ge=0)
    orderH: Optional[float] = None
    errq: float = Field(..., ge=0)
    orderq: Optional[float] = None


class ConvergenceReport(BaseModel):
    """Errors per mesh level with pairwise and least-squares orders"""

    test: str
    basis: str
    scheme: str
    rows: List[ConvergenceRow]
    fitted_orderH: Optional[float] = Field(None, description="Least-squares slope of log errH vs log h")
    fitted_orderq: Optional[float] = Field(None, description="Least-squares slope of log errq vs log h")
    flagged_levels: List[int] = Field(
        default_factory=list,
        description="Element counts whose error failed to decrease at the round-off floor",
    )
    csv_path: Optional[str] = None
    dat_path: Optional[str] = None


class WBCheckReport(BaseModel):
    """Drift from the lake at rest after T_f"""

    basis: str
    scheme: str
    n_elem: int
    t_final: float
    eta_L1: float = Field(..., ge=0)
    eta_Linf: float = Field(..., ge=0)
    q_L1: float = Field(..., ge=0)
    q_Linf: float = Field(..., ge=0)
    threshold: float = Field(..., gt=0)
    passed: bool

    @property
    def status(self) -> str:
        return "PASS" if self.passed else "FAIL"


class PerturbationReport(BaseModel):
    """Perturbation run on one mesh: quiet-region oscillation metric and outputs"""

    test: str
    basis: str
    scheme: str
    n_elem: int
    amplitude: float = Field(..., ge=0)
    t_final: float
    quiet_metric: float = Field(..., ge=0, description="max |eta - eta_s| outside the reachable wave region")
    quiet_window: List[float] = Field(..., description="Excluded region [a, b] at T_f")
    max_deviation: float = Field(..., ge=0)
    series_path: Optional[str] = None
    solution_path: Optional[str] = None
