import logging
import time
from typing import Optional

logger = logging.getLogger(__name__)


class timed:
    """Context manager that measures the wall-clock time of a block"""

    def __init__(self, label: str, log_level: int = logging.INFO):
        self.label = label
        self.log_level = log_level
        self.start_time: Optional[float] = None
        self.elapsed: float = 0.0

    def __enter__(self) -> "timed":
        self.start_time = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb) -> bool:
        self.elapsed = time.perf_counter() - self.start_time
        status = "failed" if exc_type is not None else "done"
        logger.log(self.log_level, f"[TIMING] {self.label} {status} in {self.elapsed:.3f}s")
        return False
