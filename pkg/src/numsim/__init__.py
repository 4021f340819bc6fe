"""numsim: string vs. numerical structure in model similarity judgments over integers."""

__version__ = "0.1.0"

from .accel import NUMBA_ENABLED  # noqa: F401
