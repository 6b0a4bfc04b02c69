"""Finite-time quantum Otto cycles with a collective-spin working fluid."""
from .otto import CycleConfig, CycleRecord, run_cycle, run_until_limit_cycle
from .spinops import SpinBasis

__version__ = "0.1.0"

__all__ = ["CycleConfig", "CycleRecord", "SpinBasis", "run_cycle", "run_until_limit_cycle", "__version__"]
