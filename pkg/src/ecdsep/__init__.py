"""Energy-conserving descent (ECDSep) with baselines, theory and a benchmark harness."""

from ecdsep._accel import BACKEND
from ecdsep.core import NumericalError, ObjectiveEvaluation, RngStream
from ecdsep.optimizer import EcdHyperParams, EcdState, TrajectoryLog, TrajectoryRecord, init, run, step

__all__ = [
    "BACKEND",
    "EcdHyperParams",
    "EcdState",
    "NumericalError",
    "ObjectiveEvaluation",
    "RngStream",
    "TrajectoryLog",
    "TrajectoryRecord",
    "init",
    "run",
    "step",
]
__version__ = "0.1.0"
