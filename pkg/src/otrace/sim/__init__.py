from .config import ScenarioConfig, Strategy, load_scenario
from .metrics import detection_metrics
from .runner import Deviation, DeviationKind, ScenarioResult, run_scenario

__all__ = [
    "ScenarioConfig",
    "Strategy",
    "load_scenario",
    "run_scenario",
    "ScenarioResult",
    "Deviation",
    "DeviationKind",
    "detection_metrics",
]
