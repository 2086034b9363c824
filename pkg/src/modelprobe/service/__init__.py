from .orchestrator import Orchestrator, register_tester, WorkerContext
from .reports import build_metric_report

__all__ = ["Orchestrator", "register_tester", "WorkerContext", "build_metric_report"]
