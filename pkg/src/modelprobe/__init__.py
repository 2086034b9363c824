"""modelprobe: black-box testing for prediction APIs.

Generates realistic synthetic test cases, evaluates metamorphic and fairness
properties over tabular, text and time-series models, and orchestrates runs
with persistent results, metric reports and run comparison.
"""

__version__ = "0.1.0"

from .store import Store
from .catalog import install_builtin_catalog, builtin_definitions
from .gateway import GatewayClient, ModelSpec, MockModelServer, make_mock
from .service import Orchestrator

__all__ = [
    "__version__",
    "Store",
    "install_builtin_catalog",
    "builtin_definitions",
    "GatewayClient",
    "ModelSpec",
    "MockModelServer",
    "make_mock",
    "Orchestrator",
]
