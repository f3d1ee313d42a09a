"""passkeylab: a deterministic, in-process testbed for FIDO2/WebAuthn attacks.

Every host, network path, certificate and authenticator is simulated; runs are
reproducible from a seed and leave an NDJSON transcript from which the verdict
can be recomputed.
"""

from .errors import PasskeyLabError
from .report import replay, summarize
from .scenarios import REGISTRY, ScenarioConfig, ScenarioOutcome, default_config, get_scenario, run
from .verdict import derive_verdict

__version__ = "0.1.0"

__all__ = [
    "REGISTRY", "PasskeyLabError", "ScenarioConfig", "ScenarioOutcome", "default_config", "derive_verdict",
    "get_scenario", "replay", "run", "summarize",
]
