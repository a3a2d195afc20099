"""circlab: cycle statistics and fluctuation identities for diffusions on the circle."""

__version__ = "0.1.0"

from .analytics import (  # noqa: E402
    StationarySolution,
    affinity,
    classify_reversibility,
    entropy_production_rate,
    forward_splitting_probability,
    net_circulation,
    potential,
    scale_function,
    stationary_density,
    summarize,
    time_reversed_drift,
)
from .cycles import CycleEventLog, detect_cycle_events, empirical_circulations, empirical_flow, renewal_view  # noqa: E402
from .model import CircleDiffusionModel, FourierSeries, TabulatedSeries, load_model  # noqa: E402
from .oracle import RingChain  # noqa: E402
from .reports import VerificationReport  # noqa: E402
from .simulation import (  # noqa: E402
    Censored,
    FirstCycle,
    PathRecord,
    SimulationConfig,
    simulate_batch,
    simulate_cycles,
    simulate_first_cycle,
    simulate_path,
)

__all__ = [
    "CircleDiffusionModel",
    "FourierSeries",
    "TabulatedSeries",
    "load_model",
    "StationarySolution",
    "potential",
    "scale_function",
    "affinity",
    "stationary_density",
    "net_circulation",
    "entropy_production_rate",
    "forward_splitting_probability",
    "time_reversed_drift",
    "classify_reversibility",
    "summarize",
    "SimulationConfig",
    "PathRecord",
    "FirstCycle",
    "Censored",
    "simulate_path",
    "simulate_first_cycle",
    "simulate_cycles",
    "simulate_batch",
    "CycleEventLog",
    "detect_cycle_events",
    "empirical_circulations",
    "renewal_view",
    "empirical_flow",
    "RingChain",
    "VerificationReport",
]
