"""voltyard: deterministic high-throughput EV charging-station simulator.

A discrete-time station model with a tree-constrained power architecture,
per-port current control, piecewise-linear charge curves, stochastic
arrivals and a profit-plus-penalties reward.  A compiled kernel (with a
bit-identical pure-Python fallback) drives batched, reproducible rollouts.
"""

from .backends import available_backends, resolve_backend
from .config import DEFAULT_BATTERY, EnvConfig, ObsLayout, PENALTY_NAMES, RunConfig, default_setup, fingerprint, load_run_config
from .data import (
    ArrivalProfile,
    AuxSeries,
    CarCatalog,
    CatalogEntry,
    Dataset,
    ExogenousFrame,
    PriceSeries,
    UserScenarioModel,
    frame_at,
    generate_synthetic_defaults,
    load_dataset,
    sample_arrival_count,
    sample_car,
    sample_user,
    save_dataset,
)
from .engine import BatchEnv, ThroughputReport, throughput_probe
from .env import (
    ChargingEnv,
    Departure,
    EnergyFlows,
    EnvState,
    EpisodeStats,
    PortState,
    RewardBreakdown,
    StepInfo,
    decode_action,
)
from .errors import DataError, EpisodeDone, SimError, StationError
from .evaluate import MetricsReport, evaluate, run_trajectory
from .policies import IdlePolicy, MaxChargePolicy, RandomPolicy, make_policy
from .topology import (
    ArchNode,
    EvseSpec,
    StationParams,
    StationTree,
    build_station,
    default_station,
    enforce_limits,
    load_station,
    node_load,
    preset_station,
    save_station,
    violation_excess,
)
from .vehicles import (
    BatterySpec,
    BatteryState,
    CarProfile,
    CarState,
    UserProfile,
    charge_limit,
    discharge_limit,
    integrate_battery,
    integrate_charge,
    power_to_current,
)

__version__ = "0.1.0"
