"""Environment configuration, penalty coefficients and observation layout."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import data as data_mod
from . import topology
from .errors import DataError
from .vehicles import BatterySpec

# Penalty order; fixed because the reward subtracts alpha*c in exactly this
# sequence and the identity test recomputes it the same way.
PENALTY_NAMES = (
    "constraint",
    "sat0",
    "sat1",
    "sustain",
    "declined",
    "degrad_battery",
    "degrad_cars",
    "grid",
)

DEFAULT_BATTERY = BatterySpec(voltage_v=800.0, capacity_kwh=200.0, r_max_kw=100.0, tau=0.8)


@dataclass
class EnvConfig:
    """Simulation parameters; defaults follow the reference setup.

    alpha maps penalty names (see PENALTY_NAMES) to coefficients; missing
    names count as 0, which makes the reward equal the raw profit.
    """

    dt_min: int = 5
    episode_steps: int = 288
    discretization_k: int = 10
    p_sell_eur_per_kwh: float = 0.75
    fixed_cost_per_step: float = 0.0
    alpha: dict = field(default_factory=dict)
    beta: float = 0.0
    allow_discharge: bool = True
    battery_enabled: bool = False
    battery_init_soc: float = 0.5
    observe_price_horizon: int = 0

    def __post_init__(self):
        if self.dt_min <= 0 or 1440 % self.dt_min != 0:
            raise ValueError("dt_min must be positive and divide 1440")
        if self.episode_steps < 1:
            raise ValueError("episode_steps must be >= 1")
        if self.discretization_k < 1:
            raise ValueError("discretization_k must be >= 1")
        if not 0.0 <= self.battery_init_soc <= 1.0:
            raise ValueError("battery_init_soc must be in [0, 1]")
        if self.observe_price_horizon < 0:
            raise ValueError("observe_price_horizon must be >= 0")
        unknown = set(self.alpha) - set(PENALTY_NAMES)
        if unknown:
            raise ValueError(f"unknown penalty name(s) {sorted(unknown)}; valid: {PENALTY_NAMES}")

    def alpha_array(self) -> np.ndarray:
        return np.array([float(self.alpha.get(n, 0.0)) for n in PENALTY_NAMES])

    @property
    def dt_hours(self) -> float:
        return self.dt_min / 60.0

    @property
    def steps_per_day(self) -> int:
        return 1440 // self.dt_min

    def to_dict(self) -> dict:
        return {
            "dt_min": self.dt_min,
            "episode_steps": self.episode_steps,
            "discretization_k": self.discretization_k,
            "p_sell_eur_per_kwh": self.p_sell_eur_per_kwh,
            "fixed_cost_per_step": self.fixed_cost_per_step,
            "alpha": {k: float(v) for k, v in sorted(self.alpha.items())},
            "beta": self.beta,
            "allow_discharge": self.allow_discharge,
            "battery_enabled": self.battery_enabled,
            "battery_init_soc": self.battery_init_soc,
            "observe_price_horizon": self.observe_price_horizon,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "EnvConfig":
        return cls(**obj)


@dataclass(frozen=True)
class ObsLayout:
    """Offsets into the flat observation vector.

    Per port (6 entries each): occupied, current/i_max, soc, de_remain/C,
    dt_remain/episode_steps, preference.  Then battery (soc, current/i_max),
    then globals (p_buy, p_sell_grid, p_sell, sin/cos of step-of-day,
    is_weekday, day/365), then the optional future-buy-price window.
    """

    n_ports: int
    horizon: int
    per_port: int = 6

    @property
    def battery_offset(self) -> int:
        return self.per_port * self.n_ports

    @property
    def globals_offset(self) -> int:
        return self.battery_offset + 2

    @property
    def horizon_offset(self) -> int:
        return self.globals_offset + 7

    @property
    def length(self) -> int:
        return self.horizon_offset + self.horizon

    def port_offset(self, i: int) -> int:
        return self.per_port * i


def fingerprint(config: EnvConfig, station: topology.StationTree, dataset: data_mod.Dataset) -> str:
    """Short stable hash identifying a (config, station, dataset) combination."""
    blob = json.dumps(
        {
            "config": config.to_dict(),
            "station": topology.station_to_dict(station),
            "dataset": dataset.meta(),
        },
        sort_keys=True,
    ).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


@dataclass
class RunConfig:
    """A fully resolved simulation setup loaded from a config file."""

    env: EnvConfig
    station: topology.StationTree
    dataset: data_mod.Dataset


_PRESET_NAMES = {
    "single_type": topology.LAYOUT_SINGLE,
    "multi_type": topology.LAYOUT_MULTI,
    "nested_splitters": topology.LAYOUT_NESTED,
}


def _station_from_spec(spec: dict, base: Path, battery: BatterySpec | None) -> topology.StationTree:
    if "file" in spec:
        return topology.load_station(base / spec["file"])
    layout = _PRESET_NAMES.get(spec.get("preset", "multi_type"))
    if layout is None:
        raise DataError(f"unknown station preset {spec.get('preset')!r}")
    return topology.preset_station(
        layout,
        ac_count=int(spec.get("ac_count", 6)),
        dc_count=int(spec.get("dc_count", 10)),
        battery=battery,
    )


def load_run_config(path, data_dir=None) -> RunConfig:
    """Parse a JSON run-config; relative paths resolve against the file.

    data_dir overrides the file's data source with a dataset directory.
    The simulation seed is deliberately not part of this file: synthetic
    data is seeded only by the config's own "seed" entry (default 0), so
    changing rollout seeds never changes the dataset.
    """
    path = Path(path)
    try:
        obj = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"{path}: {exc}") from exc
    base = path.parent

    env = EnvConfig.from_dict(obj.get("env", {}))

    battery = None
    if "battery" in obj:
        b = obj["battery"]
        battery = BatterySpec(
            voltage_v=float(b["voltage_v"]),
            capacity_kwh=float(b["capacity_kwh"]),
            r_max_kw=float(b["r_max_kw"]),
            tau=float(b.get("tau", 0.8)),
            eta_charge=float(b.get("eta_charge", 1.0)),
            eta_discharge=float(b.get("eta_discharge", 1.0)),
        )

    station = _station_from_spec(obj.get("station", {}), base, battery)

    data_spec = obj.get("data", {})
    if data_dir is not None:
        dataset = data_mod.load_dataset(data_dir)
    elif "dir" in data_spec:
        dataset = data_mod.load_dataset(base / data_spec["dir"])
    else:
        syn = data_spec.get("synthetic", {})
        dataset = data_mod.generate_synthetic_defaults(
            scenario=syn.get("scenario", "shopping"),
            traffic=syn.get("traffic", "medium"),
            region=syn.get("region", "eu"),
            seed=int(syn.get("seed", 0)),
            days=int(syn.get("days", 365)),
            dt_min=env.dt_min,
            with_aux=bool(syn.get("with_aux", False)),
        )
    return RunConfig(env=env, station=station, dataset=dataset)


def default_setup(
    env: EnvConfig | None = None,
    scenario: str = "shopping",
    traffic: str = "medium",
    region: str = "eu",
    seed: int = 0,
    days: int = 365,
    with_aux: bool = False,
) -> RunConfig:
    """The reference 16-charger station on synthetic data."""
    env = env if env is not None else EnvConfig()
    battery = DEFAULT_BATTERY if env.battery_enabled else None
    return RunConfig(
        env=env,
        station=topology.default_station(battery=battery),
        dataset=data_mod.generate_synthetic_defaults(
            scenario=scenario, traffic=traffic, region=region,
            seed=seed, days=days, dt_min=env.dt_min, with_aux=with_aux,
        ),
    )
