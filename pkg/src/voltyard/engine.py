"""Batched execution engine.

Holds the flat state/table/output arrays the kernels operate on and wraps
them in a vectorised environment API with deterministic seeding and
optional auto-reset.  Environments in a batch are fully independent: env i
is driven only by (its seed, its episode counter, its actions), so a batch
run reproduces the corresponding sequential runs bit for bit and results do
not depend on how many worker threads execute the step.
"""

from __future__ import annotations

import math
import platform
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import data as data_mod
from .backends import make_core, resolve_backend
from .config import EnvConfig, ObsLayout
from .errors import DataError, EpisodeDone
from .rng import split_seed
from .topology import StationTree, compile_tree
from .vehicles import BatterySpec, charge_limit


@dataclass
class KernelTables:
    """Read-only flat inputs shared by every environment in a batch."""

    # station
    n_ports: int
    n_slots: int
    volt: np.ndarray
    imax_c: np.ndarray
    imax_d: np.ndarray
    eta_c: np.ndarray
    eta_d: np.ndarray
    i_denom: np.ndarray
    kind: np.ndarray
    order: np.ndarray
    n_nodes: int
    node_cap: np.ndarray
    node_eta: np.ndarray
    node_ptr: np.ndarray
    node_leaf: np.ndarray
    node_order: np.ndarray
    max_passes: int
    # battery
    battery_enabled: bool
    b_volt: float
    b_cap: float
    b_rmax: float
    b_tau: float
    b_eta_c: float
    b_eta_d: float
    b_init_soc: float
    b_imax: float
    b_idenom: float
    # config
    k: int
    episode_steps: int
    steps_per_day: int
    dt_min: int
    dt_h: float
    p_sell: float
    c_dt: float
    beta: float
    alphas: np.ndarray
    allow_discharge: bool
    horizon: int
    obs_len: int
    # dataset
    n_days: int
    buy: np.ndarray
    sellg: np.ndarray
    lam: np.ndarray
    lam_len: int
    wk_scale: float
    we_scale: float
    weekday: np.ndarray
    has_moer: bool
    moer: np.ndarray
    has_dgrid: bool
    dgrid: np.ndarray
    sin_t: np.ndarray
    cos_t: np.ndarray
    # car catalog / user scenario
    n_cat: int
    cat_cum: np.ndarray
    cat_cap: np.ndarray
    cat_rac: np.ndarray
    cat_rdc: np.ndarray
    cat_tau: np.ndarray
    stay_lo: int
    stay_hi: int
    soc_lo: float
    soc_hi: float
    frac_lo: float
    frac_hi: float
    p_charge: float


def build_tables(config: EnvConfig, station: StationTree, dataset: data_mod.Dataset) -> KernelTables:
    evses = station.evses
    n = len(evses)
    tree = compile_tree(station, include_battery=config.battery_enabled)

    battery = station.battery
    if config.battery_enabled and battery is None:
        from .config import DEFAULT_BATTERY

        battery = DEFAULT_BATTERY
    if battery is None:
        battery = BatterySpec(voltage_v=1.0, capacity_kwh=1.0, r_max_kw=0.0, tau=0.5)

    imax_c = np.array([e.i_max_charge_a for e in evses], dtype=np.float64)
    imax_d = np.array([e.i_max_discharge_a for e in evses], dtype=np.float64)
    i_denom = np.where(imax_c > 0, imax_c, np.where(imax_d > 0, imax_d, 1.0))

    if dataset.prices.n_days < 1:
        raise DataError("dataset must cover at least one day")
    steps_per_day = config.steps_per_day
    weekday = np.array(
        [1 if dataset.prices.is_weekday(d) else 0 for d in range(dataset.prices.n_days)],
        dtype=np.int8,
    )
    angles = 2.0 * math.pi * np.arange(steps_per_day) / steps_per_day
    aux = dataset.aux
    has_moer = aux.moer_kg_per_kwh is not None
    has_dgrid = aux.grid_demand_kwh is not None
    n_hours = len(dataset.prices.buy)

    def hourly(series, present):
        if not present:
            return np.zeros(1)
        series = np.asarray(series, dtype=np.float64)
        if len(series) >= n_hours:
            return series[:n_hours].copy()
        # short aux series tile to cover the price range
        reps = -(-n_hours // len(series))
        return np.tile(series, reps)[:n_hours]

    layout = ObsLayout(n_ports=n, horizon=config.observe_price_horizon)
    scen = dataset.scenario
    b_imax = 1000.0 * battery.r_max_kw / battery.voltage_v

    return KernelTables(
        n_ports=n,
        n_slots=tree.n_slots,
        volt=np.array([e.voltage_v for e in evses], dtype=np.float64),
        imax_c=imax_c,
        imax_d=imax_d,
        eta_c=np.array([e.eta_charge for e in evses], dtype=np.float64),
        eta_d=np.array([e.eta_discharge for e in evses], dtype=np.float64),
        i_denom=i_denom.astype(np.float64),
        kind=np.array([1 if e.kind == "dc" else 0 for e in evses], dtype=np.int64),
        order=np.asarray(station.parking_order, dtype=np.int64),
        n_nodes=len(tree.node_cap),
        node_cap=tree.node_cap,
        node_eta=tree.node_eta,
        node_ptr=tree.node_ptr,
        node_leaf=tree.node_leaf,
        node_order=tree.order_desc,
        max_passes=2 * tree.depth + 4,
        battery_enabled=config.battery_enabled,
        b_volt=float(battery.voltage_v),
        b_cap=float(battery.capacity_kwh),
        b_rmax=float(battery.r_max_kw),
        b_tau=float(battery.tau),
        b_eta_c=battery.eta_charge,
        b_eta_d=battery.eta_discharge,
        b_init_soc=config.battery_init_soc,
        b_imax=b_imax,
        b_idenom=b_imax if (config.battery_enabled and b_imax > 0) else 1.0,
        k=config.discretization_k,
        episode_steps=config.episode_steps,
        steps_per_day=steps_per_day,
        dt_min=config.dt_min,
        dt_h=config.dt_hours,
        p_sell=float(config.p_sell_eur_per_kwh),
        c_dt=float(config.fixed_cost_per_step),
        beta=float(config.beta),
        alphas=config.alpha_array(),
        allow_discharge=config.allow_discharge,
        horizon=config.observe_price_horizon,
        obs_len=layout.length,
        n_days=dataset.prices.n_days,
        buy=np.asarray(dataset.prices.buy, dtype=np.float64),
        sellg=np.asarray(dataset.prices.sell_grid, dtype=np.float64),
        lam=np.asarray(dataset.arrivals.rates_per_step, dtype=np.float64),
        lam_len=len(dataset.arrivals.rates_per_step),
        wk_scale=float(dataset.arrivals.weekday_scale),
        we_scale=float(dataset.arrivals.weekend_scale),
        weekday=weekday,
        has_moer=has_moer,
        moer=hourly(aux.moer_kg_per_kwh, has_moer),
        has_dgrid=has_dgrid,
        dgrid=hourly(aux.grid_demand_kwh, has_dgrid),
        sin_t=np.sin(angles),
        cos_t=np.cos(angles),
        n_cat=len(dataset.cars.entries),
        cat_cum=dataset.cars.cumulative_weights(),
        cat_cap=np.array([e.profile.capacity_kwh for e in dataset.cars.entries], dtype=np.float64),
        cat_rac=np.array([e.profile.r_max_ac_kw for e in dataset.cars.entries], dtype=np.float64),
        cat_rdc=np.array([e.profile.r_max_dc_kw for e in dataset.cars.entries], dtype=np.float64),
        cat_tau=np.array([e.profile.tau for e in dataset.cars.entries], dtype=np.float64),
        stay_lo=int(scen.stay_steps_range[0]),
        stay_hi=int(scen.stay_steps_range[1]),
        soc_lo=float(scen.soc_arrival_range[0]),
        soc_hi=float(scen.soc_arrival_range[1]),
        frac_lo=float(scen.requested_fraction_range[0]),
        frac_hi=float(scen.requested_fraction_range[1]),
        p_charge=float(scen.p_charge_sensitive),
    )


@dataclass
class StateArrays:
    """Per-environment mutable state, one row per env."""

    occ: np.ndarray
    i_drawn: np.ndarray
    soc: np.ndarray
    de: np.ndarray
    dtrem: np.ndarray
    cap: np.ndarray
    rbar: np.ndarray
    tau: np.ndarray
    pref: np.ndarray
    rhat: np.ndarray
    b_i: np.ndarray
    b_soc: np.ndarray
    b_rhat: np.ndarray
    step: np.ndarray
    day: np.ndarray
    episode: np.ndarray
    env_seed: np.ndarray
    ep_profit: np.ndarray
    ep_reward: np.ndarray
    ep_missing: np.ndarray
    ep_energy: np.ndarray
    ep_overtime: np.ndarray
    ep_declined: np.ndarray
    ep_departures: np.ndarray

    @classmethod
    def allocate(cls, b: int, n_ports: int, env_seeds: np.ndarray) -> "StateArrays":
        f = lambda *shape: np.zeros(shape, dtype=np.float64)
        i = lambda *shape: np.zeros(shape, dtype=np.int64)
        return cls(
            occ=np.zeros((b, n_ports), dtype=np.int8),
            i_drawn=f(b, n_ports),
            soc=f(b, n_ports),
            de=f(b, n_ports),
            dtrem=i(b, n_ports),
            cap=f(b, n_ports),
            rbar=f(b, n_ports),
            tau=f(b, n_ports),
            pref=np.zeros((b, n_ports), dtype=np.int8),
            rhat=f(b, n_ports),
            b_i=f(b),
            b_soc=f(b),
            b_rhat=f(b),
            step=i(b),
            day=i(b),
            episode=i(b),
            env_seed=np.asarray(env_seeds, dtype=np.uint64).copy(),
            ep_profit=f(b),
            ep_reward=f(b),
            ep_missing=f(b),
            ep_energy=f(b),
            ep_overtime=i(b),
            ep_declined=i(b),
            ep_departures=i(b),
        )


@dataclass
class StepOutputs:
    """Per-step kernel outputs, one row per env; overwritten every step."""

    obs: np.ndarray
    reward: np.ndarray
    done: np.ndarray
    breakdown: np.ndarray
    flows: np.ndarray
    declined: np.ndarray
    arrivals_m: np.ndarray
    dep_n: np.ndarray
    dep_port: np.ndarray
    dep_missing: np.ndarray
    dep_overtime: np.ndarray
    dep_early: np.ndarray
    dep_pref: np.ndarray
    dep_cap: np.ndarray
    dep_soc: np.ndarray
    term_overtime: np.ndarray
    ep_stats: np.ndarray
    i_att: np.ndarray
    i_used: np.ndarray
    delivered: np.ndarray
    b_delivered: np.ndarray
    scratch: np.ndarray

    @classmethod
    def allocate(cls, b: int, n_ports: int, n_slots: int, obs_len: int) -> "StepOutputs":
        f = lambda *shape: np.zeros(shape, dtype=np.float64)
        i = lambda *shape: np.zeros(shape, dtype=np.int64)
        return cls(
            obs=f(b, obs_len),
            reward=f(b),
            done=np.zeros(b, dtype=np.int8),
            breakdown=f(b, 10),
            flows=f(b, 5),
            declined=i(b),
            arrivals_m=i(b),
            dep_n=i(b),
            dep_port=i(b, n_ports),
            dep_missing=f(b, n_ports),
            dep_overtime=i(b, n_ports),
            dep_early=i(b, n_ports),
            dep_pref=i(b, n_ports),
            dep_cap=f(b, n_ports),
            dep_soc=f(b, n_ports),
            term_overtime=i(b),
            ep_stats=f(b, 8),
            i_att=f(b, n_slots),
            i_used=f(b, n_slots),
            delivered=f(b, n_ports),
            b_delivered=f(b),
            scratch=f(b, n_slots),
        )


class BatchEnv:
    """B independent environments stepped in lockstep.

    Env i's randomness derives only from (its seed, episode counter, step),
    so trajectories are reproducible and identical under any worker count.
    With auto_reset, a finished env returns its terminal reward/info while
    its observation row is already the fresh reset observation.
    """

    def __init__(
        self,
        config: EnvConfig,
        station: StationTree,
        dataset: data_mod.Dataset,
        batch_size: int = 1,
        master_seed: int = 0,
        env_seeds=None,
        auto_reset: bool = True,
        backend: str | None = None,
        workers: int = 1,
    ):
        if batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if workers < 1:
            raise ValueError("workers must be >= 1")
        self.config = config
        self.station = station
        self.dataset = dataset
        self.batch_size = batch_size
        self.auto_reset = auto_reset
        self.workers = min(workers, batch_size)
        self.tables = build_tables(config, station, dataset)
        if env_seeds is None:
            env_seeds = [split_seed(master_seed, i) for i in range(batch_size)]
        elif len(env_seeds) != batch_size:
            raise ValueError("env_seeds length must equal batch_size")
        self.states = StateArrays.allocate(batch_size, self.tables.n_ports, env_seeds)
        self.outs = StepOutputs.allocate(
            batch_size, self.tables.n_ports, self.tables.n_slots, self.tables.obs_len
        )
        self.backend = resolve_backend(backend)
        self.core = make_core(self.tables, self.states, self.outs, self.backend)
        self._pool = ThreadPoolExecutor(self.workers) if self.workers > 1 else None
        self._needs_reset = True

    # -- properties -------------------------------------------------------------

    @property
    def n_ports(self) -> int:
        return self.tables.n_ports

    @property
    def action_size(self) -> int:
        return self.tables.n_ports + 1

    @property
    def actions_per_slot(self) -> int:
        return 2 * self.tables.k + 1

    @property
    def obs_length(self) -> int:
        return self.tables.obs_len

    def observation_layout(self) -> ObsLayout:
        return ObsLayout(n_ports=self.tables.n_ports, horizon=self.tables.horizon)

    # -- API ----------------------------------------------------------------------

    def reseed(self, master_seed: int) -> np.ndarray:
        """Re-derive every env's seed from a new master seed and reset."""
        for i in range(self.batch_size):
            self.states.env_seed[i] = split_seed(master_seed, i)
        self._needs_reset = True
        return self.reset()

    def reset(self) -> np.ndarray:
        """Reset every env; the first call starts episode 0, later calls advance.

        A fresh engine with the same seeds therefore reproduces the same
        episode sequence, while repeated resets walk through new days.
        """
        for b in range(self.batch_size):
            episode = 0 if self._needs_reset else int(self.states.episode[b]) + 1
            self.core.reset_env(b, episode)
        self._needs_reset = False
        return self.outs.obs.copy()

    def step(self, actions, collect_infos: bool = True):
        """Step every env; returns (obs, rewards, dones, infos).

        infos is a list of StepInfo (None when collect_infos=False); under
        auto_reset a done env's info is the terminal one while its obs row
        is the fresh reset observation.
        """
        if self._needs_reset:
            raise EpisodeDone("call reset() before step()")
        a = np.ascontiguousarray(actions, dtype=np.int64)
        if a.shape != (self.batch_size, self.action_size):
            raise ValueError(
                f"actions shape must be {(self.batch_size, self.action_size)}, got {a.shape}"
            )
        hi = 2 * self.tables.k
        if a.min() < 0 or a.max() > hi:
            raise ValueError(f"action indices must be in [0, {hi}]")
        if not self.auto_reset and (self.states.step >= self.tables.episode_steps).any():
            raise EpisodeDone("an episode is done and auto_reset is off")

        if self._pool is None:
            self.core.step_range(0, self.batch_size, a)
        else:
            bounds = np.linspace(0, self.batch_size, self.workers + 1).astype(int)
            futures = [
                self._pool.submit(self.core.step_range, bounds[w], bounds[w + 1], a)
                for w in range(self.workers)
                if bounds[w] < bounds[w + 1]
            ]
            for fut in futures:
                fut.result()

        infos = self._build_infos() if collect_infos else None
        dones = self.outs.done.astype(bool)
        if self.auto_reset:
            for b in np.nonzero(dones)[0]:
                self.core.reset_env(int(b), int(self.states.episode[b]) + 1)
        rewards = self.outs.reward.copy()
        return self.outs.obs.copy(), rewards, dones, infos

    def close(self) -> None:
        if self._pool is not None:
            self._pool.shutdown()
            self._pool = None

    def _build_infos(self) -> list:
        from .env import step_info_from_outputs

        return [
            step_info_from_outputs(self.outs, b, self.tables)
            for b in range(self.batch_size)
        ]


@dataclass(frozen=True)
class ThroughputReport:
    steps_per_second: float
    wall_seconds: float
    batch_size: int
    total_steps: int
    backend: str
    workers: int
    hardware: str

    def to_dict(self) -> dict:
        return {
            "steps_per_second": self.steps_per_second,
            "wall_seconds": self.wall_seconds,
            "batch_size": self.batch_size,
            "total_steps": self.total_steps,
            "backend": self.backend,
            "workers": self.workers,
            "hardware": self.hardware,
        }


def hardware_fingerprint() -> str:
    cpu = platform.processor() or platform.machine()
    try:
        with open("/proc/cpuinfo") as fh:
            for line in fh:
                if line.lower().startswith("model name"):
                    cpu = line.split(":", 1)[1].strip()
                    break
    except OSError:
        pass
    return f"{cpu} | {platform.system()} {platform.release()} | python {platform.python_version()}"


def throughput_probe(
    config: EnvConfig,
    station: StationTree,
    dataset: data_mod.Dataset,
    batch_size: int = 1,
    total_steps: int = 100_000,
    seed: int = 0,
    backend: str | None = None,
    workers: int = 1,
) -> ThroughputReport:
    """Wall-clock steps/second under a random policy, infos disabled.

    total_steps counts aggregate env steps across the batch.
    """
    if total_steps < 1:
        raise ValueError("total_steps must be >= 1")
    from .policies import RandomPolicy

    env = BatchEnv(
        config, station, dataset,
        batch_size=batch_size, master_seed=seed, auto_reset=True,
        backend=backend, workers=workers,
    )
    policy = RandomPolicy(seed=seed, n_ports=env.n_ports, k=config.discretization_k)
    policy.bind(range(batch_size))
    obs = env.reset()
    n_calls = -(-total_steps // batch_size)
    t0 = time.perf_counter()
    for _ in range(n_calls):
        obs, _, _, _ = env.step(policy.actions(obs), collect_infos=False)
    elapsed = time.perf_counter() - t0
    env.close()
    done_steps = n_calls * batch_size
    return ThroughputReport(
        steps_per_second=done_steps / elapsed,
        wall_seconds=elapsed,
        batch_size=batch_size,
        total_steps=done_steps,
        backend=env.backend,
        workers=workers,
        hardware=hardware_fingerprint(),
    )
