"""Single-environment API over the batched engine.

One ChargingEnv wraps a batch of size one and presents structured state
snapshots, typed reward breakdowns and per-step info records.  The heavy
lifting (and the multi-env fast path) lives in ``engine``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import data as data_mod
from .config import EnvConfig, ObsLayout, PENALTY_NAMES
from .engine import BatchEnv, KernelTables, StepOutputs
from .errors import EpisodeDone
from .topology import StationTree
from .vehicles import BatteryState, CarState


@dataclass(frozen=True)
class RewardBreakdown:
    """Profit and the individual penalty terms behind one step's reward.

    total = profit_eur - sum(alpha_c * c) with the penalties subtracted in
    PENALTY_NAMES order; the identity is exact, not just approximate.
    """

    profit_eur: float
    c_constraint: float
    c_sat0: float
    c_sat1: float
    c_sustain: float
    c_declined: float
    c_degrad_battery: float
    c_degrad_cars: float
    c_grid: float
    total: float

    def penalties(self) -> dict:
        return {
            "constraint": self.c_constraint,
            "sat0": self.c_sat0,
            "sat1": self.c_sat1,
            "sustain": self.c_sustain,
            "declined": self.c_declined,
            "degrad_battery": self.c_degrad_battery,
            "degrad_cars": self.c_degrad_cars,
            "grid": self.c_grid,
        }


@dataclass(frozen=True)
class EnergyFlows:
    """Energy bookkeeping for one step (kWh).

    e_grid_net == e_grid_in + e_to_grid + e_battery_net holds exactly:
    the net figure is computed as that sum and never re-derived.
    """

    e_net: float
    e_grid_in: float
    e_to_grid: float
    e_battery_net: float
    e_grid_net: float


@dataclass(frozen=True)
class Departure:
    port: int
    preference: int
    missing_kwh: float
    overtime_steps: int
    early_steps: int
    capacity_kwh: float
    soc_final: float


@dataclass(frozen=True)
class EpisodeStats:
    profit_eur: float
    reward: float
    missing_kwh: float
    overtime_steps: int
    declined: int
    energy_net_kwh: float
    departures: int
    terminal_overtime_steps: int


@dataclass(frozen=True)
class StepInfo:
    flows: EnergyFlows
    breakdown: RewardBreakdown
    departures: tuple[Departure, ...]
    declined: int
    arrivals_sampled: int
    done: bool
    episode: EpisodeStats | None
    # raw per-port diagnostics (amps / kWh), battery last in the current vectors
    currents_attempted_a: np.ndarray
    currents_applied_a: np.ndarray
    delivered_kwh: np.ndarray
    battery_delivered_kwh: float


def step_info_from_outputs(outs: StepOutputs, b: int, tables: KernelTables) -> StepInfo:
    br = outs.breakdown[b]
    breakdown = RewardBreakdown(
        profit_eur=br[0], c_constraint=br[1], c_sat0=br[2], c_sat1=br[3],
        c_sustain=br[4], c_declined=br[5], c_degrad_battery=br[6],
        c_degrad_cars=br[7], c_grid=br[8], total=br[9],
    )
    fl = outs.flows[b]
    flows = EnergyFlows(
        e_net=fl[0], e_grid_in=fl[1], e_to_grid=fl[2],
        e_battery_net=fl[3], e_grid_net=fl[4],
    )
    deps = tuple(
        Departure(
            port=int(outs.dep_port[b, j]),
            preference=int(outs.dep_pref[b, j]),
            missing_kwh=float(outs.dep_missing[b, j]),
            overtime_steps=int(outs.dep_overtime[b, j]),
            early_steps=int(outs.dep_early[b, j]),
            capacity_kwh=float(outs.dep_cap[b, j]),
            soc_final=float(outs.dep_soc[b, j]),
        )
        for j in range(int(outs.dep_n[b]))
    )
    done = bool(outs.done[b])
    episode = None
    if done:
        es = outs.ep_stats[b]
        episode = EpisodeStats(
            profit_eur=es[0], reward=es[1], missing_kwh=es[2],
            overtime_steps=int(es[3]), declined=int(es[4]),
            energy_net_kwh=es[5], departures=int(es[6]),
            terminal_overtime_steps=int(es[7]),
        )
    return StepInfo(
        flows=flows,
        breakdown=breakdown,
        departures=deps,
        declined=int(outs.declined[b]),
        arrivals_sampled=int(outs.arrivals_m[b]),
        done=done,
        episode=episode,
        currents_attempted_a=outs.i_att[b].copy(),
        currents_applied_a=outs.i_used[b].copy(),
        delivered_kwh=outs.delivered[b].copy(),
        battery_delivered_kwh=float(outs.b_delivered[b]),
    )


@dataclass(frozen=True)
class PortState:
    occupied: bool
    i_drawn_a: float
    car: CarState | None


@dataclass(frozen=True)
class EnvState:
    """Structured snapshot of one environment (copies, safe to keep)."""

    step: int
    day_index: int
    episode: int
    ports: tuple[PortState, ...]
    battery: BatteryState | None
    metrics: EpisodeStats


class ChargingEnv:
    """One station simulated over one episode at a time.

    reset() samples an episode day uniformly from the price data (seeded);
    step() applies one action vector of length n_ports+1 (battery last),
    returning (state, observation, reward, done, info).  Stepping a done
    episode raises EpisodeDone.
    """

    def __init__(
        self,
        config: EnvConfig,
        station: StationTree,
        dataset: data_mod.Dataset,
        seed: int = 0,
        backend: str | None = None,
    ):
        self._batch = BatchEnv(
            config, station, dataset,
            batch_size=1, master_seed=seed, auto_reset=False, backend=backend,
        )
        self.config = config
        self.station = station
        self.dataset = dataset

    @property
    def engine(self) -> BatchEnv:
        """The underlying size-1 batch engine (arrays are live views)."""
        return self._batch

    @property
    def n_ports(self) -> int:
        return self._batch.n_ports

    @property
    def action_size(self) -> int:
        return self._batch.action_size

    @property
    def actions_per_slot(self) -> int:
        return self._batch.actions_per_slot

    @property
    def backend(self) -> str:
        return self._batch.backend

    def observation_layout(self) -> ObsLayout:
        return self._batch.observation_layout()

    def reset(self) -> tuple[EnvState, np.ndarray]:
        obs = self._batch.reset()
        return self.state(), obs[0]

    def step(self, action) -> tuple[EnvState, np.ndarray, float, bool, StepInfo]:
        a = np.asarray(action)
        if a.shape != (self.action_size,):
            raise ValueError(f"action must have shape ({self.action_size},), got {a.shape}")
        obs, rewards, dones, infos = self._batch.step(a[None, :])
        return self.state(), obs[0], float(rewards[0]), bool(dones[0]), infos[0]

    def state(self) -> EnvState:
        s = self._batch.states
        t = self._batch.tables
        ports = []
        for i in range(t.n_ports):
            occupied = bool(s.occ[0, i])
            car = None
            if occupied:
                car = CarState(
                    de_remain_kwh=float(s.de[0, i]),
                    dt_remain_steps=int(s.dtrem[0, i]),
                    soc=float(s.soc[0, i]),
                    r_hat_kw=float(s.rhat[0, i]),
                    capacity_kwh=float(s.cap[0, i]),
                    r_bar_kw=float(s.rbar[0, i]),
                    tau=float(s.tau[0, i]),
                    preference=int(s.pref[0, i]),
                )
            ports.append(PortState(occupied=occupied, i_drawn_a=float(s.i_drawn[0, i]), car=car))
        battery = None
        if t.battery_enabled:
            battery = BatteryState(
                i_battery_a=float(s.b_i[0]), soc=float(s.b_soc[0]), r_hat_kw=float(s.b_rhat[0])
            )
        return EnvState(
            step=int(s.step[0]),
            day_index=int(s.day[0]),
            episode=int(s.episode[0]),
            ports=tuple(ports),
            battery=battery,
            metrics=EpisodeStats(
                profit_eur=float(s.ep_profit[0]),
                reward=float(s.ep_reward[0]),
                missing_kwh=float(s.ep_missing[0]),
                overtime_steps=int(s.ep_overtime[0]),
                declined=int(s.ep_declined[0]),
                energy_net_kwh=float(s.ep_energy[0]),
                departures=int(s.ep_departures[0]),
                terminal_overtime_steps=int(self._batch.outs.term_overtime[0]),
            ),
        )

    def close(self) -> None:
        self._batch.close()


def decode_action(indices, i_max_a, k: int) -> np.ndarray:
    """Map action indices in [0, 2k] to signed current deltas (amps).

    Index k is zero; the grid spans -i_max .. +i_max in steps of i_max/k.
    Provided for inspection/tests; the kernels inline the same formula.
    When discharging is disabled the engine floors the resulting target
    current at zero instead of altering the decoded delta.
    """
    idx = np.asarray(indices, dtype=np.int64)
    if idx.min() < 0 or idx.max() > 2 * k:
        raise ValueError(f"action indices must be in [0, {2 * k}]")
    delta = (idx - k) / float(k) * np.asarray(i_max_a, dtype=np.float64)
    return delta
