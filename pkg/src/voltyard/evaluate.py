"""Episode evaluation, metric aggregation and bit-stable exports."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import data as data_mod
from .config import EnvConfig, fingerprint
from .engine import BatchEnv
from .env import step_info_from_outputs
from .rng import split_seed
from .topology import StationTree

_EVAL_CHUNK = 128


@dataclass(frozen=True)
class MetricsReport:
    """Aggregates over evaluated episodes plus the per-episode records."""

    mean_daily_profit_eur: float
    std_daily_profit_eur: float
    mean_reward: float
    missing_kwh_per_departure: float
    overtime_steps_per_departure: float
    declined_per_episode: float
    energy_sold_kwh_per_episode: float
    episodes: int
    config_fingerprint: str
    per_episode: tuple[dict, ...]

    def to_dict(self) -> dict:
        return {
            "mean_daily_profit_eur": _r9(self.mean_daily_profit_eur),
            "std_daily_profit_eur": _r9(self.std_daily_profit_eur),
            "mean_reward": _r9(self.mean_reward),
            "missing_kwh_per_departure": _r9(self.missing_kwh_per_departure),
            "overtime_steps_per_departure": _r9(self.overtime_steps_per_departure),
            "declined_per_episode": _r9(self.declined_per_episode),
            "energy_sold_kwh_per_episode": _r9(self.energy_sold_kwh_per_episode),
            "episodes": self.episodes,
            "config_fingerprint": self.config_fingerprint,
            "per_episode": [
                {k: (_r9(v) if isinstance(v, float) else v) for k, v in ep.items()}
                for ep in self.per_episode
            ],
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "MetricsReport":
        return cls(
            mean_daily_profit_eur=obj["mean_daily_profit_eur"],
            std_daily_profit_eur=obj["std_daily_profit_eur"],
            mean_reward=obj["mean_reward"],
            missing_kwh_per_departure=obj["missing_kwh_per_departure"],
            overtime_steps_per_departure=obj["overtime_steps_per_departure"],
            declined_per_episode=obj["declined_per_episode"],
            energy_sold_kwh_per_episode=obj["energy_sold_kwh_per_episode"],
            episodes=obj["episodes"],
            config_fingerprint=obj["config_fingerprint"],
            per_episode=tuple(obj["per_episode"]),
        )


def _r9(x: float) -> float:
    """Round to 9 significant digits (the export precision)."""
    if x == 0 or not math.isfinite(x):
        return float(x)
    return float(f"{x:.9g}")


def evaluate(
    policy,
    config: EnvConfig,
    station: StationTree,
    dataset: data_mod.Dataset,
    episodes: int = 1,
    seed: int = 0,
    backend: str | None = None,
) -> MetricsReport:
    """Run `episodes` independent episodes and aggregate the metrics.

    Episode j always uses the env seed split(seed, j), so different
    policies evaluated with the same seed see identical days, arrivals and
    customer profiles (paired evaluation).
    """
    if episodes < 1:
        raise ValueError("episodes must be >= 1")
    records: list[dict] = []
    for lo in range(0, episodes, _EVAL_CHUNK):
        n = min(_EVAL_CHUNK, episodes - lo)
        env = BatchEnv(
            config, station, dataset,
            batch_size=n,
            env_seeds=[split_seed(seed, lo + j) for j in range(n)],
            auto_reset=False,
            backend=backend,
        )
        policy.bind(range(lo, lo + n))
        obs = env.reset()
        for _ in range(config.episode_steps):
            obs, _, _, _ = env.step(policy.actions(obs), collect_infos=False)
        es = env.outs.ep_stats
        for j in range(n):
            records.append(
                {
                    "episode": lo + j,
                    "profit_eur": float(es[j, 0]),
                    "reward": float(es[j, 1]),
                    "missing_kwh": float(es[j, 2]),
                    "overtime_steps": int(es[j, 3]),
                    "declined": int(es[j, 4]),
                    "energy_net_kwh": float(es[j, 5]),
                    "departures": int(es[j, 6]),
                    "terminal_overtime_steps": int(es[j, 7]),
                }
            )
        env.close()

    profits = np.array([r["profit_eur"] for r in records])
    rewards = np.array([r["reward"] for r in records])
    departures = sum(r["departures"] for r in records)
    missing = sum(r["missing_kwh"] for r in records)
    overtime = sum(r["overtime_steps"] for r in records)
    return MetricsReport(
        mean_daily_profit_eur=float(profits.mean()),
        std_daily_profit_eur=float(profits.std(ddof=1)) if episodes > 1 else 0.0,
        mean_reward=float(rewards.mean()),
        missing_kwh_per_departure=missing / departures if departures else 0.0,
        overtime_steps_per_departure=overtime / departures if departures else 0.0,
        declined_per_episode=float(np.mean([r["declined"] for r in records])),
        energy_sold_kwh_per_episode=float(np.mean([r["energy_net_kwh"] for r in records])),
        episodes=episodes,
        config_fingerprint=fingerprint(config, station, dataset),
        per_episode=tuple(records),
    )


# --- trajectory recording ----------------------------------------------------

TRAJECTORY_COLUMNS = (
    "step", "reward", "profit_eur",
    "e_net_kwh", "e_grid_in_kwh", "e_to_grid_kwh", "e_battery_net_kwh", "e_grid_net_kwh",
    "c_constraint", "c_sat0", "c_sat1", "c_sustain", "c_declined",
    "c_degrad_battery", "c_degrad_cars", "c_grid",
    "arrivals_sampled", "declined", "departures", "occupied_ports", "done",
)


def run_trajectory(
    policy,
    config: EnvConfig,
    station: StationTree,
    dataset: data_mod.Dataset,
    seed: int = 0,
    steps: int | None = None,
    backend: str | None = None,
) -> list[dict]:
    """One episode (or `steps` of it) as a list of per-step records."""
    env = BatchEnv(
        config, station, dataset,
        batch_size=1, env_seeds=[split_seed(seed, 0)], auto_reset=False, backend=backend,
    )
    policy.bind([0])
    obs = env.reset()
    total = config.episode_steps if steps is None else min(steps, config.episode_steps)
    rows: list[dict] = []
    for t in range(total):
        obs, rewards, dones, _ = env.step(policy.actions(obs), collect_infos=False)
        outs = env.outs
        info = step_info_from_outputs(outs, 0, env.tables)
        rows.append(
            {
                "step": t,
                "reward": float(rewards[0]),
                "profit_eur": info.breakdown.profit_eur,
                "e_net_kwh": info.flows.e_net,
                "e_grid_in_kwh": info.flows.e_grid_in,
                "e_to_grid_kwh": info.flows.e_to_grid,
                "e_battery_net_kwh": info.flows.e_battery_net,
                "e_grid_net_kwh": info.flows.e_grid_net,
                "c_constraint": info.breakdown.c_constraint,
                "c_sat0": info.breakdown.c_sat0,
                "c_sat1": info.breakdown.c_sat1,
                "c_sustain": info.breakdown.c_sustain,
                "c_declined": info.breakdown.c_declined,
                "c_degrad_battery": info.breakdown.c_degrad_battery,
                "c_degrad_cars": info.breakdown.c_degrad_cars,
                "c_grid": info.breakdown.c_grid,
                "arrivals_sampled": info.arrivals_sampled,
                "declined": info.declined,
                "departures": len(info.departures),
                "occupied_ports": int(env.states.occ[0].sum()),
                "done": int(dones[0]),
            }
        )
        if dones[0]:
            break
    env.close()
    return rows


# --- exports -------------------------------------------------------------------

def export_report(report: MetricsReport, path, fmt: str = "json") -> None:
    """Write a report; byte-identical output for identical inputs."""
    path = Path(path)
    obj = report.to_dict()
    if fmt == "json":
        path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    elif fmt == "csv":
        per = obj.pop("per_episode")
        with open(path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh)
            for key in sorted(obj):
                w.writerow([key, _fmt(obj[key])])
            if per:
                cols = sorted(per[0])
                w.writerow(cols)
                for row in per:
                    w.writerow([_fmt(row[c]) for c in cols])
    else:
        raise ValueError(f"unknown format {fmt!r}")


def load_report(path) -> MetricsReport:
    with open(path, "r", encoding="utf-8") as fh:
        return MetricsReport.from_dict(json.load(fh))


def export_trajectory(rows: list[dict], path, fmt: str = "csv") -> None:
    path = Path(path)
    if fmt == "csv":
        with open(path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(TRAJECTORY_COLUMNS)
            for row in rows:
                w.writerow([_fmt(row[c]) for c in TRAJECTORY_COLUMNS])
    elif fmt == "json":
        cleaned = [
            {k: (_r9(v) if isinstance(v, float) else v) for k, v in row.items()}
            for row in rows
        ]
        path.write_text(json.dumps(cleaned, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    else:
        raise ValueError(f"unknown format {fmt!r}")


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.9g}"
    return str(v)


def sign_test_greater(a, b) -> float:
    """One-sided binomial sign-test p-value for median(a - b) > 0.

    Ties are dropped; exact binomial tail, no scipy dependency.
    """
    wins = losses = 0
    for x, y in zip(a, b, strict=True):
        if x > y:
            wins += 1
        elif x < y:
            losses += 1
    n = wins + losses
    if n == 0:
        return 1.0
    return sum(math.comb(n, i) for i in range(wins, n + 1)) / 2.0**n
