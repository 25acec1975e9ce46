"""Gymnasium-style vectorized environment API over the voltyard engine.

The bridge adds no simulation logic: observations, rewards and infos are
the engine's own outputs passed through unchanged, so trajectories through
the bridge equal engine trajectories elementwise.  Space descriptors are
self-contained dataclasses mirroring Box / MultiDiscrete; ``to_gymnasium``
converts them into real gymnasium spaces when that package is installed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from voltyard import BatchEnv, EnvConfig, default_setup

__all__ = [
    "BoxSpace",
    "MultiDiscreteSpace",
    "ChargingVectorEnv",
    "make_default_env",
]

__version__ = "0.1.0"


@dataclass(frozen=True)
class BoxSpace:
    """Continuous vector space with documented finite bounds."""

    low: np.ndarray
    high: np.ndarray
    dtype: type = np.float64

    @property
    def shape(self) -> tuple[int, ...]:
        return self.low.shape

    def contains(self, x) -> bool:
        x = np.asarray(x)
        return x.shape == self.shape and bool((x >= self.low).all() and (x <= self.high).all())

    def to_gymnasium(self):
        import gymnasium

        return gymnasium.spaces.Box(low=self.low, high=self.high, dtype=self.dtype)


@dataclass(frozen=True)
class MultiDiscreteSpace:
    """One categorical action per slot; nvec[i] choices for slot i."""

    nvec: np.ndarray

    @property
    def shape(self) -> tuple[int, ...]:
        return self.nvec.shape

    def contains(self, x) -> bool:
        x = np.asarray(x)
        return (
            x.shape == self.nvec.shape
            and np.issubdtype(x.dtype, np.integer)
            and bool((x >= 0).all() and (x < self.nvec).all())
        )

    def to_gymnasium(self):
        import gymnasium

        return gymnasium.spaces.MultiDiscrete(self.nvec)


def _observation_space(engine: BatchEnv) -> BoxSpace:
    t = engine.tables
    layout = engine.observation_layout()
    low = np.empty(layout.length)
    high = np.empty(layout.length)
    for i in range(t.n_ports):
        base = layout.port_offset(i)
        low[base], high[base] = 0.0, 1.0  # occupied
        low[base + 1] = -t.imax_d[i] / t.i_denom[i]
        high[base + 1] = t.imax_c[i] / t.i_denom[i]
        low[base + 2], high[base + 2] = 0.0, 1.0  # soc
        low[base + 3], high[base + 3] = 0.0, 64.0  # de_remain/C (V2G can grow it)
        low[base + 4], high[base + 4] = -64.0, 64.0  # dt_remain/episode
        low[base + 5], high[base + 5] = 0.0, 1.0  # preference
    b = layout.battery_offset
    low[b], high[b] = 0.0, 1.0
    low[b + 1], high[b + 1] = -1.0, 1.0
    g = layout.globals_offset
    low[g : g + 3], high[g : g + 3] = -1e3, 1e3  # prices
    low[g + 3 : g + 5], high[g + 3 : g + 5] = -1.0, 1.0  # sin/cos
    low[g + 5], high[g + 5] = 0.0, 1.0  # weekday
    low[g + 6], high[g + 6] = 0.0, 64.0  # day/365
    low[layout.horizon_offset :], high[layout.horizon_offset :] = -1e3, 1e3
    return BoxSpace(low=low, high=high)


class ChargingVectorEnv:
    """Standard vectorized reset/step/close API over a batch of stations.

    reset(seed) re-derives the per-env seed streams from the given master
    seed.  step() maps episode ends to terminations (the horizon is part of
    the MDP, so truncations stay False); with auto-reset the terminal info
    rides alongside the fresh reset observation, which is the convention
    vectorized trainers expect.
    """

    metadata = {"render_modes": []}

    def __init__(
        self,
        config: EnvConfig,
        station,
        dataset,
        num_envs: int = 1,
        seed: int = 0,
        backend: str | None = None,
        workers: int = 1,
    ):
        self._engine = BatchEnv(
            config, station, dataset,
            batch_size=num_envs, master_seed=seed,
            auto_reset=True, backend=backend, workers=workers,
        )
        self.num_envs = num_envs
        self._closed = False
        self.observation_space = _observation_space(self._engine)
        self.action_space = MultiDiscreteSpace(
            nvec=np.full(self._engine.action_size, self._engine.actions_per_slot, dtype=np.int64)
        )

    @property
    def engine(self) -> BatchEnv:
        return self._engine

    def _check_open(self) -> None:
        if self._closed:
            raise RuntimeError("environment is closed")

    def reset(self, seed: int | None = None):
        """Returns (obs matrix of shape (num_envs, obs_len), info dict)."""
        self._check_open()
        if seed is not None:
            obs = self._engine.reseed(seed)
        else:
            obs = self._engine.reset()
        return obs, {}

    def step(self, actions):
        """Returns (obs, rewards, terminations, truncations, infos).

        actions: integer array of shape (num_envs, n_ports + 1).
        """
        self._check_open()
        a = np.asarray(actions)
        if a.shape != (self.num_envs, self._engine.action_size):
            raise ValueError(
                f"actions must have shape {(self.num_envs, self._engine.action_size)}, got {a.shape}"
            )
        if not np.issubdtype(a.dtype, np.integer):
            raise TypeError(f"actions must be integers, got dtype {a.dtype}")
        obs, rewards, dones, infos = self._engine.step(a)
        truncations = np.zeros(self.num_envs, dtype=bool)
        return obs, rewards, dones, truncations, infos

    def close(self) -> None:
        if not self._closed:
            self._engine.close()
            self._closed = True

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
        return False


def make_default_env(num_envs: int = 1, seed: int = 0, **setup_kw) -> ChargingVectorEnv:
    """The reference 16-charger station on bundled synthetic data."""
    rc = default_setup(**setup_kw)
    return ChargingVectorEnv(rc.env, rc.station, rc.dataset, num_envs=num_envs, seed=seed)
