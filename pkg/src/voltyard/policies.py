"""Baseline policies: max-charge, random, idle.

Policies consume observations only (no private engine state), emit one
action index per slot (ports then battery), and carry their own random
streams so evaluations stay paired across policies for a fixed seed.
"""

from __future__ import annotations

import numpy as np

from .rng import PHASE_POLICY, BatchStreams, Stream, stream_key


class MaxChargePolicy:
    """Push every occupied port to its maximum increment; battery idle."""

    def __init__(self, n_ports: int, k: int):
        self.n_ports = n_ports
        self.k = k

    def bind(self, env_indices) -> None:
        pass

    def actions(self, obs: np.ndarray) -> np.ndarray:
        b = obs.shape[0]
        acts = np.full((b, self.n_ports + 1), self.k, dtype=np.int64)
        occupied = obs[:, 0 : 6 * self.n_ports : 6] > 0.5
        acts[:, : self.n_ports][occupied] = 2 * self.k
        return acts


class IdlePolicy:
    """Steer every current (ports and battery) to the grid point nearest zero."""

    def __init__(self, n_ports: int, k: int):
        self.n_ports = n_ports
        self.k = k

    def bind(self, env_indices) -> None:
        pass

    def actions(self, obs: np.ndarray) -> np.ndarray:
        frac = obs[:, 1 : 6 * self.n_ports : 6]
        b_frac = obs[:, 6 * self.n_ports + 1]
        cols = np.concatenate([frac, b_frac[:, None]], axis=1)
        idx = self.k - np.round(cols * self.k).astype(np.int64)
        return np.clip(idx, 0, 2 * self.k)


class RandomPolicy:
    """Uniform action index per slot from a per-environment stream.

    Env row i draws from a stream keyed by (seed, global env index), so
    batched action sequences match per-env sequential ones exactly.
    """

    def __init__(self, seed: int, n_ports: int, k: int):
        self.seed = seed
        self.n_ports = n_ports
        self.k = k
        self._streams: BatchStreams | None = None
        self.bind([0])

    def bind(self, env_indices) -> None:
        keys = [stream_key(self.seed, int(i), PHASE_POLICY) for i in env_indices]
        self._streams = BatchStreams(np.array(keys, dtype=np.uint64))

    def actions(self, obs: np.ndarray) -> np.ndarray:
        b = obs.shape[0]
        if len(self._streams) != b:
            raise ValueError("policy bound to a different batch size")
        return self._streams.randint_block(self.n_ports + 1, 2 * self.k + 1)


POLICIES = {
    "max_charge": MaxChargePolicy,
    "idle": IdlePolicy,
    "random": RandomPolicy,
}


def make_policy(name: str, n_ports: int, k: int, seed: int = 0):
    if name not in POLICIES:
        raise ValueError(f"unknown policy {name!r}; pick one of {sorted(POLICIES)}")
    if name == "random":
        return RandomPolicy(seed=seed, n_ports=n_ports, k=k)
    return POLICIES[name](n_ports=n_ports, k=k)
