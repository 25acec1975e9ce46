"""Shared builders for the test suite: tiny datasets and random stations."""

from __future__ import annotations

import datetime as dt

import numpy as np

from voltyard.data import (
    ArrivalProfile,
    AuxSeries,
    CarCatalog,
    CatalogEntry,
    Dataset,
    PriceSeries,
    UserScenarioModel,
)
from voltyard.topology import ArchNode, EvseSpec, StationTree, build_station
from voltyard.vehicles import CarProfile


def flat_prices(
    buy: float = 0.10, sell_grid: float | None = None, days: int = 3, start=dt.date(2022, 1, 3)
) -> PriceSeries:
    n = days * 24
    return PriceSeries(
        start_date=start,
        buy=np.full(n, buy),
        sell_grid=np.full(n, buy if sell_grid is None else sell_grid),
        region="flat",
    )


def make_dataset(
    lam: float = 0.0,
    buy: float = 0.10,
    sell_grid: float | None = None,
    days: int = 3,
    dt_min: int = 5,
    stay_range=(6, 24),
    frac_range=(0.3, 0.9),
    soc_range=(0.2, 0.7),
    p_charge: float = 0.3,
    cars=None,
    moer: float | None = None,
    grid_demand: float | None = None,
) -> Dataset:
    steps = 1440 // dt_min
    if cars is None:
        cars = CarCatalog(
            entries=(
                CatalogEntry(CarProfile(60.0, 11.0, 120.0, 0.8, name="a"), 1.0),
                CatalogEntry(CarProfile(40.0, 7.4, 60.0, 0.8, name="b"), 1.0),
            ),
            region="test",
        )
    return Dataset(
        prices=flat_prices(buy=buy, sell_grid=sell_grid, days=days),
        arrivals=ArrivalProfile(rates_per_step=np.full(steps, lam), scenario="test"),
        cars=cars,
        scenario=UserScenarioModel(
            stay_steps_range=stay_range,
            requested_fraction_range=frac_range,
            soc_arrival_range=soc_range,
            p_charge_sensitive=p_charge,
            scenario="test",
        ),
        aux=AuxSeries(
            moer_kg_per_kwh=np.full(days * 24, moer) if moer is not None else None,
            grid_demand_kwh=np.full(days * 24, grid_demand) if grid_demand is not None else None,
        ),
    )


def single_node_station(
    n_ports: int = 2,
    cap_a: float = 1e9,
    voltage_v: float = 400.0,
    i_max: float = 400.0,
    i_max_discharge: float | None = None,
    eta_charge: float = 1.0,
    eta_discharge: float = 1.0,
    kind: str = "dc",
    node_eta: float = 1.0,
    battery=None,
) -> StationTree:
    leaves = [
        EvseSpec(
            id=i,
            voltage_v=voltage_v,
            i_max_charge_a=i_max,
            i_max_discharge_a=i_max if i_max_discharge is None else i_max_discharge,
            eta_charge=eta_charge,
            eta_discharge=eta_discharge,
            kind=kind,
        )
        for i in range(n_ports)
    ]
    return build_station(
        ArchNode(capacity_a=cap_a, eta=node_eta, children=tuple(leaves)), battery=battery
    )


def random_station(rng: np.random.Generator, max_depth: int = 3, max_leaves: int = 8,
                   battery=None) -> StationTree:
    """Random tree up to max_depth with binding-ish capacities."""
    next_id = iter(range(1000))
    leaves_left = [int(rng.integers(1, max_leaves + 1))]

    def leaf() -> EvseSpec:
        dc = rng.random() < 0.5
        imax = float(rng.uniform(16, 400))
        return EvseSpec(
            id=next(next_id),
            voltage_v=float(rng.uniform(230, 800)),
            i_max_charge_a=imax,
            i_max_discharge_a=imax if rng.random() < 0.7 else 0.0,
            eta_charge=float(rng.uniform(0.85, 1.0)),
            eta_discharge=float(rng.uniform(0.85, 1.0)),
            kind="dc" if dc else "ac",
        )

    def node(depth: int):
        if depth >= max_depth or leaves_left[0] <= 1 or rng.random() < 0.3:
            leaves_left[0] -= 1
            return leaf()
        n_children = int(rng.integers(2, 4))
        children = []
        for _ in range(n_children):
            if leaves_left[0] <= 0:
                break
            children.append(node(depth + 1))
        if not children:
            leaves_left[0] -= 1
            return leaf()
        amps = _subtree_amps(children)
        return ArchNode(
            capacity_a=float(rng.uniform(0.2, 1.2) * max(amps, 1.0)),
            eta=float(rng.uniform(0.8, 1.0)) if rng.random() < 0.5 else 1.0,
            children=tuple(children),
        )

    def _subtree_amps(nodes) -> float:
        total = 0.0
        for nd in nodes:
            if isinstance(nd, EvseSpec):
                total += nd.i_max_charge_a
            else:
                total += _subtree_amps(nd.children)
        return total

    children = [node(1)]
    while leaves_left[0] > 0:
        children.append(node(1))
    root = ArchNode(
        capacity_a=float(rng.uniform(0.2, 1.2) * max(_subtree_amps(children), 1.0)),
        eta=1.0,
        children=tuple(children),
    )
    return build_station(root, battery=battery)


def inject_car(
    batch,
    port: int,
    soc: float = 0.5,
    cap: float = 60.0,
    r_bar: float = 150.0,
    tau: float = 0.8,
    de: float = 100.0,
    dtrem: int = 12,
    pref: int = 0,
    i_drawn: float = 0.0,
    b: int = 0,
) -> None:
    """Place a car directly into the engine's state arrays (test fixture)."""
    from voltyard.vehicles import charge_limit

    s = batch.states
    s.occ[b, port] = 1
    s.i_drawn[b, port] = i_drawn
    s.soc[b, port] = soc
    s.cap[b, port] = cap
    s.rbar[b, port] = r_bar
    s.tau[b, port] = tau
    s.de[b, port] = de
    s.dtrem[b, port] = dtrem
    s.pref[b, port] = pref
    s.rhat[b, port] = charge_limit(soc, tau, r_bar)


def idle_actions(n_ports: int, k: int = 10) -> np.ndarray:
    return np.full(n_ports + 1, k, dtype=np.int64)


def random_currents(rng: np.random.Generator, tree: StationTree) -> np.ndarray:
    out = np.empty(tree.n_ports)
    for i, e in enumerate(tree.evses):
        out[i] = rng.uniform(-e.i_max_discharge_a, e.i_max_charge_a)
    return out
