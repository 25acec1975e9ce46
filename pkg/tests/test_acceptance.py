"""Acceptance suite: one test per release criterion, at pinned tolerances.

Each test prints a single [ACCEPTANCE] pass/fail line (visible with
``pytest tests/test_acceptance.py -v -s``) and enforces its runtime budget.
"""

import functools
import math
import time

import numpy as np
import pytest

from voltyard.backends import available_backends
from voltyard.config import EnvConfig, default_setup
from voltyard.data import frame_at
from voltyard.engine import BatchEnv, throughput_probe
from voltyard.evaluate import evaluate, sign_test_greater
from voltyard.policies import MaxChargePolicy, RandomPolicy, make_policy
from voltyard.rng import BatchStreams, Stream, split_seed, stream_key
from voltyard.topology import compile_tree, enforce_limits, tree_excess, violation_excess
from voltyard.vehicles import charge_limit, discharge_limit

from helpers import (
    idle_actions,
    inject_car,
    make_dataset,
    random_currents,
    random_station,
    single_node_station,
)


def criterion(name: str, limit_s: float):
    """Run a criterion under its runtime budget and print one pass/fail line."""

    def deco(fn):
        @functools.wraps(fn)
        def wrapper(*args, **kw):
            t0 = time.perf_counter()
            try:
                fn(*args, **kw)
            except BaseException:
                print(f"[ACCEPTANCE] {name}: FAIL ({time.perf_counter() - t0:.2f}s)")
                raise
            elapsed = time.perf_counter() - t0
            line = f"[ACCEPTANCE] {name}: PASS ({elapsed:.2f}s, budget {limit_s:.0f}s)"
            print(line)
            assert elapsed < limit_s, f"runtime budget exceeded: {elapsed:.2f}s >= {limit_s}s"

        return wrapper

    return deco


# --- 1. charging-curve suite -----------------------------------------------------

@criterion("charging-curve", limit_s=1.0)
def test_charging_curves():
    assert abs(charge_limit(0.9, 0.8, 150.0) - 75.0) <= 1e-12 * 75.0
    assert charge_limit(0.5, 0.8, 150.0) == 150.0
    assert charge_limit(1.0, 0.8, 150.0) == 0.0
    assert abs(discharge_limit(0.1, 0.8, 150.0) - 75.0) <= 1e-12 * 75.0
    for soc in np.arange(0.0, 1.0 + 1e-9, 1e-3):
        s = float(soc)
        d = discharge_limit(s, 0.8, 150.0)
        c = charge_limit(1.0 - s, 0.8, 150.0)
        assert abs(d - c) <= 1e-12 * max(1.0, abs(c))


# --- 2. energy conservation --------------------------------------------------------

@criterion("energy-conservation", limit_s=60.0)
def test_energy_conservation_random_episodes():
    rng = np.random.default_rng(2024)
    for ep in range(1000):
        station = random_station(rng, max_depth=3, max_leaves=6)
        n = station.n_ports
        steps = int(rng.integers(40, 160))
        battery = bool(rng.random() < 0.3)
        cfg = EnvConfig(
            episode_steps=steps,
            battery_enabled=battery,
            battery_init_soc=float(rng.uniform(0.1, 0.9)),
        )
        ds = make_dataset(
            lam=float(rng.uniform(0.2, 3.0)),
            p_charge=float(rng.uniform(0.0, 1.0)),
            stay_range=(2, 30),
        )
        env = BatchEnv(cfg, station, ds, batch_size=1,
                       master_seed=int(rng.integers(1 << 30)), auto_reset=False)
        pol = RandomPolicy(seed=ep, n_ports=n, k=cfg.discretization_k)
        obs = env.reset()
        s, o = env.states, env.outs
        tenancy = {}  # port -> [cap, soc_arrival, cum_delivered]
        departed_delta = 0.0
        e_net_total = 0.0
        for _ in range(steps):
            prev_occ = s.occ[0].copy()
            prev_soc = s.soc[0].copy()
            prev_cap = s.cap[0].copy()
            obs, _, _, _ = env.step(pol.actions(obs), collect_infos=False)
            delivered = o.delivered[0]
            e_net_total += o.flows[0, 0]
            departed = {}
            for j in range(int(o.dep_n[0])):
                departed[int(o.dep_port[0, j])] = float(o.dep_soc[0, j])
            for i in range(n):
                if not prev_occ[i]:
                    assert delivered[i] == 0.0
                    continue
                soc_after = departed[i] if i in departed else float(s.soc[0, i])
                lhs = prev_cap[i] * (soc_after - prev_soc[i])
                assert math.isclose(lhs, delivered[i], rel_tol=1e-9, abs_tol=1e-9)
                tenancy[i][2] += float(delivered[i])
            for i, soc_f in departed.items():
                cap, soc_a, _ = tenancy.pop(i)
                departed_delta += cap * (soc_f - soc_a)
            for i in range(n):
                if s.occ[0, i] and (not prev_occ[i] or i in departed):
                    tenancy[i] = [float(s.cap[0, i]), float(s.soc[0, i]), 0.0]
        in_station = sum(cap * (float(s.soc[0, i]) - soc_a) for i, (cap, soc_a, _) in tenancy.items())
        assert math.isclose(e_net_total, departed_delta + in_station, rel_tol=1e-6, abs_tol=1e-9)
        env.close()


# --- 3. constraint suite --------------------------------------------------------------

@criterion("constraint-enforcement", limit_s=30.0)
def test_constraints_randomized():
    rng = np.random.default_rng(77)
    trees = [random_station(rng, max_depth=3, max_leaves=8) for _ in range(500)]
    checked = 0
    while checked < 10_000:
        tree = trees[checked % len(trees)]
        cur = random_currents(rng, tree)
        out = enforce_limits(tree, cur)
        cap_scale = max(1.0, float(tree.tables().node_cap.max()))
        assert violation_excess(tree, out) <= 1e-9 * cap_scale
        assert (np.abs(out) <= np.abs(cur) + 1e-12).all()
        assert (out * cur >= 0.0).all()
        if checked % 10 == 0:  # idempotence, exact
            np.testing.assert_array_equal(enforce_limits(tree, out), out)
        checked += 1
    # proportionality within an isolated violating subtree
    from voltyard.topology import ArchNode, EvseSpec, build_station

    for trial in range(200):
        imax = 100.0
        grp = ArchNode(
            capacity_a=float(rng.uniform(5, 50)),
            children=[
                EvseSpec(id=0, voltage_v=400, i_max_charge_a=imax, i_max_discharge_a=imax),
                EvseSpec(id=1, voltage_v=400, i_max_charge_a=imax, i_max_discharge_a=imax),
            ],
        )
        free = EvseSpec(id=2, voltage_v=400, i_max_charge_a=imax)
        tree = build_station(ArchNode(capacity_a=1e9, children=[grp, free]))
        cur = np.array([rng.uniform(1, 100), rng.uniform(1, 100), rng.uniform(0, 100)])
        out = enforce_limits(tree, cur)
        if cur[0] + cur[1] > grp.capacity_a:
            f = grp.capacity_a / (cur[0] + cur[1])
            assert math.isclose(out[0], cur[0] * f, rel_tol=1e-12)
            assert math.isclose(out[1], cur[1] * f, rel_tol=1e-12)
        assert out[2] == cur[2]


# --- 4. reward oracle -------------------------------------------------------------------

@criterion("reward-oracle", limit_s=60.0)
def test_reward_against_bookkeeping_oracle():
    rng = np.random.default_rng(555)
    names = ("constraint", "sat0", "sat1", "sustain", "declined",
             "degrad_battery", "degrad_cars", "grid")
    for ep in range(200):
        n = int(rng.integers(1, 5))
        station = random_station(rng, max_depth=2, max_leaves=n)
        n = station.n_ports
        battery = bool(rng.random() < 0.5)
        alpha = {k: float(rng.uniform(0, 1)) for k in names}
        cfg = EnvConfig(
            episode_steps=int(rng.integers(8, 49)),
            battery_enabled=battery,
            beta=float(rng.uniform(0, 1)),
            alpha=alpha,
            fixed_cost_per_step=float(rng.uniform(0, 0.1)),
        )
        use_aux = bool(rng.random() < 0.5)
        ds = make_dataset(
            lam=float(rng.uniform(0.5, 4.0)),
            buy=float(rng.uniform(0.05, 0.3)),
            sell_grid=float(rng.uniform(0.02, 0.2)),
            p_charge=float(rng.uniform(0, 1)),
            moer=float(rng.uniform(0.1, 0.5)) if use_aux else None,
            grid_demand=float(rng.uniform(-5, 5)) if use_aux else None,
        )
        env = BatchEnv(cfg, station, ds, batch_size=1, master_seed=ep, auto_reset=False)
        pol = RandomPolicy(seed=1000 + ep, n_ports=n, k=cfg.discretization_k)
        obs = env.reset()
        day = int(env.states.day[0])
        eta_c = [e.eta_charge for e in station.evses]
        eta_d = [e.eta_discharge for e in station.evses]
        batt_spec = station.battery
        if battery and batt_spec is None:
            from voltyard.config import DEFAULT_BATTERY

            batt_spec = DEFAULT_BATTERY
        tree_tables = compile_tree(station, include_battery=battery)
        alphas = cfg.alpha_array()
        o = env.outs
        for t in range(cfg.episode_steps):
            obs, rewards, dones, infos = env.step(pol.actions(obs))
            frame = frame_at(ds.prices, ds.arrivals, ds.aux, day, t, cfg.dt_min)
            delivered = o.delivered[0]
            e_net = sum(float(d) for d in delivered)
            e_in = sum(float(d) / eta_c[i] for i, d in enumerate(delivered) if d > 0)
            e_out = sum(float(d) * eta_d[i] for i, d in enumerate(delivered) if d < 0)
            b_int = float(o.b_delivered[0])
            if b_int > 0:
                e_b = b_int / batt_spec.eta_charge
            elif b_int < 0:
                e_b = b_int * batt_spec.eta_discharge
            else:
                e_b = 0.0
            e_grid_net = e_in + e_out + e_b
            if e_grid_net > 0:
                profit = cfg.p_sell_eur_per_kwh * e_net - frame.p_buy * e_grid_net - cfg.fixed_cost_per_step
            else:
                profit = cfg.p_sell_eur_per_kwh * e_net - frame.p_sell_grid * e_grid_net - cfg.fixed_cost_per_step
            sat0 = sat1 = 0.0
            for j in range(int(o.dep_n[0])):
                if o.dep_pref[0, j] == 0:
                    sat0 += float(o.dep_missing[0, j])
                else:
                    sat1 += float(o.dep_overtime[0, j]) - cfg.beta * float(o.dep_early[0, j])
            cs = [
                tree_excess(tree_tables, o.i_att[0]),
                sat0,
                sat1,
                (frame.moer_kg_per_kwh * e_grid_net) if frame.moer_kg_per_kwh is not None else 0.0,
                float(o.declined[0]),
                -e_b if e_b < 0 else 0.0,
                -e_out,
                abs(e_net - frame.grid_demand_kwh) if frame.grid_demand_kwh is not None else 0.0,
            ]
            r_oracle = profit - sum(alphas[i] * cs[i] for i in range(8))
            assert math.isclose(float(rewards[0]), r_oracle, rel_tol=1e-6, abs_tol=1e-9)
            fl = o.flows[0]
            for got, want in zip(fl, (e_net, e_in, e_out, e_b, e_grid_net)):
                assert math.isclose(float(got), want, rel_tol=1e-6, abs_tol=1e-9)
            assert fl[4] == fl[1] + fl[2] + fl[3]  # exact identity as computed
        env.close()


# --- 5. exogeneity & determinism ----------------------------------------------------------

@criterion("exogeneity-determinism", limit_s=60.0)
def test_exogeneity_and_determinism():
    rc = default_setup(EnvConfig(episode_steps=96), days=60)
    n, k = rc.station.n_ports, rc.env.discretization_k

    def run(policy_name, master, b, steps, workers=1, backend=None):
        env = BatchEnv(rc.env, rc.station, rc.dataset, batch_size=b,
                       master_seed=master, workers=workers, backend=backend)
        pol = make_policy(policy_name, n, k, seed=99)
        pol.bind(range(b))
        obs = env.reset()
        rows = {"obs": [obs.copy()], "r": [], "m": [], "day": []}
        for _ in range(steps):
            obs, r, d, _ = env.step(pol.actions(obs), collect_infos=False)
            rows["obs"].append(obs.copy())
            rows["r"].append(r)
            rows["m"].append(env.outs.arrivals_m.copy())
            rows["day"].append(env.states.day.copy())
        env.close()
        return {key: np.array(val) for key, val in rows.items()}

    # bitwise determinism
    a = run("random", 5, 4, 200)
    b = run("random", 5, 4, 200)
    for key in a:
        np.testing.assert_array_equal(a[key], b[key])

    # exogenous draws identical across different action policies
    mc = run("max_charge", 5, 4, 200)
    idle = run("idle", 5, 4, 200)
    np.testing.assert_array_equal(mc["m"], idle["m"])
    np.testing.assert_array_equal(mc["day"], idle["day"])

    # batch(16) equals 16 sequential runs with split seeds, 3 episodes each
    steps = 3 * rc.env.episode_steps
    batch = run("random", 31, 16, steps)
    for i in range(16):
        env = BatchEnv(rc.env, rc.station, rc.dataset, batch_size=1,
                       env_seeds=[split_seed(31, i)])
        pol = make_policy("random", n, k, seed=99)
        pol.bind([i])
        obs = env.reset()
        np.testing.assert_array_equal(batch["obs"][0][i], obs[0])
        for t in range(steps):
            obs, r, d, _ = env.step(pol.actions(obs), collect_infos=False)
            assert r[0] == batch["r"][t][i]
            np.testing.assert_array_equal(batch["obs"][t + 1][i], obs[0])
        env.close()

    # invariant to worker count
    w1 = run("random", 8, 8, 150, workers=1)
    w4 = run("random", 8, 8, 150, workers=4)
    for key in w1:
        np.testing.assert_array_equal(w1[key], w4[key])


# --- 6. arrival statistics ------------------------------------------------------------------

@criterion("arrival-statistics", limit_s=30.0)
def test_poisson_statistics():
    n = 1_000_000
    for lam, seed in ((0.5, 1), (3.0, 2), (10.0, 3)):
        bs = BatchStreams.from_parts(seed, np.arange(n, dtype=np.uint64))
        draws = bs.poisson(lam)
        sigma_mean = math.sqrt(lam / n)
        assert abs(draws.mean() - lam) < 3 * sigma_mean
        sigma_var = math.sqrt((lam + 2 * lam * lam) / n)
        assert abs(draws.var() - lam) < 3 * sigma_var
        # the vectorised draws replay the scalar sampler exactly
        for j in range(5000):
            s = Stream(stream_key(seed, j))
            assert s.poisson(lam) == draws[j]


# --- 7. departure-logic oracle ------------------------------------------------------------------

@criterion("departure-logic", limit_s=30.0)
def test_departure_rule_exhaustive():
    for pref in (0, 1):
        for dt_target in range(-2, 4):
            for de in (0.0, 1e-9, 5.0):
                env_cfg = EnvConfig(episode_steps=4)
                env = BatchEnv(env_cfg, single_node_station(n_ports=1),
                               make_dataset(lam=0.0), batch_size=1, auto_reset=False)
                env.reset()
                inject_car(env, 0, de=de, dtrem=dt_target + 1, pref=pref)
                env.step(idle_actions(1)[None, :])
                o = env.outs
                should = (pref == 0 and dt_target <= 0) or (pref == 1 and de == 0.0)
                assert bool(o.dep_n[0]) == should, (pref, dt_target, de)
                if should:
                    assert o.dep_missing[0, 0] == de
                    assert o.dep_overtime[0, 0] == max(0, -dt_target)
                    assert o.dep_early[0, 0] == max(0, dt_target)
                    assert env.states.occ[0, 0] == 0
                else:
                    assert env.states.occ[0, 0] == 1
                env.close()


# --- 8. throughput -----------------------------------------------------------------------------------

@criterion("throughput", limit_s=120.0)
def test_throughput_targets():
    assert "compiled" in available_backends(), "compiled kernel must ship"
    rc = default_setup()
    single = throughput_probe(rc.env, rc.station, rc.dataset,
                              batch_size=1, total_steps=100_000, seed=0)
    print(f"  single-env: {single.total_steps} steps in {single.wall_seconds:.2f}s "
          f"({single.steps_per_second:,.0f}/s) on {single.hardware}")
    assert single.wall_seconds <= 10.0
    batch = throughput_probe(rc.env, rc.station, rc.dataset,
                             batch_size=16, total_steps=200_000, seed=0)
    print(f"  batch-16:   {batch.steps_per_second:,.0f} aggregate steps/s")
    assert batch.steps_per_second >= 100_000.0
    assert batch.steps_per_second >= single.steps_per_second


# --- 9. baseline sanity ---------------------------------------------------------------------------------

@criterion("baseline-sanity", limit_s=120.0)
def test_max_charge_beats_idle_profit():
    rc = default_setup(scenario="shopping", traffic="medium")
    assert rc.env.p_sell_eur_per_kwh == 0.75
    assert rc.env.alpha_array().sum() == 0.0
    episodes = 100
    rep_max = evaluate(MaxChargePolicy(16, 10), rc.env, rc.station, rc.dataset,
                       episodes=episodes, seed=2025)
    rep_idle = evaluate(make_policy("idle", 16, 10), rc.env, rc.station, rc.dataset,
                        episodes=episodes, seed=2025)
    p_max = [ep["profit_eur"] for ep in rep_max.per_episode]
    p_idle = [ep["profit_eur"] for ep in rep_idle.per_episode]
    p_value = sign_test_greater(p_max, p_idle)
    print(f"  profit max-charge {rep_max.mean_daily_profit_eur:.2f} vs idle "
          f"{rep_idle.mean_daily_profit_eur:.2f} EUR/day, sign-test p={p_value:.3g}")
    assert rep_max.mean_daily_profit_eur > rep_idle.mean_daily_profit_eur
    assert p_value < 0.01
