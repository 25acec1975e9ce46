"""Command-line harness: simulate, evaluate, bench, gen-data, inspect-station.

Exit codes: 0 success, 2 usage error (argparse), 3 data/station error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import data as data_mod
from . import topology
from .backends import available_backends, resolve_backend
from .config import EnvConfig, RunConfig, default_setup, fingerprint, load_run_config
from .engine import throughput_probe
from .errors import SimError
from .evaluate import evaluate, export_report, export_trajectory, run_trajectory
from .policies import POLICIES, make_policy


def _positive_int(value: str) -> int:
    n = int(value)
    if n < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {n}")
    return n


def _add_setup_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON run-config file (see README)")
    p.add_argument("--data-dir", help="dataset directory (prices/arrivals/cars CSVs)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--scenario", default="shopping", choices=data_mod.SCENARIOS)
    p.add_argument("--traffic", default="medium", choices=sorted(data_mod.TRAFFIC_FACTORS))
    p.add_argument("--region", default="eu", choices=data_mod.REGIONS)


def _resolve_setup(args) -> RunConfig:
    # --seed steers the simulation streams only; synthetic data stays fixed
    if args.config:
        return load_run_config(args.config, data_dir=args.data_dir)
    if args.data_dir:
        rc = default_setup(scenario=args.scenario, traffic=args.traffic, region=args.region)
        return RunConfig(env=rc.env, station=rc.station, dataset=data_mod.load_dataset(args.data_dir))
    return default_setup(scenario=args.scenario, traffic=args.traffic, region=args.region)


def _cmd_simulate(args) -> int:
    rc = _resolve_setup(args)
    policy = make_policy(args.policy, rc.station.n_ports, rc.env.discretization_k, seed=args.seed)
    rows = run_trajectory(
        policy, rc.env, rc.station, rc.dataset,
        seed=args.seed, steps=args.steps, backend=args.backend,
    )
    total_reward = sum(r["reward"] for r in rows)
    total_profit = sum(r["profit_eur"] for r in rows)
    print(f"policy={args.policy} steps={len(rows)} reward={total_reward:.4f} profit={total_profit:.4f}")
    if args.out:
        export_trajectory(rows, args.out, fmt=args.format)
        print(f"trajectory written to {args.out}")
    return 0


def _cmd_evaluate(args) -> int:
    rc = _resolve_setup(args)
    policy = make_policy(args.policy, rc.station.n_ports, rc.env.discretization_k, seed=args.seed)
    report = evaluate(
        policy, rc.env, rc.station, rc.dataset,
        episodes=args.episodes, seed=args.seed, backend=args.backend,
    )
    print(f"policy={args.policy} episodes={report.episodes} fingerprint={report.config_fingerprint}")
    print(f"  mean daily profit : {report.mean_daily_profit_eur:.4f} ± {report.std_daily_profit_eur:.4f} EUR")
    print(f"  mean reward       : {report.mean_reward:.4f}")
    print(f"  missing kWh/dep   : {report.missing_kwh_per_departure:.4f}")
    print(f"  overtime steps/dep: {report.overtime_steps_per_departure:.4f}")
    print(f"  declined/episode  : {report.declined_per_episode:.4f}")
    print(f"  energy sold/ep    : {report.energy_sold_kwh_per_episode:.4f} kWh")
    if args.out:
        export_report(report, args.out, fmt=args.format)
        print(f"report written to {args.out}")
    return 0


def _cmd_bench(args) -> int:
    rc = _resolve_setup(args)
    backends = list(available_backends()) if args.backend == "both" else [resolve_backend(args.backend)]
    reports = []
    for backend in backends:
        rep = throughput_probe(
            rc.env, rc.station, rc.dataset,
            batch_size=args.batch, total_steps=args.steps,
            seed=args.seed, backend=backend, workers=args.workers,
        )
        reports.append(rep)
        print(
            f"backend={rep.backend:<8} batch={rep.batch_size:<4} workers={rep.workers} "
            f"steps={rep.total_steps} wall={rep.wall_seconds:.3f}s "
            f"throughput={rep.steps_per_second:,.0f} steps/s"
        )
    if len(reports) == 2:
        fast, slow = reports[0], reports[1]
        print(f"speedup compiled/python: {fast.steps_per_second / slow.steps_per_second:.1f}x")
    print(f"hardware: {reports[0].hardware}")
    if args.out:
        Path(args.out).write_text(
            json.dumps([r.to_dict() for r in reports], indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )
        print(f"bench report written to {args.out}")
    return 0


def _cmd_gen_data(args) -> int:
    ds = data_mod.generate_synthetic_defaults(
        scenario=args.scenario, traffic=args.traffic, region=args.region,
        seed=args.seed, days=args.days, with_aux=args.with_aux,
    )
    data_mod.save_dataset(ds, args.out_dir)
    print(f"dataset ({args.scenario}/{args.traffic}/{args.region}, {args.days} days) -> {args.out_dir}")
    return 0


def _cmd_inspect_station(args) -> int:
    if args.file:
        tree = topology.load_station(args.file)
    else:
        rc = _resolve_setup(args)
        tree = rc.station

    def render(node, indent: int) -> None:
        pad = "  " * indent
        if isinstance(node, topology.EvseSpec):
            print(
                f"{pad}port {node.id}: {node.kind} {node.voltage_v:g}V "
                f"+{node.i_max_charge_a:g}A/-{node.i_max_discharge_a:g}A "
                f"eta {node.eta_charge:g}/{node.eta_discharge:g}"
            )
        else:
            print(f"{pad}node: cap {node.capacity_a:g}A eta {node.eta:g}")
            for child in node.children:
                render(child, indent + 1)

    render(tree.root, 0)
    print(f"ports: {tree.n_ports}, parking order: {list(tree.parking_order)}")
    if tree.battery is not None:
        b = tree.battery
        print(f"battery: {b.voltage_v:g}V {b.capacity_kwh:g}kWh {b.r_max_kw:g}kW tau={b.tau:g}")
    if args.out:
        topology.save_station(tree, args.out)
        print(f"station written to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="voltyard",
        description="EV charging-station simulator: baselines, evaluation and benchmarks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one episode and export the trajectory")
    _add_setup_flags(p)
    p.add_argument("--policy", default="max_charge", choices=sorted(POLICIES))
    p.add_argument("--steps", type=_positive_int, default=None, help="cap on steps (default: full episode)")
    p.add_argument("--backend", default=None, choices=["compiled", "python"])
    p.add_argument("--out", help="output file")
    p.add_argument("--format", default="csv", choices=["csv", "json"])
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("evaluate", help="aggregate metrics over many episodes")
    _add_setup_flags(p)
    p.add_argument("--policy", default="max_charge", choices=sorted(POLICIES))
    p.add_argument("--episodes", type=_positive_int, default=20)
    p.add_argument("--backend", default=None, choices=["compiled", "python"])
    p.add_argument("--out", help="output file")
    p.add_argument("--format", default="json", choices=["csv", "json"])
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("bench", help="measure step throughput under random actions")
    _add_setup_flags(p)
    p.add_argument("--batch", type=_positive_int, default=1)
    p.add_argument("--steps", type=_positive_int, default=100_000, help="aggregate env steps")
    p.add_argument("--workers", type=_positive_int, default=1)
    p.add_argument("--backend", default="both", choices=["both", "compiled", "python"])
    p.add_argument("--out", help="write the JSON bench report here")
    p.set_defaults(func=_cmd_bench)

    p = sub.add_parser("gen-data", help="write a synthetic dataset directory")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--scenario", default="shopping", choices=data_mod.SCENARIOS)
    p.add_argument("--traffic", default="medium", choices=sorted(data_mod.TRAFFIC_FACTORS))
    p.add_argument("--region", default="eu", choices=data_mod.REGIONS)
    p.add_argument("--days", type=_positive_int, default=365)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--with-aux", action="store_true", help="include MOER/grid-demand series")
    p.set_defaults(func=_cmd_gen_data)

    p = sub.add_parser("inspect-station", help="print a station architecture")
    _add_setup_flags(p)
    p.add_argument("--file", help="station JSON file (overrides --config)")
    p.add_argument("--out", help="write the station JSON here")
    p.set_defaults(func=_cmd_inspect_station)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
