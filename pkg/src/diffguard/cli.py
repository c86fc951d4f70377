"""Command line front end.

Subcommands:
    run       full Monte Carlo experiment, CSV outputs
    bound     print the largest stable step size for the configured network
    theory    per-node asymptotic mean deviation table
    validate  topology, parameter, and attack-minority checks

Exit codes: 0 success, 2 configuration/validation failure, 3 divergence.
"""

import argparse
import os
import sys

import numpy as np

from . import analysis
from .attacks import validate_a1
from .config import ConfigError, load_config
from .diffusion import DivergenceError
from .harness import (count_events, message_stats, msd_curve, resolve_scenario,
                      run_monte_carlo, steady_state_msd_db, write_summary_csv,
                      write_trace_csv)


def _add_common(sub):
    sub.add_argument("--config", help="YAML config; defaults are the reference scenario")
    sub.add_argument("--seed", type=int)
    sub.add_argument("--runs", type=int)
    sub.add_argument("--iters", type=int)
    sub.add_argument("--algo", choices=["proposed", "mdlms", "nclms"])
    sub.add_argument("--ratio", type=float, help="fraction of same-cluster peers polled")
    sub.add_argument("--attack", choices=["none", "fdi", "link", "both"])
    sub.add_argument("--out", help="output directory for CSV files")
    sub.add_argument("--workers", type=int, help="parallel run workers")


def _config_from(args):
    keys = ("seed", "runs", "iters", "algo", "ratio", "attack", "out", "workers")
    overrides = {k: getattr(args, k, None) for k in keys}
    return load_config(args.config, overrides)


def _cmd_run(args) -> int:
    cfg = _config_from(args)
    scenario = resolve_scenario(cfg)
    report = validate_a1(scenario.topology, scenario.schedule)
    if not report.ok:
        bad = [n for n, (_, _, ok) in report.per_node.items() if not ok]
        print(f"attacked majority in neighborhoods of nodes {bad}; refusing to run",
              file=sys.stderr)
        return 2
    result = run_monte_carlo(scenario, workers=cfg.workers)
    os.makedirs(cfg.out, exist_ok=True)
    trace_path = os.path.join(cfg.out, "trace.csv")
    summary_path = os.path.join(cfg.out, "summary.csv")
    write_trace_csv(trace_path, result.traces)
    write_summary_csv(summary_path, result)
    _, avg_events = count_events(result.traces)
    stats = message_stats(result.traces)
    print(f"algo={scenario.algo} attack={cfg.attack} ratio={cfg.ratio} "
          f"runs={cfg.runs} iters={cfg.iters} seed={cfg.seed}")
    if scenario.attacked_nodes:
        print(f"attacked nodes: {list(scenario.attacked_nodes)}")
    print(f"steady-state MSD (last 200 steps): {steady_state_msd_db(result.traces):.2f} dB")
    print(f"average retraining events per node: {avg_events:.1f}")
    print(f"mean messages received per step (network): "
          f"{stats['mean_received_per_step']:.2f}")
    print(f"wrote {trace_path} and {summary_path}")
    return 0


def _cmd_bound(args) -> int:
    cfg = _config_from(args)
    scenario = resolve_scenario(cfg)
    mu_max = analysis.step_bound(scenario.sig, cfg.eta)
    rho = analysis.spectral_radius(
        analysis.transition_matrix(scenario.topology, scenario.sig, cfg.mu, cfg.eta))
    print(f"largest stable step size: {mu_max:.6f}")
    print(f"configured mu = {cfg.mu} -> mean recursion spectral radius {rho:.6f} "
          f"({'stable' if rho < 1 else 'UNSTABLE'})")
    return 0 if rho < 1 else 3


def _cmd_theory(args) -> int:
    cfg = _config_from(args)
    scenario = resolve_scenario(cfg)
    rows = analysis.deviation_table(scenario.topology, scenario.sig,
                                    scenario.truth, cfg.mu, cfg.eta)
    print("node  asymptotic mean deviation" + " " * 14 + "|dev|^2")
    for n, block, sq in rows:
        vec = ", ".join(f"{x: .6f}" for x in block)
        print(f"{n:>4}  [{vec}]  {sq:.3e}")
    net = float(np.mean([sq for _, _, sq in rows]))
    print(f"network mean squared deviation: {net:.3e}")
    return 0


def _cmd_validate(args) -> int:
    cfg = _config_from(args)
    scenario = resolve_scenario(cfg)
    topo = scenario.topology
    for w in topo.warnings:
        print(f"warning: {w}")
    report = validate_a1(topo, scenario.schedule)
    for n in sorted(report.per_node):
        count, size, ok = report.per_node[n]
        if not ok:
            print(f"node {n}: {count} attacked of {size} neighbors (majority!)")
    if scenario.attacked_nodes:
        print(f"attacked nodes: {list(scenario.attacked_nodes)}")
    if not report.ok:
        print("attacked-minority assumption violated")
        return 2
    print(f"config ok: {topo.num_nodes} nodes, {len(topo.edges)} edges, "
          f"{len(topo.clusters)} clusters")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="diffguard",
        description="attack-resilient distributed estimation simulator")
    subs = parser.add_subparsers(dest="command", required=True)
    for name, fn in (("run", _cmd_run), ("bound", _cmd_bound),
                     ("theory", _cmd_theory), ("validate", _cmd_validate)):
        sub = subs.add_parser(name)
        _add_common(sub)
        sub.set_defaults(fn=fn)
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except DivergenceError as exc:
        print(f"divergence: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
