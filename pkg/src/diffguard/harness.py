"""Monte Carlo harness: scenario resolution, replicated runs, aggregation,
and fixed-format CSV emission.

Runs are embarrassingly parallel: run r is fully determined by the root
seed and r, workers receive disjoint run indices, and aggregation sorts by
run index, so the worker count never changes any output byte.
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import rng as rngmod
from .attacks import (AttackSchedule, EMPTY_SCHEDULE, links_from_nodes,
                      resolve_attack_nodes, validate_a1)
from .diffusion import ALGORITHMS, AlgoParams, RunTrace, run_single
from .scenario import (GroundTruth, SignalParams, Topology,
                       make_ground_truth, resolve_signal_params)

ATTACK_KINDS = ("none", "fdi", "link", "both")


@dataclass(frozen=True)
class Scenario:
    """Everything shared by the runs of one experiment, fully resolved."""

    topology: Topology
    truth: GroundTruth
    sig: SignalParams
    params: AlgoParams
    schedule: AttackSchedule
    attacked_nodes: tuple
    algo: str
    root_seed: int
    runs: int
    iters: int


def build_schedule(topology: Topology, kind: str, attacked: tuple,
                   fdi_var: float, link_var: float,
                   t_start: int, t_end=None) -> AttackSchedule:
    if kind == "none" or not attacked:
        return EMPTY_SCHEDULE
    fdi_nodes = frozenset(attacked) if kind in ("fdi", "both") else frozenset()
    links = links_from_nodes(topology, attacked) if kind in ("link", "both") else frozenset()
    return AttackSchedule(fdi_nodes=fdi_nodes, attacked_links=links,
                          fdi_var=fdi_var, link_var=link_var,
                          t_start=t_start, t_end=t_end)


def resolve_scenario(config) -> Scenario:
    """Turn an ExperimentConfig into concrete runs' shared inputs.

    All scenario-level draws (targets, signal variances, which candidates
    are attacked) come from purpose-keyed streams of the root seed, so
    every run of the experiment sees the same scenario and experiments
    that differ only in per-run settings share it too.
    """
    from .config import build_config_topology  # local import, config imports us not

    topology = build_config_topology(config)
    truth = make_ground_truth(
        topology, config.base, config.similarity_radius,
        rngmod.scenario_stream(config.seed, rngmod.GROUND_TRUTH))
    sig = resolve_signal_params(
        topology, config.dim,
        rngmod.scenario_stream(config.seed, rngmod.SIGNAL_PARAMS),
        u_var_range=tuple(config.u_var_range),
        z_var_range=tuple(config.z_var_range),
        u_overrides=config.u_overrides, z_overrides=config.z_overrides)
    if config.attack == "none":
        attacked = ()
    else:
        attacked = resolve_attack_nodes(
            config.candidates, config.num_attacked,
            rngmod.scenario_stream(config.seed, rngmod.ATTACK_PICK))
    schedule = build_schedule(topology, config.attack, attacked,
                              config.fdi_var, config.link_var,
                              config.onset, config.end)
    params = AlgoParams(mu=config.mu, eta=config.eta, ratio=config.ratio,
                        memory_len=config.memory_len, cap=config.cap,
                        gamma=config.gamma, mem_weight=config.mem_weight,
                        recv_weight=config.recv_weight, detect=config.detect)
    params.validate()
    if config.algo not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {config.algo!r}")
    return Scenario(topology=topology, truth=truth, sig=sig, params=params,
                    schedule=schedule, attacked_nodes=attacked,
                    algo=config.algo, root_seed=config.seed,
                    runs=config.runs, iters=config.iters)


def _one_run(scenario: Scenario, run_index: int, collect_lambda: bool) -> RunTrace:
    return run_single(scenario.topology, scenario.truth, scenario.sig,
                      scenario.params, algo=scenario.algo,
                      schedule=scenario.schedule,
                      root_seed=scenario.root_seed, run_index=run_index,
                      iters=scenario.iters, collect_lambda=collect_lambda)


@dataclass
class MCResult:
    scenario: Scenario
    traces: list  # RunTrace, ordered by run index

    @property
    def sq_err(self) -> np.ndarray:
        """(runs, T, N) stack of squared errors."""
        return np.stack([tr.sq_err for tr in self.traces])


def run_monte_carlo(scenario: Scenario, workers: int = 1,
                    collect_lambda: bool = False) -> MCResult:
    """Execute all runs; identical output for any workers >= 1."""
    indices = list(range(scenario.runs))
    if workers <= 1:
        traces = [_one_run(scenario, r, collect_lambda) for r in indices]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_one_run, scenario, r, collect_lambda)
                       for r in indices]
            traces = [f.result() for f in futures]
    traces.sort(key=lambda tr: tr.run_index)
    return MCResult(scenario=scenario, traces=traces)


def msd_curve(traces) -> tuple:
    """Network MSD per step: (linear (T,), dB (T,)); exact zeros map to -inf dB."""
    if not traces:
        raise ValueError("no traces")
    lin = np.mean(np.stack([tr.sq_err for tr in traces]), axis=(0, 2))
    with np.errstate(divide="ignore"):
        db = 10.0 * np.log10(lin)
    return lin, db


def steady_state_msd_db(traces, last: int = 200) -> float:
    """dB of the mean squared error over the final `last` steps."""
    lin, _ = msd_curve(traces)
    tail = lin[-last:]
    val = float(tail.mean())
    return float(10.0 * np.log10(val)) if val > 0 else float("-inf")


def count_events(traces) -> tuple:
    """(per-node mean over runs (N,), network average scalar) of retraining
    event counts per run."""
    per_run = np.stack([tr.retrained.sum(axis=0) for tr in traces])  # (R, N)
    per_node = per_run.mean(axis=0)
    return per_node, float(per_node.mean())


def message_stats(traces) -> dict:
    """Aggregate communication accounting over runs and steps."""
    b_plus = np.stack([tr.b_plus for tr in traces])  # (R, T, N)
    sent = np.stack([tr.msg_sent for tr in traces])
    return {
        "total_received": int(b_plus.sum()),
        "total_sent": int(sent.sum()),
        "mean_received_per_step": float(b_plus.sum(axis=2).mean()),
        "max_received_per_node": b_plus.max(axis=(0, 1)),  # (N,)
    }


def _fmt(x) -> str:
    """Shortest round-trip decimal for a float; stable across platforms."""
    return repr(float(x))


def write_trace_csv(path, traces) -> None:
    """Long-format per-run per-step per-node trace, fixed column order."""
    with open(path, "w", newline="") as fh:
        fh.write("run,t,node,sq_err,s_plus,s_minus,retrained,b_plus,msg_sent\n")
        for tr in traces:
            T, N = tr.sq_err.shape
            for t in range(T):
                sq = tr.sq_err[t]
                sp = tr.s_plus[t]
                sm = tr.s_minus[t]
                rt = tr.retrained[t]
                bp = tr.b_plus[t]
                ms = tr.msg_sent[t]
                for i in range(N):
                    fh.write(f"{tr.run_index},{t},{i + 1},{_fmt(sq[i])},"
                             f"{sp[i]},{sm[i]},{rt[i]},{bp[i]},{ms[i]}\n")


def write_summary_csv(path, result: MCResult) -> None:
    """Per-step network summary: MSD plus mean communication/event rates."""
    lin, db = msd_curve(result.traces)
    b_plus = np.stack([tr.b_plus for tr in result.traces]).astype(float)
    retr = np.stack([tr.retrained for tr in result.traces]).astype(float)
    mean_bp = b_plus.mean(axis=(0, 2))
    mean_rt = retr.mean(axis=(0, 2))
    with open(path, "w", newline="") as fh:
        fh.write("t,msd_lin,msd_db,mean_b_plus,mean_retrained\n")
        for t in range(len(lin)):
            db_s = "-inf" if np.isneginf(db[t]) else _fmt(db[t])
            fh.write(f"{t},{_fmt(lin[t])},{db_s},{_fmt(mean_bp[t])},{_fmt(mean_rt[t])}\n")
