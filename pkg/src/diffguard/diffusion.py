"""The estimation algorithms: resilient low-communication diffusion,
the unprotected clustered baseline, and standalone LMS.

One engine runs all three variants so that like-for-like comparisons and
the detector-off reduction are exact: variants share the adaptation,
corruption, and fusion code paths, and every random draw comes from a
purpose-keyed substream, so two configurations that should coincide
produce bit-identical traces.

Synchronous rounds: within step t every node reads only estimates
published at the end of step t-1, plus the current step's messages, which
are functions of those. Nodes can therefore be processed in any order.
"""

from dataclasses import dataclass, field

import numpy as np

from . import rng as rngmod
from .attacks import AttackSchedule, EMPTY_SCHEDULE
from .analysis import reg_matrix
from .detector import NeighborDetector
from .reputation import ReputationWindow, select_partners
from .scenario import GroundTruth, SignalParams, Topology, measurement_block

ALGORITHMS = ("proposed", "mdlms", "nclms")
DIVERGENCE_LIMIT = 1e8


class DivergenceError(RuntimeError):
    """An estimate left the finite range the simulation tolerates."""

    def __init__(self, algo: str, run_index: int, t: int, node: int):
        super().__init__(
            f"{algo} run {run_index} diverged at t={t} (node {node}: "
            f"|w| exceeded {DIVERGENCE_LIMIT:g})"
        )
        self.run_index = run_index
        self.t = t
        self.node = node


@dataclass(frozen=True)
class AlgoParams:
    mu: float = 0.03
    eta: float = 0.02
    ratio: float = 1.0  # fraction of same-cluster peers polled per step
    memory_len: int = 2
    cap: float = 0.4
    gamma: float = 50.0
    mem_weight: float = 0.9
    recv_weight: float = 0.4
    detect: bool = True  # proposed only; False bypasses the anomaly gate
    warmup_len: int | None = None  # accept-all steps before first model; None = window_len
    radius_policy: str = "secure_cover"
    count_self: bool = True  # node itself counts toward the trigger pool

    @property
    def window_len(self) -> int:
        # memory slices and the reputation window share this length
        return self.memory_len + 1

    @property
    def effective_warmup(self) -> int:
        return self.window_len if self.warmup_len is None else self.warmup_len

    def validate(self) -> None:
        if self.mu <= 0:
            raise ValueError("mu must be positive")
        if self.eta < 0:
            raise ValueError("eta must be nonnegative")
        if not 0.0 < self.ratio <= 1.0:
            raise ValueError("ratio must be in (0, 1]")
        if self.memory_len < 1:
            raise ValueError("memory_len must be at least 1")
        if not 0.0 < self.cap <= 1.0:
            raise ValueError("cap must be in (0, 1]")
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")
        if self.mem_weight <= 0 or self.recv_weight <= 0:
            raise ValueError("training weights must be positive")
        if self.warmup_len is not None and self.warmup_len < self.window_len:
            raise ValueError("warm-up cannot be shorter than the memory window")


@dataclass
class RunTrace:
    """Per-step per-node records of one run; node n is column n-1.

    sq_err[t] holds the post-fusion error of step t, i.e. the state after
    t+1 adaptations (initial estimates are all zero and not recorded).
    lam[t, receiver, sender] is +1 accepted / -1 flagged / 0 unpolled and
    is only collected on request.
    """

    run_index: int
    sq_err: np.ndarray
    s_plus: np.ndarray
    s_minus: np.ndarray
    retrained: np.ndarray
    b_plus: np.ndarray
    msg_sent: np.ndarray
    w_final: np.ndarray
    lam: np.ndarray | None = field(default=None, repr=False)


def combine_pool(own_id: int, own_psi, accepted: dict):
    """Uniform fusion over the node's own estimate and the accepted ones,
    stacked in ascending node id order. Empty accepted set returns the own
    estimate (self-fallback)."""
    if not accepted:
        return own_psi.copy()
    ids = sorted([own_id, *accepted])
    rows = np.vstack([own_psi if l == own_id else accepted[l] for l in ids])
    return rows.mean(axis=0)


def _attack_blocks(schedule: AttackSchedule, iters: int, dim: int,
                   root_seed: int, run_index: int):
    """Pre-draw every corruption vector the schedule can need.

    One block per attacked entity, one row per active step; draws are
    consumed per active step whether or not a given message is polled, so
    traces never depend on who happened to listen.
    """
    active = np.array([schedule.active(t) for t in range(iters)], dtype=bool)
    ordinal = np.cumsum(active) - 1  # valid only where active
    n_active = int(active.sum())
    fdi = {}
    for n in sorted(schedule.fdi_nodes):
        g = rngmod.run_stream(root_seed, run_index, rngmod.FDI_DRAW, n)
        fdi[n] = np.sqrt(schedule.fdi_var) * g.standard_normal((n_active, dim))
    link = {}
    for l, r in sorted(schedule.attacked_links):
        g = rngmod.run_stream(root_seed, run_index, rngmod.LINK_DRAW, l, r)
        link[(l, r)] = np.sqrt(schedule.link_var) * g.standard_normal((n_active, dim))
    return active, ordinal, fdi, link


def run_single(topology: Topology, truth: GroundTruth, sig: SignalParams,
               params: AlgoParams, algo: str = "proposed",
               schedule: AttackSchedule = EMPTY_SCHEDULE,
               root_seed: int = 0, run_index: int = 0, iters: int = 1000,
               c_weights=None, collect_lambda: bool = False) -> RunTrace:
    """Simulate one run of `algo` for `iters` steps from zero estimates."""
    if algo not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {algo!r}")
    params.validate()
    N = topology.num_nodes
    L = sig.dim
    nodes = range(1, N + 1)

    D = np.empty((iters, N))
    U = np.empty((iters, N, L))
    for n in nodes:
        d, u = measurement_block(n, iters, truth, sig, root_seed, run_index)
        D[:, n - 1] = d
        U[:, n - 1] = u

    active, ordinal, fdi_blocks, link_blocks = _attack_blocks(
        schedule, iters, L, root_seed, run_index)
    for n, block in fdi_blocks.items():
        i = n - 1
        for t in np.flatnonzero(active):
            D[t, i] += float(U[t, i] @ block[ordinal[t]])

    G = reg_matrix(topology)
    peers = {n: topology.peers(n) for n in nodes}
    cooperative = algo in ("proposed", "mdlms")
    if algo == "proposed":
        reputations = {n: ReputationWindow(peers[n], params.window_len) for n in nodes}
        detectors = {
            n: NeighborDetector(params.window_len, params.cap, params.gamma,
                                params.mem_weight, params.recv_weight,
                                warmup_len=params.effective_warmup,
                                radius_policy=params.radius_policy,
                                count_self=params.count_self)
            for n in nodes
        } if params.detect else None

    W = np.zeros((N, L))
    sq_err = np.empty((iters, N))
    s_plus = np.zeros((iters, N), dtype=np.int16)
    s_minus = np.zeros((iters, N), dtype=np.int16)
    retrained = np.zeros((iters, N), dtype=np.uint8)
    b_plus = np.zeros((iters, N), dtype=np.int16)
    msg_sent = np.zeros((iters, N), dtype=np.int16)
    lam = np.zeros((iters, N, N), dtype=np.int8) if collect_lambda else None

    for t in range(iters):
        Ut = U[t]
        if c_weights is None:
            err = D[t] - np.einsum("nl,nl->n", Ut, W)
            Psi = W + params.mu * err[:, None] * Ut
        else:
            # neighbor-data adaptation: column n of c weights node n's
            # use of each sender's (d, u) pair
            E = D[t][:, None] - Ut @ W.T
            Psi = W + params.mu * ((c_weights * E).T @ Ut)
        if cooperative and params.eta:
            Psi = Psi + (params.mu * params.eta) * (G @ W - W)

        if not cooperative:
            W = Psi
        else:
            polled = {}
            for n in nodes:
                if algo == "proposed":
                    polled[n] = select_partners(reputations[n].taus(), params.ratio)
                else:
                    polled[n] = peers[n]
                for l in polled[n]:
                    msg_sent[t, l - 1] += 1

            attacks_on = bool(link_blocks) and active[t]
            new_W = np.empty_like(W)
            for n in nodes:
                received = {}
                for l in polled[n]:
                    v = Psi[l - 1]
                    if attacks_on and (l, n) in link_blocks:
                        v = v + link_blocks[(l, n)][ordinal[t]]
                    received[l] = v
                if algo == "proposed" and params.detect:
                    verdicts, did_retrain = detectors[n].observe(Psi[n - 1], received, t)
                else:
                    verdicts, did_retrain = {l: True for l in received}, False
                if algo == "proposed":
                    reputations[n].record(verdicts)
                accepted = {l: received[l] for l in received if verdicts[l]}
                new_W[n - 1] = combine_pool(n, Psi[n - 1], accepted)
                i = n - 1
                s_plus[t, i] = len(accepted)
                s_minus[t, i] = len(received) - len(accepted)
                retrained[t, i] = did_retrain
                b_plus[t, i] = len(received)
                if collect_lambda:
                    for l, ok in verdicts.items():
                        lam[t, i, l - 1] = 1 if ok else -1
            W = new_W

        diff = truth.stacked - W
        sq_err[t] = np.einsum("nl,nl->n", diff, diff)
        if not np.all(np.isfinite(W)) or np.max(np.abs(W)) > DIVERGENCE_LIMIT:
            bad = int(np.argmax(np.max(np.abs(np.where(np.isfinite(W), W, np.inf)), axis=1))) + 1
            raise DivergenceError(algo, run_index, t, bad)

    return RunTrace(run_index=run_index, sq_err=sq_err, s_plus=s_plus,
                    s_minus=s_minus, retrained=retrained, b_plus=b_plus,
                    msg_sent=msg_sent, w_final=W, lam=lam)
