"""Per-node anomaly gate over received intermediate estimates.

Each node keeps a short memory of recently accepted estimate vectors and a
trained ball descriptor over them. Received messages are scored against the
current model; when at least half of a step's incoming messages look
anomalous the node retrains on memory plus the fresh batch (an "event"),
and the fresh model's verdicts replace the stale ones for that step.
Memory points carry more training weight than the unvetted fresh batch, so
a coordinated bad batch cannot capture the retrained model.
"""

from collections import deque
from dataclasses import replace

import numpy as np

from .wsvdd import BallModel, train_model


def build_training_set(memory_slices, received_points,
                       mem_weight: float, recv_weight: float):
    """Assemble (X_centered, weights, center) for one training event.

    Centering uses the memory mean only: the fresh batch is the suspect
    part of the data and must not shift the frame it is judged in.
    """
    mem = np.vstack(list(memory_slices))
    center = mem.mean(axis=0)
    if len(received_points):
        recv = np.asarray(received_points, dtype=float).reshape(len(received_points), -1)
        X = np.vstack([mem, recv])
        weights = np.concatenate([
            np.full(len(mem), mem_weight),
            np.full(len(recv), recv_weight),
        ])
    else:
        X = mem
        weights = np.full(len(mem), mem_weight)
    return X - center, weights, center


class NeighborDetector:
    """Detection state machine for a single node.

    The first warmup_len steps accept everything while the memory fills
    (only the newest window_len slices are kept), then the first model is
    trained unconditionally; that bootstrap counts as an event. Warm-up
    must outlast the initial convergence drift: a ball fitted to a moving
    cloud flags honest-but-novel estimates, and the resulting reputation
    damage starves later training sets to the point of no recovery.
    """

    def __init__(self, window_len: int, cap: float, gamma: float,
                 mem_weight: float = 0.9, recv_weight: float = 0.4,
                 warmup_len: int | None = None,
                 radius_policy: str = "secure_cover",
                 count_self: bool = True,
                 radius_decay: float = 0.7,
                 tol: float = 1e-6, max_iter: int = 10_000):
        if window_len < 1:
            raise ValueError("window_len must be at least 1")
        if radius_policy not in ("secure_cover", "dual"):
            raise ValueError("radius_policy must be 'secure_cover' or 'dual'")
        if not 0.0 <= radius_decay < 1.0:
            raise ValueError("radius_decay must be in [0, 1)")
        self.window_len = window_len
        self.warmup_len = window_len if warmup_len is None else warmup_len
        if self.warmup_len < window_len:
            raise ValueError("warm-up cannot be shorter than the memory window")
        self.cap = cap
        self.gamma = gamma
        self.mem_weight = mem_weight
        self.recv_weight = recv_weight
        self.radius_policy = radius_policy
        self.count_self = count_self
        self.tol = tol
        self.max_iter = max_iter
        self.memory = deque(maxlen=window_len)
        self.model: BallModel | None = None
        self.center = None
        self.events = 0

    def observe(self, own_psi, received: dict, t: int):
        """Score one step's incoming messages.

        received maps sender id to its estimate vector. Returns
        (verdicts, retrained) where verdicts maps sender id to True when
        the message is accepted. Accepted vectors plus the node's own
        estimate are admitted to memory afterwards.
        """
        order = sorted(received)
        if t < self.warmup_len:
            verdicts = {l: True for l in order}
            self._admit(own_psi, received, verdicts)
            return verdicts, False

        verdicts = self._verdicts(received, order)
        flagged = sum(1 for ok in verdicts.values() if not ok)
        force = t == self.warmup_len or self.model is None
        # threshold = half of this step's same-cluster pool; the node itself
        # counts toward the pool when count_self is set, never toward flags
        pool = len(order) + (1 if self.count_self else 0)
        trigger = force or (order and flagged >= pool / 2)
        retrained = False
        if trigger and self._train(received, order):
            self.events += 1
            retrained = True
            verdicts = self._verdicts(received, order)
        self._admit(own_psi, received, verdicts)
        return verdicts, retrained

    def _verdicts(self, received: dict, order) -> dict:
        if self.model is None or not order:
            return {l: True for l in order}
        queries = np.vstack([received[l] for l in order]) - self.center
        outlier = self.model.is_outlier(queries)
        return {l: not bad for l, bad in zip(order, outlier)}

    def _train(self, received: dict, order) -> bool:
        """Retrain from memory plus the fresh batch; False when the box
        caps cannot cover the simplex constraint (model kept as is)."""
        if not self.memory:
            return False
        points = [received[l] for l in order]
        X, weights, center = build_training_set(
            self.memory, points, self.mem_weight, self.recv_weight)
        if len(X) > 1 and weights.sum() * self.cap < 1.0 - 1e-12:
            return False
        model = train_model(X, weights, self.cap, self.gamma,
                            tol=self.tol, max_iter=self.max_iter)
        if self.radius_policy == "secure_cover":
            # Stretch the boundary to enclose every vetted sample. The dual
            # radius alone sits at an interior quantile of its own training
            # cloud, so a constant share of honest traffic lands outside it;
            # anchoring on the memory rows drops that to ~1/(#memory+1).
            # Unvetted received rows never stretch the boundary, so a far-off
            # sample in the fresh batch stays outside no matter its box cap.
            n_mem = sum(len(s) for s in self.memory)
            cover = float(model.distances_sq(X[:n_mem]).max())
            model = replace(model, r2=max(model.r2, cover))
        self.model = model
        self.center = center
        return True

    def _admit(self, own_psi, received: dict, verdicts: dict) -> None:
        rows = [np.asarray(own_psi, dtype=float)]
        rows.extend(received[l] for l in sorted(verdicts) if verdicts[l])
        self.memory.append(np.vstack(rows))
