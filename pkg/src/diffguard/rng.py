"""Seed-splitting rules: every random draw comes from a named substream.

A substream is identified by an entropy tuple fed to numpy's SeedSequence:

    scenario draws (shared by all Monte Carlo runs):
        (root_seed, purpose)
    per-run draws keyed by node:
        (root_seed, run_index, purpose, node_id)
    per-run draws keyed by directed link:
        (root_seed, run_index, purpose, sender_id, receiver_id)

Purpose codes are part of the reproducibility contract; never renumber them.
Adding a new consumer of randomness means adding a new purpose code, so
existing streams are never perturbed.
"""

import numpy as np

GROUND_TRUTH = 1
SIGNAL_PARAMS = 2
ATTACK_PICK = 3
MEASUREMENT = 4
FDI_DRAW = 5
LINK_DRAW = 6


def scenario_stream(root_seed: int, purpose: int) -> np.random.Generator:
    """Stream for draws resolved once per experiment, not per run."""
    return np.random.default_rng(np.random.SeedSequence((root_seed, purpose)))


def run_stream(root_seed: int, run_index: int, purpose: int, *entity: int) -> np.random.Generator:
    """Stream for per-run draws; entity is a node id or a (sender, receiver) pair."""
    return np.random.default_rng(
        np.random.SeedSequence((root_seed, run_index, purpose, *entity))
    )
