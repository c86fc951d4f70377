"""Measurement and link corruption overlays, plus the majority-trust check.

Attacks are a pure overlay: with an empty schedule every function below is the
identity and consumes no randomness, so an attack-free run is bit-identical to
a run with kind "none".
"""

from dataclasses import dataclass

import numpy as np

from .scenario import Topology


@dataclass(frozen=True)
class AttackSchedule:
    fdi_nodes: frozenset = frozenset()
    attacked_links: frozenset = frozenset()  # directed (sender, receiver) pairs
    fdi_var: float = 3.0  # per-component variance of the injected parameter offset
    link_var: float = 0.5  # per-component variance of the message perturbation
    t_start: int = 0
    t_end: int | None = None  # inclusive; None = rest of the run

    def active(self, t: int) -> bool:
        return t >= self.t_start and (self.t_end is None or t <= self.t_end)

    @property
    def empty(self) -> bool:
        return not self.fdi_nodes and not self.attacked_links

    def attacked_nodes(self) -> frozenset:
        """Nodes whose data a receiver may see corrupted: FDI targets plus
        senders of attacked links."""
        return self.fdi_nodes | frozenset(l for l, _ in self.attacked_links)


EMPTY_SCHEDULE = AttackSchedule()


def corrupt_measurement(n: int, t: int, d_clean: float, u, schedule: AttackSchedule, rng) -> float:
    """d + u' w_att for an FDI node inside the active window, else d unchanged.

    w_att is redrawn on every call (the offset is time-indexed)."""
    if n not in schedule.fdi_nodes or not schedule.active(t):
        return d_clean
    w_att = np.sqrt(schedule.fdi_var) * rng.standard_normal(len(u))
    return d_clean + float(u @ w_att)


def corrupt_message(l: int, n: int, t: int, psi_clean, schedule: AttackSchedule, rng):
    """Additive perturbation on the directed delivery l -> n.

    A node's message to itself is never corrupted."""
    if l == n:
        return psi_clean
    if (l, n) not in schedule.attacked_links or not schedule.active(t):
        return psi_clean
    return psi_clean + np.sqrt(schedule.link_var) * rng.standard_normal(len(psi_clean))


@dataclass(frozen=True)
class A1Report:
    per_node: dict  # id -> (attacked_in_neighborhood, neighborhood_size, ok)
    ok: bool


def validate_a1(topology: Topology, schedule: AttackSchedule) -> A1Report:
    """Check that attacked members of every neighborhood stay under half.

    The neighborhood includes the node itself, so an attacked node counts
    against its own check."""
    attacked = schedule.attacked_nodes()
    per_node = {}
    all_ok = True
    for n in range(1, topology.num_nodes + 1):
        hood = topology.neighbors[n]
        count = sum(1 for l in hood if l in attacked)
        ok = count < len(hood) / 2
        per_node[n] = (count, len(hood), ok)
        all_ok = all_ok and ok
    return A1Report(per_node=per_node, ok=all_ok)


def resolve_attack_nodes(candidates, count: int, rng) -> tuple:
    """Pick `count` distinct nodes from the candidate pool, seed-resolved."""
    pool = sorted(int(c) for c in candidates)
    if count > len(pool):
        raise ValueError("cannot pick more attack nodes than candidates")
    chosen = rng.choice(len(pool), size=count, replace=False)
    return tuple(sorted(pool[i] for i in chosen))


def links_from_nodes(topology: Topology, nodes) -> frozenset:
    """All outgoing same-cluster deliveries of the given senders.

    Only intermediate-estimate channels (same-cluster) carry attackable
    messages; cross-cluster estimate exchange is out of the threat model."""
    links = set()
    for l in nodes:
        for n in topology.peers(l):
            links.add((l, n))
    return frozenset(links)


def validate_links(topology: Topology, links) -> None:
    for l, n in links:
        if l == n:
            raise ValueError(f"link ({l},{n}) is a self-loop")
        if n not in topology.peers(l):
            raise ValueError(
                f"link ({l},{n}) is not a same-cluster delivery channel"
            )
