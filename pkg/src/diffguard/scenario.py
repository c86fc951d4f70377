"""Network topology, clustered ground truth, and streaming measurement model.

Nodes are labeled 1..N. Each node's neighborhood implicitly contains the node
itself; N+ is the same-cluster part of the neighborhood, N- the rest.
"""

from dataclasses import dataclass, field

import numpy as np

from . import rng as rngmod


class TopologyError(ValueError):
    pass


@dataclass(frozen=True)
class Topology:
    num_nodes: int
    edges: frozenset  # frozenset of (a, b) tuples with a < b
    clusters: tuple  # tuple of frozensets, disjoint, covering 1..N
    neighbors: dict = field(repr=False)  # id -> sorted tuple, includes self
    same_cluster: dict = field(repr=False)  # N+ incl self
    cross_cluster: dict = field(repr=False)  # N-
    cluster_of: dict = field(repr=False)
    warnings: tuple = ()

    def cluster_index(self, node: int) -> int:
        return self.cluster_of[node]

    def peers(self, node: int) -> tuple:
        """Same-cluster neighbors excluding the node itself."""
        return tuple(l for l in self.same_cluster[node] if l != node)


def build_topology(num_nodes: int, edges, clusters) -> Topology:
    """Validate a topology description and derive neighbor sets.

    Raises TopologyError on overlapping clusters, unassigned nodes, or a
    multi-node cluster whose within-cluster subgraph is disconnected. A node
    whose same-cluster neighborhood is only itself is allowed but recorded in
    Topology.warnings.
    """
    if num_nodes < 1:
        raise TopologyError("need at least one node")
    all_ids = set(range(1, num_nodes + 1))

    seen = set()
    cluster_sets = []
    for c in clusters:
        cs = frozenset(int(n) for n in c)
        if not cs:
            raise TopologyError("empty cluster")
        if cs & seen:
            raise TopologyError(f"overlapping clusters: {sorted(cs & seen)}")
        if not cs <= all_ids:
            raise TopologyError(f"cluster references unknown nodes: {sorted(cs - all_ids)}")
        seen |= cs
        cluster_sets.append(cs)
    if seen != all_ids:
        raise TopologyError(f"nodes in no cluster: {sorted(all_ids - seen)}")

    norm_edges = set()
    for a, b in edges:
        a, b = int(a), int(b)
        if a == b:
            continue  # self-loops are implicit, ignore explicit ones
        if a not in all_ids or b not in all_ids:
            raise TopologyError(f"edge ({a},{b}) references unknown node")
        norm_edges.add((min(a, b), max(a, b)))

    adjacency = {n: {n} for n in all_ids}
    for a, b in norm_edges:
        adjacency[a].add(b)
        adjacency[b].add(a)

    cluster_of = {}
    for idx, cs in enumerate(cluster_sets):
        for n in cs:
            cluster_of[n] = idx

    neighbors = {n: tuple(sorted(adjacency[n])) for n in all_ids}
    same_cluster = {
        n: tuple(l for l in neighbors[n] if cluster_of[l] == cluster_of[n]) for n in all_ids
    }
    cross_cluster = {
        n: tuple(l for l in neighbors[n] if cluster_of[l] != cluster_of[n]) for n in all_ids
    }

    warnings = []
    for cs in cluster_sets:
        if len(cs) == 1:
            lone = next(iter(cs))
            warnings.append(f"node {lone} has no same-cluster peers")
            continue
        # within-cluster subgraph must be connected
        members = sorted(cs)
        reached = {members[0]}
        frontier = [members[0]]
        while frontier:
            cur = frontier.pop()
            for l in same_cluster[cur]:
                if l not in reached:
                    reached.add(l)
                    frontier.append(l)
        if reached != set(members):
            raise TopologyError(f"cluster {members} not connected within itself")

    return Topology(
        num_nodes=num_nodes,
        edges=frozenset(norm_edges),
        clusters=tuple(cluster_sets),
        neighbors=neighbors,
        same_cluster=same_cluster,
        cross_cluster=cross_cluster,
        cluster_of=cluster_of,
        warnings=tuple(warnings),
    )


@dataclass(frozen=True)
class GroundTruth:
    per_cluster: tuple  # tuple of (L,) arrays, one per cluster
    stacked: np.ndarray  # (N, L), row n-1 is node n's target

    def target(self, node: int) -> np.ndarray:
        return self.stacked[node - 1]


def make_ground_truth(topology: Topology, base, similarity_radius: float, rng) -> GroundTruth:
    """Per-cluster target = base + perturbation of norm <= similarity_radius.

    Perturbations are uniform in the L-ball so radius 0 collapses every
    cluster onto the base vector. Draw order: one direction plus one radius
    fraction per cluster, ascending cluster index.
    """
    base = np.asarray(base, dtype=float)
    if base.ndim != 1 or base.size < 1:
        raise ValueError("base must be a nonempty vector")
    if similarity_radius < 0:
        raise ValueError("similarity_radius must be nonnegative")
    L = base.size
    per_cluster = []
    for _ in topology.clusters:
        direction = rng.standard_normal(L)
        frac = rng.uniform() ** (1.0 / L)
        norm = float(np.linalg.norm(direction))
        if norm == 0.0:
            delta = np.zeros(L)
        else:
            delta = similarity_radius * frac * direction / norm
        per_cluster.append(base + delta)
    stacked = np.empty((topology.num_nodes, L))
    for n in range(1, topology.num_nodes + 1):
        stacked[n - 1] = per_cluster[topology.cluster_of[n]]
    return GroundTruth(per_cluster=tuple(per_cluster), stacked=stacked)


@dataclass(frozen=True)
class SignalParams:
    u_var: np.ndarray  # (N,) regressor variance per node
    z_var: np.ndarray  # (N,) measurement-noise variance per node
    dim: int

    def __post_init__(self):
        if np.any(self.u_var <= 0) or np.any(self.z_var <= 0):
            raise ValueError("variances must be strictly positive")


def resolve_signal_params(
    topology: Topology,
    dim: int,
    rng,
    u_var_range=(0.8, 1.2),
    z_var_range=(0.01, 0.04),
    u_overrides=None,
    z_overrides=None,
) -> SignalParams:
    """Draw per-node variances, then apply explicit overrides.

    The draws happen for every node regardless of overrides, so overriding one
    node never shifts another node's value.
    """
    N = topology.num_nodes
    u_var = rng.uniform(u_var_range[0], u_var_range[1], size=N)
    z_var = rng.uniform(z_var_range[0], z_var_range[1], size=N)
    for node, val in (u_overrides or {}).items():
        u_var[int(node) - 1] = float(val)
    for node, val in (z_overrides or {}).items():
        z_var[int(node) - 1] = float(val)
    return SignalParams(u_var=u_var, z_var=z_var, dim=dim)


def sample_measurement(node: int, t: int, truth: GroundTruth, params: SignalParams, rng):
    """One (d, u) pair for the linear model d = u' w_o + z.

    rng must be the node's MEASUREMENT substream positioned at step t: each
    call consumes exactly dim+1 standard normal values (u first, then z), so
    calling with t = 0, 1, 2, ... on a fresh stream reproduces the block draws
    the simulation engine uses.
    """
    L = params.dim
    i = node - 1
    block = rng.standard_normal(L + 1)
    u = np.sqrt(params.u_var[i]) * block[:L]
    z = np.sqrt(params.z_var[i]) * block[L]
    d = float(u @ truth.stacked[i]) + z
    return d, u


def measurement_block(node: int, steps: int, truth: GroundTruth, params: SignalParams,
                      root_seed: int, run_index: int):
    """All (d, u) values for one node over a run, as arrays (d: (T,), u: (T, L)).

    Equivalent to sample_measurement called at t = 0..steps-1 on the stream
    run_stream(root_seed, run_index, MEASUREMENT, node); block draws and
    stepwise draws of standard normals coincide (regression-tested).
    """
    L = params.dim
    i = node - 1
    g = rngmod.run_stream(root_seed, run_index, rngmod.MEASUREMENT, node)
    block = g.standard_normal((steps, L + 1))
    u = np.sqrt(params.u_var[i]) * block[:, :L]
    z = np.sqrt(params.z_var[i]) * block[:, L]
    d = u @ truth.stacked[i] + z
    return d, u
