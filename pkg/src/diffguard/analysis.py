"""Mean-error dynamics of the attack-free network.

Everything here works on the stacked deviation vector e_t, the N*L
concatenation of per-node (target minus mean estimate) blocks. With
white regressors, self-data adaptation, cross-cluster pull toward
neighbor estimates, and uniform same-cluster fusion, the mean deviation
obeys a linear recursion

    e_{t+1} = B e_t + mu*eta * A' Q w_ext

where B = A' (I - mu*(Omega_R + eta*Q)). The fusion matrix A is
column-stochastic over same-cluster neighborhoods, so A' w_ext = w_ext
(targets are constant within a cluster) and the recursion is exact, not
an approximation, under the independence assumptions of the signal model.
"""

import numpy as np

from .scenario import GroundTruth, SignalParams, Topology


def reg_matrix(topology: Topology) -> np.ndarray:
    """Row-stochastic cross-cluster averaging weights.

    Row n is uniform over node n's cross-cluster neighbors; a node with
    none gets an identity row so its coupling term vanishes exactly.
    """
    N = topology.num_nodes
    G = np.zeros((N, N))
    for n in range(1, N + 1):
        cross = topology.cross_cluster[n]
        if cross:
            G[n - 1, [k - 1 for k in cross]] = 1.0 / len(cross)
        else:
            G[n - 1, n - 1] = 1.0
    return G


def coupling_matrix(topology: Topology) -> np.ndarray:
    """Q = I - G; rows sum to zero, so constant-per-network vectors are
    in its null space."""
    return np.eye(topology.num_nodes) - reg_matrix(topology)


def combine_matrix(topology: Topology) -> np.ndarray:
    """Column-stochastic fusion weights for detector-off averaging.

    Column n is uniform over node n's same-cluster neighborhood including
    itself, matching a fusion pool that accepts every polled message.
    """
    N = topology.num_nodes
    A = np.zeros((N, N))
    for n in range(1, N + 1):
        pool = topology.same_cluster[n]
        A[[l - 1 for l in pool], n - 1] = 1.0 / len(pool)
    return A


def block_expand(M, dim: int) -> np.ndarray:
    return np.kron(M, np.eye(dim))


def regressor_covariance(sig: SignalParams) -> np.ndarray:
    """Block-diagonal stack of per-node regressor covariances (white
    regressors: each block is u_var * I)."""
    return np.diag(np.repeat(sig.u_var, sig.dim))


def transition_matrix(topology: Topology, sig: SignalParams,
                      mu: float, eta: float) -> np.ndarray:
    A_I = block_expand(combine_matrix(topology), sig.dim)
    Q_I = block_expand(coupling_matrix(topology), sig.dim)
    H = np.eye(topology.num_nodes * sig.dim) - mu * (regressor_covariance(sig) + eta * Q_I)
    return A_I.T @ H


def spectral_radius(M) -> float:
    return float(np.max(np.abs(np.linalg.eigvals(M))))


def step_bound(sig: SignalParams, eta: float) -> float:
    """Largest stable step size: 2 / (max node regressor power + 2*eta).

    The eta term covers the coupling matrix, whose row sums of absolute
    values are at most 2.
    """
    return 2.0 / (float(sig.u_var.max()) + 2.0 * eta)


def _forcing(topology, sig, truth, mu, eta):
    A_I = block_expand(combine_matrix(topology), sig.dim)
    Q_I = block_expand(coupling_matrix(topology), sig.dim)
    w_ext = truth.stacked.ravel()
    return mu * eta * (A_I.T @ (Q_I @ w_ext))


def mean_recursion(topology: Topology, sig: SignalParams, truth: GroundTruth,
                   mu: float, eta: float, steps: int, e0=None) -> np.ndarray:
    """Iterate the deviation recursion from e0 (default: zero initial
    estimates, so e0 = stacked targets). Returns (steps+1, N*L)."""
    B = transition_matrix(topology, sig, mu, eta)
    b = _forcing(topology, sig, truth, mu, eta)
    e = truth.stacked.ravel().copy() if e0 is None else np.asarray(e0, dtype=float).copy()
    out = np.empty((steps + 1, e.size))
    out[0] = e
    for t in range(steps):
        e = B @ e + b
        out[t + 1] = e
    return out

def asymptotic_deviation(topology: Topology, sig: SignalParams, truth: GroundTruth,
                         mu: float, eta: float) -> np.ndarray:
    """Fixed point of the deviation recursion (requires spectral radius < 1).

    Nonzero whenever eta > 0 and cluster targets differ: the cross-cluster
    pull biases every node away from its own target by O(mu*eta).
    """
    B = transition_matrix(topology, sig, mu, eta)
    b = _forcing(topology, sig, truth, mu, eta)
    n = B.shape[0]
    return np.linalg.solve(np.eye(n) - B, b)


def deviation_table(topology: Topology, sig: SignalParams, truth: GroundTruth,
                    mu: float, eta: float):
    """Per-node rows (node, deviation vector, squared norm) of the
    asymptotic mean deviation, for the theory CLI subcommand."""
    e = asymptotic_deviation(topology, sig, truth, mu, eta)
    L = sig.dim
    rows = []
    for n in range(1, topology.num_nodes + 1):
        block = e[(n - 1) * L: n * L]
        rows.append((n, block, float(block @ block)))
    return rows
