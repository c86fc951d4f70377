"""Weighted support vector data description over a Gaussian kernel.

Finds the smallest feature-space ball that encloses the training points,
where each point's dual weight is capped by its trust score times a global
cap fraction. Low-trust points get a small cap, so a few corrupted samples
cannot drag the ball toward themselves.

The dual problem is

    maximize    sum_i a_i K_ii - sum_ij a_i a_j K_ij
    subject to  sum_i a_i = 1,   0 <= a_i <= box_i

solved by pairwise coordinate exchange on the maximal violating pair. The
solver is small and allocation-free in the loop; the detector trains many
tiny models per run, so this path stays off sklearn's validation machinery.
"""

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, OutlierMixin
from sklearn.utils.validation import check_array, check_is_fitted

SUPPORT_EPS = 1e-8  # alpha above this counts as a support vector


class InfeasibleTrainingError(ValueError):
    """Raised when the box caps cannot sum to the simplex constraint."""


def rbf_gram(X, gamma: float):
    """Gram matrix exp(-gamma * ||x_i - x_j||^2) with an exact unit diagonal."""
    sq = np.sum(X * X, axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (X @ X.T)
    np.maximum(d2, 0.0, out=d2)
    np.fill_diagonal(d2, 0.0)
    return np.exp(-gamma * d2)


def rbf_cross(X, Y, gamma: float):
    """Cross kernel exp(-gamma * ||x_i - y_j||^2), shape (len(X), len(Y))."""
    sqx = np.sum(X * X, axis=1)
    sqy = np.sum(Y * Y, axis=1)
    d2 = sqx[:, None] + sqy[None, :] - 2.0 * (X @ Y.T)
    np.maximum(d2, 0.0, out=d2)
    return np.exp(-gamma * d2)


def solve_dual(K, box, tol: float = 1e-6, max_iter: int = 10_000):
    """Maximize the weighted ball dual over the capped simplex.

    Returns (alpha, n_iter). A single point is a point model: alpha = [1]
    with no feasibility requirement. For two or more points the caps must
    sum to at least 1 or no alpha can satisfy the simplex constraint.
    """
    box = np.asarray(box, dtype=float)
    v = len(box)
    if v == 1:
        return np.ones(1), 0
    if box.sum() < 1.0 - 1e-12:
        raise InfeasibleTrainingError(
            f"box caps sum to {box.sum():.6f} < 1; no feasible alpha"
        )

    alpha = box / box.sum()
    diag = np.diag(K).copy()
    # Gradient of the (minimized) negative objective a'Ka - a'diag(K).
    g = 2.0 * (K @ alpha) - diag

    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        up = alpha < box - 1e-12  # room to grow
        down = alpha > 1e-12  # room to shrink
        gi = np.where(up, g, np.inf)
        gj = np.where(down, g, -np.inf)
        i = int(np.argmin(gi))
        j = int(np.argmax(gj))
        viol = g[j] - g[i]
        if viol <= tol:
            break
        a = K[i, i] + K[j, j] - 2.0 * K[i, j]
        step_max = min(box[i] - alpha[i], alpha[j])
        if a > 1e-15:
            step = min(viol / (2.0 * a), step_max)
        else:
            step = step_max  # duplicate points: objective is linear along the pair
        alpha[i] += step
        alpha[j] -= step
        g += (2.0 * step) * (K[:, i] - K[:, j])
    return alpha, n_iter


def radius_sq(K, alpha, box):
    """Squared ball radius from the trained alpha.

    Uses the distance of an interior support vector (one strictly between
    its bounds, which sits exactly on the sphere); among several, the one
    farthest from either bound is the best conditioned. If every alpha is
    at a bound, falls back to the largest support vector distance so the
    ball still encloses its support.
    """
    box = np.asarray(box, dtype=float)
    center_dot = K @ alpha
    const = float(alpha @ center_dot)
    dist2 = np.diag(K) - 2.0 * center_dot + const
    interior = (alpha > SUPPORT_EPS) & (alpha < box - SUPPORT_EPS)
    if interior.any():
        idx = np.flatnonzero(interior)
        pick = idx[np.argmin(np.abs(alpha[idx] - box[idx] / 2.0))]
        return max(float(dist2[pick]), 0.0)
    support = alpha > SUPPORT_EPS
    if not support.any():
        return 0.0
    return max(float(dist2[support].max()), 0.0)


@dataclass(frozen=True)
class BallModel:
    """Trained descriptor: training points, dual weights, and the ball."""

    X: np.ndarray
    alpha: np.ndarray
    gamma: float
    const: float  # alpha' K alpha, the squared center norm term
    r2: float

    def distances_sq(self, Xq):
        k = rbf_cross(np.atleast_2d(Xq), self.X, self.gamma)
        # Query self-kernel is exactly 1 for the Gaussian kernel.
        return 1.0 - 2.0 * (k @ self.alpha) + self.const

    def score(self, Xq):
        """Positive for points outside the ball, negative inside."""
        return self.distances_sq(Xq) - self.r2

    def is_outlier(self, Xq):
        return self.score(Xq) > 0.0


def train_model(X, weights, cap: float, gamma: float,
                tol: float = 1e-6, max_iter: int = 10_000) -> BallModel:
    """Fit a BallModel with per-point caps weights * cap."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    box = np.asarray(weights, dtype=float) * cap
    if len(box) != len(X):
        raise ValueError("one weight per training point required")
    if len(X) == 1:
        return BallModel(X=X, alpha=np.ones(1), gamma=gamma, const=1.0, r2=0.0)
    K = rbf_gram(X, gamma)
    alpha, _ = solve_dual(K, box, tol=tol, max_iter=max_iter)
    const = float(alpha @ K @ alpha)
    r2 = radius_sq(K, alpha, box)
    return BallModel(X=X, alpha=alpha, gamma=gamma, const=const, r2=r2)


class WeightedSVDD(BaseEstimator, OutlierMixin):
    """Estimator wrapper over the ball descriptor.

    Follows the usual outlier detector sign conventions: decision_function
    is positive inside the learned boundary and predict returns +1 for
    inliers, -1 for outliers.

    Parameters
    ----------
    gamma : Gaussian kernel width, exp(-gamma * ||x - y||^2).
    cap : global cap fraction; a point's dual weight is capped at
        cap times its sample weight.
    tol : violating pair tolerance for solver convergence.
    max_iter : hard iteration cap for the solver.
    """

    def __init__(self, gamma: float = 50.0, cap: float = 0.4,
                 tol: float = 1e-6, max_iter: int = 10_000):
        self.gamma = gamma
        self.cap = cap
        self.tol = tol
        self.max_iter = max_iter

    def fit(self, X, y=None, sample_weight=None):
        X = check_array(X, dtype=float)
        if sample_weight is None:
            sample_weight = np.ones(len(X))
        sample_weight = np.asarray(sample_weight, dtype=float)
        if sample_weight.shape != (len(X),):
            raise ValueError("sample_weight must have one entry per row of X")
        if (sample_weight <= 0).any():
            raise ValueError("sample weights must be positive")
        self.model_ = train_model(X, sample_weight, self.cap, self.gamma,
                                  tol=self.tol, max_iter=self.max_iter)
        self.alpha_ = self.model_.alpha
        self.support_ = np.flatnonzero(self.alpha_ > SUPPORT_EPS)
        self.r2_ = self.model_.r2
        self.n_features_in_ = X.shape[1]
        return self

    def score_samples(self, X):
        check_is_fitted(self, "model_")
        X = check_array(X, dtype=float)
        return -self.model_.distances_sq(X)

    def decision_function(self, X):
        return self.score_samples(X) + self.r2_

    def predict(self, X):
        return np.where(self.decision_function(X) >= 0.0, 1, -1)
