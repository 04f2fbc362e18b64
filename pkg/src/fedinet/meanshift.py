"""One-dimensional flat-kernel Meanshift with a k-NN bandwidth rule.

Every point seeds its own trajectory. A trajectory moves to the mean of the
points lying within ``bandwidth`` of its current position until the shift
drops below ``1e-6 * bandwidth`` (or 300 iterations elapse). Converged
positions are then merged greedily: candidates are visited by decreasing
support (number of points within ``bandwidth``), ties going to the lower
frequency, and a candidate is kept only if it lies farther than
``bandwidth`` from every mode already kept.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

log = logging.getLogger(__name__)

DEFAULT_QUANTILE = 0.3
EPSILON_BANDWIDTH = 1e-9
RELATIVE_TOL = 1e-6
MAX_ITER = 300


class EmptyEgoNetwork(ValueError):
    """Raised when an ego has no ties left to cluster."""


class ConvergenceWarning(UserWarning):
    pass


@dataclass(frozen=True)
class ClusterResult:
    labels: np.ndarray
    centers: np.ndarray
    bandwidth: float

    @property
    def k(self) -> int:
        return len(self.centers)

    def to_debug_dict(self, points: Sequence[float]) -> dict:
        """Plain-JSON dump of one clustering run."""
        return {
            "points": [float(p) for p in points],
            "bandwidth": self.bandwidth,
            "centers": [float(c) for c in self.centers],
            "labels": [int(x) for x in self.labels],
        }


def estimate_bandwidth(points: Sequence[float], quantile: float = DEFAULT_QUANTILE) -> float:
    """Mean distance from each point to its ``ceil(quantile * (n - 1))``-th nearest neighbour.

    The point itself is not counted as a neighbour. Returns ``EPSILON_BANDWIDTH``
    when that mean is zero (e.g. all points identical).
    """
    x = np.asarray(points, dtype=float)
    n = x.size
    if n < 2:
        raise ValueError("estimate_bandwidth needs at least 2 points, got %d" % n)
    if not 0.0 < quantile <= 1.0:
        raise ValueError("quantile must be in (0, 1], got %r" % quantile)
    k = max(1, math.ceil(quantile * (n - 1)))
    dist = np.abs(x[:, None] - x[None, :])
    # column 0 after sorting is the self-distance
    kth = np.sort(dist, axis=1)[:, k]
    bw = float(kth.mean())
    if bw <= 0.0:
        return EPSILON_BANDWIDTH
    return bw


def _converge(x: np.ndarray, bandwidth: float) -> tuple[np.ndarray, int]:
    tol = RELATIVE_TOL * bandwidth
    pos = x.copy()
    active = np.ones(x.size, dtype=bool)
    for _ in range(MAX_ITER):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        within = np.abs(pos[idx, None] - x[None, :]) <= bandwidth
        new = (within * x[None, :]).sum(axis=1) / within.sum(axis=1)
        done = np.abs(new - pos[idx]) < tol
        # a trajectory that has converged keeps the position at which the
        # shift fell below tolerance
        moving = idx[~done]
        pos[moving] = new[~done]
        active[idx[done]] = False
    return pos, int(active.sum())


def _merge_modes(x: np.ndarray, pos: np.ndarray, bandwidth: float) -> np.ndarray:
    candidates = np.unique(pos)
    support = (np.abs(candidates[:, None] - x[None, :]) <= bandwidth).sum(axis=1)
    order = np.lexsort((candidates, -support))
    kept: list[float] = []
    for i in order:
        c = candidates[i]
        if all(abs(c - other) > bandwidth for other in kept):
            kept.append(float(c))
    return np.array(sorted(kept))


def meanshift_1d(points: Sequence[float], bandwidth: float) -> ClusterResult:
    """Cluster 1-D ``points`` with a flat kernel of radius ``bandwidth``.

    Centers come back sorted in increasing order and ``labels[i]`` indexes
    into them.
    """
    if not bandwidth > 0:
        raise ValueError("bandwidth must be positive, got %r" % bandwidth)
    x = np.asarray(points, dtype=float)
    if x.size == 0:
        raise ValueError("meanshift_1d needs at least one point")
    pos, unconverged = _converge(x, bandwidth)
    if unconverged:
        warnings.warn(
            "%d of %d trajectories did not converge in %d iterations" % (unconverged, x.size, MAX_ITER),
            ConvergenceWarning,
            stacklevel=2,
        )
    centers = _merge_modes(x, pos, bandwidth)
    # argmin picks the lower center on exact ties since centers are sorted
    labels = np.argmin(np.abs(pos[:, None] - centers[None, :]), axis=1)
    return ClusterResult(labels=labels, centers=centers, bandwidth=float(bandwidth))


def cluster_values(values: Sequence[float], quantile: float = DEFAULT_QUANTILE) -> ClusterResult:
    """Estimate the bandwidth then run Meanshift; a single value is one cluster."""
    x = np.asarray(values, dtype=float)
    if x.size == 0:
        raise EmptyEgoNetwork("no frequencies to cluster")
    if x.size == 1:
        return ClusterResult(labels=np.zeros(1, dtype=int), centers=x.copy(), bandwidth=EPSILON_BANDWIDTH)
    return meanshift_1d(x, estimate_bandwidth(x, quantile))


def cluster_frequencies(ties, quantile: float = DEFAULT_QUANTILE) -> ClusterResult:
    """Cluster the annual contact frequencies of an ego's (filtered) ties."""
    ties = list(ties)
    if not ties:
        raise EmptyEgoNetwork("ego has no ties after filtering")
    return cluster_values([t.F for t in ties], quantile)
