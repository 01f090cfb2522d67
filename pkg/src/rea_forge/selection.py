"""Representative frame selection by k-means over camera translations."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .geom import Pose

DEFAULT_REPRESENTATIVES = 25
MAX_LLOYD_ITERATIONS = 100

Frame = tuple[object, Pose]


@dataclass(eq=False)
class ClusterResult:
    """Final clustering with one representative frame id per cluster.

    sse_history records the within-cluster sum of squares at every
    assignment step plus the final state, for convergence audits.
    """

    assignments: np.ndarray
    centroids: np.ndarray
    representative_ids: list
    sse_history: list

    @property
    def k(self) -> int:
        return self.centroids.shape[0]


def filter_frames(frames: Sequence[Frame], predicate: Callable[[Frame], bool]) -> list:
    """Stable subsequence of frames satisfying the predicate."""
    return [f for f in frames if predicate(f)]


def _init_centers(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """k-means++ seeding: iteratively sample proportional to squared distance."""
    n = len(points)
    centers = np.empty((k, points.shape[1]))
    centers[0] = points[rng.integers(n)]
    d2 = ((points - centers[0]) ** 2).sum(axis=1)
    for i in range(1, k):
        total = d2.sum()
        if total <= 0:
            idx = int(rng.integers(n))  # all mass already covered (duplicate points)
        else:
            idx = int(rng.choice(n, p=d2 / total))
        centers[i] = points[idx]
        d2 = np.minimum(d2, ((points - centers[i]) ** 2).sum(axis=1))
    return centers


def select_representatives(
    frames: Sequence[Frame],
    k: int = DEFAULT_REPRESENTATIVES,
    seed: int = 0,
) -> ClusterResult:
    """Cluster camera translations and pick the frame nearest each centroid.

    Runs seeded k-means++ initialization followed by Lloyd iterations until
    the assignment reaches a fixpoint or 100 iterations pass. Clusters that
    empty out are re-seeded with the point farthest from its current center,
    so all min(k, n) clusters end non-empty. Representative ties (equal
    distance to centroid) resolve to the smaller frame_id.
    """
    if len(frames) == 0:
        raise ValueError("no frames to select from")
    if k <= 0:
        raise ValueError("k must be positive")
    points = np.stack([pose.translation for _, pose in frames])
    n = len(frames)
    kk = min(k, n)
    rng = np.random.default_rng(seed)
    centers = _init_centers(points, kk, rng)

    prev = None
    history = []
    for _ in range(MAX_LLOYD_ITERATIONS):
        d2 = ((points[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        assign = d2.argmin(axis=1)
        own = d2[np.arange(n), assign]
        history.append(float(own.sum()))
        counts = np.bincount(assign, minlength=kk)
        for e in np.nonzero(counts == 0)[0]:
            far = int(own.argmax())
            centers[e] = points[far]
            assign[far] = e
            own[far] = -np.inf  # ineligible for further re-seeding this round
        if prev is not None and np.array_equal(assign, prev):
            break
        prev = assign
        for j in range(kk):
            centers[j] = points[assign == j].mean(axis=0)

    for j in range(kk):
        centers[j] = points[assign == j].mean(axis=0)
    final_d2 = ((points - centers[assign]) ** 2).sum(axis=1)
    history.append(float(final_d2.sum()))

    reps = []
    ids = [fid for fid, _ in frames]
    for j in range(kk):
        members = np.nonzero(assign == j)[0]
        dist = final_d2[members]
        best = min(zip(dist, (ids[m] for m in members)))
        reps.append(best[1])
    return ClusterResult(assign, centers, reps, history)
