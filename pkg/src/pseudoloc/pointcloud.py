"""Random subsampling, farthest point sampling and ball-query grouping."""

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import DegenerateInputError, RejectedInputError


@dataclass
class GroupedPoints:
    """Local neighborhoods around sampled centroids.

    ``groups`` has shape (N', K, 3 + C): neighbor coordinates relative to
    their centroid, followed by the neighbor's C feature channels.
    ``indices`` (N', K) records which input point filled each row.
    """

    centroids: np.ndarray
    groups: np.ndarray
    indices: np.ndarray


def _as_cloud(pc):
    pc = np.asarray(pc, dtype=np.float64)
    if pc.ndim != 2 or pc.shape[1] != 3:
        raise RejectedInputError(f"point cloud must be (N, 3), got {pc.shape}")
    return pc


def random_sample(pc, n, seed):
    """Draw exactly ``n`` points; without replacement when the cloud is large enough."""
    pc = _as_cloud(pc)
    if pc.shape[0] == 0:
        raise DegenerateInputError("cannot sample from an empty point cloud")
    rng = np.random.default_rng(seed)
    replace = pc.shape[0] < n
    idx = rng.choice(pc.shape[0], size=n, replace=replace)
    return pc[idx]


def farthest_point_sample(pc, n, seed, start_index=None):
    """Indices of ``n`` points chosen by iterative farthest point sampling.

    The first index is a seeded uniform draw unless ``start_index`` pins it.
    """
    pc = _as_cloud(pc)
    if not 1 <= n <= pc.shape[0]:
        raise RejectedInputError(f"need 1 <= n <= {pc.shape[0]}, got n={n}")
    if start_index is None:
        start_index = int(np.random.default_rng(seed).integers(pc.shape[0]))
    elif not 0 <= start_index < pc.shape[0]:
        raise RejectedInputError(f"start_index {start_index} out of range")
    return kernels.farthest_point_sample(pc, int(n), int(start_index))


def ball_query_group(pc, features, centroid_indices, radius, k):
    """Group up to ``k`` neighbors within ``radius`` of each centroid.

    ``features`` is (N, C) or None. Rows are filled nearest first; a short
    neighborhood repeats its nearest member.
    """
    pc = _as_cloud(pc)
    centroid_indices = np.asarray(centroid_indices, dtype=np.int64)
    if radius <= 0 or k < 1:
        raise RejectedInputError(f"need radius > 0 and k >= 1, got radius={radius}, k={k}")
    if centroid_indices.size and (centroid_indices.min() < 0 or centroid_indices.max() >= pc.shape[0]):
        raise RejectedInputError("centroid index out of range")
    idx = kernels.ball_query(pc, centroid_indices, float(radius), int(k))
    centroids = pc[centroid_indices]
    rel = pc[idx] - centroids[:, None, :]
    if features is not None:
        features = np.asarray(features, dtype=np.float64)
        if features.ndim != 2 or features.shape[0] != pc.shape[0]:
            raise RejectedInputError(f"features must be (N, C) with N={pc.shape[0]}")
        rel = np.concatenate([rel, features[idx]], axis=-1)
    return GroupedPoints(centroids, rel, idx)


def covering_radius(pc, indices):
    """Largest distance from any point to its nearest selected point."""
    pc = _as_cloud(pc)
    sel = pc[np.asarray(indices)]
    d = np.linalg.norm(pc[:, None, :] - sel[None, :, :], axis=-1)
    return float(d.min(axis=1).max())
