"""Pure-numpy implementations of the hot kernels.

These are the reference semantics. The Cython module ``_kernels`` must
return bit-identical results, so distance arithmetic here is spelled out
term by term in the same order the C loops use.
"""

import numpy as np


def _sqdist(points, p):
    d = points - p
    return (d[:, 0] * d[:, 0] + d[:, 1] * d[:, 1]) + d[:, 2] * d[:, 2]


def farthest_point_sample(points, n_samples, start):
    """Indices of an iterative farthest-point subset of ``points`` (N, 3).

    Ties in the max-min distance go to the lowest index. Already selected
    indices are never re-selected, so duplicate points still yield
    ``n_samples`` distinct indices.
    """
    points = np.ascontiguousarray(points, dtype=np.float64)
    n = points.shape[0]
    out = np.empty(n_samples, dtype=np.int64)
    mind = np.full(n, np.inf)
    chosen = np.zeros(n, dtype=bool)
    cur = int(start)
    for i in range(n_samples):
        out[i] = cur
        chosen[cur] = True
        if i + 1 == n_samples:
            break
        np.minimum(mind, _sqdist(points, points[cur]), out=mind)
        masked = np.where(chosen, -1.0, mind)
        cur = int(np.argmax(masked))
    return out


def ball_query(points, centroid_idx, radius, k):
    """(S, k) neighbor indices within ``radius`` of each centroid.

    Neighbors are ordered by squared distance, ties by index. Short rows
    are padded with the nearest qualifying neighbor (the centroid itself
    when nothing qualifies).
    """
    points = np.ascontiguousarray(points, dtype=np.float64)
    centroid_idx = np.asarray(centroid_idx, dtype=np.int64)
    r2 = radius * radius
    out = np.empty((centroid_idx.shape[0], k), dtype=np.int64)
    for s, c in enumerate(centroid_idx):
        d2 = _sqdist(points, points[c])
        inside = np.flatnonzero(d2 <= r2)
        if inside.size == 0:
            out[s] = c
            continue
        order = inside[np.argsort(d2[inside], kind="stable")][:k]
        out[s, : order.size] = order
        out[s, order.size :] = order[0]
    return out


def box_filter_valid(depth, valid, kernel_size):
    """Mean over valid in-bounds neighbors, evaluated as ``c + mean(x - c)``.

    Centering on the pixel's own value keeps constant regions exactly
    constant. Invalid pixels come back as 0.
    """
    depth = np.ascontiguousarray(depth, dtype=np.float64)
    valid = np.ascontiguousarray(valid, dtype=bool)
    h, w = depth.shape
    r = kernel_size // 2
    acc = np.zeros((h, w))
    cnt = np.zeros((h, w), dtype=np.int64)
    for di in range(-r, r + 1):
        for dj in range(-r, r + 1):
            # destination rows/cols whose neighbor (i+di, j+dj) is in bounds
            i0, i1 = max(0, -di), min(h, h - di)
            j0, j1 = max(0, -dj), min(w, w - dj)
            if i0 >= i1 or j0 >= j1:
                continue
            nb = depth[i0 + di : i1 + di, j0 + dj : j1 + dj]
            nbv = valid[i0 + di : i1 + di, j0 + dj : j1 + dj]
            ctr = depth[i0:i1, j0:j1]
            a = acc[i0:i1, j0:j1]
            # skip-vs-add-zero is equivalent, so a where() matches the C branch
            a[...] = np.where(nbv, a + (nb - ctr), a)
            cnt[i0:i1, j0:j1] += nbv
    out = np.zeros((h, w))
    m = valid & (cnt > 0)
    out[m] = depth[m] + acc[m] / cnt[m]
    return out
