# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled twins of the kernels in ``_kernels_py``.

Same arithmetic order as the numpy reference; outputs are bit-identical.
"""

import numpy as np
cimport numpy as cnp

cnp.import_array()


cdef inline double _sqdist(const double[:, ::1] pts, Py_ssize_t a, Py_ssize_t b) nogil:
    cdef double dx = pts[a, 0] - pts[b, 0]
    cdef double dy = pts[a, 1] - pts[b, 1]
    cdef double dz = pts[a, 2] - pts[b, 2]
    return dx * dx + dy * dy + dz * dz


def farthest_point_sample(points, Py_ssize_t n_samples, Py_ssize_t start):
    cdef const double[:, ::1] pts = np.ascontiguousarray(points, dtype=np.float64)
    cdef Py_ssize_t n = pts.shape[0]
    out_arr = np.empty(n_samples, dtype=np.int64)
    cdef cnp.int64_t[::1] out = out_arr
    cdef double[::1] mind = np.full(n, np.inf)
    cdef unsigned char[::1] chosen = np.zeros(n, dtype=np.uint8)
    cdef Py_ssize_t i, j, cur = start, best_j
    cdef double d, best
    with nogil:
        for i in range(n_samples):
            out[i] = cur
            chosen[cur] = 1
            if i + 1 == n_samples:
                break
            best = -1.0
            best_j = 0
            for j in range(n):
                d = _sqdist(pts, j, cur)
                if d < mind[j]:
                    mind[j] = d
                if not chosen[j] and mind[j] > best:
                    best = mind[j]
                    best_j = j
            cur = best_j
    return out_arr


def ball_query(points, centroid_idx, double radius, Py_ssize_t k):
    cdef const double[:, ::1] pts = np.ascontiguousarray(points, dtype=np.float64)
    cdef const cnp.int64_t[::1] cidx = np.ascontiguousarray(centroid_idx, dtype=np.int64)
    cdef Py_ssize_t n = pts.shape[0], s_count = cidx.shape[0]
    out_arr = np.empty((s_count, k), dtype=np.int64)
    cdef cnp.int64_t[:, ::1] out = out_arr
    cdef double[::1] bd = np.empty(k)
    cdef cnp.int64_t[::1] bi = np.empty(k, dtype=np.int64)
    cdef double r2 = radius * radius, d
    cdef Py_ssize_t s, j, m, pos, c
    with nogil:
        for s in range(s_count):
            c = cidx[s]
            m = 0
            for j in range(n):
                d = _sqdist(pts, j, c)
                if d > r2:
                    continue
                if m == k and d >= bd[k - 1]:
                    continue
                # stable insertion: equal distances keep index order
                pos = m if m < k else k - 1
                while pos > 0 and bd[pos - 1] > d:
                    bd[pos] = bd[pos - 1]
                    bi[pos] = bi[pos - 1]
                    pos -= 1
                bd[pos] = d
                bi[pos] = j
                if m < k:
                    m += 1
            if m == 0:
                for j in range(k):
                    out[s, j] = c
                continue
            for j in range(m):
                out[s, j] = bi[j]
            for j in range(m, k):
                out[s, j] = bi[0]
    return out_arr


def box_filter_valid(depth, valid, Py_ssize_t kernel_size):
    cdef const double[:, ::1] dep = np.ascontiguousarray(depth, dtype=np.float64)
    cdef const unsigned char[:, ::1] val = np.ascontiguousarray(valid, dtype=np.uint8)
    cdef Py_ssize_t h = dep.shape[0], w = dep.shape[1], r = kernel_size // 2
    out_arr = np.zeros((h, w))
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i, j, di, dj, ii, jj, cnt
    cdef double acc, c
    with nogil:
        for i in range(h):
            for j in range(w):
                if not val[i, j]:
                    continue
                c = dep[i, j]
                acc = 0.0
                cnt = 0
                for di in range(-r, r + 1):
                    ii = i + di
                    if ii < 0 or ii >= h:
                        continue
                    for dj in range(-r, r + 1):
                        jj = j + dj
                        if jj < 0 or jj >= w or not val[ii, jj]:
                            continue
                        acc = acc + (dep[ii, jj] - c)
                        cnt += 1
                out[i, j] = c + acc / cnt
    return out_arr
