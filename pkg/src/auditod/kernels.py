"""Hot inner loops, each in a numba-compiled and a pure-numpy flavour.

The public names (``knn_query``, ``nearest_centroid``, ``forest_depths``)
dispatch on :data:`auditod._accel.USE_NUMBA`. Both flavours are importable
directly so tests and ``benchmarks/`` can compare them.
"""
import numpy as np

from ._accel import USE_NUMBA, njit

# cap on the number of float64 temporaries the numpy fallbacks materialise
_BLOCK_ELEMS = 1 << 22


# --------------------------------------------------------------------------
# exact k nearest neighbours, Euclidean, self excluded, ties -> lower index
# --------------------------------------------------------------------------


@njit(cache=True)
def _knn_query_numba(points, k):
    n, p = points.shape
    dist = np.empty((n, k))
    idx = np.empty((n, k), dtype=np.int64)
    for i in range(n):
        # sorted k-buffer; j ascends, so equal distances keep the lower index
        filled = 0
        for j in range(n):
            if j == i:
                continue
            s = 0.0
            for c in range(p):
                t = points[i, c] - points[j, c]
                s += t * t
            d = np.sqrt(s)
            if filled == k and not d < dist[i, k - 1]:
                continue
            m = filled if filled < k else k - 1
            while m > 0 and dist[i, m - 1] > d:
                dist[i, m] = dist[i, m - 1]
                idx[i, m] = idx[i, m - 1]
                m -= 1
            dist[i, m] = d
            idx[i, m] = j
            if filled < k:
                filled += 1
    return dist, idx


def _knn_query_numpy(points, k):
    points = np.ascontiguousarray(points, dtype=np.float64)
    n, p = points.shape
    dist = np.empty((n, k))
    idx = np.empty((n, k), dtype=np.int64)
    block = max(1, _BLOCK_ELEMS // max(1, n * p))
    for start in range(0, n, block):
        stop = min(n, start + block)
        diff = points[start:stop, None, :] - points[None, :, :]
        d = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
        d[np.arange(stop - start), np.arange(start, stop)] = np.inf
        order = np.argsort(d, axis=1, kind="stable")[:, :k]
        idx[start:stop] = order
        dist[start:stop] = np.take_along_axis(d, order, axis=1)
    return dist, idx


def knn_query(points, k):
    """Distances and indices of each row's ``k`` nearest other rows, ascending."""
    points = np.ascontiguousarray(points, dtype=np.float64)
    if USE_NUMBA:
        return _knn_query_numba(points, int(k))
    return _knn_query_numpy(points, int(k))


# --------------------------------------------------------------------------
# nearest centroid assignment (k-means)
# --------------------------------------------------------------------------


@njit(cache=True)
def _nearest_centroid_numba(points, centers):
    n, p = points.shape
    k = centers.shape[0]
    labels = np.empty(n, dtype=np.int64)
    best = np.empty(n)
    for i in range(n):
        bl = 0
        bd = np.inf
        for c in range(k):
            s = 0.0
            for j in range(p):
                t = points[i, j] - centers[c, j]
                s += t * t
            if s < bd:
                bd = s
                bl = c
        labels[i] = bl
        best[i] = bd
    return labels, best


def _nearest_centroid_numpy(points, centers):
    n, p = points.shape
    k = centers.shape[0]
    labels = np.empty(n, dtype=np.int64)
    best = np.empty(n)
    block = max(1, _BLOCK_ELEMS // max(1, k * p))
    for start in range(0, n, block):
        stop = min(n, start + block)
        diff = points[start:stop, None, :] - centers[None, :, :]
        d2 = np.einsum("ijk,ijk->ij", diff, diff)
        lab = np.argmin(d2, axis=1)
        labels[start:stop] = lab
        best[start:stop] = d2[np.arange(stop - start), lab]
    return labels, best


def nearest_centroid(points, centers):
    """Index of and squared distance to the closest centre (first wins ties)."""
    points = np.ascontiguousarray(points, dtype=np.float64)
    centers = np.ascontiguousarray(centers, dtype=np.float64)
    if USE_NUMBA:
        return _nearest_centroid_numba(points, centers)
    return _nearest_centroid_numpy(points, centers)


# --------------------------------------------------------------------------
# isolation-forest path lengths
#
# Trees are packed into flat arrays. Internal node: feature >= 0, go left when
# x[feature] < threshold. Leaf: feature == -1, ``leaf_extra`` holds depth plus
# the average-path correction for the leaf's size.
# --------------------------------------------------------------------------


@njit(cache=True)
def _forest_depths_numba(points, roots, feature, threshold, left, right, leaf_extra):
    n = points.shape[0]
    t = roots.shape[0]
    out = np.zeros(n)
    for i in range(n):
        total = 0.0
        for r in range(t):
            node = roots[r]
            while feature[node] >= 0:
                if points[i, feature[node]] < threshold[node]:
                    node = left[node]
                else:
                    node = right[node]
            total += leaf_extra[node]
        out[i] = total / t
    return out


def _forest_depths_numpy(points, roots, feature, threshold, left, right, leaf_extra):
    n = points.shape[0]
    total = np.zeros(n)
    rows = np.arange(n)
    for root in roots:
        node = np.full(n, root, dtype=np.int64)
        active = feature[node] >= 0
        while active.any():
            a = node[active]
            f = feature[a]
            go_left = points[rows[active], f] < threshold[a]
            node[active] = np.where(go_left, left[a], right[a])
            active = feature[node] >= 0
        total += leaf_extra[node]
    return total / len(roots)


def forest_depths(points, roots, feature, threshold, left, right, leaf_extra):
    """Mean (over trees) of the adjusted path length of every row."""
    points = np.ascontiguousarray(points, dtype=np.float64)
    args = (
        points,
        np.ascontiguousarray(roots, dtype=np.int64),
        np.ascontiguousarray(feature, dtype=np.int64),
        np.ascontiguousarray(threshold, dtype=np.float64),
        np.ascontiguousarray(left, dtype=np.int64),
        np.ascontiguousarray(right, dtype=np.int64),
        np.ascontiguousarray(leaf_extra, dtype=np.float64),
    )
    if USE_NUMBA:
        return _forest_depths_numba(*args)
    return _forest_depths_numpy(*args)
