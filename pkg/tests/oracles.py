"""Reference computations shared by the unit and acceptance tests."""

import numpy as np

from headctl.neuro import backprop_bptt, batch_loss


def central_difference_max_rel_error(p, X, Yt, masks=None, eps=1e-5):
    """Worst relative gap between the analytic gradient and central differences.

    Differences are evaluated in long double so loss round-off does not swamp tiny gradients.
    """
    g, _ = backprop_bptt(p, X, Yt, masks)
    q = p.copy()
    q.tensors = {k: v.astype(np.longdouble) for k, v in q.tensors.items()}
    XL, YL = X.astype(np.longdouble), Yt.astype(np.longdouble)
    ML = None if masks is None else [m.astype(np.longdouble) for m in masks]
    worst = 0.0
    for k, v in q.tensors.items():
        for idx in np.ndindex(v.shape):
            o = v[idx]
            v[idx] = o + eps
            lp = batch_loss(q, XL, YL, ML)
            v[idx] = o - eps
            lm = batch_loss(q, XL, YL, ML)
            v[idx] = o
            fd = (lp - lm) / (2 * eps)
            a = g.tensors[k][idx]
            denom = max(abs(fd), abs(a))
            if denom > 0:
                worst = max(worst, float(abs(fd - a) / denom))
    return worst


def union_find_groups(pts, tol):
    """O(n^2) single-linkage groups under ``distance <= tol``, as sorted index tuples."""
    n = len(pts)
    parent = list(range(n))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for i in range(n):
        for j in range(i + 1, n):
            if np.sum((pts[i] - pts[j]) ** 2) <= tol * tol:
                parent[find(i)] = find(j)
    groups = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return sorted(tuple(g) for g in groups.values())
