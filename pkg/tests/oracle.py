"""Naive dense reference implementations used as test oracles.

Everything here assembles explicit n x n matrices with ``np.linalg.solve``
and computes correlations with ``np.corrcoef``; nothing is shared with the
SVD-based code under test.
"""

import numpy as np


def hat(Z, lam):
    n, q = Z.shape
    if q < n:
        return Z @ np.linalg.solve(Z.T @ Z + lam * np.eye(q), Z.T)
    # dual form Z Z'(Z Z' + lam I)^-1, valid for lam > 0; the two factors commute
    K = Z @ Z.T
    return np.linalg.solve(K + lam * np.eye(n), K)


def resid(Z, lam):
    return np.eye(Z.shape[0]) - hat(Z, lam)


def cor(u, v):
    return float(np.corrcoef(u, v)[0, 1])


def perm_matrix(perm):
    n = len(perm)
    P = np.zeros((n, n))
    P[np.arange(n), perm] = 1.0
    return P


def transform_matrix(row, kind):
    if kind == "permutation":
        return perm_matrix(row)
    return np.diag(np.asarray(row, dtype=float))


def p_two(T):
    t1 = T[0]
    up = sum(1 for t in T if t >= t1)
    lo = sum(1 for t in T if t <= t1)
    return min(1.0, 2.0 * min(up, lo) / len(T))


def p_one(T):
    return sum(1 for t in T if t >= T[0]) / len(T)


def statistics(method, y, X, Z, rows, kind="permutation", lam=None, lam_x=None, col=0, statistic="partial"):
    """Per-transformation statistics of each method, assembled densely."""
    x = X[:, col]
    out = []
    for row in rows:
        P = transform_matrix(row, kind)
        if method == "fl":
            R = resid(Z, 0.0)
            target = R @ x if statistic == "partial" else x
            out.append(cor(R @ P @ R @ y, target))
        elif method == "kennedy":
            R = resid(Z, 0.0)
            out.append(cor(P @ R @ y, R @ x))
        elif method in ("flhd-partial", "flhd-semi"):
            R, H = resid(Z, lam), hat(Z, lam)
            target = resid(Z, lam_x) @ x if method == "flhd-partial" else x
            out.append(cor(R @ (P @ R + H) @ y, target))
        elif method == "dr":
            R, H = resid(Z, lam), hat(Z, lam)
            out.append(cor((P @ R + H) @ y, resid(Z, lam_x) @ x))
        elif method == "npc":
            R, H = resid(Z, lam), hat(Z, lam)
            v = R @ (P @ R + H) @ y
            out.append([cor(v, X[:, k]) for k in range(X.shape[1])])
        else:
            raise ValueError(method)
    return np.array(out)


def p_value(method, y, X, Z, rows, **kw):
    T = statistics(method, y, X, Z, rows, **kw)
    if method == "npc":
        return p_one(np.max(np.abs(T), axis=1))
    return p_two(T)
