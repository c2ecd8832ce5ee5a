"""Brute-force reference computations, deliberately independent of the package code."""

import math

import numpy as np


def projection_loop(stack, op):
    """stack: (N, Y, X). Per-pixel reduction with explicit loops."""
    n, h, w = stack.shape
    out = np.empty((h, w))
    for yy in range(h):
        for xx in range(w):
            best = stack[0, yy, xx]
            for z in range(1, n):
                v = stack[z, yy, xx]
                if (op == "min" and v < best) or (op == "max" and v > best):
                    best = v
            out[yy, xx] = best
    return out


def bilinear_formula(src, w, h):
    """Evaluate the bilinear interpolant at corner-aligned sample positions."""
    in_h, in_w = src.shape
    out = np.empty((h, w))
    for r in range(h):
        for c in range(w):
            y = r * (in_h - 1) / (h - 1) if h > 1 else 0.0
            x = c * (in_w - 1) / (w - 1) if w > 1 else 0.0
            y0, x0 = min(int(math.floor(y)), in_h - 1), min(int(math.floor(x)), in_w - 1)
            y1, x1 = min(y0 + 1, in_h - 1), min(x0 + 1, in_w - 1)
            s, t = x - x0, y - y0
            out[r, c] = (
                src[y0, x0] * (1 - s) * (1 - t)
                + src[y0, x1] * s * (1 - t)
                + src[y1, x0] * (1 - s) * t
                + src[y1, x1] * s * t
            )
    return out


def cross_cov_loop(x, y):
    p, n = x.shape
    q = y.shape[0]
    mx = [sum(x[i, k] for k in range(n)) / n for i in range(p)]
    my = [sum(y[j, k] for k in range(n)) / n for j in range(q)]
    out = np.empty((p, q))
    for i in range(p):
        for j in range(q):
            out[i, j] = sum((x[i, k] - mx[i]) * (y[j, k] - my[j]) for k in range(n)) / (n - 1)
    return out


def grid_search_cca(x, y, step_deg=0.5):
    """Max correlation of a^T x and b^T y over unit directions in R^2 on an angular grid."""
    theta = np.deg2rad(np.arange(0.0, 180.0, step_deg))
    dirs = np.stack([np.cos(theta), np.sin(theta)], axis=1)  # (m, 2)
    px = dirs @ x
    py = dirs @ y
    px = px - px.mean(axis=1, keepdims=True)
    py = py - py.mean(axis=1, keepdims=True)
    px /= np.linalg.norm(px, axis=1, keepdims=True)
    py /= np.linalg.norm(py, axis=1, keepdims=True)
    # b and -b are both on the half circle's closure; |corr| covers the sign flip
    return float(np.abs(px @ py.T).max())


def svm_dual_grid(X, y, C, steps=400):
    """Maximise the SVM dual over a grid on four dual variables with y^T a = 0.

    Requires labels (+1, +1, -1, -1); a4 is fixed by the equality constraint.
    """
    assert list(y) == [1, 1, -1, -1]
    grid = np.linspace(0.0, C, steps + 1)
    K = X.T @ X
    Q = np.outer(y, y) * K
    best = -np.inf
    a2, a3 = np.meshgrid(grid, grid, indexing="ij")
    a2, a3 = a2.ravel(), a3.ravel()
    for a1 in grid:
        a4 = a1 + a2 - a3
        ok = (a4 >= -1e-15) & (a4 <= C + 1e-15)
        A = np.stack([np.full(ok.sum(), a1), a2[ok], a3[ok], a4[ok]])
        vals = A.sum(axis=0) - 0.5 * np.einsum("in,ij,jn->n", A, Q, A)
        if vals.size:
            best = max(best, float(vals.max()))
    return best


def knn_loop(points, i, candidates, k):
    """k nearest of ``candidates`` to point i (excluding i), ties by candidate order."""
    dists = []
    for order, j in enumerate(candidates):
        if j == i:
            continue
        d = sum((points[r, i] - points[r, j]) ** 2 for r in range(points.shape[0]))
        dists.append((d, order, j))
    dists.sort()
    return [j for _, _, j in dists[:k]]


def on_segment(s, a, b, tol=1e-9):
    d = b - a
    dd = float(d @ d)
    if dd == 0:
        return np.linalg.norm(s - a) <= tol
    lam = float((s - a) @ d) / dd
    if lam < -tol or lam > 1 + tol:
        return False
    return np.linalg.norm(s - (a + lam * d)) <= tol * max(1.0, np.linalg.norm(d))


def mean_sem_two_pass(values):
    n = len(values)
    mean = sum(values) / n
    ss = sum((v - mean) ** 2 for v in values)
    return mean, math.sqrt(ss / (n - 1)) / math.sqrt(n)
