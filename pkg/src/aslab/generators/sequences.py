"""Explicit model sets: decreasing sequences and inverted lattices."""

from __future__ import annotations

import numpy as np

from .clouds import CloudError, PointCloud


def decreasing_sequence(p, N) -> PointCloud:
    """{n^(-1/p) : 1 <= n <= N} together with the accumulation point 0."""
    if not p > 0:
        raise CloudError("p must be positive")
    N = int(N)
    if N < 2:
        raise CloudError("N must be at least 2")
    n = np.arange(1, N + 1, dtype=float)
    pts = np.concatenate([n ** (-1.0 / p), [0.0]])
    eps = N ** (-1.0 / p) - (N + 1) ** (-1.0 / p)
    return PointCloud(pts[:, None], eps, f"decreasing_sequence(p={p}, N={N})", special=[[0.0]])


def inverted_lattice(k, N) -> PointCloud:
    """{v/|v|^2 : v in Z^k, 0 < |v| <= N} together with 0, for k = 1 or 2.

    The resolution is the spacing of the outermost lattice shell after
    inversion: 1/N - 1/(N+1) on the line, 1/N^2 in the plane.
    """
    k, N = int(k), int(N)
    if k not in (1, 2):
        raise CloudError("inverted lattices are available for k = 1 and k = 2")
    if N < 2:
        raise CloudError("N must be at least 2")
    if k == 1:
        v = np.concatenate([np.arange(-N, 0), np.arange(1, N + 1)]).astype(float)[:, None]
        eps = 1.0 / N - 1.0 / (N + 1)
    else:
        r = np.arange(-N, N + 1, dtype=float)
        v = np.stack(np.meshgrid(r, r, indexing="ij"), axis=-1).reshape(-1, 2)
        n2 = np.sum(v * v, axis=1)
        v = v[(n2 > 0) & (n2 <= N * N)]
        eps = 1.0 / N ** 2
    pts = v / np.sum(v * v, axis=1, keepdims=True)
    pts = np.concatenate([pts, np.zeros((1, k))])
    return PointCloud(pts, eps, f"inverted_lattice(k={k}, N={N})", special=np.zeros((1, k)))
