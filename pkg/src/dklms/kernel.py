"""Reproducing kernels."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

FAMILIES = ("gaussian",)


@dataclass(frozen=True)
class KernelParams:
    """Kernel ``exp(-bandwidth * ||u - v||^2)``; only the Gaussian family exists."""

    bandwidth: float
    family: str = "gaussian"

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown kernel family {self.family!r}; expected one of {FAMILIES}")
        if not self.bandwidth > 0:
            raise ValueError(f"bandwidth must be positive, got {self.bandwidth}")


def _as_points(points) -> np.ndarray:
    X = np.asarray(points, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2:
        raise ValueError(f"expected a list of vectors, got array of shape {X.shape}")
    return X


def kernel_eval(params: KernelParams, u, v) -> float:
    u = np.atleast_1d(np.asarray(u, dtype=float))
    v = np.atleast_1d(np.asarray(v, dtype=float))
    if u.shape != v.shape:
        raise ValueError(f"dimension mismatch: {u.shape} vs {v.shape}")
    diff = u - v
    return float(np.exp(-params.bandwidth * np.dot(diff, diff)))


def kernel_matrix(params: KernelParams, X, Y) -> np.ndarray:
    """Cross-kernel matrix ``K[i, j] = k(X[i], Y[j])`` for row-stacked points."""
    X = _as_points(X)
    Y = _as_points(Y)
    if X.shape[1] != Y.shape[1]:
        raise ValueError(f"dimension mismatch: {X.shape[1]} vs {Y.shape[1]}")
    diff = X[:, None, :] - Y[None, :, :]
    return np.exp(-params.bandwidth * np.einsum("ijm,ijm->ij", diff, diff))


def gram_matrix(params: KernelParams, points) -> np.ndarray:
    X = _as_points(points)
    if X.shape[0] == 0:
        raise ValueError("gram_matrix needs at least one point")
    G = kernel_matrix(params, X, X)
    # exact symmetry regardless of summation order
    return np.triu(G) + np.triu(G, 1).T
