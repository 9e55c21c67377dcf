"""Learning-curve metrics: network MSE, cumulative loss and empirical regret."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ..kernel import KernelParams, kernel_matrix


@dataclass
class MetricTrace:
    algorithm: str
    mse: np.ndarray
    cumulative_loss: np.ndarray
    steady_state_mse: float
    diverged: bool = False
    regret: Optional[np.ndarray] = field(default=None, repr=False)
    regret_slope: Optional[float] = None


def _stack(records: Sequence) -> np.ndarray:
    lengths = {np.shape(r) for r in records}
    if len(lengths) != 1:
        raise ValueError(f"trial records have mismatched shapes: {sorted(lengths)}")
    return np.asarray(records, dtype=float)


def average_mse(per_trial_errors: Sequence) -> np.ndarray:
    """Trial mean of the node-averaged squared error.

    Each record is an (N,) or (N, K) array of a-priori errors.
    """
    E = _stack(per_trial_errors)
    sq = E ** 2
    if sq.ndim == 3:
        sq = sq.mean(axis=2)
    return sq.mean(axis=0)


def steady_state(mse: np.ndarray, window: int) -> float:
    return float(np.mean(mse[-window:]))


def loglog_slope(curve: np.ndarray) -> float:
    """Least-squares slope of log max(R, 1) against log N over the second half."""
    N = len(curve)
    idx = np.arange(N // 2, N) if N >= 2 else np.arange(N)
    n = idx + 1.0
    r = np.log(np.maximum(curve[idx], 1.0))
    if idx.size < 2:
        return 0.0
    return float(np.polyfit(np.log(n), r, 1)[0])


def empirical_regret(algorithm_losses, comparator_losses) -> tuple[np.ndarray, float]:
    """Cumulative excess loss R(N) of an online learner over a fixed comparator.

    Inputs are per-step losses, either (N,) or (N, K); node losses are summed.
    Returns the regret curve and its log-log slope over N in [N/2, N].
    """
    a = np.asarray(algorithm_losses, dtype=float)
    c = np.asarray(comparator_losses, dtype=float)
    if a.shape != c.shape:
        raise ValueError(f"loss sequences differ in shape: {a.shape} vs {c.shape}")
    excess = a - c
    if excess.ndim == 2:
        excess = excess.sum(axis=1)
    R = np.cumsum(excess)
    return R, loglog_slope(R)


class KernelRidge:
    """Batch kernel ridge regressor: ``alpha = (G + lam I)^-1 y``."""

    def __init__(self, kernel: KernelParams, regularization: float = 1e-3):
        self.kernel = kernel
        self.regularization = regularization
        self.centers = None
        self.alpha = None

    def fit(self, X, y) -> "KernelRidge":
        X = np.asarray(X, dtype=float)
        G = kernel_matrix(self.kernel, X, X)
        G[np.diag_indices_from(G)] += self.regularization
        self.alpha = np.linalg.solve(G, np.asarray(y, dtype=float))
        self.centers = X
        return self

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        shape = X.shape[:-1]
        flat = X.reshape(-1, X.shape[-1])
        return (kernel_matrix(self.kernel, flat, self.centers) @ self.alpha).reshape(shape)
