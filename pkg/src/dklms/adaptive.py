"""Online learners: diffusion KLMS, KLMS, non-cooperative KLMS and diffusion LMS.

Every learner predicts with its a-priori estimate, so ``step`` returns the
error ``d(n) - f_{n-1}(x(n))`` before the estimate is updated with it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .graph import PropagationWeights
from .kernel import KernelParams


def instantaneous_loss(desired, prediction):
    """Half squared error, elementwise for arrays."""
    return 0.5 * np.square(np.subtract(desired, prediction))


def _check_finite(desired: np.ndarray):
    if not np.all(np.isfinite(desired)):
        raise ValueError("desired values must be finite")


@dataclass(frozen=True)
class DictionarySlot:
    time_index: int
    regressors: np.ndarray
    scaled_errors: np.ndarray


class KernelBuffer:
    """FIFO store of per-step network slots, oldest first.

    Each slot holds the K regressors seen at one time step and the matching
    scaled errors. With ``capacity=None`` the buffer grows without bound.
    """

    def __init__(self, capacity: Optional[int], num_nodes: int, dim: int):
        if capacity is not None and capacity < 1:
            raise ValueError(f"buffer capacity must be >= 1, got {capacity}")
        self.capacity = capacity
        self.num_nodes = num_nodes
        self.dim = dim
        size = capacity if capacity is not None else 64
        self._x = np.zeros((size, num_nodes, dim))
        self._g = np.zeros((size, num_nodes))
        self._t = np.zeros(size, dtype=np.int64)
        self._len = 0

    def __len__(self):
        return self._len

    def append(self, time_index: int, regressors: np.ndarray, scaled_errors: np.ndarray):
        if self._len and time_index <= self._t[self._len - 1]:
            raise ValueError("time indices must increase")
        if self.capacity is not None and self._len == self.capacity:
            self._x[:-1] = self._x[1:]
            self._g[:-1] = self._g[1:]
            self._t[:-1] = self._t[1:]
            self._len -= 1
        elif self._len == self._x.shape[0]:
            self._x = np.concatenate([self._x, np.zeros_like(self._x)])
            self._g = np.concatenate([self._g, np.zeros_like(self._g)])
            self._t = np.concatenate([self._t, np.zeros_like(self._t)])
        self._x[self._len] = regressors
        self._g[self._len] = scaled_errors
        self._t[self._len] = time_index
        self._len += 1

    @property
    def regressors(self) -> np.ndarray:
        return self._x[: self._len]

    @property
    def scaled_errors(self) -> np.ndarray:
        return self._g[: self._len]

    @property
    def time_indices(self) -> np.ndarray:
        return self._t[: self._len]

    @property
    def slots(self) -> list[DictionarySlot]:
        return [DictionarySlot(int(t), x.copy(), g.copy())
                for t, x, g in zip(self.time_indices, self.regressors, self.scaled_errors)]


def _as_inputs(inputs, num_nodes: int, dim: Optional[int]) -> np.ndarray:
    X = np.asarray(inputs, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.shape[0] != num_nodes:
        raise ValueError(f"expected {num_nodes} regressors, got {X.shape[0]}")
    if dim is not None and X.shape[1] != dim:
        raise ValueError(f"regressor dimension {X.shape[1]} does not match stored dimension {dim}")
    return X


def _step_sizes(step_size, num_nodes: int) -> np.ndarray:
    mu = np.broadcast_to(np.asarray(step_size, dtype=float), (num_nodes,)).copy()
    if np.any(mu <= 0):
        raise ValueError("step sizes must be positive")
    return mu


class DKLMS:
    """Diffusion kernel LMS with adapt-then-combine cooperation.

    The node functions are never formed explicitly. After step n they equal
    ``f_n = sum_i W(n - i + 1) g(i) k(x(i), .)`` over the buffered slots,
    so the a-priori response of node k at x_k(n) is::

        sum_i sum_l W(n - i)[k, l] * g_i[l] * k(x_l(i), x_k(n))

    With unmasked weights and an unbounded buffer this is exactly the
    recursion ``f_n = A (f_{n-1} + g(n) k(x(n), .))``.
    """

    def __init__(self, weights: PropagationWeights, kernel: KernelParams, step_size,
                 capacity: Optional[int] = None, dim: int = 1):
        K = weights.matrices.shape[1]
        if capacity is None:
            capacity = weights.max_power
        if weights.max_power < capacity:
            raise ValueError(f"weights hold {weights.max_power} powers but buffer capacity is {capacity}")
        self.weights = weights
        self.kernel = kernel
        self.step_sizes = _step_sizes(step_size, K)
        self.num_nodes = K
        self.buffer = KernelBuffer(capacity, K, dim)
        self.step_count = 0

    def predict(self, inputs) -> np.ndarray:
        X = _as_inputs(inputs, self.num_nodes, self.buffer.dim)
        if not len(self.buffer):
            return np.zeros(self.num_nodes)
        n = self.step_count + 1
        W = self.weights.matrices[n - self.buffer.time_indices - 1]          # (S, k, l)
        diff = self.buffer.regressors[:, :, None, :] - X[None, None, :, :]   # (S, l, k, m)
        kern = np.exp(-self.kernel.bandwidth * np.einsum("slkm,slkm->slk", diff, diff))
        return np.einsum("skl,sl,slk->k", W, self.buffer.scaled_errors, kern)

    def step(self, inputs, desired) -> np.ndarray:
        X = _as_inputs(inputs, self.num_nodes, self.buffer.dim)
        d = np.asarray(desired, dtype=float).reshape(self.num_nodes)
        _check_finite(d)
        errors = d - self.predict(X)
        self.step_count += 1
        self.buffer.append(self.step_count, X, self.step_sizes * errors)
        return errors


class KLMS:
    """Single-node kernel LMS, optionally keeping only the newest centers."""

    def __init__(self, kernel: KernelParams, step_size: float, capacity: Optional[int] = None, dim: int = 1):
        if not step_size > 0:
            raise ValueError("step size must be positive")
        self.kernel = kernel
        self.step_size = float(step_size)
        self.buffer = KernelBuffer(capacity, 1, dim)
        self.step_count = 0

    @property
    def centers(self) -> np.ndarray:
        return self.buffer.regressors[:, 0, :]

    @property
    def errors(self) -> np.ndarray:
        return self.buffer.scaled_errors[:, 0]

    def predict(self, x) -> float:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if x.shape != (self.buffer.dim,):
            raise ValueError(f"regressor shape {x.shape} does not match dimension {self.buffer.dim}")
        if not len(self.buffer):
            return 0.0
        diff = self.centers - x
        kern = np.exp(-self.kernel.bandwidth * np.einsum("im,im->i", diff, diff))
        return self.step_size * float(np.dot(self.errors, kern))

    def step(self, x, desired: float) -> tuple[float, float]:
        """Returns ``(error, prediction)`` for the new sample."""
        if not np.isfinite(desired):
            raise ValueError("desired value must be finite")
        prediction = self.predict(x)
        error = float(desired) - prediction
        self.step_count += 1
        self.buffer.append(self.step_count, np.atleast_1d(np.asarray(x, dtype=float))[None, :], [error])
        return error, prediction


class NonCooperativeKLMS:
    """K independent KLMS filters, one per node, with no data exchange.

    Node k's prediction only involves node k's own centers and errors; the
    filters are stored side by side so one step is a single vectorized pass.
    """

    def __init__(self, num_nodes: int, kernel: KernelParams, step_size,
                 capacity: Optional[int] = None, dim: int = 1):
        self.num_nodes = num_nodes
        self.kernel = kernel
        self.step_sizes = _step_sizes(step_size, num_nodes)
        # scaled_errors holds the raw errors e_k(i); step sizes are applied at prediction
        self.buffer = KernelBuffer(capacity, num_nodes, dim)
        self.step_count = 0

    def predict(self, inputs) -> np.ndarray:
        X = _as_inputs(inputs, self.num_nodes, self.buffer.dim)
        if not len(self.buffer):
            return np.zeros(self.num_nodes)
        diff = self.buffer.regressors - X[None, :, :]
        kern = np.exp(-self.kernel.bandwidth * np.einsum("skm,skm->sk", diff, diff))
        return self.step_sizes * np.einsum("sk,sk->k", self.buffer.scaled_errors, kern)

    def step(self, inputs, desired) -> np.ndarray:
        X = _as_inputs(inputs, self.num_nodes, self.buffer.dim)
        d = np.asarray(desired, dtype=float).reshape(self.num_nodes)
        _check_finite(d)
        errors = d - self.predict(X)
        self.step_count += 1
        self.buffer.append(self.step_count, X, errors)
        return errors


class CentralizedKLMS:
    """One fusion-center KLMS fed every node's sample, node order 0..K-1 per step.

    Each sample is predicted before the filter absorbs it, so samples later in
    the sweep already benefit from earlier nodes at the same time step.
    """

    def __init__(self, num_nodes: int, kernel: KernelParams, step_size: float,
                 capacity: Optional[int] = None, dim: int = 1):
        self.num_nodes = num_nodes
        self.filter = KLMS(kernel, step_size, capacity, dim)

    def step(self, inputs, desired) -> np.ndarray:
        X = _as_inputs(inputs, self.num_nodes, None)
        d = np.asarray(desired, dtype=float).reshape(self.num_nodes)
        _check_finite(d)
        return np.array([self.filter.step(x, dk)[0] for x, dk in zip(X, d)])


class DiffusionLMS:
    """Linear adapt-then-combine diffusion LMS."""

    def __init__(self, combination: np.ndarray, step_size, dim: int = 1,
                 initial: Optional[np.ndarray] = None):
        self.combination = np.asarray(combination, dtype=float)
        K = self.combination.shape[0]
        self.num_nodes = K
        self.step_sizes = _step_sizes(step_size, K)
        self.estimates = np.zeros((K, dim)) if initial is None else np.array(initial, dtype=float).reshape(K, dim)

    def predict(self, inputs) -> np.ndarray:
        X = _as_inputs(inputs, self.num_nodes, self.estimates.shape[1])
        return np.einsum("km,km->k", self.estimates, X)

    def step(self, inputs, desired) -> np.ndarray:
        X = _as_inputs(inputs, self.num_nodes, self.estimates.shape[1])
        d = np.asarray(desired, dtype=float).reshape(self.num_nodes)
        _check_finite(d)
        errors = d - np.einsum("km,km->k", self.estimates, X)
        adapted = self.estimates + (self.step_sizes * errors)[:, None] * X
        self.estimates = self.combination @ adapted
        return errors


def make_learner(name: str, *, combination: np.ndarray, weights: Optional[PropagationWeights],
                 kernel: KernelParams, step_size: float, capacity: int, dim: int):
    """Construct one of the named learners with the shared experiment settings."""
    K = combination.shape[0]
    if name == "dklms":
        return DKLMS(weights, kernel, step_size, capacity, dim)
    if name == "noncoop_klms":
        return NonCooperativeKLMS(K, kernel, step_size, capacity, dim)
    if name == "centralized_klms":
        return CentralizedKLMS(K, kernel, step_size, capacity * K, dim)
    if name == "linear_dlms":
        return DiffusionLMS(combination, step_size, dim)
    raise ValueError(f"unknown algorithm {name!r}")


ALGORITHMS: Sequence[str] = ("dklms", "noncoop_klms", "linear_dlms", "centralized_klms")
