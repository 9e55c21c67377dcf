"""Seeded observation streams for the nonlinear benchmark and the linear model.

Time steps n = 1..N are stored in row n - 1 of every array. All draws come
from numpy's PCG64 generator seeded with the given seed (an int or a
``numpy.random.SeedSequence``): first the standard-normal input block of
shape (N, K), then the standard-normal noise block of the same shape.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

CHI_LOW, CHI_HIGH = 0.5, 1.0


@dataclass(frozen=True)
class NodeDataParams:
    input_variance_scale: float
    noise_variance: float = 1e-3
    initial_output: float = 0.0

    def __post_init__(self):
        if not CHI_LOW <= self.input_variance_scale <= CHI_HIGH:
            raise ValueError(f"input_variance_scale must lie in [0.5, 1], got {self.input_variance_scale}")
        # zero noise variance is allowed for noiseless validation streams
        if self.noise_variance < 0:
            raise ValueError(f"noise_variance must be non-negative, got {self.noise_variance}")


@dataclass(frozen=True)
class ObservationStream:
    raw_input: np.ndarray      # (N, K)
    regressors: np.ndarray     # (N, K, m)
    desired: np.ndarray        # (N, K)
    clean_output: np.ndarray   # (N, K)

    @property
    def steps(self) -> int:
        return self.desired.shape[0]

    @property
    def num_nodes(self) -> int:
        return self.desired.shape[1]

    @property
    def noise(self) -> np.ndarray:
        return self.desired - self.clean_output


def sample_node_params(num_nodes: int, seed, noise_variance: float = 1e-3,
                       initial_output: float = 0.0) -> list[NodeDataParams]:
    """Draw chi_k ~ Uniform[0.5, 1] independently for every node."""
    if num_nodes < 1:
        raise ValueError("num_nodes must be >= 1")
    chi = np.random.default_rng(seed).uniform(CHI_LOW, CHI_HIGH, size=num_nodes)
    return [NodeDataParams(float(c), noise_variance, initial_output) for c in chi]


def tapped_delay(x: np.ndarray, window: int) -> np.ndarray:
    """Regressors [x(n), x(n-1), ..., x(n-window+1)] with zeros before n = 1."""
    if window < 1:
        raise ValueError("regressor window must be >= 1")
    N, K = x.shape
    padded = np.vstack([np.zeros((window - 1, K)), x])
    return np.stack([padded[window - 1 - j: window - 1 - j + N] for j in range(window)], axis=-1)


def generate_nonlinear_stream(params: Sequence[NodeDataParams], steps: int, regressor_window: int = 1,
                              seed=0, inputs: Optional[np.ndarray] = None,
                              input_variance: float = 0.1, past_output: bool = False) -> ObservationStream:
    """Simulate ``y(n) = y(n-1) / (1 + y(n-1)^2) + x(n)^3`` at every node.

    The regressor is the input tap line ``[x(n), ..., x(n-w+1)]``; with
    ``past_output`` the previous observation d(n-1) is appended, using
    d(0) = y(0). ``inputs`` replaces the Gaussian input draws with a fixed
    (N, K) array (the noise draws are unaffected).
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    K = len(params)
    rng = np.random.default_rng(seed)
    x_std = rng.standard_normal((steps, K))
    v_std = rng.standard_normal((steps, K))
    chi = np.array([p.input_variance_scale for p in params])
    if inputs is None:
        x = x_std * np.sqrt(input_variance * chi)
    else:
        x = np.asarray(inputs, dtype=float).reshape(steps, K)
    v = v_std * np.sqrt([p.noise_variance for p in params])

    y = np.empty_like(x)
    prev = np.array([p.initial_output for p in params], dtype=float)
    for n in range(steps):
        prev = prev / (1.0 + prev * prev) + x[n] ** 3
        y[n] = prev
    d = y + v
    regressors = tapped_delay(x, regressor_window)
    if past_output:
        y0 = np.array([p.initial_output for p in params], dtype=float)
        d_prev = np.vstack([y0[None, :], d[:-1]])
        regressors = np.concatenate([regressors, d_prev[:, :, None]], axis=2)
    return ObservationStream(x, regressors, d, y)


def generate_linear_stream(w_star, params: Sequence[NodeDataParams], steps: int, seed=0,
                           inputs: Optional[np.ndarray] = None,
                           input_variance: float = 0.1) -> ObservationStream:
    """Simulate ``d = w_star . x + v`` with x ~ N(0, 0.1 chi_k I)."""
    if steps < 1:
        raise ValueError("steps must be >= 1")
    w_star = np.atleast_1d(np.asarray(w_star, dtype=float))
    m, K = w_star.size, len(params)
    rng = np.random.default_rng(seed)
    chi = np.array([p.input_variance_scale for p in params])
    if inputs is None:
        X = rng.standard_normal((steps, K, m)) * np.sqrt(input_variance * chi)[None, :, None]
    else:
        X = np.asarray(inputs, dtype=float).reshape(steps, K, m)
    v = rng.standard_normal((steps, K)) * np.sqrt([p.noise_variance for p in params])
    y = X @ w_star
    return ObservationStream(X[..., 0].copy(), X, y + v, y)


def write_stream_csv(path, streams: Sequence[ObservationStream], trial_ids: Optional[Sequence[int]] = None):
    """Dump streams as ``trial,node,n,x,r0..r{m-1},y,d`` rows."""
    trial_ids = list(range(len(streams))) if trial_ids is None else list(trial_ids)
    m = streams[0].regressors.shape[2]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["trial", "node", "n", "x"] + [f"r{j}" for j in range(m)] + ["y", "d"])
        for t, s in zip(trial_ids, streams):
            for k in range(s.num_nodes):
                for n in range(s.steps):
                    w.writerow([t, k, n + 1, f"{s.raw_input[n, k]:.17g}"]
                               + [f"{r:.17g}" for r in s.regressors[n, k]]
                               + [f"{s.clean_output[n, k]:.17g}", f"{s.desired[n, k]:.17g}"])
