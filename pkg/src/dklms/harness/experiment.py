"""Monte-Carlo experiment runner.

Seed derivation (numpy SeedSequence entropy lists, master seed S):
    node parameters         [S, 0]       (or [S, 3, t] when resampled per trial)
    trial t observations    [S, 1, t]
    regret comparator data  [S, 2]
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from ..adaptive import make_learner
from ..graph import metropolis_weights, propagation_weights
from ..kernel import KernelParams
from ..sim import ObservationStream, generate_linear_stream, generate_nonlinear_stream, sample_node_params
from .config import ExperimentConfig
from .metrics import KernelRidge, MetricTrace, loglog_slope, steady_state


def _seed(cfg: ExperimentConfig, *tags: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([cfg.seed, *tags])


def node_params(cfg: ExperimentConfig, trial: int = 0):
    seed = _seed(cfg, 3, trial) if cfg.resample_node_params else _seed(cfg, 0)
    return sample_node_params(cfg.num_nodes, seed, cfg.noise_variance, cfg.initial_output)


def _stream(cfg: ExperimentConfig, params, steps: int, seed) -> ObservationStream:
    if cfg.system == "linear":
        return generate_linear_stream(cfg.w_star, params, steps, seed=seed, input_variance=cfg.input_variance)
    return generate_nonlinear_stream(params, steps, cfg.regressor.window, seed=seed,
                                     input_variance=cfg.input_variance, past_output=cfg.regressor.past_output)


def trial_stream(cfg: ExperimentConfig, trial: int) -> ObservationStream:
    return _stream(cfg, node_params(cfg, trial), cfg.steps, _seed(cfg, 1, trial))


def fit_comparator(cfg: ExperimentConfig) -> KernelRidge:
    """Kernel ridge fit on the first ``regret.prefix`` samples of a noiseless replica.

    The replica shares the experiment's node parameters (trial 0's when they
    are resampled per trial). Its samples are pooled in time order, node
    0..K-1 within each step.
    """
    params = [replace(p, noise_variance=0.0) for p in node_params(cfg, 0)]
    replica = _stream(cfg, params, math.ceil(cfg.regret.prefix / cfg.num_nodes), _seed(cfg, 2))
    m = replica.regressors.shape[2]
    X = replica.regressors.reshape(-1, m)[: cfg.regret.prefix]
    y = replica.clean_output.reshape(-1)[: cfg.regret.prefix]
    kernel = KernelParams(cfg.kernel.bandwidth, cfg.kernel.family)
    return KernelRidge(kernel, cfg.regret.regularization).fit(X, y)


def run_learner(learner, stream: ObservationStream) -> np.ndarray:
    """A-priori errors (N, K); rows from the first non-finite step on are NaN."""
    errors = np.full(stream.desired.shape, np.nan)
    with np.errstate(over="ignore", invalid="ignore"):
        for n in range(stream.steps):
            e = learner.step(stream.regressors[n], stream.desired[n])
            if not np.all(np.isfinite(e)):
                break
            errors[n] = e
    return errors


class _Context:
    """Per-experiment objects shared by every trial."""

    def __init__(self, cfg: ExperimentConfig):
        self.cfg = cfg
        topo = cfg.build_topology()
        self.combination = metropolis_weights(topo)
        self.weights = propagation_weights(self.combination, topo, cfg.buffer_size, cfg.hop_mask)
        self.kernel = KernelParams(cfg.kernel.bandwidth, cfg.kernel.family)
        self.comparator = fit_comparator(cfg) if cfg.regret.enabled else None

    def learner(self, name: str, dim: int):
        return make_learner(name, combination=self.combination, weights=self.weights, kernel=self.kernel,
                            step_size=self.cfg.step_size, capacity=self.cfg.buffer_size, dim=dim)


def run_trial(ctx: _Context, trial: int) -> dict:
    """Per-algorithm (node-mean squared error, summed loss, summed excess loss) over time."""
    stream = trial_stream(ctx.cfg, trial)
    comp_loss = None
    if ctx.comparator is not None:
        comp_loss = 0.5 * (stream.desired - ctx.comparator.predict(stream.regressors)) ** 2
    out = {}
    for name in ctx.cfg.algorithms:
        errors = run_learner(ctx.learner(name, stream.regressors.shape[2]), stream)
        loss = 0.5 * errors ** 2
        excess = None if comp_loss is None else (loss - comp_loss).sum(axis=1)
        out[name] = ((errors ** 2).mean(axis=1), loss.sum(axis=1), excess)
    return out


_WORKER_CTX: Optional[_Context] = None


def _init_worker(cfg_data: dict):
    global _WORKER_CTX
    _WORKER_CTX = _Context(ExperimentConfig.model_validate(cfg_data))


def _worker_trial(trial: int) -> dict:
    return run_trial(_WORKER_CTX, trial)


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    traces: dict

    @property
    def diverged(self) -> bool:
        return any(t.diverged for t in self.traces.values())


def _finish(name: str, per_trial: list, cfg: ExperimentConfig) -> MetricTrace:
    sq = np.stack([r[0] for r in per_trial])
    loss = np.stack([r[1] for r in per_trial])
    mse = sq.mean(axis=0)
    cum = np.cumsum(loss.mean(axis=0))
    bad = np.flatnonzero(~np.isfinite(mse))
    diverged = bad.size > 0
    cut = bad[0] if diverged else len(mse)
    mse, cum = mse[:cut], cum[:cut]
    regret = slope = None
    if per_trial[0][2] is not None:
        regret = np.cumsum(np.stack([r[2] for r in per_trial]).mean(axis=0))[:cut]
        slope = loglog_slope(regret) if cut else float("nan")
    ss = steady_state(mse, cfg.steady_state_window) if cut else float("nan")
    return MetricTrace(name, mse, cum, ss, diverged, regret, slope)


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    """Run every selected algorithm on the same streams for all trials.

    Trials may run in worker processes; results are reduced in trial order,
    so the output does not depend on ``cfg.workers``.
    """
    if cfg.workers > 1 and cfg.trials > 1:
        with ProcessPoolExecutor(cfg.workers, initializer=_init_worker, initargs=(cfg.model_dump(),)) as pool:
            results = list(pool.map(_worker_trial, range(cfg.trials)))
    else:
        ctx = _Context(cfg)
        results = [run_trial(ctx, t) for t in range(cfg.trials)]
    traces = {name: _finish(name, [r[name] for r in results], cfg) for name in cfg.algorithms}
    return ExperimentResult(cfg, traces)
