"""Experiment configuration: schema, loading and dumping."""

from __future__ import annotations

from pathlib import Path
from typing import List, Literal, Optional, Tuple

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from ..adaptive import ALGORITHMS
from ..graph import DEFAULT_EDGES, HOP_MASKS, Topology, build_topology

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    """Invalid configuration; the message lists every offending field."""


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class TopologyConfig(_Strict):
    edges: Optional[List[Tuple[int, int]]] = None
    edge_probability: Optional[float] = Field(default=None, ge=0.0, le=1.0)
    seed: Optional[int] = None

    @model_validator(mode="after")
    def _one_source(self):
        if (self.edges is None) == (self.edge_probability is None):
            raise ValueError("give exactly one of 'edges' or 'edge_probability'")
        return self


class KernelConfig(_Strict):
    family: Literal["gaussian"] = "gaussian"
    bandwidth: float = Field(default=1.1, gt=0)


class RegressorConfig(_Strict):
    window: int = Field(default=1, ge=1)
    past_output: bool = True


class RegretConfig(_Strict):
    enabled: bool = False
    prefix: int = Field(default=500, ge=1)
    regularization: float = Field(default=1e-3, gt=0)


class ExperimentConfig(_Strict):
    schema_version: Literal[1] = SCHEMA_VERSION
    name: str = "experiment"
    system: Literal["nonlinear", "linear"] = "nonlinear"
    w_star: List[float] = Field(default_factory=lambda: [1.0, -0.5], min_length=1)
    num_nodes: int = Field(default=10, ge=1)
    topology: TopologyConfig = Field(default_factory=lambda: TopologyConfig(edges=list(DEFAULT_EDGES)))
    kernel: KernelConfig = Field(default_factory=KernelConfig)
    step_size: float = Field(default=0.6, gt=0)
    buffer_size: int = Field(default=100, ge=1)
    hop_mask: Literal[HOP_MASKS] = "absorb"
    noise_variance: float = Field(default=1e-3, ge=0)
    input_variance: float = Field(default=0.1, gt=0)
    initial_output: float = 0.0
    regressor: RegressorConfig = Field(default_factory=RegressorConfig)
    steps: int = Field(default=3000, ge=1)
    trials: int = Field(default=100, ge=1)
    seed: int = Field(default=2016, ge=0)
    rng: Literal["pcg64"] = "pcg64"
    resample_node_params: bool = False
    algorithms: List[Literal[tuple(ALGORITHMS)]] = Field(
        default_factory=lambda: ["dklms", "noncoop_klms", "linear_dlms"], min_length=1)
    steady_state_window: int = Field(default=500, ge=1)
    regret: RegretConfig = Field(default_factory=RegretConfig)
    output_dir: str = "results"
    workers: int = Field(default=1, ge=1)

    @field_validator("algorithms")
    @classmethod
    def _unique(cls, v):
        if len(set(v)) != len(v):
            raise ValueError("algorithms must not repeat")
        return v

    @model_validator(mode="after")
    def _topology_fits(self):
        self.build_topology()
        return self

    def build_topology(self) -> Topology:
        spec = {"num_nodes": self.num_nodes}
        if self.topology.edges is not None:
            spec["edges"] = self.topology.edges
        else:
            spec["edge_probability"] = self.topology.edge_probability
            spec["seed"] = self.topology.seed or 0
        return build_topology(spec)

    def to_dict(self) -> dict:
        data = self.model_dump(mode="json")
        if data["topology"]["edges"] is not None:
            data["topology"]["edges"] = [list(e) for e in data["topology"]["edges"]]
        return data


def _describe(err: ValidationError) -> str:
    lines = []
    for e in err.errors():
        loc = ".".join(str(p) for p in e["loc"]) or "<root>"
        lines.append(f"  {loc}: {e['msg']}")
    return "invalid configuration:\n" + "\n".join(lines)


def make_config(data: dict) -> ExperimentConfig:
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as err:
        raise ConfigError(_describe(err)) from None
    except ValueError as err:
        raise ConfigError(f"invalid configuration:\n  topology: {err}") from None


def load_config(path, overrides: Optional[dict] = None) -> ExperimentConfig:
    """Read a YAML config and apply top-level overrides (e.g. from CLI flags)."""
    try:
        data = yaml.safe_load(Path(path).read_text()) or {}
    except OSError as err:
        raise ConfigError(f"cannot read config {path}: {err}") from None
    except yaml.YAMLError as err:
        raise ConfigError(f"config {path} is not valid YAML: {err}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"config {path} must be a mapping of keys to values")
    data.update({k: v for k, v in (overrides or {}).items() if v is not None})
    return make_config(data)


def dump_config(cfg: ExperimentConfig) -> str:
    return yaml.safe_dump(cfg.to_dict(), sort_keys=False, default_flow_style=None)
