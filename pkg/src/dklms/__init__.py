"""Diffusion kernel LMS over ad-hoc networks, with baselines and an experiment harness."""

from .adaptive import (DKLMS, KLMS, CentralizedKLMS, DiffusionLMS, KernelBuffer, NonCooperativeKLMS,
                       instantaneous_loss)
from .graph import (PropagationWeights, Topology, TopologyError, build_topology, default_topology,
                    metropolis_weights, propagation_weights)
from .kernel import KernelParams, gram_matrix, kernel_eval, kernel_matrix

__version__ = "0.1.0"
