"""Fractional-order distributed optimization simulator."""
from ._backend import BACKEND
from .kernel import MemoryKernel, build_kernel, memory_term
from .objectives import exp1_objective, global_objective, mlp_objective
from .optimizers import AgentState, OptimizerConfig, descent_update
from .simulator import RunConfig, RunRecord, run
from .stats import ks_one_sided, ks_two_sided, summarize
from .topology import DirectedGraph, consensus_step, fully_connected, is_strongly_connected

__version__ = "0.1.0"
