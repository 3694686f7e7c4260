"""Synchronous round loop: descent with memory on every agent, then consensus.

Round ``k = 1`` only aligns the initial states; from ``k = 2`` on each agent
takes a gradient at its current state, applies its update rule, and then all
agents average over their in-neighbors at once.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np

from .counters import add_flops
from .optimizers import (
    DivergenceError,
    OptimizerConfig,
    descent_update,
    gradient_point,
    init_agent_state,
    kernel_for,
)
from .topology import DirectedGraph, consensus_array, is_strongly_connected

__all__ = ["RunConfig", "RunRecord", "run", "CONVERGED", "NOT_CONVERGED", "DIVERGED"]

log = logging.getLogger(__name__)

CONVERGED = "converged"
NOT_CONVERGED = "not_converged"
DIVERGED = "diverged"


@dataclass
class RunConfig:
    """Everything a single run needs.

    Attributes:
        graph: Static communication graph; must be strongly connected.
        objectives: One private objective per agent.
        optimizer: Update rule and its hyperparameters.
        rounds: Loop length K (round 1 is consensus only).
        x0: Shared initial state, or ``initial_states`` per agent.
        tolerance: Converged once ``|mean state - x_star| < tolerance``.
        x_star: Known minimizer; when None, ``target_loss`` is used instead.
        target_loss: Converged once the mean agent objective at the agents'
            states drops to or below this value.
        seed: Echoed into the record; stochastic objectives are seeded by the caller.
        record_trajectory: Keep per-round mean state, disagreement, objective.
        stop_on_convergence: End the loop at the first converged round.
        meta: Resolved, JSON-ready description of the config (echoed).
    """

    graph: DirectedGraph
    objectives: list
    optimizer: OptimizerConfig
    rounds: int
    x0: Any = None
    tolerance: float = 1e-3
    x_star: Any = None
    target_loss: Optional[float] = None
    seed: int = 0
    initial_states: Any = None
    record_trajectory: bool = True
    stop_on_convergence: bool = True
    data_source: Optional[str] = None
    meta: dict = field(default_factory=dict)

    def validate(self):
        if self.rounds < 1:
            raise ValueError(f"rounds: must be >= 1, got {self.rounds}")
        if not self.tolerance > 0:
            raise ValueError(f"tolerance: must be > 0, got {self.tolerance}")
        if len(self.objectives) != self.graph.num_agents:
            raise ValueError(f"{len(self.objectives)} objectives for {self.graph.num_agents} agents")
        dims = {o.dim for o in self.objectives}
        if len(dims) != 1:
            raise ValueError(f"objectives disagree on dimension: {sorted(dims)}")
        if not is_strongly_connected(self.graph):
            raise ValueError("graph is not strongly connected; refusing to run")
        if self.x0 is None and self.initial_states is None:
            raise ValueError("x0 or initial_states is required")


@dataclass
class RunRecord:
    status: str
    iterations: Optional[int]
    rounds_run: int
    final_error: Optional[float]
    final_objective: float
    mean_states: list
    disagreement: list
    objective: list
    errors: list
    config: dict
    seed: int
    data_source: Optional[str] = None
    message: Optional[str] = None

    def to_dict(self, trajectory=True):
        d = {
            "status": self.status,
            "iterations": self.iterations,
            "rounds_run": self.rounds_run,
            "final_error": self.final_error,
            "final_objective": self.final_objective,
            "config": self.config,
            "seed": self.seed,
            "data_source": self.data_source,
        }
        if self.message:
            d["message"] = self.message
        if trajectory:
            d["trajectory"] = {
                "mean_state": self.mean_states,
                "disagreement": self.disagreement,
                "objective": self.objective,
                "error": self.errors,
            }
        return d


def _max_disagreement(states, mean):
    diff = states - mean
    return float(np.sqrt(np.max(np.einsum("ij,ij->i", diff, diff))))


def run(cfg: RunConfig) -> RunRecord:
    """Execute the K-round loop and return its record.

    Divergence (non-finite values or an iterate norm above 1e8) ends the run
    with status ``"diverged"`` instead of raising.

    Raises:
        ValueError: Invalid config, including a graph that is not strongly
            connected.
    """
    cfg.validate()
    n_agents = cfg.graph.num_agents
    dim = cfg.objectives[0].dim
    if cfg.initial_states is not None:
        starts = np.array(cfg.initial_states, dtype=np.float64).reshape(n_agents, dim)
    else:
        x0 = np.asarray(cfg.x0, dtype=np.float64).reshape(dim)
        starts = np.tile(x0, (n_agents, 1))
    x_star = None if cfg.x_star is None else np.asarray(cfg.x_star, dtype=np.float64).reshape(dim)
    opt = cfg.optimizer
    kernel = kernel_for(opt)
    agents = [init_agent_state(starts[i], opt) for i in range(n_agents)]
    objectives = cfg.objectives

    mean_states, disagreement, objective_trace, errors = [], [], [], []
    keep = cfg.record_trajectory
    status, iterations, message = NOT_CONVERGED, None, None
    rounds_run = 0

    def observe(states):
        mean = states.mean(axis=0)
        obj = 0.0
        for i, f in enumerate(objectives):
            obj += f.evaluate(states[i])
        err = None if x_star is None else float(np.linalg.norm(mean - x_star))
        if keep:
            mean_states.append(mean.tolist())
            disagreement.append(_max_disagreement(states, mean))
            objective_trace.append(obj)
            errors.append(err)
        return mean, obj, err

    states = starts
    _, last_obj, last_err = observe(states)

    for k in range(1, cfg.rounds + 1):
        try:
            if k > 1:
                # every agent differentiates at its pre-descent state before anyone moves
                grads = [objectives[i].gradient(gradient_point(agents[i], opt)) for i in range(n_agents)]
                for i in range(n_agents):
                    descent_update(agents[i], grads[i], opt, kernel)
                states = np.stack([a.x for a in agents])
            states = consensus_array(cfg.graph, states)
            if not np.all(np.isfinite(states)):
                raise DivergenceError("non-finite state after consensus")
        except DivergenceError as exc:
            status, message = DIVERGED, str(exc)
            rounds_run = k
            log.debug("run diverged at round %d: %s", k, exc)
            break
        for i in range(n_agents):
            agents[i].x = states[i].copy()
        rounds_run = k
        _, last_obj, last_err = observe(states)
        add_flops(states.size, "bookkeeping")

        if status != CONVERGED:
            if x_star is not None:
                done = last_err < cfg.tolerance
            elif cfg.target_loss is not None:
                done = last_obj / n_agents <= cfg.target_loss
            else:
                done = False
            if done:
                status, iterations = CONVERGED, k
                if cfg.stop_on_convergence:
                    break

    return RunRecord(
        status=status,
        iterations=iterations,
        rounds_run=rounds_run,
        final_error=last_err,
        final_objective=float(last_obj),
        mean_states=mean_states,
        disagreement=disagreement,
        objective=objective_trace,
        errors=errors,
        config=dict(cfg.meta),
        seed=int(cfg.seed),
        data_source=cfg.data_source,
        message=message,
    )
