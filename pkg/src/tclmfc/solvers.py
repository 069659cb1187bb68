"""Iterative solvers for the target-tracking mean-field control problem.

* :func:`md_mfc` -- mirror descent with the policy-space Bregman divergence.
* :func:`fp_mfg` -- fictitious play on the equivalent potential game.
* :func:`omd_mfg` -- online mirror descent on the potential game.
* :func:`frank_wolfe` -- conditional gradient over occupation measures.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .dp import best_response, plain_q_backward, potential_reward, regularized_backward_pass
from .errors import ConfigurationError, InputError
from .heater import nominal_policy
from .mdp import (StateSpace, check_distribution, check_kernel, check_policy, propagate,
                  policy_from_distribution)
from .objective import eval_cost, lipschitz_bound

STEP_SCHEDULES = ("constant", "theorem2", "harmonic")
INITIAL_POLICIES = ("uniform", "nominal-deviation", "random")
DEFAULT_STEP_SCALE = 5.0


@dataclass
class MFCProblem:
    space: StateSpace
    kernel: np.ndarray
    mu0: np.ndarray
    target: np.ndarray

    def __post_init__(self):
        self.kernel = check_kernel(self.kernel)
        self.mu0 = check_distribution(self.mu0, "mu0")
        self.target = np.asarray(self.target, dtype=float)
        n_steps, n_x, n_a, _ = self.kernel.shape
        if n_x != self.space.size:
            raise ConfigurationError(f"kernel has {n_x} states, state space has {self.space.size}")
        if self.mu0.shape != (n_x, n_a):
            raise ConfigurationError(f"mu0 shape {self.mu0.shape} != {(n_x, n_a)}")
        if self.target.shape != (n_steps,):
            raise ConfigurationError(f"target length {self.target.shape} != horizon {n_steps}")

    @property
    def horizon(self) -> int:
        return self.kernel.shape[0]

    @property
    def n_actions(self) -> int:
        return self.kernel.shape[2]

    def cost(self, policy) -> float:
        return eval_cost(propagate(self.mu0, policy, self.kernel), self.target)


@dataclass(frozen=True)
class SolverConfig:
    """Iteration count, step-size schedule and initial policy.

    The step at iteration ``k`` (0-based) is ``c`` for ``constant``,
    ``c / sqrt(K)`` for ``theorem2`` and ``c / sqrt(k + 1)`` for
    ``harmonic``.  ``c = 5`` (a step of 0.5 at K = 100) is stable on the
    heater problem from both uniform and near-nominal starts; ``None``
    selects the conservative ``1 / L`` with ``L`` the Lipschitz bound of
    the cost.  ``seed`` drives the ``random`` initial policy.
    """

    iterations: int = 100
    step_schedule: str = "theorem2"
    step_scale: float | None = DEFAULT_STEP_SCALE
    init: str = "uniform"
    init_delta: float = 0.1
    seed: int = 0
    store_policies: bool = False

    def __post_init__(self):
        if self.iterations < 0:
            raise InputError(f"iterations must be >= 0, got {self.iterations}")
        if self.step_schedule not in STEP_SCHEDULES:
            raise InputError(f"unknown step schedule {self.step_schedule!r}")
        if self.step_scale is not None and not self.step_scale > 0:
            raise InputError(f"step scale must be positive, got {self.step_scale}")
        if self.init not in INITIAL_POLICIES:
            raise InputError(f"unknown initial policy {self.init!r}")
        if not 0.0 <= self.init_delta <= 0.5:
            raise InputError(f"init_delta must lie in [0, 0.5], got {self.init_delta}")

    def step(self, k: int, horizon: int) -> float:
        c = self.step_scale if self.step_scale is not None else 1.0 / lipschitz_bound(horizon)
        if self.step_schedule == "constant":
            return c
        if self.step_schedule == "theorem2":
            return c / math.sqrt(max(self.iterations, 1))
        return c / math.sqrt(k + 1)


@dataclass
class SolverHistory:
    """Objective F at every iterate 0..K (the last entry is the final iterate)."""

    objectives: list[float] = field(default_factory=list)
    wall_ms: list[float] = field(default_factory=list)
    policies: list[np.ndarray] = field(default_factory=list)
    best_iteration: int = 0
    mean_field: np.ndarray | None = None

    @property
    def running_min(self) -> np.ndarray:
        return np.minimum.accumulate(np.asarray(self.objectives))

    @property
    def final_objective(self) -> float:
        return self.objectives[-1]

    @property
    def best_objective(self) -> float:
        return self.objectives[self.best_iteration]

    def _record(self, objective, started, policy=None):
        self.objectives.append(float(objective))
        self.wall_ms.append((time.perf_counter() - started) * 1e3)
        if policy is not None:
            self.policies.append(policy.copy())
        if objective < self.objectives[self.best_iteration]:
            self.best_iteration = len(self.objectives) - 1


def perturbed_nominal_policy(space: StateSpace, horizon: int, delta: float) -> np.ndarray:
    """Nominal rule with probability ``delta`` moved to the other action."""
    if not 0.0 <= delta <= 0.5:
        raise InputError(f"delta must lie in [0, 0.5], got {delta}")
    return (1.0 - delta) * nominal_policy(space, horizon) + delta * (
        1.0 - nominal_policy(space, horizon))


def initial_policy(problem: MFCProblem, cfg: SolverConfig) -> np.ndarray:
    shape = (problem.horizon, problem.space.size, problem.n_actions)
    if cfg.init == "uniform":
        return np.full(shape, 1.0 / problem.n_actions)
    if cfg.init == "nominal-deviation":
        return perturbed_nominal_policy(problem.space, problem.horizon, cfg.init_delta)
    rng = np.random.default_rng(cfg.seed)
    # half uniform keeps every entry >= 1 / (2 |A|)
    return 0.5 / problem.n_actions + 0.5 * rng.dirichlet(np.ones(problem.n_actions),
                                                          size=shape[:2])


def md_mfc(problem: MFCProblem, cfg: SolverConfig, policy0=None):
    """Mirror descent for MFC; returns ``(best_policy, history)``.

    The returned policy is the iterate with the lowest objective among
    ``pi^0 .. pi^K``.
    """
    policy = initial_policy(problem, cfg) if policy0 is None else check_policy(policy0)
    if not np.all(policy > 0):
        raise InputError("MD-MFC needs a strictly positive initial policy")
    history = SolverHistory()
    started = time.perf_counter()
    best = policy
    for k in range(cfg.iterations + 1):
        mu = propagate(problem.mu0, policy, problem.kernel)
        history._record(eval_cost(mu, problem.target), started,
                        policy if cfg.store_policies else None)
        if history.best_iteration == k:
            best, history.mean_field = policy, mu
        if k == cfg.iterations:
            break
        reward = potential_reward(mu, problem.target)
        policy, _ = regularized_backward_pass(reward, problem.kernel, policy,
                                              cfg.step(k, problem.horizon))
    return best, history


def omd_mfg(problem: MFCProblem, cfg: SolverConfig, policy0=None):
    """Online mirror descent on the potential game; returns ``(pi^K, history)``."""
    policy = initial_policy(problem, cfg) if policy0 is None else check_policy(policy0)
    if not np.all(policy > 0):
        raise InputError("OMD-MFG needs a strictly positive initial policy")
    history = SolverHistory()
    started = time.perf_counter()
    for k in range(cfg.iterations + 1):
        mu = propagate(problem.mu0, policy, problem.kernel)
        history._record(eval_cost(mu, problem.target), started,
                        policy if cfg.store_policies else None)
        if k == cfg.iterations:
            history.mean_field = mu
            break
        q = plain_q_backward(potential_reward(mu, problem.target), problem.kernel, policy)
        logits = np.log(policy) + cfg.step(k, problem.horizon) * q
        policy = np.exp(logits - logsumexp(logits, axis=-1, keepdims=True))
    return policy, history


def fp_mfg(problem: MFCProblem, cfg: SolverConfig, policy0=None):
    """Fictitious play; returns the state-weighted average policy and history.

    ``mean_bar`` averages the mean fields of ``pi^0 .. pi^k`` uniformly, and
    the averaged policy weights each ``pi^k_n(.|x)`` by ``rho^k_n(x)`` so that
    it induces exactly that averaged mean field.
    """
    policy = initial_policy(problem, cfg) if policy0 is None else check_policy(policy0)
    history = SolverHistory()
    started = time.perf_counter()
    mu = propagate(problem.mu0, policy, problem.kernel)
    mean_bar = mu
    weighted = mu[1:].sum(axis=-1, keepdims=True) * policy
    weights = mu[1:].sum(axis=-1, keepdims=True)
    for k in range(cfg.iterations + 1):
        history._record(eval_cost(mean_bar, problem.target), started,
                        policy if cfg.store_policies else None)
        if k == cfg.iterations:
            break
        policy, _ = best_response(potential_reward(mean_bar, problem.target), problem.kernel)
        mu = propagate(problem.mu0, policy, problem.kernel)
        rho = mu[1:].sum(axis=-1, keepdims=True)
        weighted += rho * policy
        weights += rho
        mean_bar = (mu + (k + 1) * mean_bar) / (k + 2)
    averaged = np.full_like(weighted, 1.0 / problem.n_actions)
    reached = np.broadcast_to(weights > 0, weighted.shape)
    np.divide(weighted, np.broadcast_to(weights, weighted.shape), out=averaged, where=reached)
    history.mean_field = mean_bar
    return averaged, history


def open_loop_step(k: int) -> float:
    return 2.0 / (k + 2)


def frank_wolfe(problem: MFCProblem, cfg: SolverConfig, step_sizes=open_loop_step,
                policy0=None):
    """Conditional gradient over occupation measures.

    The linear minimisation oracle is a best response to the negative cost
    gradient.  Returns ``(mean_field, policy, history)`` where ``policy``
    induces ``mean_field``.
    """
    policy = initial_policy(problem, cfg) if policy0 is None else check_policy(policy0)
    history = SolverHistory()
    started = time.perf_counter()
    mean_bar = propagate(problem.mu0, policy, problem.kernel)
    for k in range(cfg.iterations + 1):
        history._record(eval_cost(mean_bar, problem.target), started)
        if k == cfg.iterations:
            break
        vertex_policy, _ = best_response(potential_reward(mean_bar, problem.target),
                                         problem.kernel)
        vertex = propagate(problem.mu0, vertex_policy, problem.kernel)
        eta = step_sizes(k)
        mean_bar = (1.0 - eta) * mean_bar + eta * vertex
    history.mean_field = mean_bar
    return mean_bar, policy_from_distribution(mean_bar), history


SOLVERS = {
    "md-mfc": md_mfc,
    "fp-mfg": fp_mfg,
    "omd-mfg": omd_mfg,
}


def solve(name: str, problem: MFCProblem, cfg: SolverConfig):
    """Dispatch by name; always returns ``(policy, history)``."""
    if name == "frank-wolfe":
        _, policy, history = frank_wolfe(problem, cfg)
        return policy, history
    if name == "nominal":
        policy = nominal_policy(problem.space, problem.horizon)
        history = SolverHistory()
        history._record(problem.cost(policy), time.perf_counter())
        return policy, history
    if name not in SOLVERS:
        raise ConfigurationError(f"unknown solver {name!r}")
    return SOLVERS[name](problem, cfg)
