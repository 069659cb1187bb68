"""Finite-horizon MDP primitives on dense numpy tables.

Array conventions used throughout the package (``N`` is the horizon):

* ``mu`` -- joint state-action distributions, shape ``(N + 1, X, A)``;
  ``mu[n]`` is the distribution at time ``n`` and ``mu[0]`` is fixed.
* ``policy`` -- conditional action distributions, shape ``(N, X, A)``;
  ``policy[i]`` is the decision rule applied at time ``i + 1``.
* ``kernel`` -- transition tables, shape ``(N, X, A, X)``;
  ``kernel[i][x, a, x']`` is the probability of moving from ``(x, a)`` at
  time ``i`` to ``x'`` at time ``i + 1``.

Reward and Q tables follow the policy layout, so index ``i`` of ``policy``,
``reward`` and ``Q`` always refers to the same time step ``i + 1``, and
``kernel[i]`` is the transition leading *into* that step.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, InputError

STOCHASTIC_TOL = 1e-12

OFF, ON = 0, 1


@dataclass(frozen=True)
class StateSpace:
    """Enumerated heater states ``(mode, temperature)``.

    The OFF block comes first, temperatures ascending inside each block, so
    ``index = mode * n_temps + (temp - t_amb)``.
    """

    t_amb: int
    t_max: int

    def __post_init__(self):
        if int(self.t_amb) != self.t_amb or int(self.t_max) != self.t_max:
            raise InputError("temperature bounds must be integers")
        if self.t_max < self.t_amb:
            raise InputError(f"t_max={self.t_max} below t_amb={self.t_amb}")

    @property
    def n_temps(self) -> int:
        return self.t_max - self.t_amb + 1

    @property
    def size(self) -> int:
        return 2 * self.n_temps

    @property
    def temps(self) -> np.ndarray:
        return np.arange(self.t_amb, self.t_max + 1)

    def encode(self, mode: int, temp: int) -> int:
        if mode not in (OFF, ON):
            raise InputError(f"mode must be 0 or 1, got {mode!r}")
        if int(temp) != temp or not self.t_amb <= temp <= self.t_max:
            raise InputError(
                f"temperature {temp!r} outside [{self.t_amb}, {self.t_max}]")
        return int(mode) * self.n_temps + int(temp) - self.t_amb

    def decode(self, index: int) -> tuple[int, int]:
        if not 0 <= index < self.size:
            raise InputError(f"state index {index} outside [0, {self.size})")
        mode, offset = divmod(int(index), self.n_temps)
        return mode, self.t_amb + offset

    def modes(self) -> np.ndarray:
        """Operating mode of every state index; doubles as the consumption table."""
        return np.repeat([OFF, ON], self.n_temps)

    def temperatures(self) -> np.ndarray:
        """Temperature of every state index."""
        return np.tile(self.temps, 2)


def encode_state(space: StateSpace, mode: int, temp: int) -> int:
    return space.encode(mode, temp)


def decode_state(space: StateSpace, index: int) -> tuple[int, int]:
    return space.decode(index)


# -- validation -------------------------------------------------------------

def check_distribution(mu_n, name="distribution", tol=STOCHASTIC_TOL):
    mu_n = np.asarray(mu_n, dtype=float)
    if np.any(mu_n < -tol):
        raise InputError(f"{name} has negative entries (min {mu_n.min():.3g})")
    total = mu_n.sum()
    if abs(total - 1.0) > tol:
        raise InputError(f"{name} sums to {total!r}, not 1")
    return mu_n


def check_policy(policy, tol=STOCHASTIC_TOL):
    policy = np.asarray(policy, dtype=float)
    if policy.ndim != 3:
        raise ConfigurationError(f"policy must be (N, X, A), got shape {policy.shape}")
    if np.any(policy < -tol):
        raise InputError("policy has negative entries")
    err = np.abs(policy.sum(axis=-1) - 1.0).max(initial=0.0)
    if err > tol:
        raise InputError(f"policy rows deviate from 1 by {err:.3g}")
    return policy


def check_kernel(kernel, tol=STOCHASTIC_TOL):
    kernel = np.asarray(kernel, dtype=float)
    if kernel.ndim != 4 or kernel.shape[1] != kernel.shape[3]:
        raise ConfigurationError(f"kernel must be (N, X, A, X), got shape {kernel.shape}")
    if np.any(kernel < -tol) or np.any(kernel > 1 + tol):
        raise InputError("kernel entries outside [0, 1]")
    err = np.abs(kernel.sum(axis=-1) - 1.0).max(initial=0.0)
    if err > tol:
        raise InputError(f"kernel rows deviate from 1 by {err:.3g}")
    return kernel


def is_strictly_positive(policy) -> bool:
    return bool(np.min(policy) > 0.0)


def _check_shapes(mu0, policy, kernel):
    n_steps, n_x, n_a, n_x2 = kernel.shape
    if mu0.shape != (n_x, n_a):
        raise ConfigurationError(f"mu0 shape {mu0.shape} does not match kernel {(n_x, n_a)}")
    if policy.shape != (n_steps, n_x, n_a):
        raise ConfigurationError(
            f"policy shape {policy.shape} does not match kernel {(n_steps, n_x, n_a)}")


# -- operations -------------------------------------------------------------

def state_flow(mu_n, kernel_step):
    """State distribution reached in one step: sum_{x,a} mu_n(x,a) p(x'|x,a)."""
    return np.einsum("xa,xay->y", mu_n, kernel_step)


def propagate(mu0, policy, kernel):
    """Roll the joint distribution forward under ``policy``.

    Returns an array of shape ``(N + 1, X, A)`` whose first slice is ``mu0``.
    """
    mu0 = check_distribution(mu0, "mu0")
    policy = np.asarray(policy, dtype=float)
    kernel = np.asarray(kernel, dtype=float)
    _check_shapes(mu0, policy, kernel)
    mu = np.empty((kernel.shape[0] + 1,) + mu0.shape)
    mu[0] = mu0
    for i in range(kernel.shape[0]):
        rho_next = state_flow(mu[i], kernel[i])
        mu[i + 1] = rho_next[:, None] * policy[i]
    return mu


def marginal(mu_n):
    """State marginal rho(x) = sum_a mu(x, a); works on a slice or a whole sequence."""
    return np.asarray(mu_n, dtype=float).sum(axis=-1)


def policy_from_distribution(mu):
    """Recover the policy inducing ``mu`` (shape ``(N + 1, X, A)``).

    Unreached states get the uniform action distribution, so the result is
    a pure function of ``mu``.
    """
    mu = np.asarray(mu, dtype=float)
    joint = mu[1:]
    rho = joint.sum(axis=-1, keepdims=True)
    n_a = mu.shape[-1]
    policy = np.full(joint.shape, 1.0 / n_a)
    reached = np.broadcast_to(rho > 0.0, joint.shape)
    np.divide(joint, np.broadcast_to(rho, joint.shape), out=policy, where=reached)
    return policy


def flow_violation(mu, kernel) -> float:
    """Largest absolute violation of the state-flow balance over all steps."""
    mu = np.asarray(mu, dtype=float)
    kernel = np.asarray(kernel, dtype=float)
    if mu.shape[0] != kernel.shape[0] + 1 or mu.shape[1:] != kernel.shape[1:3]:
        raise ConfigurationError(
            f"distribution shape {mu.shape} inconsistent with kernel {kernel.shape}")
    worst = 0.0
    for i in range(kernel.shape[0]):
        gap = marginal(mu[i + 1]) - state_flow(mu[i], kernel[i])
        worst = max(worst, float(np.abs(gap).max()))
    return worst


def verify_flow(mu, kernel, tol=STOCHASTIC_TOL) -> tuple[bool, float]:
    """Check ``mu`` respects the transition dynamics; returns (ok, max violation)."""
    violation = flow_violation(mu, kernel)
    return violation <= tol, violation
