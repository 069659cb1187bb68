"""Backward-induction machinery shared by the solvers.

Reward and Q tables have shape ``(N, X, A)`` with slot ``i`` holding time
``i + 1`` (see :mod:`tclmfc.mdp`).
"""

from __future__ import annotations

import numpy as np
from scipy.special import logsumexp

from .errors import InputError
from .mdp import propagate
from .objective import consumption_series, grad_cost, mode_indicator

TIE_TOL = 1e-12


def potential_reward(mu, target, phi=None):
    """r_n(x, a) = -2 (mu_n(phi) - target_n) phi(x) for n = 1..N."""
    mu = np.asarray(mu, dtype=float)
    phi = mode_indicator(mu.shape[1]) if phi is None else np.asarray(phi, float)
    gap = consumption_series(mu, phi)[1:] - np.asarray(target, dtype=float)
    reward = -2.0 * gap[:, None] * phi[None, :]
    return np.repeat(reward[:, :, None], mu.shape[2], axis=2)


def plain_q_backward(reward, kernel, policy):
    """Q-function of ``policy``: Q_N = r_N, Q_n = r_n + E[sum_a' pi_{n+1} Q_{n+1}]."""
    reward = np.asarray(reward, dtype=float)
    q = np.empty_like(reward)
    q[-1] = reward[-1]
    for i in range(reward.shape[0] - 2, -1, -1):
        value_next = np.einsum("ya,ya->y", policy[i + 1], q[i + 1])
        q[i] = reward[i] + kernel[i + 1] @ value_next
    return q


def greedy_policy(q):
    """Argmax rows, splitting mass uniformly over (numerically) tied actions."""
    best = q.max(axis=-1, keepdims=True)
    ties = q >= best - TIE_TOL * np.maximum(1.0, np.abs(best))
    return ties / ties.sum(axis=-1, keepdims=True)


def best_response(reward, kernel):
    """Optimal policy and Q-function against fixed rewards.

    Tied maximisers share the probability mass uniformly, which keeps the
    result a pure function of its inputs.
    """
    reward = np.asarray(reward, dtype=float)
    q = np.empty_like(reward)
    q[-1] = reward[-1]
    for i in range(reward.shape[0] - 2, -1, -1):
        q[i] = reward[i] + kernel[i + 1] @ q[i + 1].max(axis=-1)
    return greedy_policy(q), q


def regularized_backward_pass(reward, kernel, policy_prev, step):
    """One MD-MFC policy update.

    Computes the KL-regularised Q-function backwards in time and returns the
    softmax-reweighted policy pi_prev * exp(step * Q) (row-normalised)
    together with that Q-function.  The inner maximisation has the
    log-partition closed form (1 / step) log sum_a' pi_prev exp(step Q).
    """
    if not step > 0:
        raise InputError(f"step size must be positive, got {step}")
    reward = np.asarray(reward, dtype=float)
    policy_prev = np.asarray(policy_prev, dtype=float)
    with np.errstate(divide="ignore"):
        log_prev = np.log(policy_prev)
    q = np.empty_like(reward)
    policy = np.empty_like(policy_prev)
    q[-1] = reward[-1]
    for i in range(reward.shape[0] - 1, -1, -1):
        logits = log_prev[i] + step * q[i]
        log_norm = logsumexp(logits, axis=-1)
        policy[i] = np.exp(logits - log_norm[:, None])
        if i:
            q[i - 1] = reward[i - 1] + kernel[i] @ (log_norm / step)
    return policy, q


def expected_return(mu0, policy, kernel, reward) -> float:
    """J(pi) = sum_{n=1}^N <mu^pi_n, r_n>."""
    mu = propagate(mu0, policy, kernel)
    return float(np.sum(mu[1:] * reward))


def exploitability(mu0, policy, kernel, target) -> float:
    """Gain of a best response over ``policy`` against its own mean field."""
    mu = propagate(mu0, policy, kernel)
    reward = potential_reward(mu, target)
    best, _ = best_response(reward, kernel)
    return expected_return(mu0, best, kernel, reward) - float(np.sum(mu[1:] * reward))


def monotonicity_gap(mu_a, mu_b, target_n: float, phi=None) -> float:
    """sum_{x,a} [r(x, a, mu) - r(x, a, mu')] (mu - mu')(x, a) for one time step."""
    mu_a = np.asarray(mu_a, dtype=float)
    mu_b = np.asarray(mu_b, dtype=float)
    reward_gap = grad_cost(mu_b, target_n, phi) - grad_cost(mu_a, target_n, phi)
    return float(np.sum(reward_gap * (mu_a - mu_b)))
