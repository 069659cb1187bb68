"""KL divergence and the policy-space Bregman divergence used by MD-MFC.

All logarithms are natural, so every value is in nats.  A divergence that
is infinite because of an absolute-continuity failure is reported as
``math.inf`` (never as an overflowed float), so callers can test for it
with ``math.isinf``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError
from .mdp import marginal


@dataclass(frozen=True)
class DivergenceReport:
    value: float
    per_step: tuple[float, ...] = field(default_factory=tuple)

    @property
    def is_infinite(self) -> bool:
        return math.isinf(self.value)


def _xlogy_ratio(p, q):
    """Elementwise p * log(p / q) with 0 log 0 = 0 and inf where p > 0 = q."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    out = np.zeros(np.broadcast(p, q).shape)
    pos = p > 0
    blocked = pos & (q <= 0)
    if np.any(blocked):
        out[blocked] = math.inf
    ok = pos & ~blocked
    out[ok] = p[ok] * (np.log(p[ok]) - np.log(q[ok]))
    return out


def kl(eta, nu) -> float:
    """Kullback-Leibler divergence sum_x eta(x) log(eta(x) / nu(x))."""
    eta = np.asarray(eta, dtype=float)
    nu = np.asarray(nu, dtype=float)
    if eta.shape != nu.shape:
        raise InputError(f"support mismatch: {eta.shape} vs {nu.shape}")
    terms = _xlogy_ratio(eta.ravel(), nu.ravel())
    if np.isinf(terms).any():
        return math.inf
    return float(terms.sum())


def neg_entropy(eta) -> float:
    eta = np.asarray(eta, dtype=float).ravel()
    pos = eta > 0
    return float(np.sum(eta[pos] * np.log(eta[pos])))


def gamma_policy_form(mu, policy, policy_ref) -> DivergenceReport:
    """Expected log-ratio of two policies under the occupation of the first.

    ``mu`` has shape ``(N + 1, X, A)`` and must be induced by ``policy``;
    both policies have shape ``(N, X, A)``.
    """
    mu = np.asarray(mu, dtype=float)
    policy = np.asarray(policy, dtype=float)
    policy_ref = np.asarray(policy_ref, dtype=float)
    per_step = []
    for i in range(policy.shape[0]):
        weight = mu[i + 1]
        reached = weight > 0
        if np.any(reached & (policy_ref[i] <= 0)):
            return DivergenceReport(math.inf, tuple(per_step) + (math.inf,))
        terms = np.zeros_like(weight)
        # pi(a|x) > 0 wherever mu(x, a) > 0 when mu is induced by pi
        terms[reached] = weight[reached] * (
            np.log(policy[i][reached]) - np.log(policy_ref[i][reached]))
        per_step.append(float(terms.sum()))
    return DivergenceReport(float(sum(per_step)), tuple(per_step))


def gamma_marginal_form(mu, mu_ref) -> DivergenceReport:
    """sum_n KL(mu_n, mu'_n) - sum_n KL(rho_n, rho'_n), for n = 1..N."""
    mu = np.asarray(mu, dtype=float)
    mu_ref = np.asarray(mu_ref, dtype=float)
    if mu.shape != mu_ref.shape:
        raise InputError(f"shape mismatch: {mu.shape} vs {mu_ref.shape}")
    per_step = []
    for n in range(1, mu.shape[0]):
        joint = kl(mu[n], mu_ref[n])
        if math.isinf(joint):
            return DivergenceReport(math.inf, tuple(per_step) + (math.inf,))
        per_step.append(joint - kl(marginal(mu[n]), marginal(mu_ref[n])))
    return DivergenceReport(float(sum(per_step)), tuple(per_step))


def psi(mu) -> float:
    """Sum over n >= 1 of phi(mu_n) - phi(rho_n): the generator of Gamma."""
    mu = np.asarray(mu, dtype=float)
    return float(sum(neg_entropy(mu[n]) - neg_entropy(marginal(mu[n]))
                     for n in range(1, mu.shape[0])))


def psi_gradient(mu):
    """d psi / d mu_n(x, a) = log(mu_n(x, a) / rho_n(x)); slice 0 is zero.

    Entries with mu_n(x, a) = 0 are -inf.
    """
    mu = np.asarray(mu, dtype=float)
    grad = np.zeros_like(mu)
    rho = mu[1:].sum(axis=-1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        grad[1:] = np.log(mu[1:]) - np.log(rho)
    return grad
