"""Target-tracking cost, its gradient, and target-signal construction."""

from __future__ import annotations

import math
import warnings

import numpy as np

from .errors import InputError


def mode_indicator(n_states: int) -> np.ndarray:
    """Consumption table phi(x) = mode for the OFF-block-then-ON-block layout."""
    if n_states % 2:
        raise InputError(f"state count {n_states} is not OFF/ON symmetric")
    return np.repeat([0.0, 1.0], n_states // 2)


def _phi(mu_n, phi):
    return mode_indicator(np.shape(mu_n)[-2]) if phi is None else np.asarray(phi, float)


def consumption(mu_n, phi=None) -> float:
    """Fraction of the population ON: sum_{x,a} phi(x) mu_n(x, a)."""
    mu_n = np.asarray(mu_n, dtype=float)
    return float(_phi(mu_n, phi) @ mu_n.sum(axis=-1))


def consumption_series(mu, phi=None) -> np.ndarray:
    """Consumption at every time slice of ``mu`` (shape ``(N + 1, X, A)``)."""
    mu = np.asarray(mu, dtype=float)
    return mu.sum(axis=-1) @ _phi(mu, phi)


def eval_cost(mu, target, phi=None) -> float:
    """F(mu) = sum_{n=1}^N (mu_n(phi) - target_n)^2.

    ``target`` has length N and is matched against ``mu[1:]``.
    """
    mu = np.asarray(mu, dtype=float)
    target = np.asarray(target, dtype=float)
    if target.shape != (mu.shape[0] - 1,):
        raise InputError(
            f"target length {target.shape} does not match horizon {mu.shape[0] - 1}")
    gap = consumption_series(mu, phi)[1:] - target
    return float(gap @ gap)


def grad_cost(mu_n, target_n: float, phi=None):
    """Gradient of (mu_n(phi) - target_n)^2 with respect to mu_n."""
    mu_n = np.asarray(mu_n, dtype=float)
    table = _phi(mu_n, phi)
    scale = 2.0 * (consumption(mu_n, table) - target_n)
    return np.repeat((scale * table)[:, None], mu_n.shape[-1], axis=1)


def grad_cost_sequence(mu, target, phi=None):
    """Stacked gradients for n = 1..N, shape ``(N, X, A)``."""
    mu = np.asarray(mu, dtype=float)
    return np.stack([grad_cost(mu[n], target[n - 1], phi) for n in range(1, mu.shape[0])])


def lipschitz_bound(horizon: int, phi_sup: float = 1.0) -> float:
    """L = (sum_n l_n^2)^(1/2) with l_n = 2 ||phi||_inf^2."""
    if horizon < 1:
        raise InputError(f"horizon must be >= 1, got {horizon}")
    return 2.0 * phi_sup ** 2 * math.sqrt(horizon)


def step_deviation(start_step: int, up_steps: int, amplitude: float, horizon: int):
    """Zero-energy step: +amplitude for ``up_steps`` then a flat compensating tail."""
    if start_step < 0 or up_steps < 0 or start_step + up_steps > horizon:
        raise InputError(
            f"step window [{start_step}, {start_step + up_steps}) outside horizon {horizon}")
    if amplitude < 0:
        raise InputError(f"amplitude must be nonnegative, got {amplitude}")
    tail = horizon - start_step - up_steps
    if tail == 0:
        raise InputError("no steps left after the step window to balance its energy")
    deviation = np.zeros(horizon)
    deviation[start_step:start_step + up_steps] = amplitude
    deviation[start_step + up_steps:] = -amplitude * up_steps / tail
    return deviation


def window_deviation(start_step: int, up_steps: int, amplitude: float, horizon: int):
    """Zero-energy plateau with the compensation spread over all other steps."""
    if start_step < 0 or up_steps <= 0 or start_step + up_steps > horizon:
        raise InputError(
            f"window [{start_step}, {start_step + up_steps}) outside horizon {horizon}")
    rest = horizon - up_steps
    if rest == 0:
        raise InputError("window covers the whole horizon; energy cannot balance")
    deviation = np.full(horizon, -amplitude * up_steps / rest)
    deviation[start_step:start_step + up_steps] = amplitude
    return deviation


def one_hour_deviation(horizon: int, steps_per_hour: int, amplitude: float = 0.10,
                       start_hour: int = 5):
    return step_deviation(start_hour * steps_per_hour, steps_per_hour, amplitude, horizon)


def eight_hour_deviation(horizon: int, steps_per_hour: int, amplitude: float = 0.05,
                         start_hour: int = 11):
    return window_deviation(start_hour * steps_per_hour, 8 * steps_per_hour,
                            amplitude, horizon)


def build_target(baseline, deviation):
    """Target = baseline + deviation, clipped to [0, 1].

    Returns ``(target, n_clamped)``; a warning is emitted when clipping occurs.
    """
    baseline = np.asarray(baseline, dtype=float)
    deviation = np.asarray(deviation, dtype=float)
    if baseline.shape != deviation.shape:
        raise InputError(f"baseline {baseline.shape} and deviation {deviation.shape} differ")
    raw = baseline + deviation
    target = np.clip(raw, 0.0, 1.0)
    n_clamped = int(np.count_nonzero(target != raw))
    if n_clamped:
        warnings.warn(f"target clipped to [0, 1] at {n_clamped} steps", stacklevel=2)
    return target, n_clamped
