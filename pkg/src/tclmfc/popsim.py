"""Monte-Carlo simulation of a finite heater fleet executing a policy."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .heater import DrainProfile, HeaterParams, next_operating_state, temperature_step
from .mdp import check_policy
from .solvers import perturbed_nominal_policy  # noqa: F401  (re-exported)

# uniform draws per heater and step: action, withdrawal, rounding
_DRAWS_PER_STEP = 3


@dataclass(frozen=True)
class FleetTrace:
    """Per-heater trajectories for times 0..N.

    ``modes`` and ``temps`` have shape ``(M, N + 1)``.
    """

    modes: np.ndarray
    temps: np.ndarray
    steps_per_day: int

    @property
    def size(self) -> int:
        return self.modes.shape[0]

    @property
    def horizon(self) -> int:
        return self.modes.shape[1] - 1

    @property
    def mean_consumption(self) -> np.ndarray:
        """Fraction of heaters ON at each time 0..N."""
        return self.modes.mean(axis=0)

    def switches_per_heater(self) -> np.ndarray:
        """Daily ON/OFF switch count of each heater over times 1..N."""
        controlled = self.modes[:, 1:]
        raw = np.count_nonzero(np.diff(controlled, axis=1), axis=1)
        return raw * (self.steps_per_day / self.horizon)


def count_switches(trace: FleetTrace) -> float:
    """Mean daily switches per heater."""
    return float(trace.switches_per_heater().mean())


def _heater_uniforms(seed: int, n_heaters: int, horizon: int) -> np.ndarray:
    """Independent stream per heater, keyed by (seed, heater index).

    Each heater's numbers depend only on the seed and its own index, so
    results do not change with fleet ordering or chunking.
    """
    out = np.empty((n_heaters, 1 + _DRAWS_PER_STEP * horizon))
    root = np.random.SeedSequence(seed)
    for i in range(n_heaters):
        stream = np.random.Generator(np.random.Philox(
            np.random.SeedSequence(root.entropy, spawn_key=(i,))))
        out[i] = stream.random(out.shape[1])
    return out


def _sample_categorical(probs, u):
    """Inverse-CDF draw per row of ``probs`` using uniforms ``u``."""
    cdf = np.cumsum(probs, axis=-1)
    idx = (u[:, None] >= cdf[:, :-1]).sum(axis=-1)
    return idx


def simulate_population(n_heaters: int, policy, params: HeaterParams, drain: DrainProfile,
                        init, seed: int = 0, steps_per_day: int | None = None) -> FleetTrace:
    """Simulate ``n_heaters`` independent heaters for ``len(drain)`` steps.

    ``init`` is either a joint ``(X, A)`` distribution, from which the time-0
    state and action are drawn, or a state distribution ``(X,)``, in which
    case the time-0 action follows the nominal rule ``a = m``.
    ``policy[i]`` chooses the action at time ``i + 1``.
    """
    if n_heaters < 1:
        raise InputError(f"fleet size must be >= 1, got {n_heaters}")
    policy = check_policy(policy)
    space = params.space
    horizon = len(drain)
    if policy.shape[:2] != (horizon, space.size):
        raise InputError(f"policy shape {policy.shape} does not match horizon/state space")
    init = np.asarray(init, dtype=float)
    if init.ndim == 1:
        joint = np.zeros((space.size, 2))
        joint[np.arange(space.size), space.modes()] = init
    else:
        joint = init
    if joint.shape != (space.size, 2) or abs(joint.sum() - 1.0) > 1e-9 or joint.min() < 0:
        raise InputError("initial distribution is not a distribution over the state space")
    if steps_per_day is None:
        steps_per_day = int(round(24.0 / params.dt))

    u = _heater_uniforms(seed, n_heaters, horizon)
    cell = _sample_categorical(np.broadcast_to(joint.ravel(), (n_heaters, joint.size)), u[:, 0])
    state, action = np.divmod(cell, 2)
    modes = np.empty((n_heaters, horizon + 1), dtype=np.int8)
    temps = np.empty((n_heaters, horizon + 1), dtype=np.int16)
    mode = space.modes()[state]
    temp = space.temperatures()[state]
    modes[:, 0], temps[:, 0] = mode, temp
    for n in range(horizon):
        u_act, u_drain, u_round = u[:, 1 + 3 * n: 4 + 3 * n].T
        withdrawal = (u_drain < drain.q[n]).astype(float)
        theta = temperature_step(temp.astype(float), mode, withdrawal, drain.liters[n], params,
                                 clamp=False)
        low = np.floor(theta)
        rounded = low + (u_round < theta - low)
        mode = next_operating_state(action, rounded, params).astype(np.int8)
        temp = np.clip(rounded, params.t_amb, params.t_max).astype(np.int16)
        modes[:, n + 1], temps[:, n + 1] = mode, temp
        state = mode.astype(int) * space.n_temps + temp - params.t_amb
        action = _sample_categorical(policy[n][state], u_act)
    return FleetTrace(modes, temps, steps_per_day)
