"""Water-heater physics and the time-indexed transition kernel it induces."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InputError
from .mdp import OFF, ON, StateSpace


@dataclass(frozen=True)
class PhysicalSpec:
    """Tank geometry and material constants (SI units)."""

    volume: float = 0.2  # m^3
    height: float = 1.37  # m
    insulation: float = 0.035 / 4  # m
    conductivity: float = 0.033  # W / (m K)
    water_density: float = 1000.0  # kg / m^3
    water_capacity: float = 4185.0  # J / (kg K)
    rated_power: float = 2200.0  # W

    def __post_init__(self):
        for name, value in vars(self).items():
            if not value > 0:
                raise InputError(f"physical spec field {name} must be positive, got {value}")


def derive_coefficients(spec: PhysicalSpec) -> tuple[float, float, float]:
    """Return ``(loss, joule, drain)`` coefficients.

    ``loss`` is the fraction of the temperature gap to ambient lost per hour,
    ``joule`` converts Joules into Kelvin for the full tank, and ``drain`` is
    the fraction of the tank replaced per liter (kg) withdrawn.
    """
    # pi is taken as 3.14 to reproduce the published parameter table
    coef_loss = (spec.conductivity / spec.insulation) * 2 * 3.14 * math.sqrt(
        spec.volume * 3.14 / spec.height)
    loss = coef_loss * 3600 / (spec.water_capacity * spec.water_density
                               * spec.volume / spec.height)
    joule = 1.0 / (spec.volume * spec.water_density * spec.water_capacity)
    drain = 1.0 / (spec.volume * spec.water_density)
    return loss, joule, drain


@dataclass(frozen=True)
class HeaterParams:
    """Parameters of the Euler temperature update.

    ``p_max`` is the heating energy delivered in one hour at full power
    (rated power in W times 3600); ``dt`` is in hours.
    """

    t_min: float = 50.0
    t_max: int = 65
    t_amb: int = 25
    t_in: float = 18.0
    dt: float = 10.0 / 60.0
    loss_coef: float = 0.0
    joule_coef: float = 0.0
    drain_coef: float = 0.0
    p_max: float = 0.0

    def __post_init__(self):
        if not self.t_amb < self.t_min < self.t_max:
            raise InputError(
                f"need t_amb < t_min < t_max, got {self.t_amb}, {self.t_min}, {self.t_max}")
        if int(self.t_amb) != self.t_amb or int(self.t_max) != self.t_max:
            raise InputError("t_amb and t_max must be integers")
        if not self.dt > 0:
            raise InputError(f"dt must be positive, got {self.dt}")
        for name in ("joule_coef", "p_max"):
            if not getattr(self, name) > 0:
                raise InputError(f"{name} must be positive, got {getattr(self, name)}")
        # zero loss or drain coefficients model ideal tanks
        for name in ("loss_coef", "drain_coef"):
            if not getattr(self, name) >= 0:
                raise InputError(f"{name} must be nonnegative, got {getattr(self, name)}")

    @classmethod
    def from_spec(cls, spec: PhysicalSpec | None = None, **temps) -> "HeaterParams":
        spec = spec or PhysicalSpec()
        loss, joule, drain = derive_coefficients(spec)
        return cls(loss_coef=loss, joule_coef=joule, drain_coef=drain,
                   p_max=spec.rated_power * 3600.0, **temps)

    @property
    def space(self) -> StateSpace:
        return StateSpace(int(self.t_amb), int(self.t_max))

    @property
    def steps_per_hour(self) -> float:
        return 1.0 / self.dt


def reference_params() -> HeaterParams:
    """Tank of 200 L, 2.2 kW, deadband [50, 65] C, 10 minute steps."""
    return HeaterParams.from_spec(PhysicalSpec())


def temperature_step(theta, mode, withdrawal, drain_liters, params: HeaterParams,
                     clamp: bool = True):
    """One explicit Euler step of the tank temperature (vectorised).

    With ``clamp`` the result is projected onto ``[t_amb, t_max]``.
    """
    theta = np.asarray(theta, dtype=float)
    rate = (-params.loss_coef * (theta - params.t_amb)
            + params.joule_coef * np.asarray(mode) * params.p_max
            - np.asarray(withdrawal) * params.drain_coef * (theta - params.t_in)
            * np.asarray(drain_liters))
    nxt = theta + params.dt * rate
    if clamp:
        nxt = np.clip(nxt, params.t_amb, params.t_max)
    return nxt if nxt.ndim else float(nxt)


def rounding_distribution(theta: float) -> list[tuple[int, float]]:
    """Unbiased stochastic rounding: floor w.p. 1 - frac, ceil w.p. frac."""
    low = math.floor(theta)
    frac = theta - low
    if frac == 0.0:
        return [(int(low), 1.0)]
    return [(int(low), 1.0 - frac), (int(low) + 1, frac)]


def next_operating_state(action, theta, params: HeaterParams):
    """Mode after the deadband override: forced ON below t_min, OFF above t_max."""
    theta = np.asarray(theta, dtype=float)
    mode = np.where(theta < params.t_min, ON,
                    np.where(theta > params.t_max, OFF, np.asarray(action)))
    return mode if mode.ndim else int(mode)


# -- drain profiles -----------------------------------------------------------

@dataclass(frozen=True)
class DrainProfile:
    """Per-step withdrawal probability ``q`` and volume ``liters`` if it happens."""

    q: np.ndarray
    liters: np.ndarray

    def __post_init__(self):
        q = np.asarray(self.q, dtype=float)
        liters = np.asarray(self.liters, dtype=float)
        if q.shape != liters.shape or q.ndim != 1:
            raise InputError(f"q {q.shape} and liters {liters.shape} must be equal 1-d arrays")
        if np.any((q < 0) | (q > 1)):
            raise InputError("withdrawal probabilities must lie in [0, 1]")
        if np.any(liters < 0):
            raise InputError("drained volumes must be nonnegative")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "liters", liters)

    def __len__(self):
        return len(self.q)

    @classmethod
    def zero(cls, horizon: int) -> "DrainProfile":
        return cls(np.zeros(horizon), np.zeros(horizon))


DRAIN_HEADER = ("step", "q", "d_liters")


def load_drain_profile(path) -> DrainProfile:
    """Read a ``step,q,d_liters`` CSV.  A header row is optional."""
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        rows = [row for row in csv.reader(fh) if row and any(c.strip() for c in row)]
    if rows and tuple(c.strip() for c in rows[0]) == DRAIN_HEADER:
        rows = rows[1:]
    if not rows:
        raise InputError(f"{path}: drain profile has no data rows")
    q, liters = [], []
    for lineno, row in enumerate(rows):
        where = f"{path}: row {lineno}"
        if len(row) != 3:
            raise InputError(f"{where}: expected 3 fields, got {len(row)}")
        try:
            step, prob, vol = int(row[0]), float(row[1]), float(row[2])
        except ValueError as exc:
            raise InputError(f"{where}: {exc}") from None
        if step != lineno:
            raise InputError(f"{where}: step {step} out of sequence (expected {lineno})")
        if not 0.0 <= prob <= 1.0:
            raise InputError(f"{where}: q={prob} outside [0, 1]")
        if vol < 0:
            raise InputError(f"{where}: negative drain {vol}")
        q.append(prob)
        liters.append(vol)
    return DrainProfile(np.array(q), np.array(liters))


def save_drain_profile(profile: DrainProfile, path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(DRAIN_HEADER)
        for n, (q, d) in enumerate(zip(profile.q, profile.liters)):
            writer.writerow([n, repr(float(q)), repr(float(d))])


def synth_drain_profile(seed: int = 0, horizon: int = 144, morning_peak: float = 0.35,
                        evening_peak: float = 0.15, steps_per_day: int = 144,
                        base_rate: float = 0.02, mean_liters: float = 100.0) -> DrainProfile:
    """Two-peak daily withdrawal pattern (07:00 dominant, 20:00 secondary).

    Peak heights are withdrawal probabilities; the seed jitters both the
    probabilities and the volumes.
    """
    rng = np.random.default_rng(seed)
    hours = (np.arange(horizon) % steps_per_day) * 24.0 / steps_per_day
    morning = morning_peak * np.exp(-0.5 * ((hours - 7.0) / 1.0) ** 2)
    evening = evening_peak * np.exp(-0.5 * ((hours - 20.0) / 1.5) ** 2)
    midday = 0.5 * evening_peak * np.exp(-0.5 * ((hours - 12.75) / 1.0) ** 2)
    q = base_rate + morning + evening + midday
    q = np.clip(q * rng.lognormal(0.0, 0.15, horizon), 0.0, 1.0)
    liters = mean_liters * rng.lognormal(0.0, 0.2, horizon)
    return DrainProfile(q, liters)


# -- kernel -------------------------------------------------------------------

def build_kernel(params: HeaterParams, drain: DrainProfile) -> np.ndarray:
    """Transition tables of shape ``(N, X, 2, X)``.

    The deadband override is evaluated on the rounded temperature *before*
    it is projected onto the grid, so a heater that would overshoot
    ``t_max`` is switched OFF instead of parking ON at the ceiling.
    """
    space = params.space
    n_x, n_t = space.size, space.n_temps
    modes = space.modes()
    temps = space.temperatures().astype(float)
    horizon = len(drain)
    kernel = np.zeros((horizon, n_x, 2, n_x))
    rows = np.arange(n_x)
    for n in range(horizon):
        for withdrawal, p_w in ((0, 1.0 - drain.q[n]), (1, drain.q[n])):
            if p_w == 0.0:
                continue
            theta = temperature_step(temps, modes, withdrawal, drain.liters[n], params,
                                     clamp=False)
            low = np.floor(theta)
            frac = theta - low
            for target, p_r in ((low, 1.0 - frac), (low + 1.0, frac)):
                weight = p_w * p_r
                grid_temp = np.clip(target, params.t_amb, params.t_max).astype(int)
                for action in (OFF, ON):
                    mode_next = next_operating_state(action, target, params)
                    cols = mode_next * n_t + grid_temp - params.t_amb
                    np.add.at(kernel[n, :, action], (rows, cols), weight)
    return kernel


def kernel_row_report(kernel) -> dict:
    """Row-sum and support diagnostics for a kernel."""
    sums = kernel.sum(axis=-1)
    return {
        "steps": kernel.shape[0],
        "states": kernel.shape[1],
        "actions": kernel.shape[2],
        "max_row_sum_error": float(np.abs(sums - 1.0).max()),
        "min_entry": float(kernel.min()),
        "max_successors": int((kernel > 0).sum(axis=-1).max()),
    }


def export_kernel_csv(kernel, path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["n", "x_index", "a", "x_next_index", "prob"])
        for n, x, a, y in zip(*np.nonzero(kernel)):
            writer.writerow([n, x, a, y, repr(float(kernel[n, x, a, y]))])


# -- reference policies ---------------------------------------------------------

def nominal_policy(space: StateSpace, horizon: int) -> np.ndarray:
    """Keep the current mode: pi(a | (m, theta)) = 1[a = m]."""
    policy = np.zeros((horizon, space.size, 2))
    policy[:, np.arange(space.size), space.modes()] = 1.0
    return policy


def nominal_initial_distribution(params: HeaterParams, drain: DrainProfile,
                                 warmup_steps: int | None = None) -> np.ndarray:
    """Joint (x, a) distribution to start a nominal day from.

    States are spread uniformly over the deadband in both modes and then run
    through the nominal dynamics for one horizon (the drain profile repeated),
    so the result is the end-of-day condition of an earlier nominal day.
    Actions follow the nominal rule a = m.
    """
    space = params.space
    steps = len(drain) if warmup_steps is None else warmup_steps
    in_band = (space.temperatures() >= params.t_min) & (space.temperatures() <= params.t_max)
    rho = in_band / in_band.sum()
    if steps:
        reps = -(-steps // len(drain))
        warm = DrainProfile(np.tile(drain.q, reps)[:steps], np.tile(drain.liters, reps)[:steps])
        kernel = build_kernel(params, warm)
        nominal = nominal_policy(space, 1)[0]
        for n in range(steps):
            rho = np.einsum("xa,xay->y", rho[:, None] * nominal, kernel[n])
    mu0 = np.zeros((space.size, 2))
    mu0[np.arange(space.size), space.modes()] = rho
    return mu0 / mu0.sum()
