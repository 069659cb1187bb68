"""Experiment configuration: a flat JSON object plus one ``solver`` block."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, InputError
from .heater import PhysicalSpec, load_drain_profile
from .solvers import DEFAULT_STEP_SCALE, INITIAL_POLICIES, STEP_SCHEDULES

SOLVER_NAMES = ("md-mfc", "fp-mfg", "omd-mfg", "frank-wolfe", "nominal")
DEVIATIONS = ("one-hour", "eight-hour", "custom", "none")
ENERGY_TOL = 1e-9


@dataclass(frozen=True)
class SolverSection:
    name: str = "md-mfc"
    iterations: int = 100
    step_schedule: str = "theorem2"
    step_scale: float | None = DEFAULT_STEP_SCALE
    init: str = "uniform"
    init_delta: float = 0.1
    seed: int = 0


@dataclass(frozen=True)
class ExperimentConfig:
    """Every key accepted in a config file, with its default."""

    t_min: float = 50.0
    t_max: int = 65
    t_amb: int = 25
    t_in: float = 18.0
    dt_minutes: float = 10.0
    horizon: int = 144
    volume: float = 0.2
    height: float = 1.37
    insulation: float = 0.035 / 4
    conductivity: float = 0.033
    water_density: float = 1000.0
    water_capacity: float = 4185.0
    rated_power: float = 2200.0
    drain_file: str | None = None
    drain_seed: int = 0
    drain_morning_peak: float = 0.35
    drain_evening_peak: float = 0.15
    deviation: str = "one-hour"
    deviation_amplitude: float | None = None
    deviation_start_hour: int | None = None
    deviation_file: str | None = None
    fleet_size: int = 10_000
    fleet_seed: int = 0
    output_dir: str = "out"
    figures: bool = True
    record_wall_time: bool = False
    export_kernel: bool = False
    solver: SolverSection = field(default_factory=SolverSection)
    base_dir: Path = field(default=Path("."), compare=False)

    @property
    def dt_hours(self) -> float:
        return self.dt_minutes / 60.0

    @property
    def steps_per_day(self) -> int:
        return int(round(24 * 60 / self.dt_minutes))

    @property
    def steps_per_hour(self) -> int:
        return int(round(60 / self.dt_minutes))

    def physical_spec(self) -> PhysicalSpec:
        return PhysicalSpec(self.volume, self.height, self.insulation, self.conductivity,
                            self.water_density, self.water_capacity, self.rated_power)

    def resolve(self, path: str | None) -> Path | None:
        if path is None:
            return None
        path = Path(path)
        return path if path.is_absolute() else self.base_dir / path


_TOP_KEYS = {f.name: f for f in fields(ExperimentConfig) if f.name not in ("solver", "base_dir")}
_SOLVER_KEYS = {f.name: f for f in fields(SolverSection)}

_INT_KEYS = {"t_max", "t_amb", "horizon", "drain_seed", "fleet_size", "fleet_seed",
             "deviation_start_hour", "iterations", "seed"}
_BOOL_KEYS = {"figures", "record_wall_time", "export_kernel"}
_STR_KEYS = {"drain_file", "deviation", "deviation_file", "output_dir", "name",
             "step_schedule", "init"}


def _coerce(key, value, problems):
    if value is None:
        return None
    if key in _BOOL_KEYS:
        if not isinstance(value, bool):
            problems.append(f"{key}: expected true/false, got {value!r}")
        return value
    if key in _STR_KEYS:
        if not isinstance(value, str):
            problems.append(f"{key}: expected a string, got {value!r}")
        return value
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        problems.append(f"{key}: expected a number, got {value!r}")
        return value
    if key in _INT_KEYS:
        if int(value) != value:
            problems.append(f"{key}: expected an integer, got {value!r}")
            return value
        return int(value)
    return float(value)


def read_config_file(path) -> dict:
    path = Path(path)
    with path.open(encoding="utf-8") as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"{path}: not valid JSON ({exc})") from None
    if not isinstance(raw, dict):
        raise ConfigurationError(f"{path}: top level must be an object")
    return raw


def parse_config(raw: dict, base_dir=".") -> tuple[ExperimentConfig | None, list[str]]:
    """Build a config and collect every problem found; config is None if unusable."""
    problems: list[str] = []
    top, solver = {}, {}
    for key, value in raw.items():
        if key == "solver":
            if not isinstance(value, dict):
                problems.append("solver: expected an object")
                continue
            for skey, svalue in value.items():
                if skey not in _SOLVER_KEYS:
                    problems.append(f"solver.{skey}: unknown key")
                else:
                    solver[skey] = _coerce(skey, svalue, problems)
        elif key not in _TOP_KEYS:
            problems.append(f"{key}: unknown key")
        else:
            top[key] = _coerce(key, value, problems)
    if problems:
        return None, problems
    cfg = ExperimentConfig(**top, solver=SolverSection(**solver), base_dir=Path(base_dir))
    problems.extend(check_config(cfg))
    return cfg, problems


def check_config(cfg: ExperimentConfig) -> list[str]:
    """Every violated invariant, without running anything expensive."""
    problems = []
    if not cfg.t_amb < cfg.t_min:
        problems.append(f"t_amb: must be below t_min ({cfg.t_amb} >= {cfg.t_min})")
    if not cfg.t_min < cfg.t_max:
        problems.append(f"t_min: must be below t_max ({cfg.t_min} >= {cfg.t_max})")
    if cfg.t_in >= cfg.t_max:
        problems.append(f"t_in: inlet water must be colder than t_max ({cfg.t_in})")
    if not cfg.dt_minutes > 0:
        problems.append(f"dt_minutes: must be positive ({cfg.dt_minutes})")
    elif (24 * 60 / cfg.dt_minutes) % 1 or (60 / cfg.dt_minutes) % 1:
        problems.append(f"dt_minutes: must divide one hour evenly ({cfg.dt_minutes})")
    elif cfg.horizon < 1 or cfg.horizon % cfg.steps_per_day:
        problems.append(f"horizon: {cfg.horizon} steps of {cfg.dt_minutes} min "
                        "is not a whole number of days")
    for name in ("volume", "height", "insulation", "conductivity", "water_density",
                 "water_capacity", "rated_power"):
        if not getattr(cfg, name) > 0:
            problems.append(f"{name}: must be positive ({getattr(cfg, name)})")
    if cfg.fleet_size < 1:
        problems.append(f"fleet_size: must be >= 1 ({cfg.fleet_size})")
    for name in ("drain_morning_peak", "drain_evening_peak"):
        if not 0 <= getattr(cfg, name) <= 1:
            problems.append(f"{name}: must lie in [0, 1] ({getattr(cfg, name)})")

    if cfg.drain_file is not None:
        path = cfg.resolve(cfg.drain_file)
        if not path.is_file():
            problems.append(f"drain_file: {path} does not exist")
        else:
            try:
                profile = load_drain_profile(path)
            except InputError as exc:
                problems.append(f"drain_file: {exc}")
            else:
                if len(profile) != cfg.horizon:
                    problems.append(f"drain_file: {len(profile)} rows, horizon is {cfg.horizon}")

    if cfg.deviation not in DEVIATIONS:
        problems.append(f"deviation: unknown type {cfg.deviation!r} (choose from {DEVIATIONS})")
    elif cfg.deviation == "custom":
        if cfg.deviation_file is None:
            problems.append("deviation_file: required when deviation is 'custom'")
        else:
            path = cfg.resolve(cfg.deviation_file)
            if not path.is_file():
                problems.append(f"deviation_file: {path} does not exist")
            else:
                try:
                    values = load_deviation(path)
                except InputError as exc:
                    problems.append(f"deviation_file: {exc}")
                else:
                    if len(values) != cfg.horizon:
                        problems.append(
                            f"deviation_file: {len(values)} rows, horizon is {cfg.horizon}")
                    if abs(float(np.sum(values))) > ENERGY_TOL:
                        problems.append(
                            f"deviation_file: deviation sums to {float(np.sum(values)):.6g}, "
                            "must have zero energy")
    if cfg.deviation_amplitude is not None and cfg.deviation_amplitude < 0:
        problems.append(f"deviation_amplitude: must be nonnegative ({cfg.deviation_amplitude})")

    s = cfg.solver
    if s.name not in SOLVER_NAMES:
        problems.append(f"solver.name: unknown solver {s.name!r} (choose from {SOLVER_NAMES})")
    if s.iterations < 0:
        problems.append(f"solver.iterations: must be >= 0 ({s.iterations})")
    if s.step_schedule not in STEP_SCHEDULES:
        problems.append(f"solver.step_schedule: unknown schedule {s.step_schedule!r}")
    if s.step_scale is not None and not s.step_scale > 0:
        problems.append(f"solver.step_scale: must be positive ({s.step_scale})")
    if s.init not in INITIAL_POLICIES:
        problems.append(f"solver.init: unknown initial policy {s.init!r}")
    if not 0 <= s.init_delta <= 0.5:
        problems.append(f"solver.init_delta: must lie in [0, 0.5] ({s.init_delta})")
    if s.name in ("md-mfc", "omd-mfg") and s.init == "nominal-deviation" and s.init_delta == 0:
        problems.append("solver.init_delta: must be > 0 for mirror-descent solvers")
    return problems


def load_config(path) -> ExperimentConfig:
    """Parse and validate; raises ConfigurationError listing every problem."""
    path = Path(path)
    cfg, problems = parse_config(read_config_file(path), base_dir=path.parent)
    if problems:
        raise ConfigurationError("; ".join(problems))
    return cfg


def load_deviation(path) -> np.ndarray:
    """Read a ``step,deviation`` CSV (header optional)."""
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if rows and [c.strip() for c in rows[0]] == ["step", "deviation"]:
        rows = rows[1:]
    if not rows:
        raise InputError(f"{path}: no data rows")
    values = []
    for lineno, row in enumerate(rows):
        try:
            step, value = int(row[0]), float(row[1])
        except (ValueError, IndexError):
            raise InputError(f"{path}: row {lineno} is not 'step,deviation'") from None
        if step != lineno or not math.isfinite(value):
            raise InputError(f"{path}: row {lineno} malformed")
        values.append(value)
    return np.array(values)
