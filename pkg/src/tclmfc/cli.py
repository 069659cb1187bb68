"""Command line: ``run``, ``validate`` and ``synth-drain``.

Exit codes are 0 on success, 1 for configuration errors and 2 for failures
while running.
"""

from __future__ import annotations

import argparse
import csv
import sys
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import (ExperimentConfig, load_config, load_deviation, parse_config,
                     read_config_file)
from .errors import ConfigurationError, TclMfcError
from .heater import (DrainProfile, HeaterParams, build_kernel, export_kernel_csv,
                     kernel_row_report, load_drain_profile, nominal_initial_distribution,
                     nominal_policy, save_drain_profile, synth_drain_profile)
from .mdp import propagate
from .objective import (build_target, consumption_series, eight_hour_deviation, eval_cost,
                        one_hour_deviation)
from .popsim import count_switches, simulate_population
from .solvers import MFCProblem, SolverConfig, solve

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2


@dataclass
class ExperimentResult:
    policy: np.ndarray
    objective: float
    nominal_objective: float
    mean_field: np.ndarray
    fleet_consumption: np.ndarray
    mean_daily_switches: float
    output_dir: Path


def heater_params(cfg: ExperimentConfig) -> HeaterParams:
    return HeaterParams.from_spec(cfg.physical_spec(), t_min=cfg.t_min, t_max=cfg.t_max,
                                  t_amb=cfg.t_amb, t_in=cfg.t_in, dt=cfg.dt_hours)


def drain_profile(cfg: ExperimentConfig) -> DrainProfile:
    if cfg.drain_file is not None:
        return load_drain_profile(cfg.resolve(cfg.drain_file))
    return synth_drain_profile(cfg.drain_seed, cfg.horizon, cfg.drain_morning_peak,
                               cfg.drain_evening_peak, cfg.steps_per_day)


def deviation_signal(cfg: ExperimentConfig) -> np.ndarray:
    options = {}
    if cfg.deviation_amplitude is not None:
        options["amplitude"] = cfg.deviation_amplitude
    if cfg.deviation_start_hour is not None:
        options["start_hour"] = cfg.deviation_start_hour
    if cfg.deviation == "one-hour":
        return one_hour_deviation(cfg.horizon, cfg.steps_per_hour, **options)
    if cfg.deviation == "eight-hour":
        return eight_hour_deviation(cfg.horizon, cfg.steps_per_hour, **options)
    if cfg.deviation == "custom":
        return load_deviation(cfg.resolve(cfg.deviation_file))
    return np.zeros(cfg.horizon)


def _fmt(x) -> str:
    return repr(float(x))


def _write_csv(path, header, rows):
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def run_experiment(cfg: ExperimentConfig, output_dir=None) -> ExperimentResult:
    """Kernel, target, solve, simulate, then write every artifact."""
    out = Path(output_dir) if output_dir is not None else cfg.resolve(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    params = heater_params(cfg)
    space = params.space
    drain = drain_profile(cfg)

    kernel = build_kernel(params, drain)
    report = kernel_row_report(kernel)
    with (out / "kernel_check.txt").open("w", encoding="utf-8") as fh:
        for key, value in report.items():
            fh.write(f"{key}={value!r}\n")
    if cfg.export_kernel:
        export_kernel_csv(kernel, out / "kernel.csv")

    mu0 = nominal_initial_distribution(params, drain)
    nominal = nominal_policy(space, cfg.horizon)
    baseline = consumption_series(propagate(mu0, nominal, kernel))[1:]
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        target, n_clamped = build_target(baseline, deviation_signal(cfg))
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    _write_csv(out / "target.csv", ["step", "baseline", "target"],
               [[n + 1, _fmt(b), _fmt(t)] for n, (b, t) in enumerate(zip(baseline, target))])

    problem = MFCProblem(space, kernel, mu0, target)
    s = cfg.solver
    solver_cfg = SolverConfig(iterations=s.iterations, step_schedule=s.step_schedule,
                              step_scale=s.step_scale, init=s.init, init_delta=s.init_delta,
                              seed=s.seed)
    policy, history = solve(s.name, problem, solver_cfg)

    running = history.running_min
    _write_csv(out / "history.csv", ["iter", "objective", "running_min", "wall_ms"],
               [[k, _fmt(f), _fmt(running[k]),
                 f"{history.wall_ms[k]:.3f}" if cfg.record_wall_time else ""]
                for k, f in enumerate(history.objectives)])

    mu = propagate(mu0, policy, kernel)
    objective = eval_cost(mu, target)
    nominal_objective = eval_cost(propagate(mu0, nominal, kernel), target)
    mean_field = consumption_series(mu)[1:]

    trace = simulate_population(cfg.fleet_size, policy, params, drain, mu0,
                                seed=cfg.fleet_seed, steps_per_day=cfg.steps_per_day)
    fleet = trace.mean_consumption[1:]
    switches = count_switches(trace)
    _write_csv(out / "trace.csv",
               ["step", "mean_consumption", "target", "nominal_consumption",
                "mean_field_consumption"],
               [[n + 1, _fmt(fleet[n]), _fmt(target[n]), _fmt(baseline[n]),
                 _fmt(mean_field[n])] for n in range(cfg.horizon)])

    rows = []
    for n in range(cfg.horizon):
        for x in range(space.size):
            mode, temp = space.decode(x)
            rows.append([n + 1, x, mode, temp, _fmt(policy[n, x, 1])])
    _write_csv(out / "policy.csv", ["n", "x_index", "mode", "temp", "p_on"], rows)

    horizon = cfg.horizon
    fleet_mse = float(np.mean((fleet - target) ** 2))
    lines = {
        "solver": s.name,
        "iterations": s.iterations,
        "objective": _fmt(objective),
        "best_iteration": history.best_iteration,
        "tracking_mse": _fmt(objective / horizon),
        "fleet_tracking_mse": _fmt(fleet_mse),
        "nominal_objective": _fmt(nominal_objective),
        "nominal_tracking_mse": _fmt(nominal_objective / horizon),
        "mean_daily_switches": _fmt(switches),
        "fleet_size": cfg.fleet_size,
        "clamped_target_steps": n_clamped,
    }
    with (out / "summary.txt").open("w", encoding="utf-8") as fh:
        for key, value in lines.items():
            fh.write(f"{key}={value}\n")

    if cfg.figures:
        from . import plots

        plots.plot_consumption(out / "consumption.png", target, baseline, fleet, mean_field,
                               cfg.steps_per_hour)
        plots.plot_policy(out / "policy.png", policy[:, :, 1], space, cfg.t_min,
                          cfg.steps_per_hour)
        plots.plot_history(out / "objective.png", history.objectives)

    return ExperimentResult(policy, objective, nominal_objective, mu, fleet, switches, out)


def read_summary(path) -> dict[str, str]:
    with Path(path).open(encoding="utf-8") as fh:
        return dict(line.rstrip("\n").split("=", 1) for line in fh if "=" in line)


def _cmd_run(args) -> int:
    try:
        cfg = load_config(args.config)
    except (OSError, ConfigurationError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        result = run_experiment(cfg, args.output_dir)
    except (TclMfcError, OSError, FloatingPointError) as exc:
        print(f"run failed: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    print(f"objective={result.objective!r} nominal={result.nominal_objective!r} "
          f"switches/day={result.mean_daily_switches:.2f} -> {result.output_dir}")
    return EXIT_OK


def _cmd_validate(args) -> int:
    try:
        raw = read_config_file(args.config)
    except (OSError, ConfigurationError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    _, problems = parse_config(raw, base_dir=Path(args.config).parent)
    for problem in problems:
        print(problem)
    if problems:
        return EXIT_CONFIG
    print("ok")
    return EXIT_OK


def _cmd_synth_drain(args) -> int:
    try:
        profile = synth_drain_profile(args.seed, args.horizon, args.morning_peak,
                                      args.evening_peak, args.steps_per_day)
        save_drain_profile(profile, args.out)
    except (TclMfcError, OSError) as exc:
        print(f"synth-drain failed: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    # usage mistakes count as configuration errors, not runtime failures
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="tclmfc",
                                     description="Mean-field control of water-heater fleets")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one experiment and write its artifacts")
    run.add_argument("config")
    run.add_argument("--output-dir", default=None, help="override output_dir from the config")
    run.set_defaults(func=_cmd_run)

    validate = sub.add_parser("validate", help="list every problem in a config")
    validate.add_argument("config")
    validate.set_defaults(func=_cmd_validate)

    synth = sub.add_parser("synth-drain", help="write a synthetic drain profile CSV")
    synth.add_argument("seed", type=int)
    synth.add_argument("out")
    synth.add_argument("--horizon", type=int, default=144)
    synth.add_argument("--steps-per-day", type=int, default=144)
    synth.add_argument("--morning-peak", type=float, default=0.35)
    synth.add_argument("--evening-peak", type=float, default=0.15)
    synth.set_defaults(func=_cmd_synth_drain)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_CONFIG
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
