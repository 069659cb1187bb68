import numpy as np
import pytest

from oracles import benchmark
from tclmfc.errors import InputError
from tclmfc.heater import DrainProfile, HeaterParams, build_kernel, nominal_policy
from tclmfc.mdp import propagate
from tclmfc.objective import consumption_series
from tclmfc.popsim import FleetTrace, count_switches, simulate_population

# no losses and integer heating steps: every trajectory is deterministic
IDEAL = HeaterParams(dt=1.0, loss_coef=0.0, joule_coef=1.0, p_max=5.0, drain_coef=0.005)


def _start_at(params, mode, temp, action):
    joint = np.zeros((params.space.size, 2))
    joint[params.space.encode(mode, temp), action] = 1.0
    return joint


def test_single_heater_follows_deterministic_chain():
    space = IDEAL.space
    steps = 8
    trace = simulate_population(1, nominal_policy(space, steps), IDEAL, DrainProfile.zero(steps),
                                _start_at(IDEAL, 1, 50, 1), seed=9, steps_per_day=steps)
    np.testing.assert_array_equal(trace.temps[0], [50, 55, 60, 65, 65, 65, 65, 65, 65])
    np.testing.assert_array_equal(trace.modes[0], [1, 1, 1, 1, 0, 0, 0, 0, 0])


def test_always_on_fleet_matches_mean_field_exactly():
    space = IDEAL.space
    steps = 10
    always_on = np.zeros((steps, space.size, 2))
    always_on[..., 1] = 1.0
    init = _start_at(IDEAL, 1, 50, 1)
    drain = DrainProfile.zero(steps)
    trace = simulate_population(50, always_on, IDEAL, drain, init, seed=1, steps_per_day=steps)
    mean_field = consumption_series(propagate(init, always_on, build_kernel(IDEAL, drain)))
    np.testing.assert_array_equal(trace.mean_consumption, mean_field)
    # 50 -> 55 -> 60 -> 65, then the overshoot forces OFF, then ON again at the ceiling
    np.testing.assert_array_equal(trace.mean_consumption[:6], [1, 1, 1, 1, 0, 1])


def test_seed_determinism_and_independence_from_fleet_size():
    params, drain, problem, nominal = benchmark()
    a = simulate_population(60, nominal, params, drain, problem.mu0, seed=5)
    b = simulate_population(60, nominal, params, drain, problem.mu0, seed=5)
    c = simulate_population(60, nominal, params, drain, problem.mu0, seed=6)
    bigger = simulate_population(120, nominal, params, drain, problem.mu0, seed=5)
    np.testing.assert_array_equal(a.modes, b.modes)
    np.testing.assert_array_equal(a.temps, b.temps)
    assert not np.array_equal(a.temps, c.temps)
    np.testing.assert_array_equal(bigger.temps[:60], a.temps)


def test_state_distribution_init_uses_nominal_action():
    params, drain, problem, nominal = benchmark()
    rho = problem.mu0.sum(axis=1)
    a = simulate_population(40, nominal, params, drain, rho, seed=2)
    b = simulate_population(40, nominal, params, drain, problem.mu0, seed=2)
    np.testing.assert_array_equal(a.modes, b.modes)


def test_count_switches_examples():
    constant = FleetTrace(np.ones((3, 145), dtype=np.int8), np.full((3, 145), 60), 144)
    assert count_switches(constant) == 0.0
    alternating = np.zeros((1, 145), dtype=np.int8)
    alternating[0, 1::2] = 1
    assert count_switches(FleetTrace(alternating, np.full((1, 145), 60), 144)) == 143.0
    two_days = np.zeros((1, 289), dtype=np.int8)
    two_days[0, 100:] = 1
    assert count_switches(FleetTrace(two_days, np.full((1, 289), 60), 144)) == 0.5


def test_nominal_switches_are_low():
    params, drain, problem, nominal = benchmark()
    trace = simulate_population(2000, nominal, params, drain, problem.mu0, seed=0)
    assert count_switches(trace) <= 8


def test_input_validation():
    params, drain, problem, nominal = benchmark()
    with pytest.raises(InputError):
        simulate_population(0, nominal, params, drain, problem.mu0)
    with pytest.raises(InputError):
        simulate_population(5, nominal[:10], params, drain, problem.mu0)
    with pytest.raises(InputError):
        simulate_population(5, nominal, params, drain, problem.mu0 * 2)
