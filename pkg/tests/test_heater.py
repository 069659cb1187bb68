import math
from collections import defaultdict

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tclmfc.errors import InputError
from tclmfc.heater import (DrainProfile, HeaterParams, PhysicalSpec, build_kernel,
                           derive_coefficients, export_kernel_csv, kernel_row_report,
                           load_drain_profile, next_operating_state,
                           nominal_initial_distribution, nominal_policy,
                           reference_params, rounding_distribution, save_drain_profile,
                           synth_drain_profile, temperature_step)
from tclmfc.mdp import propagate
from tclmfc.objective import consumption_series
from tclmfc.popsim import simulate_population

SIMPLE = HeaterParams(dt=1.0, loss_coef=0.1, joule_coef=1.0, p_max=5.0, drain_coef=0.005)


def test_coefficients_for_published_tank():
    loss, joule, drain = derive_coefficients(PhysicalSpec())
    assert joule == pytest.approx(1.1947e-6, rel=1e-4)
    assert joule == pytest.approx(1 / (0.2 * 1000 * 4185), rel=1e-15)
    assert drain == pytest.approx(0.005, rel=1e-15)
    # hand evaluation of the loss formula, step by step
    coef_loss = (0.033 / 0.00875) * 2 * 3.14 * (0.2 * 3.14 / 1.37) ** 0.5
    assert loss == pytest.approx(coef_loss * 3600 / (4185 * 1000 * 0.2 / 1.37), rel=1e-12)
    assert loss == pytest.approx(0.09449, rel=1e-4)


def test_physical_spec_rejects_nonpositive():
    with pytest.raises(InputError):
        PhysicalSpec(volume=0.0)


def test_params_invariants():
    with pytest.raises(InputError):
        HeaterParams(t_min=70, loss_coef=0.1, joule_coef=1.0, p_max=1.0)
    with pytest.raises(InputError):
        HeaterParams(dt=0.0, loss_coef=0.1, joule_coef=1.0, p_max=1.0)
    with pytest.raises(InputError):
        HeaterParams(loss_coef=0.1, joule_coef=0.0, p_max=1.0)


def test_temperature_step_examples():
    assert temperature_step(55, 1, 0, 0.0, SIMPLE) == pytest.approx(57.0)
    assert temperature_step(55, 0, 0, 0.0, SIMPLE) == pytest.approx(52.0)
    assert temperature_step(25, 0, 0, 0.0, SIMPLE) == 25.0
    assert temperature_step(64, 1, 0, 0.0, SIMPLE) == 65.0
    assert temperature_step(64, 1, 0, 0.0, SIMPLE, clamp=False) == pytest.approx(65.1)


def test_heating_is_monotone_on_whole_grid():
    params = reference_params()
    temps = params.space.temps.astype(float)
    assert np.all(temperature_step(temps, 1, 0, 0.0, params, clamp=False) > temps)


def test_rounding_examples():
    (low, p_low), (high, p_high) = rounding_distribution(56.3)
    assert (low, high) == (56, 57)
    assert p_low == pytest.approx(0.7) and p_high == pytest.approx(0.3)
    assert rounding_distribution(57.0) == [(57, 1.0)]


@settings(max_examples=1000, deadline=None)
@given(st.floats(25.0, 65.0))
def test_rounding_is_unbiased(theta):
    assert sum(t * w for t, w in rounding_distribution(theta)) == pytest.approx(theta, abs=1e-12)


def test_operating_state_map():
    params = reference_params()
    assert next_operating_state(0, 49, params) == 1
    assert next_operating_state(1, 55, params) == 1
    assert next_operating_state(0, 55, params) == 0
    assert next_operating_state(1, 66, params) == 0
    assert next_operating_state(1, 65, params) == 1
    assert next_operating_state(0, 50, params) == 0


def test_kernel_point_mass_without_drain_or_rounding():
    params = HeaterParams(dt=1.0, loss_coef=0.0, joule_coef=1.0, p_max=5.0, drain_coef=0.005)
    kernel = build_kernel(params, DrainProfile.zero(1))
    space = params.space
    row = kernel[0, space.encode(1, 55), 1]
    assert np.count_nonzero(row) == 1 and row[space.encode(1, 60)] == 1.0


def test_kernel_row_is_hand_convolution():
    params = HeaterParams(dt=1.0, loss_coef=0.1, joule_coef=1.0, p_max=5.3, drain_coef=0.005)
    space = params.space
    kernel = build_kernel(params, DrainProfile(np.array([0.5]), np.array([100.0])))
    # no drain: 55 - 3 + 5.3 = 57.3; drain: 57.3 - 0.005 * 37 * 100 = 38.8 (below band)
    expected = {
        1: {(1, 57): 0.5 * 0.7, (1, 58): 0.5 * 0.3, (1, 38): 0.5 * 0.2, (1, 39): 0.5 * 0.8},
        0: {(0, 57): 0.5 * 0.7, (0, 58): 0.5 * 0.3, (1, 38): 0.5 * 0.2, (1, 39): 0.5 * 0.8},
    }
    for action, cells in expected.items():
        row = kernel[0, space.encode(1, 55), action]
        assert np.count_nonzero(row) == 4
        for (mode, temp), weight in cells.items():
            assert row[space.encode(mode, temp)] == pytest.approx(weight, abs=1e-12)


def test_full_scale_kernel_support():
    params = reference_params()
    kernel = build_kernel(params, synth_drain_profile(3))
    report = kernel_row_report(kernel)
    assert report["max_row_sum_error"] <= 1e-12 and report["min_entry"] >= 0
    assert report["max_successors"] <= 4
    hot_on = params.space.encode(1, params.t_max)
    # ON at the ceiling is reachable only when the heater was told to heat
    assert not kernel[:, :, 0, hot_on].any()


def test_kernel_csv_export(tmp_path):
    kernel = build_kernel(reference_params(), synth_drain_profile(0, horizon=2, steps_per_day=2))
    path = tmp_path / "kernel.csv"
    export_kernel_csv(kernel, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "n,x_index,a,x_next_index,prob"
    assert len(lines) - 1 == np.count_nonzero(kernel)


def test_nominal_policy_examples():
    space = reference_params().space
    policy = nominal_policy(space, 3)
    assert policy[0, space.encode(1, 55), 1] == 1.0
    assert policy[2, space.encode(0, 60), 0] == 1.0


def _direct_chain(params, start, steps):
    """Distribution of (mode, temp) under the nominal rule, without drain."""
    dist = {start: 1.0}
    on = [1.0]
    for _ in range(steps):
        nxt = defaultdict(float)
        for (mode, temp), p in dist.items():
            theta = temp + params.dt * (-params.loss_coef * (temp - params.t_amb)
                                        + params.joule_coef * mode * params.p_max)
            low = math.floor(theta)
            for t, w in ((low, 1 - (theta - low)), (low + 1, theta - low)):
                if w == 0:
                    continue
                m = 1 if t < params.t_min else 0 if t > params.t_max else mode
                nxt[(m, min(max(t, params.t_amb), params.t_max))] += p * w
        dist = nxt
        on.append(sum(p for (m, _), p in dist.items() if m == 1))
    return np.array(on), dist


def test_nominal_propagation_matches_direct_chain():
    params = reference_params()
    space = params.space
    steps = 60
    mu0 = np.zeros((space.size, 2))
    mu0[space.encode(1, 50), 1] = 1.0
    kernel = build_kernel(params, DrainProfile.zero(steps))
    series = consumption_series(propagate(mu0, nominal_policy(space, steps), kernel))
    chain, _ = _direct_chain(params, (1, 50), steps)
    np.testing.assert_allclose(series, chain, atol=1e-12)
    # all ON while heating from 50 C, then mass starts reaching the ceiling
    first_off = int(np.argmax(series < 1.0))
    assert first_off >= 10
    assert series[first_off:first_off + 8].min() < 0.01


def test_deadband_cycling_in_fleet():
    params = reference_params()
    space = params.space
    drain = DrainProfile.zero(288)
    init = np.zeros(space.size)
    init[space.encode(1, 55)] = 0.5
    init[space.encode(0, 55)] = 0.5
    trace = simulate_population(200, nominal_policy(space, 288), params, drain, init, seed=4,
                                steps_per_day=144)
    change = np.diff(trace.modes.astype(int), axis=1)
    landed = trace.temps[:, 1:]
    assert np.all(landed[change == -1] == params.t_max)
    assert np.all(landed[change == 1] < params.t_min)
    assert (change == -1).any() and (change == 1).any()


def test_nominal_initial_distribution():
    params = reference_params()
    space = params.space
    drain = synth_drain_profile(1)
    mu0 = nominal_initial_distribution(params, drain)
    assert mu0.sum() == pytest.approx(1.0, abs=1e-12) and mu0.min() >= 0
    # all mass sits on the action equal to the current mode
    assert mu0[np.arange(space.size), 1 - space.modes()].max() == 0.0
    cold = nominal_initial_distribution(params, drain, warmup_steps=0).sum(axis=1)
    temps = space.temperatures()
    assert np.all(cold[(temps < params.t_min)] == 0.0)
    np.testing.assert_allclose(cold[cold > 0], 1 / (2 * (params.t_max - params.t_min + 1)))


# -- drain profiles -------------------------------------------------------------

def test_load_drain_row(tmp_path):
    path = tmp_path / "d.csv"
    path.write_text("step,q,d_liters\n0,0.05,12.5\n1,0.5,0\n")
    profile = load_drain_profile(path)
    assert profile.q[0] == 0.05 and profile.liters[0] == 12.5 and len(profile) == 2
    path.write_text("0,0.05,12.5\n")
    assert load_drain_profile(path).liters[0] == 12.5


@pytest.mark.parametrize("body, message", [
    ("", "no data rows"),
    ("step,q,d_liters\n", "no data rows"),
    ("0,1.5,3\n", "row 0"),
    ("0,0.1,3\n1,0.1,-2\n", "row 1"),
    ("0,0.1\n", "row 0"),
    ("0,abc,3\n", "row 0"),
    ("1,0.1,3\n", "out of sequence"),
])
def test_load_drain_errors(tmp_path, body, message):
    path = tmp_path / "d.csv"
    path.write_text(body)
    with pytest.raises(InputError, match=message):
        load_drain_profile(path)


def test_drain_round_trip(tmp_path):
    profile = synth_drain_profile(5)
    save_drain_profile(profile, tmp_path / "d.csv")
    again = load_drain_profile(tmp_path / "d.csv")
    np.testing.assert_array_equal(again.q, profile.q)
    np.testing.assert_array_equal(again.liters, profile.liters)


@pytest.mark.parametrize("seed", range(10))
def test_synthetic_profile_peaks_in_the_morning(seed):
    profile = synth_drain_profile(seed)
    volume = profile.q * profile.liters
    assert volume.sum() > 0 and np.all((profile.q >= 0) & (profile.q <= 1))
    hourly = np.convolve(volume, np.ones(6), mode="valid")
    assert 36 <= int(np.argmax(hourly)) + 3 <= 48


def test_drain_profile_validation():
    with pytest.raises(InputError):
        DrainProfile(np.array([0.1, 0.2]), np.array([1.0]))
    with pytest.raises(InputError):
        DrainProfile(np.array([1.2]), np.array([1.0]))
    with pytest.raises(InputError):
        DrainProfile(np.array([0.2]), np.array([-1.0]))
