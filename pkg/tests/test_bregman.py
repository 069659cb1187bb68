import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import path_kl, random_instance, tiny_kernel
from tclmfc.bregman import (gamma_marginal_form, gamma_policy_form, kl, psi, psi_gradient)
from tclmfc.errors import InputError
from tclmfc.mdp import propagate


def test_kl_examples():
    eta = np.array([0.2, 0.3, 0.5])
    assert kl(eta, eta) == 0.0
    assert kl([1.0, 0.0], [0.5, 0.5]) == pytest.approx(math.log(2))
    assert math.isinf(kl([0.5, 0.5], [0.0, 1.0]))


def test_kl_shape_mismatch():
    with pytest.raises(InputError):
        kl([0.5, 0.5], [1.0])


def test_gamma_policy_form_examples():
    mu = np.full((2, 2, 2), 0.25)
    pi = np.full((1, 2, 2), 0.5)
    pi_ref = np.tile([0.25, 0.75], (1, 2, 1))
    assert gamma_policy_form(mu, pi, pi).value == 0.0
    value = gamma_policy_form(mu, pi, pi_ref).value
    assert value == pytest.approx(0.5 * (math.log(2) + math.log(2 / 3)), abs=1e-12)
    assert value == pytest.approx(0.14384, abs=1e-5)


def test_gamma_policy_form_infinite_when_reference_blocks():
    mu = np.full((2, 2, 2), 0.25)
    pi = np.full((1, 2, 2), 0.5)
    blocked = np.tile([0.0, 1.0], (1, 2, 1))
    report = gamma_policy_form(mu, pi, blocked)
    assert report.is_infinite and report.value == math.inf


def test_gamma_marginal_form_identity_and_tiny_oracle():
    rng = np.random.default_rng(2)
    kernel = tiny_kernel()
    mu0 = np.full((2, 2), 0.25)
    mu = propagate(mu0, np.full((2, 2, 2), 0.5), kernel)
    assert gamma_marginal_form(mu, mu).value == 0.0
    for _ in range(20):
        pi = 0.05 + 0.9 * rng.dirichlet([1, 1], size=(2, 2))
        pi_ref = 0.05 + 0.9 * rng.dirichlet([1, 1], size=(2, 2))
        value = gamma_marginal_form(propagate(mu0, pi, kernel),
                                    propagate(mu0, pi_ref, kernel)).value
        assert value == pytest.approx(path_kl(mu0, pi, pi_ref, kernel), abs=1e-10)


def test_psi_examples():
    deterministic = np.zeros((2, 2, 2))
    deterministic[:, 0, 0] = deterministic[:, 1, 1] = 0.5
    assert psi(deterministic) == 0.0
    uniform = np.full((3, 2, 2), 0.25)
    assert psi(uniform) == pytest.approx(-2 * math.log(2))


def test_psi_gradient_finite_differences():
    rng = np.random.default_rng(3)
    mu = rng.dirichlet(np.ones(6), size=3).reshape(3, 3, 2)
    grad = psi_gradient(mu)
    h = 1e-6
    for idx in np.ndindex(mu.shape):
        up, down = mu.copy(), mu.copy()
        up[idx] += h
        down[idx] -= h
        assert (psi(up) - psi(down)) / (2 * h) == pytest.approx(grad[idx], abs=1e-7)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 4), st.integers(2, 3), st.integers(1, 4))
def test_bregman_identity(seed, n_x, n_a, horizon):
    rng = np.random.default_rng(seed)
    mu0, pi, kernel = random_instance(rng, n_x, n_a, horizon)
    _, pi_ref, _ = random_instance(rng, n_x, n_a, horizon)
    mu, mu_ref = propagate(mu0, pi, kernel), propagate(mu0, pi_ref, kernel)
    bregman = psi(mu) - psi(mu_ref) - np.sum(psi_gradient(mu_ref) * (mu - mu_ref))
    assert bregman == pytest.approx(gamma_marginal_form(mu, mu_ref).value, abs=1e-9)
    assert gamma_marginal_form(mu, mu_ref).value >= -1e-12
    monotone = np.sum((psi_gradient(mu) - psi_gradient(mu_ref)) * (mu - mu_ref))
    assert monotone >= -1e-12


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 6))
def test_kl_nonnegative(seed, size):
    rng = np.random.default_rng(seed)
    assert kl(rng.dirichlet(np.ones(size)), rng.dirichlet(np.ones(size))) >= -1e-15
