"""Stepsize controller: landing, accept/reject bookkeeping, tolerance
response, and failure behavior."""

import numpy as np
import pytest

from expstep.adaptive import (
    ControllerConfig,
    ToleranceUnattainable,
    integrate,
)
from expstep.harness import state_distance
from expstep.nls import nls_problem
from expstep.problem import ArrayState, DiagonalProblem


def small_problem():
    lam = np.array([1.0j, -2.0j, 0.5j])
    return DiagonalProblem(lam, b=lambda t, u: 0.2j * u * np.abs(u) ** 2)


def small_initial():
    return ArrayState(np.array([1.0, 0.5 - 0.5j, 0.3j]))


def test_fixed_step_lands_exactly():
    p = small_problem()
    u, rep = integrate(p, "lawson-pece:3", 0.0, 2.0, small_initial(), steps=40)
    assert rep.t_final == pytest.approx(2.0, rel=1e-14)
    assert rep.accepted_steps == 40
    assert rep.rejected_steps == 0


def test_fixed_step_onestep_method():
    p = small_problem()
    u, rep = integrate(p, "suzuki4", 0.0, 1.0, small_initial(), steps=10)
    assert rep.t_final == pytest.approx(1.0, rel=1e-14)
    assert rep.b_evals == 200


def test_adaptive_lands_on_t_end():
    p = small_problem()
    u, rep = integrate(p, "lawson-pece:3", 0.0, 1.7, small_initial(),
                       controller=ControllerConfig(tol=1e-7))
    assert rep.t_final == pytest.approx(1.7, rel=1e-12)
    assert not rep.blown_up


def test_adaptive_requires_pece():
    p = small_problem()
    with pytest.raises(ValueError):
        integrate(p, "strang", 0.0, 1.0, small_initial(),
                  controller=ControllerConfig(tol=1e-5))


def test_accepted_steps_meet_tolerance():
    p = small_problem()
    tol = 1e-6
    u, rep = integrate(p, "lawson-pece:3", 0.0, 3.0, small_initial(),
                       controller=ControllerConfig(tol=tol))
    checked = 0
    for rec in rep.records:
        if rec.accepted and np.isfinite(rec.err_est):
            assert rec.err_est <= tol * (1.0 + 1e-12)
            checked += 1
    assert checked > 3


def test_growth_is_clamped_when_estimate_vanishes():
    # with B = 0 the estimator is identically zero, so the controller grows
    # the step by its maximum factor each time until h_max wins
    p = DiagonalProblem(np.array([1.0j, -1.0j]))
    cfg = ControllerConfig(tol=1e-8, h0=1e-3, h_max=0.25, fac_max=5.0)
    u, rep = integrate(p, "lawson-pece:2", 0.0, 5.0,
                       ArrayState(np.ones(2, dtype=complex)), controller=cfg)
    hs = [r.h for r in rep.accepted_records()[1:]]
    assert max(hs) <= 0.25 + 1e-12
    ratios = [hs[i + 1] / hs[i] for i in range(len(hs) - 1) if hs[i] < 0.25 - 1e-9]
    assert all(r <= 5.0 + 1e-9 for r in ratios)


def test_tolerance_ladder_is_monotone():
    # halving tol never increases the final-time error against the soliton
    prob_tols = [1e-3, 1e-4, 1e-5, 1e-6]
    errors = []
    for tol in prob_tols:
        p = nls_problem(t_max=1.0)
        u, rep = integrate(p, "lawson-pece:4", 0.0, 1.0, p.initial_state(0.0),
                           controller=ControllerConfig(tol=tol))
        errors.append(state_distance(u, p.exact_state(1.0)))
    for coarse, fine in zip(errors, errors[1:]):
        assert fine <= coarse * (1.0 + 1e-9)


def test_adaptive_error_tracks_tolerance():
    for tol in (1e-4, 1e-6):
        p = nls_problem(t_max=1.0)
        u, rep = integrate(p, "lawson-pece:4", 0.0, 1.0, p.initial_state(0.0),
                           controller=ControllerConfig(tol=tol))
        err = state_distance(u, p.exact_state(1.0))
        assert err <= 10.0 * tol


def test_rejections_are_recorded():
    # start with an absurdly large h0 so the first attempts must be rejected
    p = small_problem()
    cfg = ControllerConfig(tol=1e-10, h0=0.5)
    u, rep = integrate(p, "lawson-pece:3", 0.0, 1.0, small_initial(), controller=cfg)
    assert rep.rejected_steps >= 1
    assert rep.t_final == pytest.approx(1.0, rel=1e-12)


def test_unattainable_tolerance_raises():
    p = small_problem()
    cfg = ControllerConfig(tol=1e-14, h_min=0.05, h0=0.1)
    with pytest.raises(ToleranceUnattainable):
        integrate(p, "lawson-pece:3", 0.0, 1.0, small_initial(), controller=cfg)


def test_exactly_one_mode_must_be_chosen():
    p = small_problem()
    with pytest.raises(ValueError):
        integrate(p, "lawson-pece:3", 0.0, 1.0, small_initial())
    with pytest.raises(ValueError):
        integrate(p, "lawson-pece:3", 0.0, 1.0, small_initial(),
                  steps=10, controller=ControllerConfig(tol=1e-5))
