"""One-step integrators.

The decisive checks are the classical reductions: with A = 0 every
exponential method must reproduce its classical parent to round-off, which
pins all tableau coefficients at once.  A hand-rolled RK4 in this file is
the independent oracle.
"""

import numpy as np
import pytest

from expstep.onestep import (
    STRANG,
    SUZUKI4,
    YOSHIDA4,
    krogstad_step,
    lawson_rk4_step,
    rk4_step,
    splitting_step,
)
from expstep.problem import ArrayState, DiagonalProblem


def classical_rk4(f, t, h, y):
    k1 = f(t, y)
    k2 = f(t + h / 2, y + h / 2 * k1)
    k3 = f(t + h / 2, y + h / 2 * k2)
    k4 = f(t + h, y + h * k3)
    return y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def random_rhs(rng, n=4):
    # mildly nonlinear with explicit time dependence
    m1 = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    m2 = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))

    def f(t, y):
        return m1 @ y + 0.05 * (m2 @ (y * y)) + 0.1j * t * y

    return f


@pytest.mark.parametrize("step_fn", [rk4_step, krogstad_step, lawson_rk4_step])
def test_classical_reduction_with_zero_A(step_fn):
    rng = np.random.default_rng(42)
    for trial in range(5):
        f = random_rhs(rng)
        p = DiagonalProblem(np.zeros(4), b=f)
        y0 = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        got = step_fn(p, 0.3, 0.05, ArrayState(y0.copy()))
        want = classical_rk4(f, 0.3, 0.05, y0)
        assert np.max(np.abs(got.values - want)) <= 1e-12 * np.max(np.abs(want))


@pytest.mark.parametrize(
    "step",
    [
        lambda p, t, h, u: splitting_step(p, STRANG, t, h, u),
        lambda p, t, h, u: splitting_step(p, SUZUKI4, t, h, u),
        lambda p, t, h, u: splitting_step(p, YOSHIDA4, t, h, u),
        krogstad_step,
        lawson_rk4_step,
    ],
    ids=["strang", "suzuki4", "yoshida4", "krogstad", "lawson-rk4"],
)
def test_pure_linear_flow_is_exact(step):
    # with B = 0 a single step is exp(h A) with no order error at all
    lam = np.array([2.3j, -0.7j, 0.1j, -3.0j])
    p = DiagonalProblem(lam)
    u = ArrayState(np.array([1.0, -2.0, 0.5j, 1.0 + 1.0j]))
    out = step(p, 0.0, 0.8, u)
    np.testing.assert_allclose(out.values, np.exp(0.8 * lam) * u.values, atol=1e-13)


@pytest.mark.parametrize(
    "step,count",
    [
        (rk4_step, 4),
        (lambda p, t, h, u: splitting_step(p, STRANG, t, h, u), 4),
        (lambda p, t, h, u: splitting_step(p, SUZUKI4, t, h, u), 20),
        (lambda p, t, h, u: splitting_step(p, YOSHIDA4, t, h, u), 12),
        (krogstad_step, 4),
        (lawson_rk4_step, 4),
    ],
    ids=["rk4", "strang", "suzuki4", "yoshida4", "krogstad", "lawson-rk4"],
)
def test_b_evals_per_step(step, count):
    p = DiagonalProblem(np.array([1j, -1j]), b=lambda t, u: 0.01 * u * u)
    u = ArrayState(np.ones(2, dtype=complex))
    step(p, 0.0, 0.1, u)
    assert p.counter.b_evals == count


def test_composition_stage_sums():
    for scheme in (STRANG, SUZUKI4, YOSHIDA4):
        assert sum(a for a, _ in scheme.stages) == pytest.approx(1.0, abs=1e-13)
        assert sum(b for _, b in scheme.stages) == pytest.approx(1.0, abs=1e-13)
    assert STRANG.order == 2
    assert SUZUKI4.order == 4
    assert YOSHIDA4.order == 4


@pytest.mark.parametrize(
    "step,order",
    [
        (lambda p, t, h, u: splitting_step(p, STRANG, t, h, u), 2),
        (lambda p, t, h, u: splitting_step(p, SUZUKI4, t, h, u), 4),
        (lambda p, t, h, u: splitting_step(p, YOSHIDA4, t, h, u), 4),
        (krogstad_step, 4),
        (lawson_rk4_step, 4),
    ],
    ids=["strang", "suzuki4", "yoshida4", "krogstad", "lawson-rk4"],
)
def test_local_order_on_noncommuting_problem(step, order):
    # B must not commute with A or the splitting error degenerates; the
    # reference is classical RK4 with 200 substeps, far below the h^3..h^5
    # local errors probed here
    lam = np.array([1.0j, -2.0j, 0.4j])
    rng = np.random.default_rng(5)
    m = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    p = DiagonalProblem(lam, b=lambda t, u: 0.2 * (m @ (u * np.abs(u) ** 2)))
    u0 = ArrayState(rng.standard_normal(3) + 1j * rng.standard_normal(3))

    def err(h):
        got = step(p, 0.0, h, u0)
        ref = u0
        for i in range(200):
            ref = rk4_step(p, i * h / 200, h / 200, ref)
        return np.max(np.abs(got.values - ref.values))

    e1, e2 = err(0.1), err(0.05)
    observed = np.log2(e1 / e2)
    # local error order = global order + 1
    assert observed == pytest.approx(order + 1, abs=0.35)
