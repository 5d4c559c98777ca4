"""Multistep machinery: Adams weights, Milne estimator scale, startup,
and the classical reductions that pin every exponential variant at A = 0."""

from fractions import Fraction

import numpy as np
import pytest

from expstep.multistep import (
    MAX_ORDER,
    MultistepHistory,
    adams_weights,
    exp_ab_step,
    exp_pece_step,
    lawson_ab_step,
    lawson_pece_step,
    milne_factor,
    startup,
)
from expstep.problem import ArrayState, DiagonalProblem

# classical error constants of the order-k Adams pair (k-node AB, k-node AM)
AB_CONST = [Fraction(1, 2), Fraction(5, 12), Fraction(3, 8),
            Fraction(251, 720), Fraction(95, 288), Fraction(19087, 60480)]
AM_CONST = [Fraction(1, 2), Fraction(1, 12), Fraction(1, 24),
            Fraction(19, 720), Fraction(3, 160), Fraction(863, 60480)]


def equispaced(k, h=0.1, t_last=1.0):
    return np.array([t_last - (k - 1 - j) * h for j in range(k)])


def test_ab_weights_equal_classical_tables():
    # weights are per unit step, oldest node first
    cases = {
        2: [Fraction(-1, 2), Fraction(3, 2)],
        3: [Fraction(5, 12), Fraction(-16, 12), Fraction(23, 12)],
        4: [Fraction(-9, 24), Fraction(37, 24), Fraction(-59, 24), Fraction(55, 24)],
    }
    for k, want in cases.items():
        times = equispaced(k)
        got = adams_weights(times, times[-1] + 0.1).weights
        np.testing.assert_allclose(got, [float(w) for w in want], atol=1e-13)


def test_am_weights_equal_classical_tables():
    cases = {
        1: [Fraction(1, 2), Fraction(1, 2)],
        2: [Fraction(-1, 12), Fraction(8, 12), Fraction(5, 12)],
        3: [Fraction(1, 24), Fraction(-5, 24), Fraction(19, 24), Fraction(9, 24)],
    }
    for k, want in cases.items():
        times = equispaced(k)
        got = adams_weights(times, times[-1] + 0.1, include_forward=True).weights
        np.testing.assert_allclose(got, [float(w) for w in want], atol=1e-13)


@pytest.mark.parametrize("include_forward", [False, True])
def test_weights_integrate_polynomials_exactly(include_forward):
    # defining property: h * sum w_j q(t_j) = integral of q over the step for
    # every polynomial q of degree < number of nodes, any node spacing
    rng = np.random.default_rng(12)
    for trial in range(10):
        k = int(rng.integers(1, 7))
        times = np.sort(rng.uniform(-2.0, 1.0, size=k))
        while np.any(np.diff(times) < 1e-3):
            times = np.sort(rng.uniform(-2.0, 1.0, size=k))
        t_next = times[-1] + rng.uniform(0.05, 0.8)
        w = adams_weights(times, t_next, include_forward=include_forward)
        h = t_next - times[-1]
        deg_max = len(w.nodes) - 1
        for p in range(deg_max + 1):
            quad = h * np.sum(w.weights * w.nodes**p)
            exact = (t_next ** (p + 1) - times[-1] ** (p + 1)) / (p + 1)
            assert quad == pytest.approx(exact, abs=1e-11, rel=1e-11)


def test_weight_input_validation():
    with pytest.raises(ValueError):
        adams_weights([0.2, 0.1], 0.3)
    with pytest.raises(ValueError):
        adams_weights([0.0, 0.1], 0.05)
    with pytest.raises(ValueError):
        adams_weights(np.linspace(0, 1, MAX_ORDER + 1), 1.1)


def test_milne_factors_are_classical():
    for k in range(1, 7):
        want = AM_CONST[k - 1] / (AB_CONST[k - 1] + AM_CONST[k - 1])
        assert milne_factor(k) == pytest.approx(float(want), abs=1e-15)
    assert milne_factor(3) == pytest.approx(0.1, abs=1e-15)


def test_history_ring_drops_oldest():
    hist = MultistepHistory(3)
    for j in range(5):
        hist.push(float(j), ArrayState(np.array([complex(j)])))
    assert hist.full
    np.testing.assert_allclose(hist.times, [2.0, 3.0, 4.0])
    assert [v.values[0].real for v in hist.values] == [2.0, 3.0, 4.0]


# ---------------------------------------------------------------------------
# classical reductions (A = 0)
# ---------------------------------------------------------------------------


def make_linear_case(rng, n=4):
    m = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))

    def f(t, y):
        return m @ y + 0.02 * np.sin(t) * y

    return f


def prefill_history(f, k, h, y0):
    # exact-looking history from fine classical RK4 so reduction tests are
    # not polluted by startup error
    def rk4(t, h, y):
        k1 = f(t, y)
        k2 = f(t + h / 2, y + h / 2 * k1)
        k3 = f(t + h / 2, y + h / 2 * k2)
        k4 = f(t + h, y + h * k3)
        return y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)

    hist_vals, states = [], []
    y = y0.copy()
    for j in range(k):
        t = j * h
        hist_vals.append(f(t, y))
        states.append(y.copy())
        if j < k - 1:
            for i in range(100):
                y = rk4(t + i * h / 100, h / 100, y)
    return hist_vals, states[-1]


@pytest.mark.parametrize("k", [2, 3, 4])
@pytest.mark.parametrize("step_fn", [exp_ab_step, lawson_ab_step],
                         ids=["exp-ab", "lawson-ab"])
def test_ab_reduces_to_classical(step_fn, k):
    rng = np.random.default_rng(100 + k)
    f = make_linear_case(rng)
    h = 0.05
    y0 = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    vals, y_last = prefill_history(f, k, h, y0)

    p = DiagonalProblem(np.zeros(4), b=lambda t, u: f(t, u))
    hist = MultistepHistory(k)
    for j, v in enumerate(vals):
        hist.push(j * h, ArrayState(v))
    t_last = (k - 1) * h
    got = step_fn(p, hist, t_last, h, ArrayState(y_last))

    w = adams_weights(np.arange(k) * h, k * h).weights
    want = y_last + h * sum(wj * vj for wj, vj in zip(w, vals))
    assert np.max(np.abs(got.values - want)) <= 1e-12 * max(1.0, np.max(np.abs(want)))


@pytest.mark.parametrize("k", [2, 3, 4])
@pytest.mark.parametrize("step_fn", [exp_pece_step, lawson_pece_step],
                         ids=["exp-pece", "lawson-pece"])
def test_pece_reduces_to_classical(step_fn, k):
    rng = np.random.default_rng(200 + k)
    f = make_linear_case(rng)
    h = 0.05
    y0 = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    vals, y_last = prefill_history(f, k, h, y0)

    p = DiagonalProblem(np.zeros(4), b=lambda t, u: f(t, u))
    hist = MultistepHistory(k)
    for j, v in enumerate(vals):
        hist.push(j * h, ArrayState(v))
    t_last = (k - 1) * h
    res = step_fn(p, hist, t_last, h, ArrayState(y_last))

    w_ab = adams_weights(np.arange(k) * h, k * h).weights
    pred = y_last + h * sum(wj * vj for wj, vj in zip(w_ab, vals))
    f_pred = f(k * h, pred)
    w_am = adams_weights(np.arange(k) * h, k * h, include_forward=True).weights
    corr = y_last + h * sum(wj * vj for wj, vj in zip(w_am, vals + [f_pred]))
    assert np.max(np.abs(res.state.values - corr)) <= 1e-12 * max(1.0, np.max(np.abs(corr)))
    # estimator is the Milne-scaled predictor-corrector gap
    want_est = milne_factor(k) * np.linalg.norm(corr - pred)
    assert res.error_estimate == pytest.approx(want_est, rel=1e-10)
    # returned B value belongs to the corrected state
    np.testing.assert_allclose(res.b_new.values, f(k * h, corr), atol=1e-12)


def test_startup_node_times_and_cost():
    lam = np.array([1.0j, -0.5j, 0.2j])
    p = DiagonalProblem(lam, b=lambda t, u: 0.1 * u * np.abs(u) ** 2)
    u0 = ArrayState(np.array([1.0, 0.5 - 0.5j, 0.25j]))
    k, h = 4, 0.05
    hist, u, t_last = startup(p, 0.0, h, u0, k)
    np.testing.assert_allclose(hist.times, [0.0, h, 2 * h, 3 * h], atol=1e-14)
    assert t_last == pytest.approx(3 * h)
    assert hist.full
    # 1 eval at t0, then per node 50 Krogstad substeps (4 evals each) + 1
    assert p.counter.b_evals == 1 + (k - 1) * (4 * 50 + 1)


def test_startup_accuracy_against_finer_substepping():
    lam = np.array([2.0j, -1.0j])
    p = DiagonalProblem(lam, b=lambda t, u: 0.3 * u * np.abs(u) ** 2)
    u0 = ArrayState(np.array([1.0 + 0j, 0.4 - 0.2j]))
    _, u_coarse, _ = startup(p, 0.0, 0.1, u0, 3)
    _, u_fine, _ = startup(p, 0.0, 0.1, u0, 3, substeps=500)
    assert np.max(np.abs(u_coarse.values - u_fine.values)) <= 1e-10


def test_pece_history_must_be_equidistant():
    p = DiagonalProblem(np.zeros(2), b=lambda t, u: u)
    hist = MultistepHistory(3)
    for t in (0.0, 0.1, 0.25):
        hist.push(t, ArrayState(np.ones(2, dtype=complex)))
    with pytest.raises(ValueError):
        exp_pece_step(p, hist, 0.25, 0.1, ArrayState(np.ones(2, dtype=complex)))
