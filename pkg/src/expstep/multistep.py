"""Multistep exponential integrators: exponential Adams and Lawson-Adams,
each plain (PE) or as a predictor-corrector pair (PECE) with a Milne-style
error estimate.

Both families discretize the variation-of-constants formula

    u(t_n + h) = exp(hA) u_n + int_0^h exp((h - tau) A) B(t_n + tau) dtau.

Exponential Adams interpolates B through the history nodes and integrates the
polynomial against the exponential kernel exactly, giving weights that are
linear combinations of phi_1 .. phi_k(hA); the construction assumes an
equidistant history and is restricted to constant steps.  Lawson-Adams applies
the classical Adams weights in the rotating frame v = exp(-tA) u, which
re-phases the stored physical-space B values by exp((t_next - t_i) A); the
classical weights come from exact integration of the interpolation polynomial
and remain valid for arbitrary step sequences, so this family supports
adaptive stepping.

Cost per step: 1 B evaluation for the plain variants (pushing the new history
entry), exactly 2 for PECE.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .onestep import krogstad_step
from .problem import SemilinearProblem

__all__ = [
    "MAX_ORDER",
    "AdamsWeights",
    "adams_weights",
    "milne_factor",
    "MultistepHistory",
    "PeceResult",
    "exp_ab_step",
    "exp_pece_step",
    "lawson_ab_step",
    "lawson_pece_step",
    "startup",
]

MAX_ORDER = 8
STARTUP_SUBSTEPS = 50

# Local truncation error constants of the classical k-step Adams-Bashforth
# and the order-k Adams-Moulton methods (coefficient of h^(k+1) y^(k+1)).
_AB_CONST = {
    1: Fraction(1, 2),
    2: Fraction(5, 12),
    3: Fraction(3, 8),
    4: Fraction(251, 720),
    5: Fraction(95, 288),
    6: Fraction(19087, 60480),
    7: Fraction(5257, 17280),
    8: Fraction(1070017, 3628800),
}
_AM_CONST = {
    1: Fraction(-1, 2),
    2: Fraction(-1, 12),
    3: Fraction(-1, 24),
    4: Fraction(-19, 720),
    5: Fraction(-3, 160),
    6: Fraction(-863, 60480),
    7: Fraction(-275, 24192),
    8: Fraction(-33953, 3628800),
}


def milne_factor(k: int) -> float:
    """|C_AM| / (|C_AB| + |C_AM|) for the order-k Adams pair.

    Scales the predictor-corrector difference into a local error estimate the
    way the classical Milne device does; k = 3 gives exactly 1/10.
    """
    if not 1 <= k <= MAX_ORDER:
        raise ValueError(f"history length must be in 1..{MAX_ORDER}, got {k}")
    c_ab, c_am = abs(_AB_CONST[k]), abs(_AM_CONST[k])
    return float(c_am / (c_ab + c_am))


def _lagrange_coefficients(nodes: np.ndarray) -> np.ndarray:
    """C[i, p] = coefficient of s^p in the Lagrange basis polynomial ell_i."""
    n = len(nodes)
    coeffs = np.zeros((n, n))
    for i in range(n):
        num = np.array([1.0])
        denom = 1.0
        for j in range(n):
            if j == i:
                continue
            num = np.convolve(num, np.array([-nodes[j], 1.0]))
            denom *= nodes[i] - nodes[j]
        coeffs[i, : len(num)] = num / denom
    return coeffs


@dataclass(frozen=True)
class AdamsWeights:
    """Quadrature weights for int_{t_n}^{t_next} of the interpolant of f.

    weights[i] multiplies f(times[i]) so that the integral equals
    (t_next - t_n) * sum_i weights[i] f_i exactly for polynomials through the
    nodes.  With include_forward the last node is t_next itself (implicit
    Adams-Moulton pattern).  milne_factor belongs to the history length k.
    """

    nodes: np.ndarray
    weights: np.ndarray
    includes_forward: bool
    milne_factor: float


def adams_weights(times, t_next: float, include_forward: bool = False) -> AdamsWeights:
    """Classical (variable-step) Adams weights by exact polynomial integration.

    times must be strictly increasing with times[-1] = t_n < t_next.  Nodes
    are rescaled to s = (t - t_n)/(t_next - t_n) before building the Lagrange
    basis, so conditioning stays harmless for the supported k <= 8.
    """
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or len(times) < 1:
        raise ValueError("times must be a non-empty vector")
    if np.any(np.diff(times) <= 0):
        raise ValueError("history times must be strictly increasing")
    k = len(times)
    if k > MAX_ORDER:
        raise ValueError(f"history length {k} exceeds supported maximum {MAX_ORDER}")
    h = t_next - times[-1]
    if h <= 0:
        raise ValueError("t_next must lie beyond the newest history node")
    scaled = (times - times[-1]) / h
    if include_forward:
        scaled = np.append(scaled, 1.0)
    coeffs = _lagrange_coefficients(scaled)
    # integral of s^p over [0, 1] is 1/(p+1)
    weights = coeffs @ (1.0 / np.arange(1, len(scaled) + 1))
    return AdamsWeights(
        nodes=np.append(times, t_next) if include_forward else times.copy(),
        weights=weights,
        includes_forward=include_forward,
        milne_factor=milne_factor(k),
    )


class MultistepHistory:
    """Ring of the k most recent (time, B value) pairs, newest last."""

    def __init__(self, order: int):
        if not 1 <= order <= MAX_ORDER:
            raise ValueError(f"order must be in 1..{MAX_ORDER}, got {order}")
        self.order = order
        self._entries: deque = deque(maxlen=order)

    def push(self, t: float, b_value) -> None:
        if self._entries and t <= self._entries[-1][0]:
            raise ValueError("history times must increase strictly")
        self._entries.append((t, b_value))

    @property
    def full(self) -> bool:
        return len(self._entries) == self.order

    def __len__(self) -> int:
        return len(self._entries)

    @property
    def times(self) -> np.ndarray:
        return np.array([t for t, _ in self._entries])

    @property
    def values(self) -> list:
        return [b for _, b in self._entries]


def _require_ready(history: MultistepHistory, t: float) -> None:
    if not history.full:
        raise ValueError(f"history holds {len(history)} entries, needs {history.order}")
    if abs(history.times[-1] - t) > 1e-9 * max(1.0, abs(t)):
        raise ValueError("newest history entry must sit at the current time")


def _require_equidistant(times: np.ndarray, h: float) -> None:
    gaps = np.diff(np.append(times, times[-1] + h))
    if np.any(np.abs(gaps - h) > 1e-12 * max(abs(h), 1.0)):
        raise ValueError("exponential Adams requires an equidistant history")


def _exp_adams_combine(problem, h: float, u, scaled_nodes: np.ndarray, b_values: list):
    """exp(hA) u + h * sum_i Omega_i(hA) B_i with the phi-expanded weights.

    Writing the interpolant of B in monomials of s = tau/h, each moment
    integrates to int_0^h exp((h-tau)A) (tau/h)^p dtau = h p! phi_{p+1}(hA),
    so Omega_i = sum_p C[i,p] p! phi_{p+1}.
    """
    coeffs = _lagrange_coefficients(scaled_nodes)
    out = problem.apply_expA(h, u)
    for p in range(len(scaled_nodes)):
        moment = None
        for i, b in enumerate(b_values):
            if coeffs[i, p] == 0.0:
                continue
            term = coeffs[i, p] * b
            moment = term if moment is None else moment + term
        if moment is None:
            continue
        out = out + (h * math.factorial(p)) * problem.phi_applyA(p + 1, h, moment)
    return out


def exp_ab_step(problem: SemilinearProblem, history: MultistepHistory, t: float, h: float, u):
    """Exponential Adams-Bashforth step of order k = history.order."""
    _require_ready(history, t)
    times = history.times
    _require_equidistant(times, h)
    scaled = (times - t) / h
    return _exp_adams_combine(problem, h, u, scaled, history.values)


@dataclass
class PeceResult:
    """Corrected state, Milne error estimate, and the B evaluation at the
    corrected state (ready to be pushed into the history on acceptance)."""

    state: object
    error_estimate: float
    b_new: object


def exp_pece_step(problem: SemilinearProblem, history: MultistepHistory, t: float, h: float, u) -> PeceResult:
    """Predict with exponential Adams-Bashforth, correct with the exponential
    Adams-Moulton that adds the forward node; 2 B evaluations."""
    _require_ready(history, t)
    times = history.times
    _require_equidistant(times, h)
    scaled = (times - t) / h
    predicted = _exp_adams_combine(problem, h, u, scaled, history.values)

    b_pred = problem.eval_B(t + h, predicted)
    scaled_c = np.append(scaled, 1.0)
    corrected = _exp_adams_combine(problem, h, u, scaled_c, history.values + [b_pred])

    est = milne_factor(history.order) * (corrected - predicted).norm()
    b_corr = problem.eval_B(t + h, corrected)
    return PeceResult(corrected, est, b_corr)


def _lawson_history_terms(problem, history: MultistepHistory, t_next: float):
    """exp((t_next - t_i) A) B_i for each history entry, oldest first."""
    times = history.times
    return [
        problem.apply_expA(t_next - t_i, b_i)
        for t_i, b_i in zip(times, history.values)
    ]


def _weighted_sum(weights, states):
    acc = weights[0] * states[0]
    for w, s in zip(weights[1:], states[1:]):
        acc = acc + w * s
    return acc


def lawson_ab_step(problem: SemilinearProblem, history: MultistepHistory, t: float, h: float, u):
    """Lawson-Adams-Bashforth step; valid for variable step sequences."""
    _require_ready(history, t)
    w = adams_weights(history.times, t + h).weights
    terms = _lawson_history_terms(problem, history, t + h)
    return problem.apply_expA(h, u) + h * _weighted_sum(w, terms)


def lawson_pece_step(problem: SemilinearProblem, history: MultistepHistory, t: float, h: float, u) -> PeceResult:
    """Lawson-Adams predictor-corrector with Milne estimate; 2 B evaluations.

    The corrector adds the forward node t + h, whose exponential re-phasing
    factor is the identity, so B at the predicted state enters unrotated.
    """
    _require_ready(history, t)
    t_next = t + h
    times = history.times
    terms = _lawson_history_terms(problem, history, t_next)
    e_u = problem.apply_expA(h, u)

    w_pred = adams_weights(times, t_next).weights
    predicted = e_u + h * _weighted_sum(w_pred, terms)

    b_pred = problem.eval_B(t_next, predicted)
    w_corr = adams_weights(times, t_next, include_forward=True).weights
    corrected = e_u + h * (_weighted_sum(w_corr[:-1], terms) + w_corr[-1] * b_pred)

    est = milne_factor(history.order) * (corrected - predicted).norm()
    b_corr = problem.eval_B(t_next, corrected)
    return PeceResult(corrected, est, b_corr)


def startup(problem: SemilinearProblem, t0: float, h: float, u0, k: int,
            substeps: int = STARTUP_SUBSTEPS):
    """Build a k-entry history by Krogstad sub-stepping at stepsize h/substeps.

    Advances the solution through the k-1 macro nodes t0 + j h and records B
    at every node, including t0.  Returns (history, state, time) at the last
    node; k = 1 needs no sub-stepping at all.
    """
    if not 1 <= k <= MAX_ORDER:
        raise ValueError(f"order must be in 1..{MAX_ORDER}, got {k}")
    history = MultistepHistory(k)
    u = u0
    history.push(t0, problem.eval_B(t0, u0))
    sub_h = h / substeps
    for j in range(1, k):
        node_start = t0 + (j - 1) * h
        for i in range(substeps):
            u = krogstad_step(problem, node_start + i * sub_h, sub_h, u)
        t_node = t0 + j * h
        history.push(t_node, problem.eval_B(t_node, u))
    return history, u, t0 + (k - 1) * h
