"""One-step integrators: classical RK4, splitting compositions, Krogstad's
exponential Runge-Kutta scheme, and the Lawson (integrating factor) RK4.

All steppers share the signature step(problem, t, h, u) -> u_new and advance
the full system u' = A u + B(t, u) by one step h.  Per-step B-eval costs:
rk4 4, strang 4, suzuki4 20, yoshida4 12, krogstad 4, lawson_rk4 4.
"""

from __future__ import annotations

from dataclasses import dataclass

from .problem import SemilinearProblem, b_flow_rk4

__all__ = [
    "rk4_step",
    "CompositionScheme",
    "STRANG",
    "SUZUKI4",
    "YOSHIDA4",
    "splitting_step",
    "krogstad_step",
    "lawson_rk4_step",
]


def rk4_step(problem: SemilinearProblem, t: float, h: float, u):
    """Classical RK4 on the full right-hand side A u + B(t, u).

    A u is applied densely (spectral differentiation, not the exponential), so
    this scheme sees the full stiffness of A and serves as the stability foil
    for the exponential methods.
    """

    def rhs(s, v):
        return problem.apply_A(v) + problem.eval_B(s, v)

    k1 = rhs(t, u)
    k2 = rhs(t + 0.5 * h, u + (0.5 * h) * k1)
    k3 = rhs(t + 0.5 * h, u + (0.5 * h) * k2)
    k4 = rhs(t + h, u + h * k3)
    return u + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


@dataclass(frozen=True)
class CompositionScheme:
    """Splitting coefficients for E_B(b_s h) .. E_A(a_1 h) applied left of u.

    stages is the sequence (a_j, b_j); both coefficient sums must equal 1.
    The physical clock is advanced by the A-stages, and each B-stage is solved
    at the then-current frozen time, which is the standard reduction of the
    non-autonomous problem to an autonomous one with t as an extra coordinate
    carried by the A-flow.
    """

    name: str
    stages: tuple
    order: int

    def __post_init__(self):
        sa = sum(a for a, _ in self.stages)
        sb = sum(b for _, b in self.stages)
        if abs(sa - 1.0) > 1e-13 or abs(sb - 1.0) > 1e-13:
            raise ValueError(f"stage sums must be 1, got sum(a)={sa!r} sum(b)={sb!r}")

    @property
    def b_stage_count(self) -> int:
        return sum(1 for _, b in self.stages if b != 0.0)


def _strang_composition(name: str, substep_weights, order: int) -> CompositionScheme:
    """Merge adjacent A-half-steps of consecutive Strang substeps gamma_i."""
    g = list(substep_weights)
    stages = [(g[0] / 2.0, g[0])]
    for prev, cur in zip(g[:-1], g[1:]):
        stages.append(((prev + cur) / 2.0, cur))
    stages.append((g[-1] / 2.0, 0.0))
    return CompositionScheme(name, tuple(stages), order)


STRANG = CompositionScheme("strang", ((0.5, 1.0), (0.5, 0.0)), order=2)

_W_SUZUKI = 1.0 / (4.0 - 4.0 ** (1.0 / 3.0))
SUZUKI4 = _strang_composition(
    "suzuki4",
    (_W_SUZUKI, _W_SUZUKI, 1.0 - 4.0 * _W_SUZUKI, _W_SUZUKI, _W_SUZUKI),
    order=4,
)

_G_YOSHIDA = 1.0 / (2.0 - 2.0 ** (1.0 / 3.0))
YOSHIDA4 = _strang_composition(
    "yoshida4",
    (_G_YOSHIDA, 1.0 - 2.0 * _G_YOSHIDA, _G_YOSHIDA),
    order=4,
)


def splitting_step(problem: SemilinearProblem, scheme: CompositionScheme, t: float, h: float, u):
    """One step of an A/B splitting composition.

    Each E_A is the exact exponential; each E_B substep is realized by one
    classical RK4 step (4 B evaluations) at the frozen accumulated time.
    """
    clock = t
    for a_j, b_j in scheme.stages:
        if a_j != 0.0:
            u = problem.apply_expA(a_j * h, u)
            clock += a_j * h
        if b_j != 0.0:
            u = b_flow_rk4(problem, clock, b_j * h, u, frozen_time=True)
    return u


def krogstad_step(problem: SemilinearProblem, t: float, h: float, u):
    """Krogstad's four-stage exponential Runge-Kutta method (stiff order 4).

    Nodes c = (0, 1/2, 1/2, 1); with phi_k(0) = 1/k! the tableau collapses to
    classical RK4, which the tests pin down.
    """
    half = 0.5 * h
    b1 = problem.eval_B(t, u)

    e_half_u = problem.apply_expA(half, u)
    u2 = e_half_u + half * problem.phi_applyA(1, half, b1)
    b2 = problem.eval_B(t + half, u2)

    u3 = u2 + h * problem.phi_applyA(2, half, b2 - b1)
    b3 = problem.eval_B(t + half, u3)

    e_full_u = problem.apply_expA(h, u)
    phi1_b1 = problem.phi_applyA(1, h, b1)
    u4 = e_full_u + h * (phi1_b1 + 2.0 * problem.phi_applyA(2, h, b3 - b1))
    b4 = problem.eval_B(t + h, u4)

    # weights: b_1 = phi1 - 3 phi2 + 4 phi3, b_2 = b_3 = 2 phi2 - 4 phi3,
    #          b_4 = 4 phi3 - phi2
    g2 = -3.0 * b1 + 2.0 * (b2 + b3) - b4
    g3 = 4.0 * (b1 - b2 - b3 + b4)
    return e_full_u + h * (
        phi1_b1 + problem.phi_applyA(2, h, g2) + problem.phi_applyA(3, h, g3)
    )


def lawson_rk4_step(problem: SemilinearProblem, t: float, h: float, u):
    """Classical RK4 applied in the rotating Lawson frame v = exp(-s A) u.

    The frame is re-based at t every step so no global phase accumulates.
    Written out in physical variables:

        U1 = u
        U2 = exp(hA/2) (u + h/2 K1)
        U3 = exp(hA/2) u + h/2 K2
        U4 = exp(hA) u + h exp(hA/2) K3
        u+ = exp(hA) u + h/6 (exp(hA) K1 + 2 exp(hA/2) (K2 + K3) + K4)

    with K_i = B at the stage states and times (t, t+h/2, t+h/2, t+h).
    """
    half = 0.5 * h
    k1 = problem.eval_B(t, u)

    u2 = problem.apply_expA(half, u + half * k1)
    k2 = problem.eval_B(t + half, u2)

    e_half_u = problem.apply_expA(half, u)
    u3 = e_half_u + half * k2
    k3 = problem.eval_B(t + half, u3)

    u4 = problem.apply_expA(half, e_half_u + h * k3)
    k4 = problem.eval_B(t + h, u4)

    e_full_u = problem.apply_expA(h, u)
    acc = problem.apply_expA(h, k1) + 2.0 * problem.apply_expA(half, k2 + k3)
    return e_full_u + (h / 6.0) * (acc + k4)
