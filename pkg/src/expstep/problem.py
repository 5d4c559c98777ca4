"""Problem contract shared by every integrator in this package.

A problem is the semilinear system u' = A u + B(t, u) where the flow of the
stiff linear part A can be applied exactly (and so can phi_k(h A)), while B is
an arbitrary, possibly nonlinear and time-dependent remainder.  For the
Schroedinger equations treated here the physicists' i has been absorbed into
both parts, so A and B already generate the unitary real-time flow.

States are value-like objects supporting +, -, scalar *, .norm(), .copy() and
.isfinite().  Every eval_B call is counted and its output checked for NaN/Inf
(raising BlowUpError), which is what the stability scans rely on: runtime in
the target applications is proportional to the number of B evaluations, so
the counter is the cost measure used throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "EvalCounter",
    "BlowUpError",
    "SemilinearProblem",
    "ArrayState",
    "DiagonalProblem",
    "b_flow_rk4",
]


@dataclass
class EvalCounter:
    b_evals: int = 0
    expa_applications: int = 0


class BlowUpError(RuntimeError):
    """Raised when a state or tangent stops being finite."""

    def __init__(self, t: float):
        super().__init__(f"solution became non-finite at t = {t:g}")
        self.t = t


class SemilinearProblem:
    """Base class wiring counters and blow-up detection around subclass hooks.

    Subclasses implement _eval_B, _apply_expA, _phi_applyA and _apply_A.  One
    problem instance carries one counter; use a fresh instance per measured
    run.
    """

    def __init__(self) -> None:
        self.counter = EvalCounter()

    # -- subclass hooks -------------------------------------------------
    def _eval_B(self, t: float, u):
        raise NotImplementedError

    def _apply_expA(self, t: float, u):
        raise NotImplementedError

    def _phi_applyA(self, k: int, h: float, u):
        raise NotImplementedError

    def _apply_A(self, u):
        raise NotImplementedError

    # -- public, counted interface --------------------------------------
    def eval_B(self, t: float, u):
        self.counter.b_evals += 1
        out = self._eval_B(t, u)
        if not out.isfinite():
            raise BlowUpError(t)
        return out

    def apply_expA(self, t: float, u):
        self.counter.expa_applications += 1
        return self._apply_expA(t, u)

    def phi_applyA(self, k: int, h: float, u):
        return self._phi_applyA(k, h, u)

    def apply_A(self, u):
        """A u as a dense operation, for classical schemes that do not
        exponentiate the stiff part."""
        return self._apply_A(u)

    # -- diagnostics -----------------------------------------------------
    def norm_drift(self, u, u0) -> float:
        return abs(u.norm() - u0.norm())

    def energy(self, t: float, u):
        """Conserved functional when one exists, else None."""
        return None


class ArrayState:
    """Plain complex vector state with a weighted Euclidean norm.

    weight = dx recovers the discrete L2 norm; weight = 1 is the ordinary
    vector norm used by the small test systems.
    """

    __slots__ = ("values", "weight")

    def __init__(self, values: np.ndarray, weight: float = 1.0):
        self.values = np.asarray(values, dtype=complex)
        self.weight = weight

    def copy(self) -> "ArrayState":
        return ArrayState(self.values.copy(), self.weight)

    def norm(self) -> float:
        return math.sqrt(self.weight * float(np.sum(np.abs(self.values) ** 2)))

    def isfinite(self) -> bool:
        return bool(np.all(np.isfinite(self.values)))

    def __add__(self, other: "ArrayState") -> "ArrayState":
        return ArrayState(self.values + other.values, self.weight)

    def __sub__(self, other: "ArrayState") -> "ArrayState":
        return ArrayState(self.values - other.values, self.weight)

    def __mul__(self, scalar: complex) -> "ArrayState":
        return ArrayState(self.values * scalar, self.weight)

    __rmul__ = __mul__

    def __neg__(self) -> "ArrayState":
        return ArrayState(-self.values, self.weight)


class DiagonalProblem(SemilinearProblem):
    """u' = diag(lam) u + b(t, u) on C^n, with lam given componentwise.

    The workhorse for unit tests: lam = 0 turns every exponential method into
    its classical parent, a pure-imaginary lam exercises unitary flows, and
    b = 0 isolates the linear part.
    """

    def __init__(self, eigenvalues, b=None, weight: float = 1.0):
        super().__init__()
        self.eigenvalues = np.asarray(eigenvalues, dtype=complex)
        self.b = b
        self.weight = weight

    def state(self, values) -> ArrayState:
        values = np.asarray(values, dtype=complex)
        if values.shape != self.eigenvalues.shape:
            raise ValueError("state shape does not match eigenvalue vector")
        return ArrayState(values, self.weight)

    def _eval_B(self, t: float, u: ArrayState) -> ArrayState:
        if self.b is None:
            return ArrayState(np.zeros_like(u.values), self.weight)
        return ArrayState(np.asarray(self.b(t, u.values), dtype=complex), self.weight)

    def _apply_expA(self, t: float, u: ArrayState) -> ArrayState:
        return ArrayState(np.exp(t * self.eigenvalues) * u.values, self.weight)

    def _phi_applyA(self, k: int, h: float, u: ArrayState) -> ArrayState:
        from .phi import phi_values

        return ArrayState(phi_values(k, h * self.eigenvalues) * u.values, self.weight)

    def _apply_A(self, u: ArrayState) -> ArrayState:
        return ArrayState(self.eigenvalues * u.values, self.weight)


def b_flow_rk4(problem: SemilinearProblem, t: float, h: float, u, frozen_time: bool = False):
    """One classical RK4 step for u' = B(t, u) with the linear part switched off.

    With frozen_time=True all four stage evaluations use the single time t;
    the splitting methods rely on this because their clock is advanced by the
    A-stages only.  Costs exactly 4 B evaluations.
    """
    if frozen_time:
        t_mid = t_end = t
    else:
        t_mid = t + 0.5 * h
        t_end = t + h
    k1 = problem.eval_B(t, u)
    k2 = problem.eval_B(t_mid, u + (0.5 * h) * k1)
    k3 = problem.eval_B(t_mid, u + (0.5 * h) * k2)
    k4 = problem.eval_B(t_end, u + h * k3)
    return u + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
