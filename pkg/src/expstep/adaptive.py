"""Fixed-step and adaptive time integration drivers.

The adaptive controller is the standard deadbeat rule: accept a step when the
Milne estimate satisfies est <= tol and propose

    h <- h * clamp(safety * (tol / est)^(1/(p+1)), fac_min, fac_max)

with p the corrector order.  Only the Lawson predictor-corrector family is
eligible for adaptive runs (it has both an estimate and variable-step
weights).  Three consecutive rejections trigger a fresh multistep startup
from the current state; falling below h_min raises ToleranceUnattainable.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

from .methods import MethodSpec, parse_method
from .multistep import startup
from .problem import BlowUpError, SemilinearProblem

__all__ = [
    "ControllerConfig",
    "StepRecord",
    "RunReport",
    "ToleranceUnattainable",
    "integrate",
]

_NAN = float("nan")
_RESTART_AFTER_REJECTIONS = 3


class ToleranceUnattainable(RuntimeError):
    """Raised when the controller would need a step below h_min."""


@dataclass
class ControllerConfig:
    tol: float
    h0: float | None = None
    h_min: float = 1e-12
    h_max: float = float("inf")
    safety: float = 0.9
    fac_min: float = 0.2
    fac_max: float = 5.0

    def propose_factor(self, est: float, p: int) -> float:
        if est == 0.0:
            return self.fac_max
        raw = self.safety * (self.tol / est) ** (1.0 / (p + 1))
        return min(max(raw, self.fac_min), self.fac_max)


@dataclass
class StepRecord:
    t: float
    h: float
    err_est: float
    accepted: bool
    b_evals_cum: int
    norm_drift: float
    energy: float | None = None
    wall_ns: int = 0


@dataclass
class RunReport:
    method: str
    records: list = field(default_factory=list)
    accepted_steps: int = 0
    rejected_steps: int = 0
    b_evals: int = 0
    expa_applications: int = 0
    t_final: float = 0.0
    blown_up: bool = False
    wall_s: float = 0.0
    # counter snapshot at run start, so reusing one problem instance across
    # several runs still yields per-run tallies
    _b_start: int = field(default=0, repr=False)
    _expa_start: int = field(default=0, repr=False)

    def accepted_records(self) -> list:
        return [r for r in self.records if r.accepted]


def _record(problem, report, t, h, est, accepted, u, u0, record_energy, wall_ns=0):
    # u is None for interior startup nodes, where no state snapshot is kept
    have_state = accepted and u is not None
    energy = problem.energy(t, u) if (record_energy and have_state) else None
    rec = StepRecord(
        t=t, h=h, err_est=est, accepted=accepted,
        b_evals_cum=problem.counter.b_evals - report._b_start,
        norm_drift=problem.norm_drift(u, u0) if have_state else _NAN,
        energy=energy, wall_ns=wall_ns,
    )
    report.records.append(rec)
    if accepted:
        report.accepted_steps += 1
        report.t_final = t
    else:
        report.rejected_steps += 1
    return rec


def integrate(
    problem: SemilinearProblem,
    method: MethodSpec | str,
    t0: float,
    t_end: float,
    u0,
    *,
    steps: int | None = None,
    controller: ControllerConfig | None = None,
    record_energy: bool = False,
):
    """Drive `method` from (t0, u0) to t_end.

    Exactly one of steps (fixed stepping, t_end hit by construction) or
    controller (adaptive stepping) must be given.  Returns (u_final, report);
    u_final is None when the run blew up, with report.blown_up set instead of
    an exception escaping, so stability scans can tabulate divergence.
    """
    if isinstance(method, str):
        method = parse_method(method)
    if (steps is None) == (controller is None):
        raise ValueError("specify exactly one of steps or controller")

    report = RunReport(
        method=method.name,
        _b_start=problem.counter.b_evals,
        _expa_start=problem.counter.expa_applications,
    )
    start = time.perf_counter()
    _record(problem, report, t0, _NAN, _NAN, True, u0, u0, record_energy)
    report.accepted_steps -= 1  # the initial record is not a step
    try:
        if controller is None:
            u = _run_fixed(problem, method, t0, t_end, u0, steps, report, record_energy)
        else:
            u = _run_adaptive(problem, method, t0, t_end, u0, controller, report, record_energy)
    except BlowUpError:
        report.blown_up = True
        u = None
    report.b_evals = problem.counter.b_evals - report._b_start
    report.expa_applications = problem.counter.expa_applications - report._expa_start
    report.wall_s = time.perf_counter() - start
    return u, report


def _run_fixed(problem, method, t0, t_end, u0, steps, report, record_energy):
    if steps < 1:
        raise ValueError("steps must be positive")
    h = (t_end - t0) / steps
    u = u0
    if not method.is_multistep:
        step_fn = method.onestep_fn()
        for j in range(steps):
            tic = time.perf_counter_ns()
            u = step_fn(problem, t0 + j * h, h, u)
            wall = time.perf_counter_ns() - tic
            _record(problem, report, t0 + (j + 1) * h, h, _NAN, True, u, u0,
                    record_energy, wall)
        return u

    k = method.k
    if steps < k:
        raise ValueError(f"{method.name} needs at least {k} steps, got {steps}")
    tic = time.perf_counter_ns()
    history, u, t = startup(problem, t0, h, u0, k)
    wall = time.perf_counter_ns() - tic
    for j in range(1, k):
        last = j == k - 1
        _record(problem, report, t0 + j * h, h, _NAN, True, u if last else None,
                u0, record_energy and last, wall // max(k - 1, 1))
    step_fn = method.multistep_fn()
    for j in range(k - 1, steps):
        t_j = t0 + j * h
        t_next = t0 + (j + 1) * h
        tic = time.perf_counter_ns()
        if method.has_estimator:
            result = step_fn(problem, history, t_j, h, u)
            u, est, b_new = result.state, result.error_estimate, result.b_new
        else:
            u = step_fn(problem, history, t_j, h, u)
            est = _NAN
            b_new = problem.eval_B(t_next, u)
        history.push(t_next, b_new)
        wall = time.perf_counter_ns() - tic
        _record(problem, report, t_next, h, est, True, u, u0, record_energy, wall)
    return u


def _run_adaptive(problem, method, t0, t_end, u0, controller, report, record_energy):
    if not (method.is_multistep and method.has_estimator and method.variable_steps):
        raise ValueError(
            f"adaptive stepping needs a variable-step predictor-corrector method, got {method.name}"
        )
    k = method.k
    p = method.control_order
    span = t_end - t0
    h = controller.h0 if controller.h0 is not None else span / 1000.0
    h = min(max(h, controller.h_min), controller.h_max)

    def do_startup(t_at, u_at, h_at):
        remaining = t_end - t_at
        if k > 1:
            h_at = min(h_at, remaining / k)
        history, u_new, t_new = startup(problem, t_at, h_at, u_at, k)
        for j in range(1, k):
            last = j == k - 1
            _record(problem, report, t_at + j * h_at, h_at, _NAN, True,
                    u_new if last else None, u0, record_energy and last)
        return history, u_new, t_new, h_at

    history, u, t, h = do_startup(t0, u0, h)
    step_fn = method.multistep_fn()
    rejections_in_a_row = 0
    while t < t_end - 1e-14 * max(1.0, abs(t_end)):
        h_try = min(h, controller.h_max, t_end - t)
        if h_try < controller.h_min:
            raise ToleranceUnattainable(
                f"stepsize {h_try:g} fell below h_min {controller.h_min:g} at t = {t:g}"
            )
        tic = time.perf_counter_ns()
        result = step_fn(problem, history, t, h_try, u)
        wall = time.perf_counter_ns() - tic
        est = result.error_estimate
        factor = controller.propose_factor(est, p)
        if est <= controller.tol:
            t = t + h_try
            u = result.state
            history.push(t, result.b_new)
            _record(problem, report, t, h_try, est, True, u, u0, record_energy, wall)
            rejections_in_a_row = 0
            h = min(h_try * factor, controller.h_max)
        else:
            _record(problem, report, t + h_try, h_try, est, False, u, u0, False, wall)
            rejections_in_a_row += 1
            h = min(h_try * factor, controller.h_max)
            if rejections_in_a_row >= _RESTART_AFTER_REJECTIONS:
                # repeated rejections mean the history stopped being
                # representative; rebuild it from the current state
                history, u, t, h = do_startup(t, u, h)
                rejections_in_a_row = 0
    return u
