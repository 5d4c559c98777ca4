"""Command line harness.

Subcommands: run, stability-scan, work-precision, order-study,
adaptive-trace, make-reference, ground-state.  Every command writes
delimited output (17 significant digits), a JSON run summary next to it,
and, unless --no-plot is given, a rendered figure with the same stem.
Config files are flat key = value lines; command line flags win.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import harness, reporting
from .adaptive import ControllerConfig, ToleranceUnattainable, integrate
from .grid import UniformGrid
from .mctdhf import (
    HeliumModel,
    MctdhfProblem,
    ground_state,
    load_state,
    save_state,
)
from .nls import nls_problem

_RUN_HEADER = ["step", "t", "h", "norm_drift", "energy", "err_est", "b_evals_cum", "wall_ns"]
_TRACE_HEADER = ["step", "t", "h", "laser", "norm_drift", "energy", "err_est",
                 "accepted", "b_evals_cum", "wall_ns"]
_SCAN_HEADER = ["method", "steps", "h", "max_norm_drift", "final_norm_drift", "blown_up", "b_evals", "wall_s"]
_WP_HEADER = ["method", "steps", "h", "error", "b_evals", "blown_up", "wall_s"]
_ORDER_HEADER = ["method", "steps", "h", "error"]


def parse_config_file(path) -> dict:
    """Flat key = value lines; blank lines and # comments ignored."""
    values = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key = value, got {raw!r}")
        key, _, val = line.partition("=")
        values[key.strip().replace("-", "_")] = val.strip()
    return values


class Options:
    """Merged view of CLI flags, config file entries, and defaults."""

    def __init__(self, args: argparse.Namespace):
        self._args = vars(args)
        self._config = parse_config_file(args.config) if args.config else {}

    def get(self, key, default=None, cast=None):
        val = self._args.get(key)
        if val is None:
            val = self._config.get(key)
            if val is not None and cast is not None:
                val = cast(val)
        if val is None:
            val = default
        return val

    def int_list(self, key, default):
        val = self.get(key)
        if val is None:
            return list(default)
        if isinstance(val, str):
            return [int(s) for s in val.split(",") if s.strip()]
        return list(val)

    def str_list(self, key, default):
        val = self.get(key)
        if val is None:
            return list(default)
        if isinstance(val, str):
            return [s.strip() for s in val.split(",") if s.strip()]
        return list(val)


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key = value config file; flags override")
    p.add_argument("--out", help="output path (delimited data)")
    p.add_argument("--grid", type=int, help="number of grid points (power of two)")
    p.add_argument("--domain", type=float, help="half length L of [-L, L)")
    p.add_argument("--orbitals", type=int, help="number of orbitals N")
    p.add_argument("--threads", type=int, help="worker processes for scans")
    p.add_argument("--seed", type=int, help="seed recorded in the summary")
    p.add_argument("--no-plot", action="store_true", default=None,
                   help="skip figure rendering")
    p.add_argument("--no-center", action="store_true", default=None,
                   help="keep the raw one-body potential instead of shifting it "
                        "by the constant that freezes the initial phase rotation")


def _add_adaptive(p: argparse.ArgumentParser) -> None:
    p.add_argument("--tol", type=float, help="adaptive error tolerance")
    p.add_argument("--h0", type=float, help="initial stepsize")
    p.add_argument("--h-min", type=float, help="abort below this stepsize")
    p.add_argument("--h-max", type=float, help="cap on the stepsize")
    p.add_argument("--safety", type=float, help="controller safety factor")


def _model(opts: Options, laser: bool) -> HeliumModel:
    model = HeliumModel(
        grid=UniformGrid(opts.get("grid", 256, int), opts.get("domain", 40.0, float)),
        n_orbitals=opts.get("orbitals", 2, int),
    )
    return model if laser else model.without_laser()


def _helium_initial(opts: Options, model: HeliumModel):
    state_in = opts.get("state_in")
    if state_in:
        state, t0 = load_state(state_in)
        if state.grid != model.grid or state.n_orbitals != model.n_orbitals:
            raise SystemExit(
                f"checkpoint {state_in} is ({state.n_orbitals} orbitals, "
                f"M={state.grid.num_points}, L={state.grid.half_length:g}) but the "
                f"requested configuration is ({model.n_orbitals}, "
                f"M={model.grid.num_points}, L={model.grid.half_length:g})"
            )
        return state
    print("no --state-in given; relaxing the ground state first", file=sys.stderr)
    return ground_state(model.without_laser(), tol=opts.get("gs_tol", 1e-9, float)).state


def _maybe_center(opts: Options, model: HeliumModel, state) -> HeliumModel:
    """Default to the phase-frozen potential; long fixed-step runs otherwise
    accumulate norm drift from the global rotation alone."""
    if opts.get("no_center", False):
        return model
    return model.centered(state)


def _summary_base(opts: Options, command: str) -> dict:
    return {
        "command": command,
        "grid": opts.get("grid", 256, int),
        "domain": opts.get("domain", 40.0, float),
        "orbitals": opts.get("orbitals", 2, int),
        "seed": opts.get("seed", 0, int),
    }


def _wants_plot(opts: Options) -> bool:
    return not opts.get("no_plot", False)


# ---------------------------------------------------------------------------
# run
# ---------------------------------------------------------------------------


def cmd_run(args) -> int:
    opts = Options(args)
    problem_name = opts.get("problem", "helium")
    method = opts.get("method", "lawson-pece:4")
    t_end = opts.get("t_end", 1.0, float)
    steps = opts.get("steps", None, int)
    tol = opts.get("tol", None, float)
    out = Path(opts.get("out", "run.csv"))
    if (steps is None) == (tol is None):
        print("specify exactly one of --steps (fixed) or --tol (adaptive)", file=sys.stderr)
        return 2

    if problem_name == "helium":
        model = _model(opts, laser=not opts.get("no_laser", False))
        initial = _helium_initial(opts, model)
        model = _maybe_center(opts, model, initial)
        problem = MctdhfProblem(model)
    elif problem_name == "nls":
        problem = nls_problem(
            num_points=opts.get("grid", 512, int),
            half_length=opts.get("domain", 30.0, float),
            t_max=t_end,
        )
        initial = problem.initial_state(0.0)
    else:
        print(f"unknown problem {problem_name!r}", file=sys.stderr)
        return 2

    controller = None
    if tol is not None:
        controller = ControllerConfig(
            tol=tol,
            h0=opts.get("h0", None, float),
            h_min=opts.get("h_min", 1e-10, float),
            h_max=opts.get("h_max", t_end / 10.0, float),
            safety=opts.get("safety", 0.9, float),
        )
    try:
        # unstable runs overflow before the blow-up guard trips; that is the
        # reported outcome, not something to warn about
        with np.errstate(over="ignore", invalid="ignore"):
            u, report = integrate(
                problem, method, 0.0, t_end, initial,
                steps=steps, controller=controller, record_energy=True,
            )
    except ToleranceUnattainable as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    rows = []
    for i, rec in enumerate(report.accepted_records()):
        rows.append({
            "step": i, "t": rec.t, "h": rec.h, "norm_drift": rec.norm_drift,
            "energy": rec.energy, "err_est": rec.err_est,
            "b_evals_cum": rec.b_evals_cum, "wall_ns": rec.wall_ns,
        })
    reporting.write_csv(out, _RUN_HEADER, rows)
    summary = _summary_base(opts, "run")
    if problem_name == "helium":
        summary["potential_shift"] = model.potential_shift
    summary.update({
        "problem": problem_name, "method": method, "t_end": t_end,
        "steps": steps, "tol": tol,
        "accepted_steps": report.accepted_steps,
        "rejected_steps": report.rejected_steps,
        "b_evals": report.b_evals,
        "expa_applications": report.expa_applications,
        "t_final": report.t_final,
        "blown_up": report.blown_up,
        "final_norm_drift": rows[-1]["norm_drift"] if rows else None,
        "final_energy": rows[-1]["energy"] if rows else None,
        "wall_s": report.wall_s,
    })
    reporting.write_summary(out, summary)
    if _wants_plot(opts) and len(rows) > 1:
        reporting.plot_run_trace(rows, reporting.figure_path(out),
                                 title=f"{problem_name} / {method}")
    if report.blown_up:
        print(f"run blew up at t = {report.t_final:g}", file=sys.stderr)
        return 1
    return 0


# ---------------------------------------------------------------------------
# scans
# ---------------------------------------------------------------------------

_SCAN_LADDER = (1000, 2000, 3000, 4000, 5000, 6000, 7000, 8000, 9000, 10000, 11000, 12000)


def cmd_stability_scan(args) -> int:
    opts = Options(args)
    methods = opts.str_list("methods", ("rk4", "lawson-pece:4"))
    steps_list = opts.int_list("steps_list", _SCAN_LADDER)
    t_end = opts.get("t_end", 100.0, float)
    out = Path(opts.get("out", "stability.csv"))
    model = _model(opts, laser=False)
    initial = _helium_initial(opts, model)
    model = _maybe_center(opts, model, initial)
    rows = harness.stability_rows(
        model, initial, methods, steps_list, t_end,
        threads=opts.get("threads", 1, int),
    )
    reporting.write_csv(out, _SCAN_HEADER, rows)
    summary = _summary_base(opts, "stability-scan")
    summary.update({"methods": methods, "steps_list": steps_list, "t_end": t_end,
                    "potential_shift": model.potential_shift})
    reporting.write_summary(out, summary)
    if _wants_plot(opts):
        reporting.plot_scan(rows, reporting.figure_path(out))
    return 0


def cmd_work_precision(args) -> int:
    opts = Options(args)
    methods = opts.str_list("methods", ("strang", "lawson-pece:5"))
    steps_list = opts.int_list("steps_list", (250, 500, 1000, 2000, 4000))
    t_end = opts.get("t_end", 80.0, float)
    out = Path(opts.get("out", "work_precision.csv"))
    ref_path = opts.get("reference")
    if not ref_path or not Path(ref_path).exists():
        print(
            "work-precision needs --reference REF.npz; create it first with\n"
            "  expstep make-reference --t-end ... --steps ... --out REF.npz",
            file=sys.stderr,
        )
        return 2
    reference, t_ref = load_state(ref_path)
    if abs(t_ref - t_end) > 1e-9 * max(1.0, abs(t_end)):
        print(f"reference was stored at t = {t_ref:g}, scan asks for t = {t_end:g}",
              file=sys.stderr)
        return 2
    model = _model(opts, laser=not opts.get("no_laser", False))
    initial = _helium_initial(opts, model)
    model = _maybe_center(opts, model, initial)
    rows = harness.work_precision_rows(
        model, initial, reference, methods, steps_list, t_end,
        threads=opts.get("threads", 1, int),
    )
    for row in rows:
        row.pop("final_norm_drift", None)
        row.pop("max_norm_drift", None)
    reporting.write_csv(out, _WP_HEADER, rows)
    summary = _summary_base(opts, "work-precision")
    summary.update({"methods": methods, "steps_list": steps_list, "t_end": t_end,
                    "reference": str(ref_path),
                    "potential_shift": model.potential_shift})
    reporting.write_summary(out, summary)
    if _wants_plot(opts):
        reporting.plot_work_precision(rows, reporting.figure_path(out))
    return 0


def cmd_order_study(args) -> int:
    opts = Options(args)
    methods = opts.str_list(
        "methods",
        ("strang", "suzuki4", "yoshida4", "etdrk4-krogstad", "lawson-rk4",
         "exp-ab:2", "exp-ab:3", "lawson-pece:2", "lawson-pece:3"),
    )
    t_end = opts.get("t_end", 1.0, float)
    out = Path(opts.get("out", "order_study.csv"))
    nls_params = {
        "num_points": opts.get("grid", 512, int),
        "half_length": opts.get("domain", 30.0, float),
        "t_max": t_end,
    }
    rows = harness.order_study_rows(
        methods, t_end=t_end, threads=opts.get("threads", 1, int),
        nls_params=nls_params,
    )
    order_rows = [{k: row[k] for k in _ORDER_HEADER} for row in rows]
    reporting.write_csv(out, _ORDER_HEADER, order_rows)
    fits = harness.fit_orders(rows)
    summary = _summary_base(opts, "order-study")
    summary.update({"methods": methods, "t_end": t_end, "fits": fits})
    reporting.write_summary(out, summary)
    if _wants_plot(opts):
        reporting.plot_order_study(rows, fits, reporting.figure_path(out))
    bad = []
    for m, fit in fits.items():
        print(f"{m}: slope {fit['slope']:.3f} (nominal {fit['nominal']})")
        if abs(fit["slope"] - fit["nominal"]) > 0.25:
            bad.append(m)
    if bad:
        print(f"order check failed for: {', '.join(bad)}", file=sys.stderr)
        return 1
    return 0


def cmd_adaptive_trace(args) -> int:
    opts = Options(args)
    method = opts.get("method", "lawson-pece:5")
    tol = opts.get("tol", 1e-5, float)
    t_end = opts.get("t_end", 80.0, float)
    out = Path(opts.get("out", "trace.csv"))
    model = _model(opts, laser=True)
    initial = _helium_initial(opts, model)
    model = _maybe_center(opts, model, initial)
    try:
        u, report, laser = harness.adaptive_trace(
            model, initial, method, tol, t_end,
            h0=opts.get("h0", None, float),
            h_min=opts.get("h_min", 1e-10, float),
            h_max=opts.get("h_max", t_end / 10.0, float),
            safety=opts.get("safety", 0.9, float),
        )
    except ToleranceUnattainable as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    rows = []
    for i, rec in enumerate(report.records):
        rows.append({
            "step": i, "t": rec.t, "h": rec.h, "laser": float(laser[i]),
            "norm_drift": rec.norm_drift, "energy": rec.energy,
            "err_est": rec.err_est, "accepted": rec.accepted,
            "b_evals_cum": rec.b_evals_cum, "wall_ns": rec.wall_ns,
        })
    reporting.write_csv(out, _TRACE_HEADER, rows)
    accepted_h = [r.h for r in report.accepted_records()[1:]]
    summary = _summary_base(opts, "adaptive-trace")
    summary.update({
        "method": method, "tol": tol, "t_end": t_end,
        "potential_shift": model.potential_shift,
        "accepted_steps": report.accepted_steps,
        "rejected_steps": report.rejected_steps,
        "b_evals": report.b_evals,
        "min_h": min(accepted_h) if accepted_h else None,
        "max_h": max(accepted_h) if accepted_h else None,
        "blown_up": report.blown_up,
        "wall_s": report.wall_s,
    })
    reporting.write_summary(out, summary)
    if _wants_plot(opts) and len(rows) > 1:
        reporting.plot_run_trace([r for r in rows if r["accepted"]],
                                 reporting.figure_path(out),
                                 title=f"adaptive {method}, tol {tol:g}")
    return 1 if report.blown_up else 0


# ---------------------------------------------------------------------------
# state preparation
# ---------------------------------------------------------------------------


def cmd_make_reference(args) -> int:
    opts = Options(args)
    method = opts.get("method", "lawson-pece:7")
    steps = opts.get("steps", None, int)
    t_end = opts.get("t_end", 80.0, float)
    out = Path(opts.get("out", "reference.npz"))
    if steps is None:
        print("make-reference needs --steps", file=sys.stderr)
        return 2
    model = _model(opts, laser=not opts.get("no_laser", False))
    initial = _helium_initial(opts, model)
    model = _maybe_center(opts, model, initial)
    u = harness.compute_reference(model, initial, method, steps, t_end)
    save_state(out, u, t=t_end, method=method, steps=steps,
               potential_shift=model.potential_shift)
    summary = _summary_base(opts, "make-reference")
    summary.update({"method": method, "steps": steps, "t_end": t_end,
                    "out": str(out), "potential_shift": model.potential_shift})
    reporting.write_summary(out, summary)
    return 0


def cmd_ground_state(args) -> int:
    opts = Options(args)
    out = Path(opts.get("out", "groundstate.npz"))
    model = _model(opts, laser=False)
    result = ground_state(model, tol=opts.get("gs_tol", 1e-9, float))
    save_state(out, result.state, t=0.0)
    print(f"ground-state energy {result.energy:.12f} after {result.iterations} iterations")
    summary = _summary_base(opts, "ground-state")
    summary.update({
        "energy": result.energy,
        "iterations": result.iterations,
        "gs_tol": opts.get("gs_tol", 1e-9, float),
        "out": str(out),
    })
    reporting.write_summary(out, summary)
    if _wants_plot(opts):
        plt_rows = [{"t": i * 0.05, "h": 0.05, "norm_drift": 0.0,
                     "energy": e} for i, e in enumerate(result.energies)]
        reporting.plot_run_trace(plt_rows, reporting.figure_path(out),
                                 title="imaginary-time relaxation")
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="expstep",
        description="exponential integrator benchmarks for semilinear Schroedinger equations",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="single integration run with telemetry")
    _add_common(p)
    _add_adaptive(p)
    p.add_argument("--problem", choices=("helium", "nls"))
    p.add_argument("--method")
    p.add_argument("--steps", type=int)
    p.add_argument("--t-end", type=float)
    p.add_argument("--state-in", help="initial-state checkpoint (helium)")
    p.add_argument("--gs-tol", type=float)
    p.add_argument("--no-laser", action="store_true", default=None)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("stability-scan", help="norm conservation over methods x stepcounts")
    _add_common(p)
    p.add_argument("--methods")
    p.add_argument("--steps-list")
    p.add_argument("--t-end", type=float)
    p.add_argument("--state-in")
    p.add_argument("--gs-tol", type=float)
    p.set_defaults(func=cmd_stability_scan)

    p = sub.add_parser("work-precision", help="error vs B evaluations against a reference")
    _add_common(p)
    p.add_argument("--methods")
    p.add_argument("--steps-list")
    p.add_argument("--t-end", type=float)
    p.add_argument("--reference", help="checkpoint from make-reference")
    p.add_argument("--state-in")
    p.add_argument("--gs-tol", type=float)
    p.add_argument("--no-laser", action="store_true", default=None)
    p.set_defaults(func=cmd_work_precision)

    p = sub.add_parser("order-study", help="soliton convergence orders")
    _add_common(p)
    p.add_argument("--methods")
    p.add_argument("--t-end", type=float)
    p.set_defaults(func=cmd_order_study)

    p = sub.add_parser("adaptive-trace", help="adaptive run with stepsize telemetry")
    _add_common(p)
    _add_adaptive(p)
    p.add_argument("--method")
    p.add_argument("--t-end", type=float)
    p.add_argument("--state-in")
    p.add_argument("--gs-tol", type=float)
    p.set_defaults(func=cmd_adaptive_trace)

    p = sub.add_parser("make-reference", help="store a fine fixed-step reference state")
    _add_common(p)
    p.add_argument("--method")
    p.add_argument("--steps", type=int)
    p.add_argument("--t-end", type=float)
    p.add_argument("--state-in")
    p.add_argument("--gs-tol", type=float)
    p.add_argument("--no-laser", action="store_true", default=None)
    p.set_defaults(func=cmd_make_reference)

    p = sub.add_parser("ground-state", help="relax and checkpoint the ground state")
    _add_common(p)
    p.add_argument("--gs-tol", type=float)
    p.set_defaults(func=cmd_ground_state)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
