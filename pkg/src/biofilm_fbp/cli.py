"""Command-line entry point ``biofilm-fbp``.

Exit codes: 0 success, 1 partial sweep failure, 2 numerical abort,
3 bracket/convergence failure, 64 configuration error.
"""
from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .config import (RunConfig, default_config, emit_config, override,
                     parse_config, parse_expression)
from .fd import TridiagonalError
from .kinetics import SRB_SPECIES, SRB_SUBSTRATES, KineticsError
from .simulator import CFLError, NumericalAbort, simulate
from .stability import (SteadySRB, decay_fit, dispersion_sweep,
                        energy_monotonicity, local_equilibrium_srb,
                        local_jacobian_srb, stability_verdict,
                        write_dispersion_csv)
from .steady import (BracketError, SteadyError, steady_thickness_find,
                     write_steady)
from .transform import SRB, WG, ConfigError, FieldState, Grid, velocity_profile

log = logging.getLogger("biofilm_fbp")

EXIT_OK = 0
EXIT_SWEEP = 1
EXIT_ABORT = 2
EXIT_SOLVER = 3
EXIT_CONFIG = 64

FMT = "%.17e"


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------


def _names(model):
    if model == WG:
        return ["X1", "X2", "X3"], ["C1", "C2", "C3"]
    return [f"X_{s}" for s in SRB_SPECIES], [f"S_{s}" for s in SRB_SUBSTRATES]


def initial_state(cfg: RunConfig) -> FieldState:
    grid = Grid(cfg.grid.n)
    x = grid.x
    ini = cfg.initial
    if cfg.model == WG:
        X = np.array([parse_expression(getattr(ini, k))(x) for k in ("X1", "X2", "X3")])
        C = np.array([parse_expression(getattr(ini, k))(x) for k in ("C1", "C2", "C3")])
        clock = "rescaled"
    else:
        X = np.array([parse_expression(getattr(ini, "X" + s))(x) for s in SRB_SPECIES])
        C = np.array([parse_expression(getattr(ini, "S" + s))(x) for s in SRB_SUBSTRATES])
        clock = "physical"
    Phi = np.array(ini.Phi, dtype=float)
    C[:, -1] = Phi
    return FieldState(grid, 0.0, float(np.log(ini.L0)), X, C, Phi, cfg.model, clock)


def _steady(cfg: RunConfig):
    s = cfg.steady
    return steady_thickness_find(cfg.kinetics, cfg.reactor, (s.L_lo, s.L_hi),
                                 n=cfg.grid.n, tol=s.tol, inner_tol=s.inner_tol,
                                 eps=s.eps, method=s.method)


def steady_field_state(st, perturb=0.0) -> FieldState:
    """Field state at a steady solution, optionally with ``L`` and ``C``
    perturbed by the relative amount ``perturb``."""
    x = st.grid.x
    C = st.C_star * (1.0 + perturb * np.cos(0.5 * np.pi * x))
    y = st.y_star + np.log1p(perturb)
    return FieldState(st.grid, 0.0, y, st.X_star.copy(), C, st.Phi_star.copy())


def write_snapshots(traj, p, model, path):
    species, substrates = _names(model)
    header = ["t", "x", *species, *substrates, "V", "v"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for state in traj.snapshots:
            prof = velocity_profile(state, p)
            x = state.grid.x
            for k in range(state.grid.n):
                row = [state.t, x[k], *state.X[:, k], *state.C[:, k], prof.V[k], prof.v[k]]
                w.writerow([FMT % v for v in row])


def write_diagnostics(traj, path):
    keys = ("t", "L", "ydot", "mass_err", "E", "F", "clamps")
    cols = [traj.series(k) for k in keys]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(keys)
        for row in zip(*cols):
            w.writerow([FMT % v for v in row])


def write_report(path, items):
    with open(path, "w") as fh:
        for key, value in items:
            if isinstance(value, float):
                value = FMT % value
            fh.write(f"{key} = {value}\n")


# ---------------------------------------------------------------------------
# commands; each returns (exit code, headline dict)
# ---------------------------------------------------------------------------


def run_simulate(cfg: RunConfig, out):
    steady = None
    if cfg.model == WG and cfg.initial.from_steady:
        steady = _steady(cfg)
        init = steady_field_state(steady)
    else:
        init = initial_state(cfg)
    traj = simulate(init, cfg.time, cfg.kinetics,
                    cfg.reactor if cfg.model == WG else None, steady=steady)
    write_snapshots(traj, cfg.kinetics, cfg.model, os.path.join(out, "snapshots.csv"))
    write_diagnostics(traj, os.path.join(out, "diagnostics.csv"))
    head = {"L_final": float(traj.series("L")[-1]), "aborted": traj.aborted}
    items = [("L_final", head["L_final"]), ("aborted", traj.aborted),
             ("reason", traj.reason or "none"),
             ("renormalizations", traj.renormalizations)]
    write_report(os.path.join(out, "simulate_report.txt"), items)
    if traj.aborted and "non-finite" in traj.reason:
        return EXIT_ABORT, head
    return EXIT_OK, head


def run_steady(cfg: RunConfig, out):
    if cfg.model != WG:
        raise ConfigError("model: steady solves need the WG model")
    st = _steady(cfg)
    write_steady(st, os.path.join(out, "steady.csv"), os.path.join(out, "steady_report.txt"))
    return EXIT_OK, {"L_star": st.L_star}


def run_stability(cfg: RunConfig, out):
    if cfg.model == WG:
        return _stability_wg(cfg, out)
    return _stability_srb(cfg, out)


def _stability_wg(cfg, out):
    st = _steady(cfg)
    init = steady_field_state(st, cfg.stability.delta)
    traj = simulate(init, cfg.time, cfg.kinetics, cfg.reactor, steady=st)
    write_diagnostics(traj, os.path.join(out, "diagnostics.csv"))
    if traj.aborted:
        return EXIT_ABORT, {"L_star": st.L_star}
    t = traj.series("t")
    dev = np.abs(traj.series("L") - st.L_star)
    keep = dev > 1e-12 * st.L_star
    fit = decay_fit(t[keep], dev[keep])
    E_bad = energy_monotonicity(t, traj.series("E"))
    F_bad = energy_monotonicity(t, traj.series("F"))
    items = [("L_star", st.L_star), ("mu", fit.mu_rate), ("K", fit.K_amp),
             ("r2", fit.r2), ("window_start", fit.window[0]),
             ("window_end", fit.window[1]),
             ("E_increases", len(E_bad)), ("F_increases", len(F_bad))]
    write_report(os.path.join(out, "stability_report.txt"), items)
    return EXIT_OK, {"L_star": st.L_star, "mu": fit.mu_rate}


def _stability_srb(cfg, out):
    s = cfg.stability
    p = cfg.kinetics
    steady = SteadySRB.from_functions(cfg.grid.n, s.L_star, parse_expression(s.XE),
                                      parse_expression(s.XA), parse_expression(s.f_Po),
                                      anchor=s.anchor)
    eq = local_equilibrium_srb(p, s.anchor)
    jac = local_jacobian_srb(p, (steady.XE[0], steady.XA[0]), eq)
    omegas = np.linspace(s.omega_min, s.omega_max, s.omega_count)
    rows = dispersion_sweep(omegas, steady, p, printed_m55=s.printed_m55)
    write_dispersion_csv(rows, os.path.join(out, "dispersion.csv"))
    verdict = stability_verdict(rows, p)
    label = "stable" if verdict.stable else "unstable"
    items = jac.as_lines()
    lines = [tuple(line.split(" = ", 1)) for line in items]
    lines += [("ksp_condition", verdict.ksp_condition), ("dispersion_verdict", label),
              ("first_violation", verdict.first_violation or "none")]
    write_report(os.path.join(out, "stability_report.txt"), lines)
    return EXIT_OK, {"verdict": label}


COMMANDS = {"simulate": run_simulate, "steady": run_steady, "stability": run_stability}


def execute(command, cfg: RunConfig, out):
    """Run one command with error mapping; returns (exit code, headline)."""
    os.makedirs(out, exist_ok=True)
    try:
        return COMMANDS[command](cfg, out)
    except (ConfigError, KineticsError) as exc:
        log.error("configuration error: %s", exc)
        return EXIT_CONFIG, {"error": str(exc)}
    except (BracketError, SteadyError) as exc:
        log.error("solver failure: %s", exc)
        return EXIT_SOLVER, {"error": str(exc)}
    except (NumericalAbort, CFLError, TridiagonalError, FloatingPointError) as exc:
        log.error("numerical abort: %s", exc)
        return EXIT_ABORT, {"error": str(exc)}


def _sweep_item(args):
    command, cfg, out = args
    return execute(command, cfg, out)


def run_sweep(cfg: RunConfig, out, jobs=1):
    sweep = cfg.sweep
    values = sweep.grid()
    if not sweep.param:
        raise ConfigError("param: sweep needs a parameter path")
    items = []
    for i, v in enumerate(values):
        sub = os.path.join(out, f"item_{i:03d}")
        items.append((sweep.command, override(cfg, sweep.param, v), sub))
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_sweep_item, items))
    else:
        results = [_sweep_item(it) for it in items]
    failed = 0
    os.makedirs(out, exist_ok=True)
    with open(os.path.join(out, "summary.csv"), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", "value", "exit_code", "L_star", "mu", "verdict"])
        for i, (v, (code, head)) in enumerate(zip(values, results)):
            failed += code != EXIT_OK
            L = head.get("L_star", head.get("L_final"))
            w.writerow([i, FMT % v, code,
                        "nan" if L is None else FMT % L,
                        FMT % head["mu"] if "mu" in head else "nan",
                        head.get("verdict", "")])
    return (EXIT_SWEEP if failed else EXIT_OK), {"failed": failed}


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def build_parser():
    ap = argparse.ArgumentParser(prog="biofilm-fbp",
                                 description="Free-boundary biofilm models")
    ap.add_argument("command", choices=["simulate", "steady", "stability", "sweep"])
    ap.add_argument("--config", help="run configuration file")
    ap.add_argument("--out", help="output directory (overrides [run] out)")
    ap.add_argument("--jobs", type=int, default=1, help="parallel sweep items")
    ap.add_argument("--print-defaults", action="store_true",
                    help="print the resolved configuration and exit")
    ap.add_argument("--model", choices=[WG, SRB], default=WG,
                    help="model for --print-defaults without --config")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = parse_config(args.config) if args.config else default_config(args.model)
    except (ConfigError, KineticsError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.print_defaults:
        sys.stdout.write(emit_config(cfg))
        return EXIT_OK
    if not args.config:
        print("config error: --config is required", file=sys.stderr)
        return EXIT_CONFIG
    out = args.out or cfg.run.out
    if args.jobs < 1:
        print("config error: --jobs must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    np.random.seed(cfg.run.seed)
    if args.command == "sweep":
        try:
            code, _ = run_sweep(cfg, out, jobs=args.jobs)
        except ConfigError as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
    else:
        code, head = execute(args.command, cfg, out)
        if "error" in head:
            print(head["error"], file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
