"""Command line entry point ``cranectl``.

Exit codes: 0 success, 1 configuration error (including a failed audit),
2 simulation abort, 3 I/O error.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from .config import CONTROLLERS, FEEDFORWARD, PRESETS, SCENARIOS, dump_config, load_config
from .errors import ConfigError, CraneError, InvalidParameter
from .harness import SimulationAbort, SimulationLog, compute_metrics, run_scenario
from .ident import (DEFAULT_AMPLITUDE, generate_excitation, identify_axis,
                    simulate_single_axis, validate_model)
from .model import model_from_parameters
from .params import table_parameters
from .swing import observer_spectral_radius
from .sfb import full_audit

EXIT_OK, EXIT_CONFIG, EXIT_ABORT, EXIT_IO = 0, 1, 2, 3


def _config(args: argparse.Namespace):
    over: dict = {}
    for key, attr in (("controller", "controller"), ("scenario", "scenario"),
                      ("feedforward", "feedforward"), ("load_mass", "mass"),
                      ("mode", "mode"), ("repetitions", "repetitions")):
        v = getattr(args, attr, None)
        if v is not None:
            over[key] = v
    return load_config(args.config, args.preset, over)


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_identify(args: argparse.Namespace) -> int:
    p = table_parameters(m=args.mass)
    axes = ("x", "y", "l") if args.axis == "all" else (args.axis,)
    if args.csv and len(axes) != 1:
        raise ConfigError("--csv needs a single --axis")
    report = {}
    for kind in axes:
        i = ("x", "y", "l").index(kind)
        truth = p.axes[i]
        m = args.mass if kind == "l" else 0.0
        if args.csv:
            with open(args.csv, newline="") as fh:
                rows = list(csv.DictReader(fh))
            if not rows or not {"voltage", "position"} <= set(rows[0]):
                raise ConfigError("CSV needs 'voltage' and 'position' columns")
            try:
                u = np.array([float(r["voltage"]) for r in rows])
                q = np.array([float(r["position"]) for r in rows])
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"malformed CSV: {exc}") from exc
        else:
            u = generate_excitation(args.duration, args.T_s, args.amplitude, args.seed)
            q = simulate_single_axis(p.with_mass(m), kind, u, args.T_s)
        res = identify_axis(u, q, kind, truth.K_e, args.T_s, m=m, r_g=truth.r_g,
                            R_p=truth.R_p, g=p.g, deadband=p.deadband, method=args.method)
        pos_mse, vel_mse = validate_model(res.axis, u, q, args.T_s, axis_kind=kind,
                                          like=truth, m=m, g=p.g, deadband=p.deadband)
        entry = {"parameters": {k: getattr(res.axis, k) for k in ("J_e", "B_e", "a_1", "a_2")},
                 "alpha": [float(a) for a in res.alpha],
                 "position_mse": pos_mse, "velocity_mse": vel_mse}
        if not args.csv:
            entry["relative_error"] = {
                k: abs(getattr(res.axis, k) / getattr(truth, k) - 1.0)
                for k in ("J_e", "B_e", "a_1", "a_2")}
        report[kind] = entry
    _emit(json.dumps(report, indent=2, sort_keys=True) + "\n", args.out)
    return EXIT_OK


def cmd_plan(args: argparse.Namespace) -> int:
    cfg = _config(args)
    diag = cfg.trajectory.diagnostics(cfg.T_s)
    for d in diag:
        print(f"warning: {d}", file=sys.stderr)
    plan = cfg.trajectory.plan(cfg.mode)
    n = int(round(plan.t_f / cfg.T_s))
    lines = ["t,x_ref,y_ref,l_ref"]
    for k in range(n + 1):
        t = k * cfg.T_s
        lines.append(",".join(repr(v) for v in (t, *plan.original_reference(t))))
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def _summary(label: str, met) -> str:
    return (f"{label}: final error {met.max_final_error * 1e3:.3f} mm, "
            f"max swing {math.degrees(met.max_theta):.2f} deg, "
            f"mean E_q {met.mean_eq_dist * 1e3:.2f} mm, max |u| {met.max_abs_u:.2f} V, "
            f"saturated {met.saturation_count}, QP fallbacks {met.fallback_count}")


def cmd_simulate(args: argparse.Namespace) -> int:
    cfg = _config(args)
    if args.dump_config:
        sys.stdout.write(dump_config(cfg))
        return EXIT_OK
    try:
        log, met = run_scenario(cfg, backend=args.backend)
    except SimulationAbort as exc:
        print(f"simulation aborted: {exc}", file=sys.stderr)
        if args.out:
            exc.log.to_csv(Path(args.out).with_suffix(".csv"))
        return EXIT_ABORT
    if args.out:
        stem = Path(args.out)
        log.to_csv(stem.with_suffix(".csv"))
        met.to_json(stem.with_suffix(".json"))
    print(_summary(cfg.label, met))
    return EXIT_OK


def cmd_audit(args: argparse.Namespace) -> int:
    cfg = _config(args)
    p = table_parameters(m=cfg.load_mass)
    model = model_from_parameters(p, cfg.T_s)
    out = full_audit(model, cfg.sfb)
    so = cfg.swing_observer
    out["swing"] = {
        "k_theta": list(cfg.swing.k_theta), "v_l_max": cfg.swing.v_l_max,
        "gain_condition": cfg.swing.gain_ok(),
        "observer_radius": [observer_spectral_radius(so.L_x, so.T_s),
                            observer_spectral_radius(so.L_y, so.T_s)],
    }
    ok = out["pass"] and out["swing"]["gain_condition"]
    out["pass"] = bool(ok)
    _emit(json.dumps(out, indent=2, sort_keys=True) + "\n", args.out)
    return EXIT_OK if ok else EXIT_CONFIG


def cmd_metrics(args: argparse.Namespace) -> int:
    try:
        log = SimulationLog.from_csv(Path(args.log))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    _emit(compute_metrics(log).to_json(), args.out)
    return EXIT_OK


def _scenario_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="YAML scenario file")
    p.add_argument("--preset", choices=PRESETS)
    p.add_argument("--controller", choices=CONTROLLERS)
    p.add_argument("--scenario", choices=tuple(SCENARIOS))
    p.add_argument("--feedforward", choices=FEEDFORWARD)
    p.add_argument("--mass", type=float)
    p.add_argument("--mode", choices=("2D", "3D"))
    p.add_argument("--repetitions", type=int)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cranectl", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("identify", help="RLS identification on CSV or simulated data")
    p.add_argument("--axis", choices=("x", "y", "l", "all"), default="all")
    p.add_argument("--csv", help="CSV with voltage and position columns")
    p.add_argument("--mass", type=float, default=0.4, help="load mass for the hoist [kg]")
    p.add_argument("--duration", type=float, default=20.0)
    p.add_argument("--T-s", dest="T_s", type=float, default=0.01)
    p.add_argument("--amplitude", type=float, default=DEFAULT_AMPLITUDE)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--method", choices=("backward", "zoh"), default="backward")
    p.add_argument("--out")
    p.set_defaults(func=cmd_identify)

    p = sub.add_parser("plan", help="sampled original reference of one transition")
    _scenario_args(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("simulate", help="closed-loop scenario run")
    _scenario_args(p)
    p.add_argument("--backend", choices=("python", "compiled"))
    p.add_argument("--out", help="output stem; writes <stem>.csv and <stem>.json")
    p.add_argument("--dump-config", action="store_true",
                   help="print the resolved configuration and exit")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("audit", help="closed-loop pole, DOB and swing-gain audits")
    _scenario_args(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("metrics", help="recompute metrics from a log CSV")
    p.add_argument("log")
    p.add_argument("--out")
    p.set_defaults(func=cmd_metrics)
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, InvalidParameter) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except CraneError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ABORT


if __name__ == "__main__":
    sys.exit(main())
