"""Command-line front end: ``advect-spectra <verb> [options]``."""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Sequence

import jsonschema

from . import __version__
from .acceptance import report_schema, run_acceptance
from .advection_lab import (
    RunConfig,
    RunResult,
    _errors,
    exact_moments,
    init_field,
    march,
    march_field,
    mirror,
    results_to_csv,
)
from .fourier import cfl_limit, spectrum
from .modified_equation import (
    CONTRAST_SCHEMES,
    compare_truncation,
    contrast_table,
    contrast_to_csv,
    nu_grid,
    reference_truncation,
)
from .schemes import SCHEME_NAMES, SchemeId, UnsupportedSchemeError, build_rule
from .svg import locus_svg
from .stencil import TwoMomentRule

THREADS_ENV = "ADVECT_SPECTRA_THREADS"


class CommandError(Exception):
    """A user-facing failure: printed to stderr, exit code 1."""


def _scheme(text: str) -> str:
    try:
        return str(SchemeId.parse(text))
    except UnsupportedSchemeError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _positive(text: str) -> float:
    x = float(text)
    if not (math.isfinite(x) and x > 0):
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text!r}")
    return x


def _float_list(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _scheme_list(text: str) -> list[str]:
    return [_scheme(t) for t in text.split(",") if t.strip()]


def _timestamp(args) -> str | None:
    if args.no_timestamp:
        return None
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _write(args, name: str, text: str, config: dict) -> Path:
    """Write one output file plus its manifest."""
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        path = out / name
        path.write_text(text)
        manifest = {
            "invocation": list(args.argv),
            "command": args.verb,
            "config": config,
            "output": name,
            "version": __version__,
        }
        stamp = _timestamp(args)
        if stamp:
            manifest["timestamp"] = stamp
        (out / f"{name}.manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    except OSError as exc:
        raise CommandError(f"cannot write {name} to {out}: {exc.strerror or exc}") from None
    return path


def march_signed(scheme: str, n_cells: int, cfl: float, final_time: float,
                 speed: float = 1.0) -> RunResult:
    """Like ``march`` but allows c < 0 by running the mirrored problem."""
    if speed > 0:
        return march(RunConfig(scheme, n_cells, cfl, final_time, advection_speed=speed))
    if speed == 0 or not math.isfinite(speed):
        raise ValueError("advection speed must be finite and nonzero")
    config = RunConfig(scheme, n_cells, cfl, final_time, advection_speed=-speed)
    field = init_field(config.initial_profile, n_cells)
    state = march_field(scheme, mirror(field), cfl, final_time, -speed)
    ubar = state.ubar[::-1]
    exact, _ = exact_moments(config.initial_profile, n_cells, speed * final_time)
    l1, l2 = _errors(ubar, exact, field.h)
    return RunResult(config, l1, l2, state.max_amplitude, state.steps, state.blew_up)


def cmd_spectrum(args) -> int:
    sp = spectrum(build_rule(args.scheme), args.cfl, args.theta_samples)
    stem = f"spectrum_{args.scheme}_cfl{args.cfl:g}"
    config = {"scheme": args.scheme, "cfl": args.cfl, "theta_samples": args.theta_samples}
    _write(args, f"{stem}.csv", sp.to_csv(), config)
    _write(args, f"{stem}.svg", locus_svg(sp, args.cfl, _timestamp(args)), config)
    print(f"max modulus {float(sp.max_modulus.max())!r}")
    return 0


def cmd_cfl(args) -> int:
    res = cfl_limit(build_rule(args.scheme), tol=args.tol, n_theta=args.theta_samples)
    _write(args, f"cfl_{args.scheme}.json", json.dumps(res.to_json(), indent=2, sort_keys=True) + "\n",
           {"scheme": args.scheme, "tol": args.tol, "theta_samples": args.theta_samples})
    print(f"{args.scheme}: nu* = {res.nu_star!r}")
    return 0


def cmd_modeq(args) -> int:
    try:
        reference_truncation(args.scheme)
    except UnsupportedSchemeError as exc:
        raise CommandError(str(exc)) from None
    rule = build_rule(args.scheme)
    nus = args.nu or nu_grid(cfl_limit(rule, tol=1e-3).nu_star)
    rep = compare_truncation(rule, args.scheme, nus)
    _write(args, f"modeq_{args.scheme}.csv", rep.to_csv(),
           {"scheme": args.scheme, "nu": nus, "convention_sign": rep.convention_sign})
    print(f"{args.scheme}: convention sign {rep.convention_sign:+d}, "
          f"{sum(r.passed for r in rep.rows)}/{len(rep.rows)} samples match")
    return 0


def cmd_run(args) -> int:
    res = march_signed(args.scheme, args.cells, args.cfl, args.final_time, args.speed)
    _write(args, f"run_{args.scheme}_n{args.cells}_cfl{args.cfl:g}.csv", results_to_csv([res]),
           {"scheme": args.scheme, "cells": args.cells, "cfl": args.cfl,
            "final_time": args.final_time, "speed": args.speed})
    print(f"l1 {res.l1_error!r} l2 {res.l2_error!r} blew_up {res.blew_up} steps {res.steps_taken}")
    return 0


def _sweep_task(task: tuple) -> RunResult:
    return march_signed(*task)


def _thread_cap() -> int:
    raw = os.environ.get(THREADS_ENV)
    cap = os.cpu_count() or 1
    if raw:
        try:
            cap = max(1, int(raw))
        except ValueError:
            raise CommandError(f"{THREADS_ENV} must be a positive integer, got {raw!r}") from None
    return cap


def cmd_sweep(args) -> int:
    tasks = [(s, args.cells, c, args.final_time, args.speed)
             for s in args.schemes for c in args.cfls]
    workers = min(_thread_cap(), len(tasks))
    if workers <= 1:
        results = [_sweep_task(t) for t in tasks]
    else:
        # map preserves task order, so the merge is scheme-then-cfl
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_task, tasks))
    _write(args, "sweep.csv", results_to_csv(results),
           {"schemes": args.schemes, "cfls": args.cfls, "cells": args.cells,
            "final_time": args.final_time, "speed": args.speed})
    print(f"{len(results)} runs, {sum(r.blew_up for r in results)} blew up")
    return 0


def cmd_table3(args) -> int:
    limits = {s: cfl_limit(build_rule(s), tol=1e-4).nu_star for s in CONTRAST_SCHEMES}
    rows = contrast_table(build_rule, limits)
    _write(args, "table3.csv", contrast_to_csv(rows), {"schemes": list(CONTRAST_SCHEMES)})
    for r in rows:
        print(f"{r.scheme:10s} cfl {r.cfl_limit:.4f} dispersion {r.dispersion} "
              f"dissipation {r.dissipation}")
    return 0


def cmd_verify(args, rule_factory: Callable[[str], TwoMomentRule] | None = None) -> int:
    report = run_acceptance(rule_factory)
    text = report.dumps()
    jsonschema.validate(json.loads(text), report_schema())
    _write(args, "acceptance_report.json", text, {})
    for line in report.lines():
        print(line)
    return 0 if report.passed else 1


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default=".", help="output directory (default: .)")
    common.add_argument("--no-timestamp", action="store_true",
                        help="omit timestamps from SVG files and manifests")

    p = argparse.ArgumentParser(prog="advect-spectra",
                                description="Two-moment stability analysis for 1D linear advection.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="verb", required=True, metavar="verb")
    schemes = ", ".join(SCHEME_NAMES)

    sp = sub.add_parser("spectrum", parents=[common], help="eigenvalue loci (CSV + SVG)")
    sp.add_argument("--scheme", type=_scheme, required=True, help=schemes)
    sp.add_argument("--cfl", type=_positive, required=True)
    sp.add_argument("--theta-samples", type=int, default=512)
    sp.set_defaults(func=cmd_spectrum)

    sp = sub.add_parser("cfl", parents=[common], help="stability limit (JSON)")
    sp.add_argument("--scheme", type=_scheme, required=True, help=schemes)
    sp.add_argument("--tol", type=_positive, default=1e-4)
    sp.add_argument("--theta-samples", type=int, default=2048)
    sp.set_defaults(func=cmd_cfl)

    sp = sub.add_parser("modeq", parents=[common], help="dispersion/dissipation vs reference polynomials")
    sp.add_argument("--scheme", type=_scheme, required=True, help=schemes)
    sp.add_argument("--nu", type=_float_list, default=None,
                    help="comma-separated CFL samples (default 0.1..0.9 up to the limit)")
    sp.set_defaults(func=cmd_modeq)

    for verb, helptext in (("run", "single time-marching run"), ("sweep", "scheme x cfl grid")):
        sp = sub.add_parser(verb, parents=[common], help=helptext)
        if verb == "run":
            sp.add_argument("--scheme", type=_scheme, required=True, help=schemes)
            sp.add_argument("--cfl", type=_positive, required=True)
        else:
            sp.add_argument("--schemes", type=_scheme_list, required=True,
                            help="comma-separated scheme names")
            sp.add_argument("--cfls", type=_float_list, required=True,
                            help="comma-separated CFL numbers")
        sp.add_argument("--cells", type=int, default=640)
        sp.add_argument("--final-time", type=_positive, default=1.0)
        sp.add_argument("--speed", type=float, default=1.0,
                        help="advection speed; negative values run the mirrored grid")
        sp.set_defaults(func=cmd_run if verb == "run" else cmd_sweep)

    sp = sub.add_parser("table3", parents=[common], help="dispersion/dissipation contrast table")
    sp.set_defaults(func=cmd_table3)

    sp = sub.add_parser("verify", parents=[common], help="run every acceptance criterion")
    sp.set_defaults(func=cmd_verify)
    return p


def main(argv: Sequence[str] | None = None,
         rule_factory: Callable[[str], TwoMomentRule] | None = None) -> int:
    """Entry point; ``rule_factory`` replaces the shipped rules for ``verify``."""
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    args.argv = argv
    try:
        if args.verb == "verify":
            return cmd_verify(args, rule_factory)
        return args.func(args)
    except CommandError as exc:
        print(f"advect-spectra: error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"advect-spectra: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
