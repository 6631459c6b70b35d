"""Command-line surface: init, step, run, verify, report.

Every subcommand works on a run directory: `init` writes the manifest, the
direction family and the level-0 snapshot; `step` advances one level;
`run` is init plus k steps; `verify` replays the structural invariant suite
against a snapshot; `report` emits the delimited series/ledger files, the
summary JSON and the figures.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .config import RunConfig, build_config, parse_config_text
from .diagnostics import inequality_ledger, residual_check, summarize_level
from .geometry import build_default_family, family_radius, read_family, write_family
from .intermittency import ParameterError
from .iteration import (AmplitudeError, StateError, assemble_next, initial_state,
                        step as run_step)
from .reporting import (append_level, append_step, latest_level, read_levels,
                        read_manifest, read_state, read_steps, render_figures,
                        state_dir, write_ledger_csv, write_manifest,
                        write_series_csv, write_state, write_summary)
from .spectral import (Grid, curl, divergence, hermitian_defect, l2_norm_parseval,
                       tensor_trace)

USAGE_ERRORS = (ParameterError, StateError, AmplitudeError, ValueError, FileNotFoundError)


def _add_common_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key = value configuration file")
    p.add_argument("--grid", help="n_space,n_time")
    p.add_argument("--lambda0", type=int, dest="lambda0")
    p.add_argument("--lambda1", type=int, dest="lambda1")
    p.add_argument("--beta", type=float)
    p.add_argument("--ell", type=float)
    p.add_argument("--r", type=int)
    p.add_argument("--sigma", type=float)
    p.add_argument("--c", type=float)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--family", help="direction family JSON file")
    p.add_argument("--out", help="run directory")
    p.add_argument("--threads", type=int, help="FFT worker count")
    p.add_argument("--tol", action="append", metavar="NAME=VALUE")
    p.add_argument("--seed", type=int)


def _config_from_args(args) -> RunConfig:
    file_values = {}
    if args.config:
        file_values = parse_config_text(Path(args.config).read_text())
    flag_keys = ("grid", "lambda0", "lambda1", "beta", "ell", "r", "sigma", "c",
                 "epsilon", "family", "out", "threads", "tol", "seed")
    flags = {k: getattr(args, k, None) for k in flag_keys}
    return build_config(file_values, flags)


def _grid(cfg: RunConfig) -> Grid:
    return Grid(cfg.n_space, cfg.n_time, cfg.n_pad, workers=cfg.threads)


def _load_family(run_dir: Path):
    return read_family(run_dir / "family.json")


def _prepare_family(cfg: RunConfig, run_dir: Path):
    if cfg.family_file:
        family = read_family(cfg.family_file)
        if family.eps_gamma is None:
            family = family.with_eps(family_radius(family))
    else:
        family = build_default_family()
        family = family.with_eps(family_radius(family))
    write_family(run_dir / "family.json", family)
    return family


def cmd_init(args) -> int:
    cfg = _config_from_args(args)
    run_dir = Path(cfg.out_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    grid = _grid(cfg)
    family = _prepare_family(cfg, run_dir)

    state = initial_state(cfg.lambda0, grid, cfg.schedule)
    lam_top = cfg.schedule.lambdas[-1]
    manifest = cfg.to_manifest()
    manifest["version"] = __version__
    manifest["eps_gamma"] = family.eps_gamma
    manifest["dealias"] = grid.dealias_report(
        lam_top * (1 + np.sqrt(3.0) * cfg.schedule.sigmas[-1] * cfg.schedule.rs[-1] * family.n0))
    write_manifest(run_dir, manifest)
    write_state(run_dir, state)
    summary = summarize_level(state)
    append_level(run_dir, summary)

    resid = summary.residual
    print(f"initialized level 0 in {run_dir}")
    print(f"  E_0(1) = {summary.energy[-1]:.6e}   (t^2/(2pi)^3 at t=1: {1.0 / (2 * np.pi) ** 3:.6e})")
    print(f"  H_0(1) = {summary.helicity[-1]:.6e}")
    print(f"  system residual (relative) = {resid:.3e}")
    if resid > cfg.tolerances["residual_initial"]:
        print("  residual exceeds the closed-form tolerance", file=sys.stderr)
        return 1
    return 0


def _advance(run_dir: Path, *, decompose: bool, zero_perturbation: bool,
             release: bool = True) -> int:
    manifest = read_manifest(run_dir)
    cfg = RunConfig.from_manifest(manifest)
    cfg.out_dir = str(run_dir)
    q = latest_level(run_dir)
    state = read_state(run_dir, q, workers=cfg.threads)
    family = _load_family(run_dir)

    if zero_perturbation:
        nxt = assemble_next(state.q + 1, state.A, state.B, state.schedule)
        write_state(run_dir, nxt)
        append_level(run_dir, summarize_level(nxt))
        print(f"zero-perturbation step -> level {nxt.q} (identity check)")
        return 0

    t0 = time.time()
    nxt, rec = run_step(state, family, collect=True, decompose=decompose,
                        release_input=release)
    del state
    write_state(run_dir, nxt)
    summary = summarize_level(nxt)
    append_level(run_dir, summary)
    append_step(run_dir, rec)

    levels = read_levels(run_dir)
    records = read_steps(run_dir)
    report = inequality_ledger(nxt.schedule, levels, records)
    write_ledger_csv(run_dir, report)

    print(f"step {rec.q} -> {nxt.q} in {time.time() - t0:.1f}s")
    print(f"  |R_{nxt.q}|_L1 = {rec.norms['R_next_L1']:.6g}  "
          f"(previous {rec.norms['R_prev_L1']:.6g})")
    print(f"  |w|_L2 = {rec.norms['w_L2']:.6g}  corrector ratio = "
          f"{rec.norms['w_c_L2'] / rec.norms['w_p_L2']:.3g}")
    print(f"  system residual (relative) = {summary.residual:.3e}")
    return 0


def cmd_step(args) -> int:
    return _advance(Path(args.run_dir), decompose=args.decompose,
                    zero_perturbation=args.zero_perturbation)


def cmd_run(args) -> int:
    rc = cmd_init(args)
    if rc != 0:
        return rc
    cfg = _config_from_args(args)
    run_dir = Path(cfg.out_dir)
    steps = args.steps
    if steps > cfg.schedule.n_steps:
        print(f"schedule provides {cfg.schedule.n_steps} steps, requested {steps}",
              file=sys.stderr)
        return 2
    for _ in range(steps):
        rc = _advance(run_dir, decompose=args.decompose, zero_perturbation=False)
        if rc != 0:
            return rc
    return cmd_report(argparse.Namespace(run_dir=str(run_dir)))


STRUCTURAL_CHECKS = ("hermitian_symmetry", "curl_potential_equals_field",
                     "potential_divergence_free", "field_divergence_free",
                     "stress_traceless", "system_residual")


def verify_state(state, tolerances: dict) -> dict:
    """Named structural checks; values are (passed, measured)."""
    grid = state.grid
    tol = tolerances.get("structural", 1e-12)
    scale = max(float(np.max(np.abs(state.B.coeffs))), 1e-300)
    r_scale = max(float(np.max(np.abs(state.R.coeffs))), 1e-300)
    herm = max(hermitian_defect(f) for f in (state.A, state.B, state.R, state.p))
    curl_defect = float(np.max(np.abs(curl(state.A).coeffs - state.B.coeffs))) / scale
    div_a = float(np.max(np.abs(divergence(state.A).coeffs))) / (scale * grid.nyquist)
    div_b = float(np.max(np.abs(divergence(state.B).coeffs))) / (scale * grid.nyquist)
    trace = float(np.max(np.abs(tensor_trace(state.R)))) / r_scale
    resid = residual_check(state)
    resid_tol = tolerances.get("residual_initial", 1e-12) if state.q == 0 \
        else tolerances.get("residual", 1e-6)
    return {
        "hermitian_symmetry": (herm / max(scale, r_scale) <= tol, herm / max(scale, r_scale)),
        "curl_potential_equals_field": (curl_defect <= tol, curl_defect),
        "potential_divergence_free": (div_a <= tol, div_a),
        "field_divergence_free": (div_b <= tol, div_b),
        "stress_traceless": (trace <= tol, trace),
        "system_residual": (resid <= resid_tol, resid),
    }


def cmd_verify(args) -> int:
    path = Path(args.state_path)
    if (path / "manifest.json").exists():
        run_dir = path
        q = latest_level(run_dir)
        target = state_dir(run_dir, q)
    else:
        target = path
        run_dir = path.parent
    manifest = read_manifest(run_dir) if (run_dir / "manifest.json").exists() else {}
    tolerances = manifest.get("tolerances", {"structural": 1e-12, "residual": 1e-6,
                                             "residual_initial": 1e-12})
    meta_q = int(Path(target).name[7:]) if Path(target).name.startswith("state_q") else 0
    workers = manifest.get("threads", 1)
    state = read_state(run_dir, meta_q, workers=workers)

    checks = verify_state(state, tolerances)
    failed = [name for name, (ok, _) in checks.items() if not ok]
    for name, (ok, measured) in checks.items():
        print(f"  [{'PASS' if ok else 'FAIL'}] {name}: {measured:.3e}")

    levels = read_levels(run_dir)
    records = read_steps(run_dir)
    if levels and records:
        report = inequality_ledger(state.schedule, levels, records)
        held = sum(1 for r in report.rows if r.holds)
        print(f"  ledger: {held}/{len(report.rows)} rows hold "
              f"({len(report.failed_assertions())} asserted rows failing; see ledger.csv)")
    if failed:
        print(f"verification failed: {', '.join(failed)}", file=sys.stderr)
        return 1
    print("verification passed")
    return 0


def cmd_report(args) -> int:
    run_dir = Path(args.run_dir)
    manifest = read_manifest(run_dir)
    levels = read_levels(run_dir)
    if not levels:
        raise FileNotFoundError(f"{run_dir} has no level summaries to report")
    records = read_steps(run_dir)
    from .iteration import Schedule
    schedule = Schedule.from_dict(manifest["schedule"])
    report = inequality_ledger(schedule, levels, records)
    series = write_series_csv(run_dir, levels)
    ledger = write_ledger_csv(run_dir, report)
    summary = write_summary(run_dir, levels, report)
    figures = render_figures(run_dir, levels, report)
    print(f"wrote {series.name}, {ledger.name}, {summary.name} and "
          f"{len(figures)} figure(s) in {run_dir}")
    for lv in levels:
        gap_e = abs(lv.energy[-1] - lv.energy[0])
        gap_h = abs(lv.helicity[-1] - lv.helicity[0])
        print(f"  level {lv.q}: |E({lv.times[-1]:.0f}) - E(0)| = {gap_e:.6e}   "
              f"|H - H(0)| = {gap_h:.6e}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="emhdci",
        description="Convex-integration construction for the ideal electron-MHD "
                    "system on the 3-torus, with structural verification and "
                    "energy/helicity diagnostics.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_init = sub.add_parser("init", help="write the level-0 snapshot and manifest")
    _add_common_flags(p_init)
    p_init.set_defaults(func=cmd_init)

    p_step = sub.add_parser("step", help="advance one level")
    p_step.add_argument("run_dir")
    p_step.add_argument("--decompose", action="store_true",
                        help="record the diagnostic stress decomposition")
    p_step.add_argument("--zero-perturbation", action="store_true",
                        help="debug: reassemble the stress with no perturbation")
    p_step.set_defaults(func=cmd_step)

    p_run = sub.add_parser("run", help="init plus k steps plus report")
    _add_common_flags(p_run)
    p_run.add_argument("--steps", type=int, default=1)
    p_run.add_argument("--decompose", action="store_true")
    p_run.set_defaults(func=cmd_run)

    p_verify = sub.add_parser("verify", help="structural invariant suite for a snapshot")
    p_verify.add_argument("state_path", help="run directory or state_q* directory")
    p_verify.set_defaults(func=cmd_verify)

    p_report = sub.add_parser("report", help="emit CSV series, ledger, summary and figures")
    p_report.add_argument("run_dir")
    p_report.set_defaults(func=cmd_report)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except USAGE_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
