"""Command-line surface.

Commands: simulate, sweep, predict, peaks, selftest.  The config file is the
source of truth; flags override.  Exit codes: 0 success, 2 configuration or
usage error, 3 divergence during a simulate run.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

import carltrap

from . import analytics, diagnostics, dynamics, plots, writers
from .config import RunConfig
from .model import EnsembleState, InvalidParameterError, init_ensemble, theta_to_position
from .sweep import SeedPolicy, SweepSpec, compare_comb, run_sweep

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DIVERGED = 3


def default_workers() -> int:
    env = os.environ.get("CARL_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise InvalidParameterError(f"CARL_THREADS must be an integer, got {env!r}")
    return os.cpu_count() or 1


def _tau_tag(tau: float) -> str:
    return f"{tau:g}".replace(".", "p").replace("-", "m")


def predictor_report(cfg: RunConfig, state: EnsembleState, state_tau: float,
                     tau_predict: float) -> dict:
    """Analytic gain prediction from one phase-space snapshot."""
    params = cfg.params
    sp = analytics.steady_polarization(params)
    osc = diagnostics.extract_oscillation(state.theta, state.p, params.nu,
                                          state_tau, center=cfg.trap_center)
    r0 = diagnostics.secular_order_parameter(osc)
    n_max = cfg.predictor_n_max or analytics.default_n_max(float(np.max(osc.amp)))
    ct = analytics.predict_ctilde(
        analytics.PredictorInput(osc, sp.s0, tau_predict, n_max),
        params.kappa, params.delta21, params.nu)
    resonant = analytics.predict_gain_resonant(params, tau_predict, r0,
                                               sp.s0, cfg.ics.a1_0)
    return {
        "snapshot_tau": state_tau,
        "tau_predict": tau_predict,
        "s0": [sp.s0.real, sp.s0.imag],
        "rabi": sp.rabi,
        "r0": r0.r,
        "phi0": r0.phi,
        "n_max": n_max,
        "truncation_residual": ct.tail_bound,
        "truncated": ct.truncated,
        "ctilde": [ct.value.real, ct.value.imag],
        "gain_from_ctilde": analytics.gain_from_ctilde(
            ct.value, params.kappa, tau_predict, cfg.ics.a1_0),
        "gain_resonant": {
            "total": resonant.total,
            "term_amplified": resonant.term_amplified,
            "term_cross": resonant.term_cross,
            "term_decay": resonant.term_decay,
        },
    }


def cmd_simulate(args) -> int:
    cfg = RunConfig.load(args.config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    digest = cfg.digest()

    state = init_ensemble(cfg.ics, cfg.params)
    traj = dynamics.integrate(state, cfg.params, cfg.schedule, cfg.mode)

    writers.write_trajectory_csv(out / "trajectory.csv", traj, digest)
    for tau, snap in traj.snapshots:
        tag = _tau_tag(tau)
        writers.write_snapshot_csv(out / f"snapshot_tau{tag}.csv", tau, snap, digest)
        plots.svg_scatter_plot(
            out / f"phase_space_tau{tag}.svg",
            theta_to_position(snap.theta), snap.p,
            f"phase space at tau = {tau:g}", "z / lambda", "p", digest)
    plots.svg_line_plot(out / "intensity.svg", traj.times,
                        [("", traj.abs_a1_sq)],
                        "probe intensity", "tau", "|A1|^2", digest)
    plots.svg_line_plot(out / "order_parameter.svg", traj.times,
                        [("", traj.r_series)],
                        "phase coherence", "tau", "R", digest)

    if cfg.params.nu > 0:
        if cfg.predictor_snapshot_tau is not None:
            if not traj.snapshots:
                raise InvalidParameterError(
                    "predictor_snapshot_tau set but no snapshots recorded")
            tau_s, snap = min(
                traj.snapshots,
                key=lambda ts: abs(ts[0] - cfg.predictor_snapshot_tau))
        else:
            tau_s, snap = traj.final_state.tau, traj.final_state
        report = predictor_report(cfg, snap, tau_s, cfg.schedule.tau_end)
        writers.write_json(out / "predictor_report.json", report, digest)
    else:
        writers.write_json(out / "predictor_report.json",
                           {"skipped": "nu = 0: no trap, no secular expansion"},
                           digest)

    if traj.diverged:
        print(f"run diverged at tau = {traj.final_state.tau:g}; "
              f"partial outputs in {out}", file=sys.stderr)
        return EXIT_DIVERGED
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = RunConfig.load(args.config)
    if args.points < 2:
        raise InvalidParameterError("--points must be at least 2")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    digest = cfg.digest()
    workers = args.workers if args.workers is not None else default_workers()

    policy = SeedPolicy.per_point(args.seed_base) if args.per_point_seeds \
        else SeedPolicy.shared()
    spec = SweepSpec(delta21_min=args.delta21_min, delta21_max=args.delta21_max,
                     n_points=args.points, base_config=cfg, seed_policy=policy)
    spectrum = run_sweep(spec, workers=workers)

    writers.write_spectrum_csv(out / "spectrum.csv", spectrum, digest)
    plots.svg_line_plot(out / "spectrum.svg", spectrum.delta21,
                        [("", spectrum.gain)],
                        "gain spectrum", "delta21", "G", digest)
    manifest = {
        "delta21_min": spec.delta21_min,
        "delta21_max": spec.delta21_max,
        "n_points": spec.n_points,
        "seed_policy": policy.mode,
        "seed_base": policy.base,
        "config": cfg.to_dict(),
        "code_version": carltrap.__version__,
        "source_digest": carltrap.source_digest(),
    }
    writers.write_json(out / "sweep_manifest.json", manifest, digest)

    if cfg.params.nu > 0:
        report = compare_comb(spectrum, cfg.params.nu,
                              min_height=args.min_height)
        writers.write_peaks_csv(out / "peaks.csv", report["peaks"], digest)
        writers.write_json(out / "comb_report.json", report, digest)
    else:
        writers.write_json(out / "comb_report.json",
                           {"skipped": "nu = 0: no comb expected"}, digest)
    n_bad = int(np.count_nonzero(spectrum.diverged))
    if n_bad:
        print(f"{n_bad} grid point(s) diverged (flagged in spectrum.csv header)",
              file=sys.stderr)
    return EXIT_OK


def cmd_predict(args) -> int:
    cfg = RunConfig.load(args.config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if cfg.params.nu <= 0:
        raise InvalidParameterError("predict requires nu > 0")
    tau_s, state = writers.read_snapshot_csv(args.snapshot)
    if state.n_atoms != cfg.params.n_atoms:
        cfg = cfg.replace(n_atoms=state.n_atoms)
    tau_predict = args.tau if args.tau is not None else cfg.schedule.tau_end
    report = predictor_report(cfg, state, tau_s, tau_predict)
    writers.write_json(out / "predictor_report.json", report, cfg.digest())
    return EXIT_OK


def cmd_peaks(args) -> int:
    spectrum = writers.read_spectrum_csv(args.spectrum)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    digest = _digest_from_csv(args.spectrum)
    report = compare_comb(spectrum, args.nu, min_height=args.min_height)
    writers.write_peaks_csv(out / "peaks.csv", report["peaks"], digest)
    writers.write_json(out / "comb_report.json", report, digest)
    n = report["n_passed_positive"]
    print(f"{report['n_detected']} peaks detected, {n} matched positive comb orders")
    return EXIT_OK


def _digest_from_csv(path: str) -> str:
    for line in Path(path).read_text().splitlines():
        if line.startswith("# config_digest="):
            return line.split("=", 1)[1]
        if not line.startswith("#"):
            break
    return "unknown"


def cmd_selftest(_args) -> int:
    from .selftest import run_checks
    results = run_checks()
    width = max(len(r.name) for r in results)
    all_ok = True
    for r in results:
        mark = "PASS" if r.passed else "FAIL"
        all_ok &= r.passed
        print(f"{r.name:<{width}}  {mark}  {r.detail}")
    print("selftest:", "all checks passed" if all_ok else "FAILURES present")
    return EXIT_OK if all_ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="carltrap",
        description="Trapped-ensemble collective recoil lasing: simulation, "
                    "gain sweeps and analytic gain prediction.")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="integrate one run and write artifacts")
    sim.add_argument("--config", required=True)
    sim.add_argument("--out", required=True)
    sim.set_defaults(fn=cmd_simulate)

    sw = sub.add_parser("sweep", help="gain spectrum over a detuning grid")
    sw.add_argument("--config", required=True)
    sw.add_argument("--out", required=True)
    sw.add_argument("--delta21-min", type=float, default=-10.0)
    sw.add_argument("--delta21-max", type=float, default=25.0)
    sw.add_argument("--points", type=int, default=141)
    sw.add_argument("--workers", type=int, default=None,
                    help="default: CARL_THREADS or machine parallelism")
    sw.add_argument("--min-height", type=float, default=1.0,
                    help="peak threshold for the comb report")
    sw.add_argument("--per-point-seeds", action="store_true")
    sw.add_argument("--seed-base", type=int, default=None)
    sw.set_defaults(fn=cmd_sweep)

    pr = sub.add_parser("predict", help="analytic gain from a snapshot CSV")
    pr.add_argument("--config", required=True)
    pr.add_argument("--snapshot", required=True)
    pr.add_argument("--out", required=True)
    pr.add_argument("--tau", type=float, default=None,
                    help="prediction horizon (default: config tau_end)")
    pr.set_defaults(fn=cmd_predict)

    pk = sub.add_parser("peaks", help="comb analysis of a spectrum CSV")
    pk.add_argument("--spectrum", required=True)
    pk.add_argument("--nu", type=float, required=True)
    pk.add_argument("--min-height", type=float, default=1.0)
    pk.add_argument("--out", required=True)
    pk.set_defaults(fn=cmd_peaks)

    st = sub.add_parser("selftest", help="run the fast invariant suite")
    st.set_defaults(fn=cmd_selftest)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_CONFIG if e.code not in (0, None) else 0
    try:
        return args.fn(args)
    except json.JSONDecodeError as e:
        print(f"config error: malformed JSON at line {e.lineno} column {e.colno}: "
              f"{e.msg}", file=sys.stderr)
        return EXIT_CONFIG
    except (InvalidParameterError, FileNotFoundError, ValueError, OSError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
