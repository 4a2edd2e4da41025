"""Detuning-grid gain sweeps with deterministic parallel assembly.

Every grid point is an independent run: fresh ensemble, same schedule, its
own delta21.  Points are farmed out to worker processes; results are
reassembled by grid index, so the spectrum is bit-identical for any worker
count.
"""

from __future__ import annotations

import dataclasses
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import diagnostics
from .config import RunConfig
from .dynamics import RunSchedule, integrate
from .model import InvalidParameterError, init_ensemble

CONTRAST_CAP = 1e9


@dataclass(frozen=True)
class SeedPolicy:
    """shared: every point reuses the base seed (identical preparations).
    per_point: point i runs from seed base + i (robustness studies)."""

    mode: str = "shared"
    base: int | None = None

    @classmethod
    def shared(cls) -> "SeedPolicy":
        return cls("shared")

    @classmethod
    def per_point(cls, base: int | None = None) -> "SeedPolicy":
        return cls("per_point", base)

    def seed_for(self, default_seed: int, index: int) -> int:
        if self.mode == "shared":
            return default_seed
        if self.mode == "per_point":
            return (self.base if self.base is not None else default_seed) + index
        raise InvalidParameterError(f"unknown seed policy {self.mode!r}")


@dataclass(frozen=True)
class SweepSpec:
    delta21_min: float
    delta21_max: float
    n_points: int
    base_config: RunConfig
    seed_policy: SeedPolicy = field(default_factory=SeedPolicy.shared)

    def validate(self) -> None:
        if not (math.isfinite(self.delta21_min) and math.isfinite(self.delta21_max)):
            raise InvalidParameterError("sweep bounds must be finite")
        if not self.delta21_min < self.delta21_max:
            raise InvalidParameterError("delta21_min must be below delta21_max")
        if self.n_points < 2:
            raise InvalidParameterError("a sweep needs at least 2 grid points")

    def grid(self) -> np.ndarray:
        n = self.n_points
        span = self.delta21_max - self.delta21_min
        return np.array([self.delta21_min + i * span / (n - 1) for i in range(n)])


@dataclass
class Spectrum:
    """Gain versus pump-probe detuning over a uniform grid."""

    delta21: np.ndarray
    gain: np.ndarray
    diverged: np.ndarray      # (n,) bool per-point divergence flags
    meta: dict = field(default_factory=dict)


def _run_point(args: tuple) -> tuple[int, float, bool]:
    index, cfg_dict, delta21, seed = args
    cfg = RunConfig.from_dict(cfg_dict)
    params = cfg.params.replace(delta21=delta21)
    ics = dataclasses.replace(cfg.ics, seed=seed)
    state = init_ensemble(ics, params)
    # gain needs only the endpoint: record start and end, skip snapshots
    schedule = RunSchedule(tau_end=cfg.schedule.tau_end, dtau=cfg.schedule.dtau,
                           record_stride=max(1, cfg.schedule.n_steps()),
                           snapshot_times=())
    traj = integrate(state, params, schedule, cfg.mode)
    if traj.diverged:
        return index, float("nan"), True
    g = diagnostics.gain(traj.a1_series[-1], cfg.ics.a1_0)
    return index, g, False


def run_sweep(spec: SweepSpec, workers: int = 1) -> Spectrum:
    """Run the grid and assemble results ordered by grid index."""
    spec.validate()
    if workers < 1:
        raise InvalidParameterError("workers must be >= 1")
    grid = spec.grid()
    cfg_dict = spec.base_config.to_dict()
    base_seed = spec.base_config.ics.seed
    tasks = [(i, cfg_dict, float(grid[i]), spec.seed_policy.seed_for(base_seed, i))
             for i in range(spec.n_points)]

    t0 = time.perf_counter()
    if workers == 1:
        results = [_run_point(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=min(workers, spec.n_points)) as pool:
            results = list(pool.map(_run_point, tasks))
    wall = time.perf_counter() - t0

    gain = np.empty(spec.n_points)
    diverged = np.zeros(spec.n_points, dtype=bool)
    for index, g, bad in results:
        gain[index] = g
        diverged[index] = bad
    meta = {
        "config_digest": spec.base_config.digest(),
        "seed_policy": spec.seed_policy.mode,
        "seed_base": spec.seed_policy.base,
        "wall_time_s": wall,
        "workers": workers,
    }
    return Spectrum(delta21=grid, gain=gain, diverged=diverged, meta=meta)


def compare_comb(spectrum: Spectrum, nu: float, min_height: float = 0.0,
                 offset_tol: float | None = None, contrast_min: float = 10.0,
                 min_peaks: int = 5) -> dict:
    """Match detected spectral peaks against the Raman comb delta21 = n nu.

    For each peak: the nearest comb order n, its offset, and the contrast
    against the larger of the two bracketing half-order gains (capped at
    CONTRAST_CAP when the midpoint level is non-positive).  The summary
    passes when at least min_peaks positive-n peaks match within offset_tol
    and beat contrast_min.
    """
    if not nu > 0:
        raise InvalidParameterError("nu must be positive")
    grid = spectrum.delta21
    if grid.size < 3:
        raise InvalidParameterError("spectrum too short for comb analysis")
    step = float(grid[1] - grid[0])
    if offset_tol is None:
        offset_tol = step

    def grid_value(x: float) -> float | None:
        if x < grid[0] - 0.5 * step or x > grid[-1] + 0.5 * step:
            return None
        idx = int(np.argmin(np.abs(grid - x)))
        return float(spectrum.gain[idx])

    peaks = diagnostics.find_peaks(grid, np.nan_to_num(spectrum.gain, nan=-np.inf),
                                   min_height=min_height)
    rows = []
    for d, g in peaks:
        n = int(round(d / nu))
        offset = d - n * nu
        mids = [grid_value((n - 0.5) * nu), grid_value((n + 0.5) * nu)]
        mids = [m for m in mids if m is not None]
        midlevel = max(mids) if mids else None
        if midlevel is None:
            contrast, capped = None, False
            contrast_ok = False
        elif midlevel <= 0.0:
            contrast, capped = CONTRAST_CAP, True
            contrast_ok = g > 0.0
        else:
            raw = g / midlevel
            capped = raw > CONTRAST_CAP
            contrast = min(raw, CONTRAST_CAP)
            contrast_ok = raw >= contrast_min
        matched = abs(offset) <= offset_tol
        rows.append({
            "delta21": d, "gain": g, "nearest_n": n, "offset": offset,
            "midpoint_gain": midlevel, "contrast": contrast,
            "contrast_capped": capped,
            "matched": matched, "passed": bool(matched and contrast_ok),
        })
    passed_positive = [r for r in rows if r["passed"] and r["nearest_n"] >= 1]
    return {
        "nu": nu,
        "grid_step": step,
        "thresholds": {"min_height": min_height, "offset_tol": offset_tol,
                       "contrast_min": contrast_min, "min_peaks": min_peaks},
        "peaks": rows,
        "n_detected": len(rows),
        "n_passed_positive": len(passed_positive),
        "passed_orders": sorted({r["nearest_n"] for r in passed_positive}),
        "passed": len({r["nearest_n"] for r in passed_positive}) >= min_peaks,
    }
