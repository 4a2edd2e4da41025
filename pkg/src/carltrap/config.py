"""Run configuration: JSON schema, defaults, validation and digests.

A config file is a flat JSON object.  Missing keys take the defaults below;
unknown keys are an error (typos must not silently change a run).
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

from .dynamics import MotionMode, RunSchedule
from .model import (InitialConditionSpec, InvalidParameterError, SystemParams,
                    validate_ic_spec, validate_params)

DEFAULTS: dict = {
    # dimensionless system constants
    "nu": 2.0,
    "gamma": 1.0,
    "kappa": 0.01,
    "rho": 3.0,
    "a2": 2.0,
    "delta20": -15.0,
    "delta21": 4.0,
    "n_atoms": 1000,
    # initial conditions
    "theta_span": 4.0 * 3.141592653589793,
    "p_mean": 0.0,
    "p_sigma": 0.8,
    "a1_0": [0.01, 0.0],
    "seed": 1,
    # integration schedule
    "dtau": 0.005,
    "tau_end": 100.0,
    "record_stride": 20,
    "snapshot_times": [],
    # mode and analysis knobs
    "motion": "full",
    "trap_center": 0.0,
    "predictor_snapshot_tau": None,
    "predictor_n_max": None,
}

_INT_KEYS = {"n_atoms", "seed", "record_stride", "predictor_n_max"}


@dataclass(frozen=True)
class RunConfig:
    """Everything needed to reproduce one run."""

    params: SystemParams
    ics: InitialConditionSpec
    schedule: RunSchedule
    mode: MotionMode
    trap_center: float = 0.0
    predictor_snapshot_tau: float | None = None
    predictor_n_max: int | None = None

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        unknown = sorted(set(data) - set(DEFAULTS))
        if unknown:
            raise InvalidParameterError(f"unknown config keys: {', '.join(unknown)}")
        merged = {**DEFAULTS, **data}

        for key in _INT_KEYS:
            v = merged[key]
            if v is None:
                continue
            if isinstance(v, bool) or (isinstance(v, float) and v != int(v)):
                raise InvalidParameterError(f"{key} must be an integer")
            merged[key] = int(v)

        a1 = merged["a1_0"]
        if not (isinstance(a1, (list, tuple)) and len(a1) == 2):
            raise InvalidParameterError("a1_0 must be a [re, im] pair")

        params = SystemParams(
            nu=float(merged["nu"]), gamma=float(merged["gamma"]),
            kappa=float(merged["kappa"]), rho=float(merged["rho"]),
            a2=float(merged["a2"]), delta20=float(merged["delta20"]),
            delta21=float(merged["delta21"]), n_atoms=merged["n_atoms"],
        )
        ics = InitialConditionSpec(
            theta_span=float(merged["theta_span"]),
            p_mean=float(merged["p_mean"]), p_sigma=float(merged["p_sigma"]),
            a1_0=complex(float(a1[0]), float(a1[1])), seed=merged["seed"],
        )
        schedule = RunSchedule(
            tau_end=float(merged["tau_end"]), dtau=float(merged["dtau"]),
            record_stride=merged["record_stride"],
            snapshot_times=tuple(float(t) for t in merged["snapshot_times"]),
        )
        mode = MotionMode.from_string(str(merged["motion"]))

        errors = validate_params(params).errors + validate_ic_spec(ics)
        if errors:
            raise InvalidParameterError("; ".join(errors))
        schedule.validate()

        snap_tau = merged["predictor_snapshot_tau"]
        return cls(
            params=params, ics=ics, schedule=schedule, mode=mode,
            trap_center=float(merged["trap_center"]),
            predictor_snapshot_tau=None if snap_tau is None else float(snap_tau),
            predictor_n_max=merged["predictor_n_max"],
        )

    @classmethod
    def load(cls, path: str | Path) -> "RunConfig":
        text = Path(path).read_text()
        data = json.loads(text)  # json.JSONDecodeError carries line/column
        if not isinstance(data, dict):
            raise InvalidParameterError("config must be a JSON object")
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        return {
            "nu": self.params.nu, "gamma": self.params.gamma,
            "kappa": self.params.kappa, "rho": self.params.rho,
            "a2": self.params.a2, "delta20": self.params.delta20,
            "delta21": self.params.delta21, "n_atoms": self.params.n_atoms,
            "theta_span": self.ics.theta_span, "p_mean": self.ics.p_mean,
            "p_sigma": self.ics.p_sigma,
            "a1_0": [self.ics.a1_0.real, self.ics.a1_0.imag],
            "seed": self.ics.seed,
            "dtau": self.schedule.dtau, "tau_end": self.schedule.tau_end,
            "record_stride": self.schedule.record_stride,
            "snapshot_times": list(self.schedule.snapshot_times),
            "motion": self.mode.value,
            "trap_center": self.trap_center,
            "predictor_snapshot_tau": self.predictor_snapshot_tau,
            "predictor_n_max": self.predictor_n_max,
        }

    def replace(self, **kw) -> "RunConfig":
        d = self.to_dict()
        d.update(kw)
        return RunConfig.from_dict(d)

    def digest(self) -> str:
        """Short stable hash of the canonical config, stamped on outputs."""
        canon = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()[:12]
