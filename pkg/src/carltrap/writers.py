"""CSV and JSON artifact writers and readers.

CSV files carry '#'-prefixed metadata lines (consumers must skip them) and
floats printed with 17 significant digits so values round-trip exactly.
JSON artifacts carry the config digest as a regular "config_digest" field,
since JSON has no comment syntax.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .dynamics import Trajectory
from .model import EnsembleState, theta_to_position
from .sweep import Spectrum


def fmt(x: float) -> str:
    return f"{x:.17g}"


def _header_lines(digest: str, extra: dict | None = None) -> list[str]:
    lines = [f"# config_digest={digest}"]
    for key, val in (extra or {}).items():
        lines.append(f"# {key}={val}")
    return lines


def write_trajectory_csv(path: str | Path, traj: Trajectory, digest: str) -> None:
    rows = ["tau,re_a1,im_a1,abs_a1_sq,re_c,im_c,r,phi"]
    for i in range(traj.times.size):
        a1 = traj.a1_series[i]
        c = traj.c_series[i]
        rows.append(",".join([
            fmt(traj.times[i]), fmt(a1.real), fmt(a1.imag),
            fmt(abs(a1) ** 2), fmt(c.real), fmt(c.imag),
            fmt(traj.r_series[i]), fmt(traj.phi_series[i]),
        ]))
    extra = {"diverged": str(traj.diverged).lower()}
    Path(path).write_text("\n".join(_header_lines(digest, extra) + rows) + "\n")


def write_snapshot_csv(path: str | Path, tau: float, state: EnsembleState,
                       digest: str) -> None:
    rows = ["tau,atom,theta,p,re_sigma,im_sigma,sigma_z,z_over_lambda_mod1"]
    zmod = np.mod(theta_to_position(state.theta), 1.0)
    for j in range(state.n_atoms):
        rows.append(",".join([
            fmt(tau), str(j), fmt(state.theta[j]), fmt(state.p[j]),
            fmt(state.sigma[j].real), fmt(state.sigma[j].imag),
            fmt(state.sigma_z[j]), fmt(zmod[j]),
        ]))
    Path(path).write_text("\n".join(_header_lines(digest) + rows) + "\n")


def read_snapshot_csv(path: str | Path) -> tuple[float, EnsembleState]:
    tau = 0.0
    theta, p, sig, sigz = [], [], [], []
    for line in Path(path).read_text().splitlines():
        if not line or line.startswith("#") or line.startswith("tau,"):
            continue
        parts = line.split(",")
        tau = float(parts[0])
        theta.append(float(parts[2]))
        p.append(float(parts[3]))
        sig.append(complex(float(parts[4]), float(parts[5])))
        sigz.append(float(parts[6]))
    if not theta:
        raise ValueError(f"no atom rows in snapshot {path}")
    return tau, EnsembleState.create(theta, p, sig, sigz, a1=0.0, tau=tau)


def write_spectrum_csv(path: str | Path, spectrum: Spectrum, digest: str) -> None:
    rows = ["delta21,gain"]
    for i in range(spectrum.delta21.size):
        rows.append(f"{fmt(spectrum.delta21[i])},{fmt(spectrum.gain[i])}")
    extra = {"n_diverged": int(np.count_nonzero(spectrum.diverged))}
    Path(path).write_text("\n".join(_header_lines(digest, extra) + rows) + "\n")


def read_spectrum_csv(path: str | Path) -> Spectrum:
    d21, g = [], []
    for line in Path(path).read_text().splitlines():
        if not line or line.startswith("#") or line.startswith("delta21"):
            continue
        a, b = line.split(",")
        d21.append(float(a))
        g.append(float(b))
    if len(d21) < 2:
        raise ValueError(f"no spectrum rows in {path}")
    arr = np.array(d21)
    return Spectrum(delta21=arr, gain=np.array(g),
                    diverged=np.zeros(arr.size, dtype=bool), meta={})


def write_peaks_csv(path: str | Path, rows: list[dict], digest: str) -> None:
    out = ["delta21,gain,nearest_n,offset"]
    for r in rows:
        out.append(",".join([fmt(r["delta21"]), fmt(r["gain"]),
                             str(r["nearest_n"]), fmt(r["offset"])]))
    Path(path).write_text("\n".join(_header_lines(digest) + out) + "\n")


def write_json(path: str | Path, obj: dict, digest: str) -> None:
    payload = {"config_digest": digest, **obj}
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True,
                                     default=_json_default) + "\n")


def _json_default(x):
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, complex):
        return [x.real, x.imag]
    raise TypeError(f"not JSON-serializable: {type(x)}")
