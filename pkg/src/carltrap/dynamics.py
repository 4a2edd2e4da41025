"""Coupled atom-field equations of motion and the fixed-step RK4 integrator.

The dimensionless system integrated here, for atom j and probe amplitude A1:

    dtheta_j/dtau   = p_j
    dp_j/dtau       = -nu^2 theta_j - A1* sigma_j e^{-i theta_j}
                      - A1 sigma_j* e^{i theta_j} + A2 (sigma_j + sigma_j*)
    dsigma_zj/dtau  = 2 rho [ (A1* e^{-i theta_j} + A2) sigma_j + c.c. ]
                      - Gamma (sigma_zj - 1)
    dsigma_j/dtau   = i (Delta20 + p_j/2) sigma_j
                      - rho sigma_zj (A1 e^{i theta_j} + A2) - Gamma sigma_j
    dA1/dtau        = i Delta21 A1 + (1/N) sum_j sigma_j e^{-i theta_j}
                      - kappa A1

dp and dsigma_z are computed as explicitly real quantities.  The collective
sum runs in fixed atom order, so results do not depend on worker count.
Everything transcendental lives in the jitted kernels; stepping in Python via
step_rk4 and the fused integrate loop produce bit-identical states.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from . import diagnostics
from .model import EnsembleState, InvalidParameterError, SystemParams, require_valid

DIVERGENCE_GUARD = 1e12


class NonFiniteStateError(FloatingPointError):
    """A state or derivative stopped being finite."""


class MotionMode(enum.Enum):
    """Full recoil dynamics, or internal-state-only with frozen positions."""

    FULL = "full"
    MOTIONLESS = "motionless"

    @classmethod
    def from_string(cls, name: str) -> "MotionMode":
        try:
            return cls(name.lower())
        except ValueError:
            raise InvalidParameterError(f"unknown motion mode {name!r}") from None


@dataclass(frozen=True)
class RunSchedule:
    """Fixed-step integration plan.

    tau_end is realized as n_steps * dtau with n_steps = round(tau_end/dtau).
    Time-series samples land every record_stride steps plus the final step;
    snapshots land on the step nearest each requested time.
    """

    tau_end: float
    dtau: float = 0.005
    record_stride: int = 20
    snapshot_times: tuple[float, ...] = ()

    def n_steps(self) -> int:
        return int(round(self.tau_end / self.dtau))

    def validate(self) -> None:
        if not (math.isfinite(self.dtau) and self.dtau > 0):
            raise InvalidParameterError("dtau must be positive")
        if not (math.isfinite(self.tau_end) and self.tau_end >= 0):
            raise InvalidParameterError("tau_end must be non-negative")
        if self.record_stride < 1:
            raise InvalidParameterError("record_stride must be >= 1")
        for t in self.snapshot_times:
            if not (0.0 <= t <= self.tau_end + 0.5 * self.dtau):
                raise InvalidParameterError(
                    f"snapshot time {t:g} outside [0, tau_end]")


@dataclass
class StateDeriv:
    """Component-wise derivative of an EnsembleState."""

    dtheta: np.ndarray
    dp: np.ndarray
    dsigma: np.ndarray
    dsigma_z: np.ndarray
    da1: complex


@dataclass
class Trajectory:
    """Recorded time series plus full-ensemble snapshots."""

    times: np.ndarray          # (S,) sample times
    a1_series: np.ndarray      # (S,) complex probe amplitude
    c_series: np.ndarray       # (S,) complex coherence (1/N) sum sigma e^{-i theta}
    r_series: np.ndarray       # (S,) order-parameter magnitude
    phi_series: np.ndarray     # (S,) order-parameter phase
    snapshots: list[tuple[float, EnsembleState]] = field(default_factory=list)
    final_state: EnsembleState | None = None
    diverged: bool = False

    @property
    def abs_a1_sq(self) -> np.ndarray:
        return np.abs(self.a1_series) ** 2


# ---------------------------------------------------------------------------
# jitted kernels
# ---------------------------------------------------------------------------

@njit(cache=True)
def _eval_rhs(theta, p, sigma, sigma_z, a1,
              nu, gamma, rho, a2, d20, d21, kappa, motionless,
              d_theta, d_p, d_sigma, d_sigma_z):
    """Write the derivative into the d_* buffers; return dA1/dtau."""
    n = theta.shape[0]
    nu2 = nu * nu
    acc = 0.0 + 0.0j
    for j in range(n):
        c = np.cos(theta[j])
        s = np.sin(theta[j])
        em = complex(c, -s)                 # e^{-i theta_j}
        a1e = a1 * complex(c, s)            # A1 e^{+i theta_j}
        w = a1e + a2                        # A1 e^{i theta_j} + A2
        sj = sigma[j]
        if motionless:
            d_theta[j] = 0.0
            d_p[j] = 0.0
        else:
            d_theta[j] = p[j]
            d_p[j] = (-nu2 * theta[j]
                      - 2.0 * (a1e.conjugate() * sj).real
                      + 2.0 * a2 * sj.real)
        d_sigma_z[j] = (4.0 * rho * (w.conjugate() * sj).real
                        - gamma * (sigma_z[j] - 1.0))
        d_sigma[j] = 1j * (d20 + 0.5 * p[j]) * sj - rho * sigma_z[j] * w - gamma * sj
        acc += sj * em
    return 1j * d21 * a1 + acc / n - kappa * a1


@njit(cache=True)
def _combine_stage(out, y, h, k, n):
    for j in range(n):
        out[j] = y[j] + h * k[j]


@njit(cache=True)
def _combine_final(y, sixth, k1, k2, k3, k4, n):
    for j in range(n):
        y[j] = y[j] + sixth * (((k1[j] + 2.0 * k2[j]) + 2.0 * k3[j]) + k4[j])


@njit(cache=True)
def _run_loop(theta, p, sigma, sigma_z, a1,
              nu, gamma, rho, a2, d20, d21, kappa,
              dtau, n_steps, stride, motionless, guard,
              snap_steps,
              rec_step, rec_a1, rec_c, rec_r, rec_phi,
              snap_theta, snap_p, snap_sigma, snap_sigma_z, snap_a1):
    """Fused RK4 loop.  Mutates the state arrays in place.

    Returns (a1_final, n_recorded, n_snapped, diverged, stop_step).
    Divergence (any |field| > guard, or a non-finite value) is checked at
    every recorded sample; the offending sample is kept and the run stops.
    """
    n = theta.shape[0]
    half = 0.5 * dtau
    sixth = dtau / 6.0

    k1t = np.empty(n); k1p = np.empty(n); k1z = np.empty(n)
    k2t = np.empty(n); k2p = np.empty(n); k2z = np.empty(n)
    k3t = np.empty(n); k3p = np.empty(n); k3z = np.empty(n)
    k4t = np.empty(n); k4p = np.empty(n); k4z = np.empty(n)
    k1s = np.empty(n, np.complex128); k2s = np.empty(n, np.complex128)
    k3s = np.empty(n, np.complex128); k4s = np.empty(n, np.complex128)
    st = np.empty(n); sp = np.empty(n); sz = np.empty(n)
    ss = np.empty(n, np.complex128)

    ri = 0
    si = 0
    diverged = False
    stop_step = 0

    for step in range(n_steps + 1):
        if step > 0:
            # classical RK4 over the full coupled vector field
            ka1_1 = _eval_rhs(theta, p, sigma, sigma_z, a1,
                              nu, gamma, rho, a2, d20, d21, kappa, motionless,
                              k1t, k1p, k1s, k1z)
            _combine_stage(st, theta, half, k1t, n)
            _combine_stage(sp, p, half, k1p, n)
            _combine_stage(ss, sigma, half, k1s, n)
            _combine_stage(sz, sigma_z, half, k1z, n)
            ka1_2 = _eval_rhs(st, sp, ss, sz, a1 + half * ka1_1,
                              nu, gamma, rho, a2, d20, d21, kappa, motionless,
                              k2t, k2p, k2s, k2z)
            _combine_stage(st, theta, half, k2t, n)
            _combine_stage(sp, p, half, k2p, n)
            _combine_stage(ss, sigma, half, k2s, n)
            _combine_stage(sz, sigma_z, half, k2z, n)
            ka1_3 = _eval_rhs(st, sp, ss, sz, a1 + half * ka1_2,
                              nu, gamma, rho, a2, d20, d21, kappa, motionless,
                              k3t, k3p, k3s, k3z)
            _combine_stage(st, theta, dtau, k3t, n)
            _combine_stage(sp, p, dtau, k3p, n)
            _combine_stage(ss, sigma, dtau, k3s, n)
            _combine_stage(sz, sigma_z, dtau, k3z, n)
            ka1_4 = _eval_rhs(st, sp, ss, sz, a1 + dtau * ka1_3,
                              nu, gamma, rho, a2, d20, d21, kappa, motionless,
                              k4t, k4p, k4s, k4z)
            _combine_final(theta, sixth, k1t, k2t, k3t, k4t, n)
            _combine_final(p, sixth, k1p, k2p, k3p, k4p, n)
            _combine_final(sigma, sixth, k1s, k2s, k3s, k4s, n)
            _combine_final(sigma_z, sixth, k1z, k2z, k3z, k4z, n)
            a1 = a1 + sixth * (((ka1_1 + 2.0 * ka1_2) + 2.0 * ka1_3) + ka1_4)

        if step % stride == 0 or step == n_steps:
            acc_c = 0.0 + 0.0j
            acc_r = 0.0 + 0.0j
            m = abs(a1)
            lin = a1.real + a1.imag
            for j in range(n):
                c = np.cos(theta[j])
                s = np.sin(theta[j])
                em = complex(c, -s)
                acc_c += sigma[j] * em
                acc_r += em
                a_t = abs(theta[j])
                if a_t > m:
                    m = a_t
                a_p = abs(p[j])
                if a_p > m:
                    m = a_p
                a_s = abs(sigma[j])
                if a_s > m:
                    m = a_s
                a_z = abs(sigma_z[j])
                if a_z > m:
                    m = a_z
                lin += theta[j] + p[j] + sigma_z[j] + sigma[j].real + sigma[j].imag
            rec_step[ri] = step
            rec_a1[ri] = a1
            rec_c[ri] = acc_c / n
            rmean = acc_r / n
            rmag = abs(rmean)
            rec_r[ri] = rmag
            rec_phi[ri] = np.arctan2(rmean.imag, rmean.real) if rmag > 0.0 else 0.0
            ri += 1
            if (m > guard) or (not np.isfinite(lin)):
                diverged = True

        if si < snap_steps.shape[0] and snap_steps[si] == step:
            for j in range(n):
                snap_theta[si, j] = theta[j]
                snap_p[si, j] = p[j]
                snap_sigma[si, j] = sigma[j]
                snap_sigma_z[si, j] = sigma_z[j]
            snap_a1[si] = a1
            si += 1

        stop_step = step
        if diverged:
            break

    return a1, ri, si, diverged, stop_step


# ---------------------------------------------------------------------------
# python-level API
# ---------------------------------------------------------------------------

def _first_bad_atom(state: EnsembleState) -> str:
    if not (math.isfinite(state.a1.real) and math.isfinite(state.a1.imag)):
        return "probe amplitude a1"
    bad = ~(np.isfinite(state.theta) & np.isfinite(state.p)
            & np.isfinite(state.sigma.real) & np.isfinite(state.sigma.imag)
            & np.isfinite(state.sigma_z))
    idx = np.flatnonzero(bad)
    return f"atom {idx[0]}" if idx.size else "unknown component"


def _state_finite(state: EnsembleState) -> bool:
    lin = (state.a1.real + state.a1.imag
           + float(state.theta.sum()) + float(state.p.sum())
           + float(state.sigma_z.sum()))
    csum = complex(state.sigma.sum())
    return math.isfinite(lin) and math.isfinite(csum.real) and math.isfinite(csum.imag)


def rhs(state: EnsembleState, params: SystemParams,
        mode: MotionMode = MotionMode.FULL) -> StateDeriv:
    """Evaluate the equations of motion at one state."""
    require_valid(params)
    if not _state_finite(state):
        raise NonFiniteStateError(f"non-finite state input at {_first_bad_atom(state)}")
    n = state.n_atoms
    d_theta = np.empty(n)
    d_p = np.empty(n)
    d_sigma = np.empty(n, np.complex128)
    d_sigma_z = np.empty(n)
    da1 = _eval_rhs(state.theta, state.p, state.sigma, state.sigma_z,
                    complex(state.a1),
                    params.nu, params.gamma, params.rho, params.a2,
                    params.delta20, params.delta21, params.kappa,
                    mode is MotionMode.MOTIONLESS,
                    d_theta, d_p, d_sigma, d_sigma_z)
    return StateDeriv(d_theta, d_p, d_sigma, d_sigma_z, complex(da1))


def _deriv_finite(d: StateDeriv) -> bool:
    lin = (d.da1.real + d.da1.imag + float(d.dtheta.sum())
           + float(d.dp.sum()) + float(d.dsigma_z.sum()))
    csum = complex(d.dsigma.sum())
    return math.isfinite(lin) and math.isfinite(csum.real) and math.isfinite(csum.imag)


def step_rk4(state: EnsembleState, params: SystemParams, dtau: float,
             mode: MotionMode = MotionMode.FULL, rhs_fn=None) -> EnsembleState:
    """One RK4 step of size dtau; returns a new state, never mutates input.

    Stage arithmetic matches the fused integrate kernel bit-for-bit.  A
    non-finite derivative aborts with the failing stage index.  rhs_fn may
    substitute the vector field (used by the self-test mutation check).
    """
    if not (math.isfinite(dtau) and dtau > 0):
        raise InvalidParameterError("dtau must be positive")
    f = rhs if rhs_fn is None else rhs_fn
    half = 0.5 * dtau
    sixth = dtau / 6.0

    def stage_state(h: float, k: StateDeriv) -> EnsembleState:
        return EnsembleState(
            state.tau, state.theta + h * k.dtheta, state.p + h * k.dp,
            state.sigma + h * k.dsigma, state.sigma_z + h * k.dsigma_z,
            state.a1 + h * k.da1)

    ks = []
    for i, prev in enumerate((None, half, half, dtau)):
        probe = state if prev is None else stage_state(prev, ks[-1])
        k = f(probe, params, mode)
        if not _deriv_finite(k):
            raise NonFiniteStateError(f"non-finite derivative at RK4 stage {i + 1}")
        ks.append(k)
    k1, k2, k3, k4 = ks
    return EnsembleState(
        state.tau + dtau,
        state.theta + sixth * (k1.dtheta + 2.0 * k2.dtheta + 2.0 * k3.dtheta + k4.dtheta),
        state.p + sixth * (k1.dp + 2.0 * k2.dp + 2.0 * k3.dp + k4.dp),
        state.sigma + sixth * (k1.dsigma + 2.0 * k2.dsigma + 2.0 * k3.dsigma + k4.dsigma),
        state.sigma_z + sixth * (k1.dsigma_z + 2.0 * k2.dsigma_z + 2.0 * k3.dsigma_z + k4.dsigma_z),
        state.a1 + sixth * (((k1.da1 + 2.0 * k2.da1) + 2.0 * k3.da1) + k4.da1),
    )


def _snapshot_steps(schedule: RunSchedule) -> np.ndarray:
    steps = sorted({int(round(t / schedule.dtau)) for t in schedule.snapshot_times})
    n_steps = schedule.n_steps()
    return np.array([min(s, n_steps) for s in steps], dtype=np.int64)


def integrate(state: EnsembleState, params: SystemParams, schedule: RunSchedule,
              mode: MotionMode = MotionMode.FULL, rhs_fn=None) -> Trajectory:
    """Run the schedule from tau = 0 and record the trajectory.

    With the default vector field this dispatches to the fused jitted loop;
    a custom rhs_fn falls back to stepping in Python.  Both paths yield the
    same recorded states bit-for-bit.
    """
    require_valid(params)
    schedule.validate()
    if state.n_atoms != params.n_atoms:
        raise InvalidParameterError(
            f"state has {state.n_atoms} atoms, params expect {params.n_atoms}")
    if not _state_finite(state):
        raise NonFiniteStateError(f"non-finite state input at {_first_bad_atom(state)}")

    work = state.copy()
    if mode is MotionMode.MOTIONLESS:
        work.p[:] = 0.0

    if rhs_fn is not None:
        return _integrate_python(work, params, schedule, mode, rhs_fn)

    n_steps = schedule.n_steps()
    stride = schedule.record_stride
    snap_steps = _snapshot_steps(schedule)
    n_rec_max = n_steps // stride + 2
    n_snap = snap_steps.size

    rec_step = np.empty(n_rec_max, np.int64)
    rec_a1 = np.empty(n_rec_max, np.complex128)
    rec_c = np.empty(n_rec_max, np.complex128)
    rec_r = np.empty(n_rec_max)
    rec_phi = np.empty(n_rec_max)
    n = work.n_atoms
    snap_theta = np.empty((n_snap, n))
    snap_p = np.empty((n_snap, n))
    snap_sigma = np.empty((n_snap, n), np.complex128)
    snap_sigma_z = np.empty((n_snap, n))
    snap_a1 = np.empty(n_snap, np.complex128)

    a1_final, ri, si, diverged, stop_step = _run_loop(
        work.theta, work.p, work.sigma, work.sigma_z, complex(work.a1),
        params.nu, params.gamma, params.rho, params.a2,
        params.delta20, params.delta21, params.kappa,
        schedule.dtau, n_steps, stride, mode is MotionMode.MOTIONLESS,
        DIVERGENCE_GUARD, snap_steps,
        rec_step, rec_a1, rec_c, rec_r, rec_phi,
        snap_theta, snap_p, snap_sigma, snap_sigma_z, snap_a1)

    snapshots = [
        (snap_steps[i] * schedule.dtau,
         EnsembleState(snap_steps[i] * schedule.dtau,
                       snap_theta[i].copy(), snap_p[i].copy(),
                       snap_sigma[i].copy(), snap_sigma_z[i].copy(),
                       complex(snap_a1[i])))
        for i in range(si)
    ]
    final = EnsembleState(stop_step * schedule.dtau, work.theta, work.p,
                          work.sigma, work.sigma_z, complex(a1_final))
    return Trajectory(
        times=rec_step[:ri] * schedule.dtau,
        a1_series=rec_a1[:ri].copy(),
        c_series=rec_c[:ri].copy(),
        r_series=rec_r[:ri].copy(),
        phi_series=rec_phi[:ri].copy(),
        snapshots=snapshots,
        final_state=final,
        diverged=bool(diverged),
    )


def _integrate_python(work: EnsembleState, params: SystemParams,
                      schedule: RunSchedule, mode: MotionMode, rhs_fn) -> Trajectory:
    n_steps = schedule.n_steps()
    stride = schedule.record_stride
    snap_steps = list(_snapshot_steps(schedule))
    times, a1s, cs, rs, phis = [], [], [], [], []
    snapshots: list[tuple[float, EnsembleState]] = []
    diverged = False

    cur = work
    for step in range(n_steps + 1):
        if step > 0:
            cur = step_rk4(cur, params, schedule.dtau, mode, rhs_fn=rhs_fn)
            cur.tau = step * schedule.dtau
        if step % stride == 0 or step == n_steps:
            times.append(step * schedule.dtau)
            a1s.append(cur.a1)
            cs.append(diagnostics.coherence(cur.sigma, cur.theta))
            op = diagnostics.order_parameter(cur.theta)
            rs.append(op.r)
            phis.append(op.phi)
            mx = max(abs(cur.a1), np.max(np.abs(cur.theta)),
                     np.max(np.abs(cur.p)), np.max(np.abs(cur.sigma)),
                     np.max(np.abs(cur.sigma_z)))
            if not (mx <= DIVERGENCE_GUARD):
                diverged = True
        if snap_steps and step == snap_steps[0]:
            snapshots.append((step * schedule.dtau, cur.copy()))
            snap_steps.pop(0)
        if diverged:
            break

    return Trajectory(
        times=np.array(times), a1_series=np.array(a1s, np.complex128),
        c_series=np.array(cs, np.complex128), r_series=np.array(rs),
        phi_series=np.array(phis), snapshots=snapshots,
        final_state=cur, diverged=diverged,
    )


def reconstruct_probe(c_series: np.ndarray, times: np.ndarray, a1_0: complex,
                      params: SystemParams) -> np.ndarray:
    """Quadrature oracle for the probe amplitude.

    Evaluates
        A1(tau) = e^{(i Delta21 - kappa) tau}
                  [ A1(0) + integral_0^tau C(t) e^{(kappa - i Delta21) t} dt ]
    by cumulative trapezoid over the recorded coherence samples.  Independent
    of the stepped A1, so it cross-checks the integrator.
    """
    c_series = np.asarray(c_series, dtype=np.complex128)
    times = np.asarray(times, dtype=np.float64)
    if c_series.shape != times.shape:
        raise ValueError("c_series and times must have matching lengths")
    if times.size < 1 or times[0] != 0.0:
        raise ValueError("times must start at 0")
    z = params.kappa - 1j * params.delta21
    f = c_series * np.exp(z * times)
    integral = np.empty_like(f)
    integral[0] = 0.0
    if times.size > 1:
        seg = 0.5 * np.diff(times) * (f[1:] + f[:-1])
        integral[1:] = np.cumsum(seg)
    return np.exp(-z * times) * (a1_0 + integral)
