"""Fast invariant suite behind the `selftest` CLI command.

Each check runs in seconds at small N and returns a CheckResult; the suite
is hermetic (fixed seeds, no entropy, no network).  The Bloch check accepts
a substitute vector field so tests can prove the suite catches a broken
right-hand side.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import analytics, dynamics
from .model import EnsembleState, InitialConditionSpec, SystemParams, init_ensemble

# mild rates so integrator truncation stays far below the drift budget
_BLOCH_PARAMS = SystemParams(nu=2.0, gamma=0.0, kappa=0.01, rho=1.0, a2=0.5,
                             delta20=-2.0, delta21=1.0, n_atoms=8)


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str


def check_bloch_conservation(rhs_fn=None, n_atoms: int = 8, tau_end: float = 20.0,
                             tol: float = 1e-6) -> CheckResult:
    """With gamma = 0 each atom conserves |sigma|^2 + sigma_z^2/4."""
    params = _BLOCH_PARAMS.replace(n_atoms=n_atoms)
    state = init_ensemble(InitialConditionSpec(seed=7), params)
    sched = dynamics.RunSchedule(tau_end=tau_end, dtau=0.005,
                                 record_stride=10**9)
    traj = dynamics.integrate(state, params, sched, rhs_fn=rhs_fn)
    before = np.abs(state.sigma) ** 2 + 0.25 * state.sigma_z**2
    after = (np.abs(traj.final_state.sigma) ** 2
             + 0.25 * traj.final_state.sigma_z**2)
    drift = float(np.max(np.abs(after - before)))
    return CheckResult("bloch_conservation", drift < tol,
                       f"max drift {drift:.3e} (tol {tol:g})")


def _harmonic_error(dtau: float) -> float:
    """Endpoint error of the decoupled trap oscillator theta(tau) = cos(2 tau)."""
    params = SystemParams(nu=2.0, gamma=0.0, kappa=0.0, rho=1.0, a2=0.0,
                          delta20=0.0, delta21=0.0, n_atoms=1)
    state = EnsembleState.create([1.0], [0.0], [0.0], [0.0], a1=0.0)
    steps = int(round(0.5 * math.pi / dtau))
    for _ in range(steps):
        state = dynamics.step_rk4(state, params, dtau)
    return abs(float(state.theta[0]) - math.cos(2.0 * steps * dtau))


def check_rk4_order() -> CheckResult:
    h = 0.5 * math.pi / 128.0
    ratio = _harmonic_error(h) / _harmonic_error(0.5 * h)
    return CheckResult("rk4_order", 12.0 <= ratio <= 20.0,
                       f"error(h)/error(h/2) = {ratio:.2f} (expect ~16)")


def check_oracle_equivalence() -> CheckResult:
    """Directly integrated A1 vs the quadrature of the coherence record."""
    params = SystemParams(nu=2.0, gamma=1.0, kappa=0.01, rho=3.0, a2=2.0,
                          delta20=-15.0, delta21=4.0, n_atoms=16)
    state = init_ensemble(InitialConditionSpec(seed=3), params)
    sched = dynamics.RunSchedule(tau_end=30.0, dtau=0.005, record_stride=10)
    traj = dynamics.integrate(state, params, sched)
    recon = dynamics.reconstruct_probe(traj.c_series, traj.times,
                                       state.a1, params)
    err = float(np.max(np.abs(recon - traj.a1_series)))
    scale = float(np.max(np.abs(traj.a1_series)))
    ok = err < 1e-3 * scale
    return CheckResult("oracle_equivalence",
                       ok, f"max |A1_quad - A1_direct| = {err:.3e} "
                           f"vs 1e-3 * max|A1| = {1e-3 * scale:.3e}")


def check_jacobi_anger() -> CheckResult:
    worst = 0.0
    for theta0 in (0.5, 2.0, 10.0):
        n_max = analytics.default_n_max(theta0)
        worst = max(worst, analytics.jacobi_anger_residual(theta0, 2.0, n_max))
    return CheckResult("jacobi_anger", worst < 1e-8,
                       f"max truncation residual {worst:.3e} (tol 1e-8)")


def check_kernel_limit() -> CheckResult:
    kappa, tau = 0.01, 100.0
    exact = math.expm1(kappa * tau) / kappa
    at_zero = analytics.resonance_kernel(kappa, 0.0, tau)
    rel = abs(at_zero - exact) / exact
    cont = max(abs(analytics.resonance_kernel(kappa, d, tau) - at_zero)
               for d in (1e-9, -1e-9)) / abs(at_zero)
    ok = rel < 1e-6 and cont < 1e-6
    return CheckResult("kernel_limit", ok,
                       f"resonant rel err {rel:.2e}, continuity {cont:.2e}")


def run_checks(rhs_fn=None) -> list[CheckResult]:
    return [
        check_bloch_conservation(rhs_fn=rhs_fn),
        check_rk4_order(),
        check_oracle_equivalence(),
        check_jacobi_anger(),
        check_kernel_limit(),
    ]
