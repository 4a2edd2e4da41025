"""Domain types, nondimensionalization and initial-condition generation.

Conventions (dimensionless variables used throughout the package):
    theta_j = 2 k <z_j>             position, radians of the 2k grating
    p_j     = <p_j> / (hbar k rho)  momentum
    sigma_j                         complex polarization
    sigma_zj = -2 <sz_j>            inversion; ground state is +1, NOT -1.
                                    This inverts the usual optical-Bloch sign
                                    convention, so the Bloch bound reads
                                    |sigma|^2 + sigma_z^2 / 4 <= 1/4.
    tau     = omega_r rho t         time
with omega_r = 2 hbar k^2 / m the two-photon recoil frequency and
rho = (g sqrt(N) / omega_r)^(2/3) the collective coupling parameter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

TWO_PI = 2.0 * math.pi
# one optical wavelength of the pump-probe standing wave, in theta units
THETA_PER_WAVELENGTH = 4.0 * math.pi


class InvalidParameterError(ValueError):
    """A parameter set or initial-condition spec violates its invariants."""


@dataclass(frozen=True)
class SystemParams:
    """Dimensionless model constants shared by one run."""

    nu: float            # trap frequency
    gamma: float         # polarization/population damping
    kappa: float         # probe-field damping
    rho: float           # collective coupling parameter
    a2: float            # real undepleted pump amplitude
    delta20: float       # pump-atom detuning
    delta21: float       # pump-probe detuning
    n_atoms: int

    def replace(self, **kw) -> "SystemParams":
        d = self.__dict__.copy()
        d.update(kw)
        return SystemParams(**d)


@dataclass(frozen=True)
class PhysicalParams:
    """Laboratory-frame inputs (SI units) for the dimensionless mapping."""

    k: float             # optical wavenumber, 1/m
    m: float             # atomic mass, kg
    g: float             # atom-field coupling, rad/s
    n_atoms: int
    nu_z: float          # axial trap frequency, rad/s
    omega0: float        # atomic transition frequency, rad/s
    omega1: float        # probe frequency, rad/s
    omega2: float        # pump frequency, rad/s
    hbar: float = 1.054571817e-34


@dataclass
class AtomState:
    """Single-atom view of the ensemble state."""

    theta: float
    p: float
    sigma: complex
    sigma_z: float

    def bloch_radius_sq(self) -> float:
        """|sigma|^2 + sigma_z^2/4; conserved at 1/4 when gamma = 0."""
        return abs(self.sigma) ** 2 + 0.25 * self.sigma_z**2


@dataclass
class EnsembleState:
    """Per-component contiguous arrays for the N-atom state plus the probe.

    The structure-of-arrays layout is a performance contract: the
    integrator kernels iterate these buffers directly.
    """

    tau: float
    theta: np.ndarray      # (N,) float64
    p: np.ndarray          # (N,) float64
    sigma: np.ndarray      # (N,) complex128
    sigma_z: np.ndarray    # (N,) float64
    a1: complex

    @property
    def n_atoms(self) -> int:
        return self.theta.shape[0]

    def atom(self, j: int) -> AtomState:
        return AtomState(
            float(self.theta[j]), float(self.p[j]),
            complex(self.sigma[j]), float(self.sigma_z[j]),
        )

    @property
    def atoms(self) -> list[AtomState]:
        return [self.atom(j) for j in range(self.n_atoms)]

    def copy(self) -> "EnsembleState":
        return EnsembleState(
            self.tau, self.theta.copy(), self.p.copy(),
            self.sigma.copy(), self.sigma_z.copy(), complex(self.a1),
        )

    @classmethod
    def create(cls, theta, p, sigma, sigma_z, a1, tau=0.0) -> "EnsembleState":
        """Build a state from array-likes, coercing dtypes and shapes."""
        theta = np.ascontiguousarray(theta, dtype=np.float64)
        p = np.ascontiguousarray(p, dtype=np.float64)
        sigma = np.ascontiguousarray(sigma, dtype=np.complex128)
        sigma_z = np.ascontiguousarray(sigma_z, dtype=np.float64)
        n = theta.shape[0]
        if not (p.shape == sigma.shape == sigma_z.shape == (n,)):
            raise InvalidParameterError("state arrays must share one length")
        if n < 1:
            raise InvalidParameterError("ensemble must contain at least one atom")
        return cls(float(tau), theta, p, sigma, sigma_z, complex(a1))


@dataclass(frozen=True)
class InitialConditionSpec:
    """Reproducible initial-condition recipe.

    Positions are uniform over [0, theta_span); the default span 4*pi is one
    optical wavelength.  Momenta are Gaussian(p_mean, p_sigma) generated by a
    Box-Muller transform of PCG64 uniforms, so a seed pins the ensemble
    bit-for-bit with no OS entropy involved.
    """

    theta_span: float = THETA_PER_WAVELENGTH
    p_mean: float = 0.0
    p_sigma: float = 0.8
    a1_0: complex = 0.01 + 0.0j
    seed: int = 1


def validate_ic_spec(spec: InitialConditionSpec) -> list[str]:
    errors = []
    for name in ("theta_span", "p_mean", "p_sigma"):
        v = getattr(spec, name)
        if not math.isfinite(v):
            errors.append(f"{name} must be finite")
    if not (math.isfinite(spec.a1_0.real) and math.isfinite(spec.a1_0.imag)):
        errors.append("a1_0 must be finite")
    if spec.theta_span <= 0:
        errors.append("theta_span must be positive")
    if spec.p_sigma < 0:
        errors.append("p_sigma must be non-negative")
    if abs(spec.a1_0) == 0:
        errors.append("a1_0 must be non-zero (the probe seed replaces spontaneous startup)")
    return errors


@dataclass
class ValidationReport:
    errors: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors


def validate_params(params: SystemParams,
                    a1_estimate: float | None = None) -> ValidationReport:
    """Collect invariant violations; never raises.

    With an |A1| estimate, also checks the secular-approximation condition
    nu >= 2 rho |A1 A2| / |delta20| and reports a warning (not an error)
    when it fails.  |delta20| is used because the sign of the detuning does
    not change the oscillation-frequency comparison.
    """
    rep = ValidationReport()
    for name in ("nu", "gamma", "kappa", "rho", "a2", "delta20", "delta21"):
        v = getattr(params, name)
        if not math.isfinite(v):
            rep.errors.append(f"{name} must be finite")
    if params.gamma < 0:
        rep.errors.append("gamma must be non-negative")
    if params.kappa < 0:
        rep.errors.append("kappa must be non-negative")
    if params.rho <= 0:
        rep.errors.append("rho must be positive")
    if params.nu < 0:
        rep.errors.append("nu must be non-negative")
    if int(params.n_atoms) != params.n_atoms or params.n_atoms < 1:
        rep.errors.append("n_atoms must be a positive integer")
    if a1_estimate is not None and rep.ok:
        if params.delta20 == 0:
            rep.warnings.append("harmonic-approximation check skipped: delta20 = 0")
        else:
            bound = 2.0 * params.rho * abs(a1_estimate * params.a2) / abs(params.delta20)
            if params.nu < bound:
                rep.warnings.append(
                    f"harmonic approximation may fail: nu = {params.nu:g} < "
                    f"2 rho |A1 A2| / |delta20| = {bound:g}")
    return rep


def require_valid(params: SystemParams) -> None:
    rep = validate_params(params)
    if not rep.ok:
        raise InvalidParameterError("; ".join(rep.errors))


def nondimensionalize(phys: PhysicalParams,
                      gamma: float = 0.0,
                      kappa: float = 0.0,
                      a2: float = 0.0) -> tuple[SystemParams, float]:
    """Map laboratory parameters onto the dimensionless groups.

    Returns (params, omega_r).  Damping and pump amplitude are not fixed by
    the mapping and are taken from the keyword arguments.
    """
    for name in ("k", "m", "g", "hbar"):
        v = getattr(phys, name)
        if not math.isfinite(v) or v <= 0:
            raise InvalidParameterError(f"{name} must be positive and finite")
    for name in ("nu_z", "omega0", "omega1", "omega2"):
        if not math.isfinite(getattr(phys, name)):
            raise InvalidParameterError(f"{name} must be finite")
    if phys.n_atoms < 1:
        raise InvalidParameterError("n_atoms must be a positive integer")
    if phys.nu_z < 0:
        raise InvalidParameterError("nu_z must be non-negative")

    omega_r = 2.0 * phys.hbar * phys.k**2 / phys.m
    rho = (phys.g * math.sqrt(phys.n_atoms) / omega_r) ** (2.0 / 3.0)
    scale = omega_r * rho
    params = SystemParams(
        nu=phys.nu_z / scale,
        gamma=gamma,
        kappa=kappa,
        rho=rho,
        a2=a2,
        delta20=(phys.omega2 - phys.omega0) / scale,
        delta21=(phys.omega2 - phys.omega1) / scale,
        n_atoms=phys.n_atoms,
    )
    return params, omega_r


def theta_to_position(theta):
    """Position in wavelengths, z/lambda = theta/(4 pi).

    Accepts scalars or arrays; callers wanting the periodic coordinate
    reduce the result modulo 1.
    """
    return theta / THETA_PER_WAVELENGTH


def _box_muller(rng: np.random.Generator, n: int) -> np.ndarray:
    """n standard-normal variates from PCG64 uniforms (documented transform).

    Uses z0 = sqrt(-2 ln(1-u1)) cos(2 pi u2), z1 = ... sin(...), with
    1-u1 in (0, 1] so the log never sees zero.
    """
    half = (n + 1) // 2
    u1 = rng.random(half)
    u2 = rng.random(half)
    r = np.sqrt(-2.0 * np.log1p(-u1))
    ang = TWO_PI * u2
    z = np.empty(2 * half)
    z[0::2] = r * np.cos(ang)
    z[1::2] = r * np.sin(ang)
    return z[:n]


def init_ensemble(spec: InitialConditionSpec, params: SystemParams) -> EnsembleState:
    """Draw the reproducible initial ensemble.

    theta_j ~ Uniform[0, theta_span), p_j ~ Gaussian(p_mean, p_sigma),
    sigma_j = 0 and sigma_zj = 1 (the relaxation fixed point of the damping
    terms), a1 = a1_0, tau = 0.  A fixed seed gives a bit-identical ensemble
    on every call.
    """
    errors = validate_ic_spec(spec)
    rep = validate_params(params)
    errors.extend(rep.errors)
    if errors:
        raise InvalidParameterError("; ".join(errors))

    n = int(params.n_atoms)
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    theta = spec.theta_span * rng.random(n)
    p = spec.p_mean + spec.p_sigma * _box_muller(rng, n)
    sigma = np.zeros(n, dtype=np.complex128)
    sigma_z = np.ones(n)
    return EnsembleState(0.0, theta, p, sigma, sigma_z, complex(spec.a1_0))
