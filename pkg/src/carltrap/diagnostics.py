"""Gain, coherence, synchronization and bunching measures.

All functions are pure over immutable inputs and accept either scalars or
per-atom arrays where that makes sense.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import theta_to_position


@dataclass(frozen=True)
class OrderParameter:
    """Magnitude and mean phase of a complex phase-coherence average."""

    r: float
    phi: float

    @property
    def value(self) -> complex:
        return self.r * complex(math.cos(self.phi), math.sin(self.phi))


@dataclass(frozen=True)
class SecularOscillation:
    """Slowly-varying trap-oscillation amplitude and phase per atom.

    Parametrizes theta(tau) = center + amp * cos(nu tau + phase).  Fields are
    scalars or (N,) arrays depending on what was extracted.
    """

    amp: np.ndarray
    phase: np.ndarray
    center: float = 0.0


def gain(a1_tau: complex, a1_0: complex) -> float:
    """Relative probe intensity change (|A1(tau)|^2 - |A1(0)|^2) / |A1(0)|^2."""
    denom = abs(a1_0) ** 2
    if denom == 0.0:
        raise ValueError("gain is undefined for a1_0 = 0")
    return (abs(a1_tau) ** 2 - denom) / denom


def coherence(sigma: np.ndarray, theta: np.ndarray) -> complex:
    """Collective coherence C = (1/N) sum_j sigma_j e^{-i theta_j}."""
    sigma = np.asarray(sigma)
    theta = np.asarray(theta)
    if sigma.size == 0:
        raise ValueError("coherence of an empty ensemble")
    return complex(np.mean(sigma * np.exp(-1j * theta)))


def order_parameter(theta: np.ndarray) -> OrderParameter:
    """R e^{i Phi} = (1/N) sum_j e^{-i theta_j}; Phi = 0 when R = 0."""
    theta = np.asarray(theta, dtype=np.float64)
    if theta.size == 0:
        raise ValueError("order parameter of an empty ensemble")
    z = complex(np.mean(np.exp(-1j * theta)))
    r = abs(z)
    return OrderParameter(r, math.atan2(z.imag, z.real) if r > 0.0 else 0.0)


def wrap_phase(phi):
    """Reduce an angle (scalar or array) to (-pi, pi]."""
    w = np.mod(np.asarray(phi, dtype=np.float64) + np.pi, 2.0 * np.pi) - np.pi
    w = np.where(w <= -np.pi, w + np.pi * 2.0, w)
    return w if w.ndim else float(w)


def extract_oscillation(theta, p, nu: float, tau: float,
                        center: float = 0.0) -> SecularOscillation:
    """Invert instantaneous (theta, p) into trap-oscillation coordinates.

    Exact for pure trap motion: with ttilde = theta - center,
    amp = sqrt(ttilde^2 + (p/nu)^2) and phase solves
    theta = center + amp cos(nu tau + phase), p = -nu amp sin(nu tau + phase).
    """
    if not nu > 0:
        raise ValueError("secular decomposition requires nu > 0")
    ttilde = np.asarray(theta, dtype=np.float64) - center
    pn = np.asarray(p, dtype=np.float64) / nu
    amp = np.hypot(ttilde, pn)
    phase = wrap_phase(np.arctan2(-pn, ttilde) - nu * tau)
    return SecularOscillation(amp, phase, center)


def evaluate_oscillation(osc: SecularOscillation, nu: float, tau: float):
    """Map oscillation coordinates back to (theta, p) at time tau."""
    arg = nu * tau + osc.phase
    return osc.center + osc.amp * np.cos(arg), -nu * osc.amp * np.sin(arg)


def secular_order_parameter(osc: SecularOscillation) -> OrderParameter:
    """R0 e^{i Phi0} = (1/N) sum_j e^{+i amp_j cos(phase_j)}.

    Note the +i: this is the conjugate convention of order_parameter, chosen
    so the cross term of the long-time gain prediction comes out right.
    """
    x = np.atleast_1d(np.asarray(osc.amp) * np.cos(np.asarray(osc.phase)))
    z = complex(np.mean(np.exp(1j * x)))
    r = abs(z)
    return OrderParameter(r, math.atan2(z.imag, z.real) if r > 0.0 else 0.0)


def bunching_fraction(theta: np.ndarray, center: float, halfwidth: float) -> float:
    """Fraction of atoms within a circular window of z/lambda mod 1.

    The window is the half-open arc [center - halfwidth, center + halfwidth),
    so windows tiling [0, 1) partition the ensemble exactly.
    """
    if not 0.0 < halfwidth < 0.5:
        raise ValueError("halfwidth must lie in (0, 0.5)")
    x = np.mod(theta_to_position(np.asarray(theta, dtype=np.float64)), 1.0)
    s = np.mod(x - center + halfwidth, 1.0)
    return float(np.mean(s < 2.0 * halfwidth))


def find_peaks(grid: np.ndarray, values: np.ndarray,
               min_height: float = -np.inf) -> list[tuple[float, float]]:
    """Strict local maxima of values over a strictly increasing grid.

    Plateaus count once, at their lowest index.  Returns (grid, value) pairs
    for maxima with value >= min_height.
    """
    grid = np.asarray(grid, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    if grid.shape != values.shape:
        raise ValueError("grid and values must have matching lengths")
    if grid.size < 3:
        raise ValueError("peak detection needs at least 3 grid points")
    if np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be strictly increasing")

    peaks: list[tuple[float, float]] = []
    n = grid.size
    i = 1
    while i < n - 1:
        if values[i] > values[i - 1]:
            j = i
            while j + 1 < n and values[j + 1] == values[i]:
                j += 1
            if j < n - 1 and values[j + 1] < values[i] and values[i] >= min_height:
                peaks.append((float(grid[i]), float(values[i])))
            i = j + 1
        else:
            i += 1
    return peaks
