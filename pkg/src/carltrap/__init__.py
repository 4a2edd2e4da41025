"""carltrap: semiclassical simulation and analysis of collective atomic
recoil lasing with the atoms held in a harmonic trap.

Core entry points:
    model.init_ensemble       reproducible initial conditions
    dynamics.integrate        fixed-step RK4 of the coupled atom-field system
    diagnostics               gain, coherence, order parameters, bunching
    analytics                 Bessel-ladder gain predictors
    sweep.run_sweep           deterministic parallel detuning sweeps
"""

from __future__ import annotations

import hashlib
from pathlib import Path

from .analytics import (CtildePrediction, GainPrediction, PredictorInput,
                        SteadyPolarization, bessel_jn, default_n_max,
                        gain_from_ctilde, jacobi_anger_residual,
                        predict_ctilde, predict_gain_resonant, resonance_comb,
                        resonance_kernel, steady_polarization)
from .config import RunConfig
from .diagnostics import (OrderParameter, SecularOscillation,
                          bunching_fraction, coherence, extract_oscillation,
                          find_peaks, gain, order_parameter,
                          secular_order_parameter)
from .dynamics import (MotionMode, NonFiniteStateError, RunSchedule,
                       Trajectory, integrate, reconstruct_probe, rhs,
                       step_rk4)
from .model import (AtomState, EnsembleState, InitialConditionSpec,
                    InvalidParameterError, PhysicalParams, SystemParams,
                    init_ensemble, nondimensionalize, theta_to_position,
                    validate_params)
from .sweep import SeedPolicy, Spectrum, SweepSpec, compare_comb, run_sweep

__version__ = "0.1.0"


def source_digest() -> str:
    """Short hash over the installed package sources, for run manifests."""
    root = Path(__file__).parent
    h = hashlib.sha256()
    for path in sorted(root.glob("*.py")):
        h.update(path.name.encode())
        h.update(path.read_bytes())
    return h.hexdigest()[:12]
