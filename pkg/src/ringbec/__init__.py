"""Simulator and analysis toolkit for two tunnel-coupled ring condensates.

Evolves the coupled angular-momentum-mode equations of two ring-shaped
Bose-Einstein condensates, analyses the two-branch excitation spectrum and
its instability windows, detects the spontaneous onset of angular momentum
Josephson oscillations, and synthesises time-of-flight momentum images.
"""

from .core import ConfigError, ModeState, RngStream, RunConfig, derive_epsilon
from .dynamics import (
    ConservationReport,
    IntegratorSettings,
    evolve,
    evolve_grid_oracle,
    init_state,
    rhs_modes,
    stationary_state,
    tau_osc_estimate,
)
from .observables import (
    GrowthFit,
    OnsetReport,
    Trajectory,
    angular_momentum,
    detect_onset,
    fit_growth_rate,
    imbalance,
    occupations,
)
from .spectrum import (
    BogoliubovEigen,
    SpectrumResult,
    bogoliubov_eigensolve,
    growth_rate,
    instability_window,
    lz_plus_per_particle,
    max_growth,
    omega_minus,
    omega_plus,
    stability_chart,
)
from .tof import TofImage, bessel_j, bessel_jn, psi_k, psi_k_oracle, tof_image
from .units import PhysicalParams, gamma_eff, kappa_from_potential, n0_for_epsilon, scales

__version__ = "0.1.0"
