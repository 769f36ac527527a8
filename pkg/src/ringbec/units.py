"""Bridge between laboratory parameters and the dimensionless inputs.

Energies are measured in E0 = hbar^2 / (2 M R^2) and times in
tau0 = 2 M R^2 / hbar, with R the ring radius.  The axial wavefunction of
each ring is the unit-normalised Gaussian of width ``a_z`` centred in its
well; the ring radius is identified with the radial trap minimum (tight
radial confinement).
"""
from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np
from scipy.integrate import simpson

__all__ = [
    "HBAR",
    "K_B",
    "M_RB87",
    "ATOMIC_MASS_UNIT",
    "PhysicalParams",
    "gamma_eff",
    "kappa_from_potential",
    "n0_for_epsilon",
    "scales",
]

# CODATA values, documented to 6 significant figures
HBAR = 1.054572e-34          # J s      (reduced Planck constant, 1.05457e-34)
K_B = 1.380649e-23           # J / K    (Boltzmann constant, exact)
ATOMIC_MASS_UNIT = 1.660539e-27  # kg   (unified atomic mass unit)
M_RB87 = 86.909180527 * ATOMIC_MASS_UNIT  # kg (rubidium-87)


@dataclass(frozen=True)
class PhysicalParams:
    """Laboratory parameters of the coupled-ring trap (SI units).

    ``axial_potential`` is an optional tabulated double-well potential
    (z samples in m, V samples in J) used by :func:`kappa_from_potential`;
    ``z0`` is the half separation of its wells.
    """

    atom_mass: float = M_RB87
    scattering_length: float = 5.2e-9
    a_rho: float = 0.3e-6
    a_z: float = 0.5e-6
    ring_radius: float = 1.2e-6
    z0: float | None = None
    axial_potential: tuple[np.ndarray, np.ndarray] | None = None

    def __post_init__(self):
        for name in ("atom_mass", "scattering_length", "a_rho", "a_z", "ring_radius"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be a positive finite number, got {v}")

    def thin_ring_ok(self) -> bool:
        """1D-reduction validity: transverse widths well below the radius."""
        return self.a_rho < 0.5 * self.ring_radius and self.a_z < 0.5 * self.ring_radius


def scales(params: PhysicalParams) -> tuple[float, float]:
    """Natural energy and time scales (E0 in J, tau0 in s) of the ring."""
    mr2 = 2.0 * params.atom_mass * params.ring_radius ** 2
    return HBAR ** 2 / mr2, mr2 / HBAR


def gamma_eff(params: PhysicalParams) -> float:
    """Dimensionless interaction constant of the 1D ring.

    gamma = (2 M R^2 g1d / hbar^2) * integral Phi^4 dz with the 1D coupling
    g1d = 2 hbar^2 a / (M a_rho^2) and the Gaussian axial state, for which
    integral Phi^4 dz = 1/(sqrt(2 pi) a_z).  Closed form:
    4 R^2 a / (a_rho^2 sqrt(2 pi) a_z).
    """
    return (4.0 * params.ring_radius ** 2 * params.scattering_length
            / (params.a_rho ** 2 * math.sqrt(2.0 * math.pi) * params.a_z))


def n0_for_epsilon(epsilon: float, gamma: float) -> float:
    """Per-ring atom number achieving a given nonlinear energy: 2 pi eps / gamma."""
    if gamma <= 0:
        raise ValueError("unreachable epsilon: gamma must be > 0")
    if epsilon < 0:
        raise ValueError("attractive interaction unsupported (epsilon < 0)")
    return 2.0 * math.pi * epsilon / gamma


def _gaussian(z: np.ndarray, a_z: float) -> np.ndarray:
    return (math.pi * a_z ** 2) ** -0.25 * np.exp(-z ** 2 / (2.0 * a_z ** 2))


def _gaussian_d2(z: np.ndarray, a_z: float) -> np.ndarray:
    return _gaussian(z, a_z) * (z ** 2 / a_z ** 4 - 1.0 / a_z ** 2)


def kappa_from_potential(params: PhysicalParams) -> float:
    """Dimensionless inter-ring coupling from the tabulated axial potential.

    kappa = -R^2 * integral dz Phi(z + z0) [d^2/dz^2 - (2M/hbar^2) V(z)] Phi(z - z0),
    the axial-Hamiltonian matrix element between the Gaussian ground states
    of the two wells in units of E0.  The Gaussian curvature term is analytic;
    the integral is composite Simpson quadrature on the provided grid, and a
    half-resolution re-evaluation must agree to 1e-6 relative or the grid is
    rejected as too coarse.
    """
    if params.axial_potential is None or params.z0 is None:
        raise ValueError("kappa_from_potential requires axial_potential samples and z0")
    z, v = params.axial_potential
    z = np.asarray(z, dtype=float)
    v = np.asarray(v, dtype=float)
    if z.ndim != 1 or z.shape != v.shape or z.size < 9:
        raise ValueError("axial_potential must be matching 1D arrays with >= 9 samples")
    if not np.all(np.diff(z) > 0):
        raise ValueError("potential grid must be strictly increasing")
    span = 0.5 * abs(z[0] - z[-1])
    if abs(params.z0) + 4.0 * params.a_z > span + 1e-15:
        raise ValueError("potential grid must cover both wells out to 4 a_z")

    r2 = params.ring_radius ** 2
    pref = 2.0 * params.atom_mass / HBAR ** 2

    def integral(zz, vv):
        phi_left = _gaussian(zz + params.z0, params.a_z)
        integrand = phi_left * (_gaussian_d2(zz - params.z0, params.a_z)
                                - pref * vv * _gaussian(zz - params.z0, params.a_z))
        return -r2 * simpson(integrand, x=zz)

    full = integral(z, v)
    coarse = integral(z[::2], v[::2])
    ref = max(abs(full), 1e-300)
    if abs(full - coarse) > 1e-6 * ref:
        raise ValueError(
            "quadrature unstable under grid refinement "
            f"(full={full:.6e}, half-grid={coarse:.6e}); refine the z grid"
        )
    return float(full)
