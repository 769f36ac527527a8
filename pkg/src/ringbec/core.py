"""Shared domain types for the coupled-ring simulator.

All quantities are dimensionless: energies in units of E0 = hbar^2/(2 M R^2),
times in units of tau0 = 2 M R^2 / hbar (see :mod:`ringbec.units` for the
bridge to laboratory parameters).  Mode amplitudes alpha_m carry units of
sqrt(particles), normalised so that ``|alpha_m|**2`` is the number of
particles in angular momentum mode m.
"""
from __future__ import annotations

from dataclasses import dataclass, replace, field
import math

import numpy as np

__all__ = [
    "ConfigError",
    "ModeState",
    "RngStream",
    "RunConfig",
    "derive_epsilon",
    "mode_numbers",
    "mode_index",
]


class ConfigError(ValueError):
    """Raised when a RunConfig violates an invariant.

    ``violations`` is a list of (field_name, message) pairs so a CLI can
    report every offending field at once.
    """

    def __init__(self, violations):
        self.violations = list(violations)
        msg = "; ".join(f"{name}: {text}" for name, text in self.violations)
        super().__init__(msg)


def mode_numbers(m_max: int) -> np.ndarray:
    """Mode indices [-m_max, ..., +m_max] in array storage order."""
    return np.arange(-m_max, m_max + 1)


def mode_index(m: int, m_max: int) -> int:
    """Array offset of angular momentum mode m; inverse of offset - m_max."""
    if not -m_max <= m <= m_max:
        raise IndexError(f"mode {m} outside [-{m_max}, {m_max}]")
    return m + m_max


@dataclass(frozen=True)
class ModeState:
    """Complex mode amplitudes of both rings at scaled time tau.

    ``alpha_u``/``alpha_d`` are indexed m = -m_max ... +m_max (symmetric
    m-ordering, not FFT ordering, so m <-> -m checks are direct slices).
    Arrays are frozen after construction; treat states as immutable values.
    """

    tau: float
    m_max: int
    alpha_u: np.ndarray
    alpha_d: np.ndarray

    def __post_init__(self):
        k = 2 * self.m_max + 1
        if self.m_max < 1:
            raise ValueError(f"m_max must be >= 1, got {self.m_max}")
        au = np.asarray(self.alpha_u, dtype=complex)
        ad = np.asarray(self.alpha_d, dtype=complex)
        if au.shape != (k,) or ad.shape != (k,):
            raise ValueError(
                f"amplitude arrays must have length {k} for m_max={self.m_max}, "
                f"got {au.shape} and {ad.shape}"
            )
        if not (np.isfinite(au).all() and np.isfinite(ad).all()):
            raise ValueError("amplitudes must be finite (no NaN/Inf)")
        ntot = float(np.sum(np.abs(au) ** 2) + np.sum(np.abs(ad) ** 2))
        if not (math.isfinite(ntot) and ntot > 0.0):
            raise ValueError(f"total norm must be positive and finite, got {ntot}")
        au = au.copy()
        ad = ad.copy()
        au.flags.writeable = False
        ad.flags.writeable = False
        object.__setattr__(self, "alpha_u", au)
        object.__setattr__(self, "alpha_d", ad)

    @property
    def modes(self) -> np.ndarray:
        return mode_numbers(self.m_max)

    @property
    def n_total(self) -> float:
        """Total particle number summed over both rings."""
        return float(np.sum(np.abs(self.alpha_u) ** 2) + np.sum(np.abs(self.alpha_d) ** 2))

    def amplitude(self, ring: str, m: int) -> complex:
        arr = self.alpha_u if ring == "u" else self.alpha_d
        return complex(arr[mode_index(m, self.m_max)])


def derive_epsilon(gamma: float, n_tot: float) -> float:
    """Nonlinear energy from the interaction constant and total atom number.

    epsilon = gamma * n_tot / (4 pi); with equal rings (n_tot = 2 N0) this is
    the usual gamma * N0 / (2 pi).
    """
    if gamma < 0:
        raise ValueError("attractive interaction unsupported (gamma < 0)")
    if n_tot <= 0:
        raise ValueError(f"n_tot must be positive, got {n_tot}")
    return gamma * n_tot / (4.0 * math.pi)


@dataclass(frozen=True)
class RunConfig:
    """Dimensionless control parameters of a simulation run.

    Exactly one of ``epsilon`` or ``gamma`` is authoritative.  When epsilon
    is given (the canonical parameterisation), gamma is derived from the
    nominal atom number 2*n0; when only gamma is given, epsilon is derived.
    ``fluctuation_scale`` is the standard deviation (in particles) of the
    initial m=0 population fluctuation of each ring; None means sqrt(n0).
    ``seed_magnitude`` scales the seeded mode amplitudes: each mode with
    1 <= |m| <= seed_mode_cutoff starts at seed_magnitude * sqrt(n0).
    """

    n0: float
    kappa: float = 0.0
    epsilon: float | None = None
    gamma: float | None = None
    m_max: int = 15
    seed_magnitude: float = 1e-4
    seed_mode_cutoff: int = 5
    fluctuation_scale: float | None = None
    rng_seed: int = 12345
    authoritative: str = field(default="", compare=False)

    # relative agreement required when both epsilon and gamma are supplied
    _CONSISTENCY_RTOL = 1e-12

    def validated(self) -> "RunConfig":
        """Check all invariants and return a config with defaults resolved."""
        bad = []
        if not (isinstance(self.n0, (int, float)) and math.isfinite(self.n0) and self.n0 > 0):
            bad.append(("n0", f"mean particles per ring must be > 0, got {self.n0}"))
        if not (isinstance(self.kappa, (int, float)) and math.isfinite(self.kappa)):
            bad.append(("kappa", f"coupling must be a finite real number, got {self.kappa}"))
        if not (isinstance(self.m_max, int) and self.m_max >= 1):
            bad.append(("m_max", f"truncation order must be an integer >= 1, got {self.m_max}"))
        if not (isinstance(self.seed_mode_cutoff, int) and self.seed_mode_cutoff >= 0):
            bad.append(("seed_mode_cutoff", f"must be an integer >= 0, got {self.seed_mode_cutoff}"))
        if isinstance(self.m_max, int) and isinstance(self.seed_mode_cutoff, int) \
                and self.m_max < self.seed_mode_cutoff:
            bad.append(("seed_mode_cutoff",
                        f"cutoff {self.seed_mode_cutoff} exceeds truncation m_max={self.m_max}"))
        if self.seed_magnitude < 0:
            bad.append(("seed_magnitude", "must be >= 0"))
        if self.fluctuation_scale is not None and self.fluctuation_scale < 0:
            bad.append(("fluctuation_scale", "must be >= 0"))

        epsilon, gamma = self.epsilon, self.gamma
        authoritative = ""
        if epsilon is None and gamma is None:
            bad.append(("epsilon", "one of epsilon or gamma must be given"))
        elif epsilon is not None:
            authoritative = "epsilon"
            if epsilon < 0:
                bad.append(("epsilon", "attractive interaction unsupported (epsilon < 0)"))
            elif self.n0 > 0:
                derived = epsilon * 2.0 * math.pi / self.n0  # gamma giving eps at n_tot = 2 n0
                if gamma is not None:
                    ref = max(abs(gamma), abs(derived), 1e-300)
                    if abs(gamma - derived) > self._CONSISTENCY_RTOL * ref:
                        bad.append(("gamma",
                                    f"inconsistent with epsilon: gamma={gamma}, "
                                    f"epsilon implies {derived}"))
                gamma = derived
        else:
            authoritative = "gamma"
            if gamma < 0:
                bad.append(("gamma", "attractive interaction unsupported (gamma < 0)"))
            elif self.n0 > 0:
                epsilon = derive_epsilon(gamma, 2.0 * self.n0)

        if bad:
            raise ConfigError(bad)

        fluct = self.fluctuation_scale
        if fluct is None:
            fluct = math.sqrt(self.n0)
        return replace(self, epsilon=epsilon, gamma=gamma,
                       fluctuation_scale=fluct, authoritative=authoritative)


class RngStream:
    """Deterministic random stream with a counter-based core.

    Built on numpy's Philox bit generator, so a given ``rng_seed`` yields a
    bit-identical draw sequence across runs and platforms.  Draw order is
    part of the contract: consumers must document the order in which they
    consume values (see :func:`ringbec.dynamics.init_state`).
    """

    def __init__(self, rng_seed: int):
        self.rng_seed = int(rng_seed)
        self._gen = np.random.Generator(np.random.Philox(self.rng_seed))

    def normal(self, loc: float = 0.0, scale: float = 1.0) -> float:
        return float(self._gen.normal(loc, scale))

    def uniform(self, low: float = 0.0, high: float = 1.0, size=None):
        out = self._gen.uniform(low, high, size=size)
        return float(out) if size is None else out
