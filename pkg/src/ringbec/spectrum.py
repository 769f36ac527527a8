"""Bogoliubov analysis of the zero-circulation stationary states.

Small fluctuations around the m=0 stationary states of two coupled rings
split into two branches,

    omega_plus(m)        = sqrt((m^2 + eps)^2 - eps^2)      (coupling-free)
    omega_minus(m,kappa) = sqrt((m^2 + eps - 2 kappa)^2 - eps^2)

with eps the nonlinear energy and kappa the inter-ring coupling.  The minus
branch turns imaginary on the windows m^2/2 < kappa < m^2/2 + eps, where the
population of the +-m mode pair grows at the rate 2*Im(omega_minus).

Both squared frequencies are real; to avoid spurious tiny real parts near the
window edges every routine works with the factored radicand
(m^2 - 2 kappa)(m^2 + 2 eps - 2 kappa) and only takes the square root of a
sign-definite number.
"""
from __future__ import annotations

from dataclasses import dataclass
import cmath
import math

import numpy as np

__all__ = [
    "BogoliubovEigen",
    "SpectrumResult",
    "bogoliubov_eigensolve",
    "growth_rate",
    "instability_window",
    "lz_plus_per_particle",
    "max_growth",
    "omega_minus",
    "omega_minus_sq",
    "omega_plus",
    "stability_chart",
]


def _check_epsilon(epsilon: float) -> None:
    if epsilon < 0:
        raise ValueError("attractive interaction unsupported (epsilon < 0)")


def omega_plus(m: int, epsilon: float) -> float:
    """Coupling-independent branch, the uniform-system dispersion at integer m."""
    _check_epsilon(epsilon)
    m2 = float(m * m)
    return math.sqrt(m2 * (m2 + 2.0 * epsilon))


def omega_minus_sq(m: int, epsilon: float, kappa: float) -> float:
    """Squared frequency of the coupling-dependent branch (always real).

    Evaluated as (m^2 - 2k)(m^2 + 2eps - 2k): the difference-of-squares
    factorisation keeps full precision where the radicand crosses zero.
    """
    _check_epsilon(epsilon)
    m2 = float(m * m)
    return (m2 - 2.0 * kappa) * (m2 + 2.0 * epsilon - 2.0 * kappa)


def omega_minus(m: int, epsilon: float, kappa: float) -> complex:
    """Coupling-dependent branch: real outside the instability window,
    purely imaginary (+i side) inside, exactly zero on the edges."""
    rad = omega_minus_sq(m, epsilon, kappa)
    if rad >= 0.0:
        return complex(math.sqrt(rad), 0.0)
    return complex(0.0, math.sqrt(-rad))


def growth_rate(m: int, epsilon: float, kappa: float) -> float:
    """Population growth rate 2*Im(omega_minus); zero when the mode is stable."""
    return 2.0 * omega_minus(m, epsilon, kappa).imag


def instability_window(m: int, epsilon: float) -> tuple[float, float]:
    """Coupling range (m^2/2, m^2/2 + eps) on which mode m is unstable.

    Strict inequalities: kappa exactly on an edge is classified stable.
    Windows of adjacent m overlap iff eps > (2m+1)/2.
    """
    if m == 0:
        raise ValueError("zero mode has no instability window")
    if epsilon <= 0:
        raise ValueError("instability window requires epsilon > 0")
    m2 = float(m * m)
    return (m2 / 2.0, m2 / 2.0 + epsilon)


def max_growth(m: int, epsilon: float) -> tuple[float, float]:
    """Coupling of fastest growth and the rate there: ((m^2+eps)/2, 2 eps).

    The maximum rate 2*eps is the same for every unstable mode.
    """
    if m == 0:
        raise ValueError("zero mode has no instability window")
    if epsilon <= 0:
        raise ValueError("max growth requires epsilon > 0")
    return ((m * m + epsilon) / 2.0, 2.0 * epsilon)


def lz_plus_per_particle(m: int, epsilon: float) -> float:
    """Angular momentum per particle (units hbar) carried by an omega_plus mode.

    (m/2) * sqrt(m^4 + 2 eps m^2) / (m^2 + eps); odd in m, |.| <= |m|/2.
    The normalisation counts the excited particles of both rings, each ring
    carrying half the excitation (cross-checked against the 4x4 eigenvectors
    in the test suite).  The omega_minus analog vanishes identically: growing
    modes populate +m and -m equally and carry no net circulation.
    """
    _check_epsilon(epsilon)
    if m == 0:
        return 0.0
    m2 = float(m * m)
    return 0.5 * m * math.sqrt(m2 * (m2 + 2.0 * epsilon)) / (m2 + epsilon)


@dataclass(frozen=True)
class SpectrumResult:
    """Both branch frequencies and derived stability data at one (m, eps, kappa)."""

    m: int
    omega_plus: float
    omega_minus: complex
    growth_rate: float
    lz_plus: float
    chemical_potential_branch: str = "+"

    @classmethod
    def analyze(cls, m: int, epsilon: float, kappa: float,
                mu_branch: str = "+") -> "SpectrumResult":
        wm = omega_minus(m, epsilon, kappa)
        return cls(
            m=m,
            omega_plus=omega_plus(m, epsilon),
            omega_minus=wm,
            growth_rate=2.0 * wm.imag,
            lz_plus=lz_plus_per_particle(m, epsilon),
            chemical_potential_branch=mu_branch,
        )


@dataclass(frozen=True)
class BogoliubovEigen:
    """Eigendecomposition of the 4x4 fluctuation problem at one mode index.

    ``eigenvalues`` holds the four frequencies (omega, -omega pairs for both
    branches); ``eigenvectors[i]`` is the (u_up, u_down, v_up, v_down)
    quadruple belonging to ``eigenvalues[i]``.  ``matrix`` is the linearised
    operator that was diagonalised.
    """

    m: int
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    matrix: np.ndarray
    mu_branch: str
    theta: float


def _bogoliubov_matrix(m: int, epsilon: float, kappa: float, theta: float) -> np.ndarray:
    """Linearised fluctuation operator in the basis (u_u, u_d, v_u, v_d).

    The diagonal detuning is m^2 + eps - kappa for either stationary state:
    written with the chemical potential mu_± = eps ± kappa it reads
    m^2 + 2 eps - mu_+ = m^2 + mu_-, so both branch choices produce the same
    operator and the same spectrum, as required of the two-branch result.
    The condensate phase theta only twists the pair terms eps*e^{±2i theta}.
    """
    a = m * m + epsilon - kappa
    e = epsilon * cmath.exp(2j * theta)
    ec = epsilon * cmath.exp(-2j * theta)
    return np.array(
        [
            [a, kappa, e, 0.0],
            [kappa, a, 0.0, e],
            [-ec, 0.0, -a, -kappa],
            [0.0, -ec, -kappa, -a],
        ],
        dtype=complex,
    )


def bogoliubov_eigensolve(m: int, epsilon: float, kappa: float,
                          mu_branch: str = "+", theta: float = 0.0) -> BogoliubovEigen:
    """Diagonalise the 4x4 fluctuation problem coupling (u_u, u_d, v_u, v_d).

    Eigenvectors come from a dense LAPACK solve.  Eigenvalues are evaluated
    through the exact symmetric/antisymmetric ring reduction: each 2x2 block
    [[d, e], [-e*, -d]] has eigenvalues ±sqrt(d^2 - eps^2), computed in the
    factored form (d - eps)(d + eps).  This stays accurate at the window
    edges where the full matrix is defective and a plain dense eigensolve
    loses half the digits.  Eigenvalues are paired (omega, -omega*).
    """
    _check_epsilon(epsilon)
    if mu_branch not in ("+", "-"):
        raise ValueError(f"mu_branch must be '+' or '-', got {mu_branch!r}")
    mat = _bogoliubov_matrix(m, epsilon, kappa, theta)

    raw_vals, raw_vecs = np.linalg.eig(mat)

    # exact block reduction: symmetric block detuning d_s = a + kappa,
    # antisymmetric d_a = a - kappa; |off-diagonal| = epsilon for any theta
    eigenvalues = []
    for d in (m * m + epsilon, m * m + epsilon - 2.0 * kappa):
        rad = (d - epsilon) * (d + epsilon)
        if rad >= 0.0:
            w = complex(math.sqrt(rad), 0.0)
        else:
            w = complex(0.0, math.sqrt(-rad))
        eigenvalues.extend([w, -w])
    eigenvalues = np.array(eigenvalues, dtype=complex)

    # pair each refined eigenvalue with the nearest LAPACK eigenvector
    order = []
    taken = set()
    for w in eigenvalues:
        dist = np.abs(raw_vals - w)
        for i in np.argsort(dist):
            if i not in taken:
                taken.add(i)
                order.append(i)
                break
    vectors = raw_vecs[:, order].T.copy()

    return BogoliubovEigen(m=m, eigenvalues=eigenvalues, eigenvectors=vectors,
                           matrix=mat, mu_branch=mu_branch, theta=theta)


def stability_chart(epsilon: float, kappa_grid, m_list) -> dict[str, np.ndarray]:
    """Dense evaluation of the coupling-dependent branch over a kappa grid.

    Returns columns kappa, m, re_omega_minus, im_omega_minus, growth_rate,
    ordered mode-major (all kappa for the first m, then the next m, ...).
    """
    kappa_grid = np.asarray(kappa_grid, dtype=float)
    m_list = list(m_list)
    if kappa_grid.size == 0 or len(m_list) == 0:
        raise ValueError("kappa grid and mode list must be non-empty")
    nk = kappa_grid.size
    n = nk * len(m_list)
    out = {
        "kappa": np.empty(n),
        "m": np.empty(n, dtype=int),
        "re_omega_minus": np.empty(n),
        "im_omega_minus": np.empty(n),
        "growth_rate": np.empty(n),
    }
    row = 0
    for m in m_list:
        for k in kappa_grid:
            w = omega_minus(m, epsilon, float(k))
            out["kappa"][row] = k
            out["m"][row] = m
            out["re_omega_minus"][row] = w.real
            out["im_omega_minus"][row] = w.imag
            out["growth_rate"][row] = 2.0 * w.imag
            row += 1
    return out
