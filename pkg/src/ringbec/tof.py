"""Time-of-flight momentum images of a single ring.

In the thin-ring limit the momentum-space amplitude of one ring is a Bessel
series over its mode amplitudes,

    Psi(k, zeta) = sum_m c_m J_|m|(k R) alpha_m e^{i m zeta},

with k the radial momentum (units 1/R) and zeta the azimuthal angle of k.
Two sign conventions for the order-dependent prefactor c_m are implemented:

* ``"jacobi-anger"``: c_m = (-i)^|m|, the expansion of the plane-wave kernel
  e^{-i k R cos(phi - zeta)}.  The direct Fourier quadrature
  (:func:`psi_k_oracle`) confirms this one; it is the canonical default and
  is recorded in image metadata.
* ``"alternating-real"``: c_m real, (-1)^{m/2} on even and -(-1)^{(m-1)/2}
  on odd orders.  Differs from the canonical convention by a factor i on the
  odd orders only, which changes even-odd interference in |Psi|^2.  Kept
  selectable for comparison.

No expansion envelope is applied: transverse widths much smaller than the
ring radius only multiply the image by slowly varying factors.
"""
from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np

from .core import ModeState, mode_numbers

__all__ = [
    "CANONICAL_CONVENTION",
    "TofImage",
    "bessel_j",
    "bessel_jn",
    "psi_k",
    "psi_k_oracle",
    "tof_image",
]

CANONICAL_CONVENTION = "jacobi-anger"
_CONVENTIONS = ("jacobi-anger", "alternating-real")

_N_MAX = 64
_X_MAX = 1e3
# below this argument the ascending series is used (alternating terms stay
# small enough that cancellation costs < 4 digits)
_SERIES_X_MAX = 8.0


def _series_jn(n_max: int, x: np.ndarray) -> np.ndarray:
    """Ascending power series for all orders 0..n_max, |x| <= _SERIES_X_MAX."""
    out = np.empty((n_max + 1, x.size))
    half = 0.5 * x
    for n in range(n_max + 1):
        # term_j = (-1)^j (x/2)^(n+2j) / (j! (n+j)!)
        term = half ** n / math.factorial(n)
        acc = term.copy()
        for j in range(1, 60):
            term = term * (-(half * half)) / (j * (n + j))
            acc += term
            if np.all(np.abs(term) <= 1e-18 * (np.abs(acc) + 1e-300)):
                break
        out[n] = acc
    return out


def _miller_jn(n_max: int, x: np.ndarray) -> np.ndarray:
    """Backward recurrence normalised by J0 + 2*sum J_2k = 1 (Miller).

    The start order sits far enough above both n_max and x that the two
    downward trial solutions have fully separated by the time the physical
    orders are reached.
    """
    xmax = float(np.max(x))
    start = int(max(n_max, math.ceil(xmax))) + int(20.0 * xmax ** (1.0 / 3.0)) + 25
    if start % 2 == 1:
        start += 1
    p_hi = np.zeros_like(x)           # trial J_{k+2}
    p_lo = np.full_like(x, 1e-30)     # trial J_{k+1}
    rows = np.zeros((n_max + 1, x.size))
    norm = np.zeros_like(x)           # accumulates J_0 + 2 sum J_2k
    for k in range(start, -1, -1):
        p_prev = (2.0 * (k + 1) / x) * p_lo - p_hi
        p_hi = p_lo
        p_lo = p_prev
        # p_lo now holds the trial value of J_k
        if k % 2 == 0:
            norm += p_lo if k == 0 else 2.0 * p_lo
        if k <= n_max:
            rows[k] = p_lo
        big = np.abs(p_lo) > 1e250
        if big.any():
            scale = np.where(big, 1e-250, 1.0)
            p_lo = p_lo * scale
            p_hi = p_hi * scale
            norm = norm * scale
            rows *= scale  # unfilled rows are zero, so this is safe
    return rows / norm


def bessel_jn(n_max: int, x) -> np.ndarray:
    """J_n(x) for all orders n = 0..n_max, vectorised over x >= 0.

    Ascending series for small arguments, Miller backward recurrence with
    J0/J1-sum normalisation otherwise.  Returns shape (n_max+1,) + x.shape.
    """
    if not (0 <= n_max <= _N_MAX):
        raise ValueError(f"order must be in [0, {_N_MAX}], got {n_max}")
    xa = np.asarray(x, dtype=float)
    if np.any(xa < 0.0) or np.any(xa > _X_MAX):
        raise ValueError(f"argument must be in [0, {_X_MAX}]")
    flat = xa.ravel()
    out = np.empty((n_max + 1, flat.size))
    small = flat <= _SERIES_X_MAX
    if small.any():
        out[:, small] = _series_jn(n_max, flat[small])
    if (~small).any():
        out[:, ~small] = _miller_jn(n_max, flat[~small])
    return out.reshape((n_max + 1,) + xa.shape)


def bessel_j(n: int, x: float) -> float:
    """Bessel function of the first kind J_n(x), n in [0, 64], x in [0, 1e3]."""
    if not isinstance(n, (int, np.integer)) or n < 0:
        raise ValueError(f"order must be a non-negative integer, got {n}")
    return float(bessel_jn(int(n), float(x))[int(n)])


def _prefactors(m_max: int, convention: str) -> np.ndarray:
    if convention not in _CONVENTIONS:
        raise ValueError(f"unknown convention {convention!r}; choose from {_CONVENTIONS}")
    m = mode_numbers(m_max)
    if convention == "jacobi-anger":
        return (-1j) ** np.abs(m)
    c = np.empty(2 * m_max + 1, complex)
    for i, mm in enumerate(m):
        if mm % 2 == 0:
            c[i] = (-1.0) ** (mm // 2)
        else:
            c[i] = -((-1.0) ** ((mm - 1) // 2))
    return c


def psi_k(alpha: np.ndarray, r_ring: float, k, zeta,
          convention: str = CANONICAL_CONVENTION) -> np.ndarray:
    """Momentum-space amplitude of one ring at radial momentum k, angle zeta.

    ``alpha`` is the ring's mode amplitude array (m = -m_max..m_max);
    k and zeta broadcast against each other.
    """
    alpha = np.asarray(alpha, dtype=complex)
    if not np.isfinite(alpha).all():
        raise ValueError("amplitudes must be finite")
    m_max = (alpha.size - 1) // 2
    k_arr, zeta_arr = np.broadcast_arrays(np.asarray(k, float), np.asarray(zeta, float))
    jn = bessel_jn(m_max, k_arr * r_ring)
    pref = _prefactors(m_max, convention)
    m = mode_numbers(m_max)
    out = np.zeros(k_arr.shape, complex)
    for i, mm in enumerate(m):
        out += pref[i] * alpha[i] * jn[abs(mm)] * np.exp(1j * mm * zeta_arr)
    return out if out.shape else out[()]


def psi_k_oracle(alpha: np.ndarray, r_ring: float, k, zeta,
                 n_quad: int = 1024) -> np.ndarray:
    """Direct Fourier transform of the thin-ring wavefunction by quadrature.

    Evaluates (2 pi)^(-1/2) * integral dphi e^{-i k R cos(phi - zeta)} chi(phi)
    with chi built from the mode amplitudes, using the periodic trapezoid
    rule.  Convergence is verified by doubling the number of nodes; failure
    to converge raises.
    """
    alpha = np.asarray(alpha, dtype=complex)
    m_max = (alpha.size - 1) // 2
    k_arr, zeta_arr = np.broadcast_arrays(np.asarray(k, float), np.asarray(zeta, float))

    def quad(n):
        phi = 2.0 * math.pi * np.arange(n) / n
        chi = np.zeros(n, complex)
        for i, mm in enumerate(mode_numbers(m_max)):
            chi += alpha[i] * np.exp(1j * mm * phi)
        chi /= math.sqrt(2.0 * math.pi)
        kern = np.exp(-1j * np.multiply.outer(k_arr * r_ring,
                                              np.ones(n)) * np.cos(phi - zeta_arr[..., None]))
        return (2.0 * math.pi / n) * (kern * chi).sum(axis=-1) / math.sqrt(2.0 * math.pi)

    coarse = quad(n_quad)
    fine = quad(2 * n_quad)
    scale = max(float(np.max(np.abs(fine))), 1e-300)
    if float(np.max(np.abs(fine - coarse))) > 1e-9 * scale:
        raise RuntimeError("quadrature did not converge; increase n_quad")
    return fine if fine.shape else fine[()]


@dataclass(frozen=True)
class TofImage:
    """Cartesian momentum-space intensity map |Psi(k)|^2 of one ring.

    Axes are in units of 1/R; the intensity is normalised to unit maximum.
    ``convention`` records the Bessel-prefactor sign convention the image was
    synthesised with (the quadrature-confirmed one by default).
    """

    kx_grid: np.ndarray
    ky_grid: np.ndarray
    intensity: np.ndarray
    ring: str
    convention: str
    r_ring: float
    tau: float

    def __post_init__(self):
        if self.intensity.shape != (self.ky_grid.size, self.kx_grid.size):
            raise ValueError("intensity grid dimensions inconsistent with axes")
        if np.any(self.intensity < 0.0):
            raise ValueError("intensity must be non-negative")


def tof_image(state: ModeState, ring: str = "u", k_max: float = 12.0,
              resolution: int = 201, r_ring: float = 1.0,
              convention: str = CANONICAL_CONVENTION) -> TofImage:
    """Synthesise the momentum image of one ring of a mode state.

    Samples |Psi|^2 on a Cartesian (kx, ky) grid through the radial/azimuthal
    decomposition k = hypot(kx, ky), zeta = atan2(ky, kx).
    """
    if ring not in ("u", "d"):
        raise ValueError("ring must be 'u' or 'd'")
    if resolution < 2:
        raise ValueError("resolution must be >= 2")
    alpha = state.alpha_u if ring == "u" else state.alpha_d
    axis = np.linspace(-k_max, k_max, resolution)
    kx, ky = np.meshgrid(axis, axis)
    k = np.hypot(kx, ky)
    zeta = np.arctan2(ky, kx)
    psi = psi_k(alpha, r_ring, k, zeta, convention=convention)
    intensity = np.abs(psi) ** 2
    peak = intensity.max()
    if peak > 0.0:
        intensity = intensity / peak
    return TofImage(kx_grid=axis, ky_grid=axis.copy(), intensity=intensity,
                    ring=ring, convention=convention, r_ring=r_ring, tau=state.tau)
