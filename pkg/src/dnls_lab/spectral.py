"""Band-limited fields on the torus.

Normalisation ("forward-h"): the coefficient of mode k is u_hat_k = h * sum_g f_g exp(-i w_k x_g),
w_k = 2 pi k / L, and the band-limited interpolant is u(x) = (1/L) sum_k u_hat_k exp(i w_k x).
Coefficients therefore approximate the continuous transform integral u(x) exp(-i w x) dx, and
h sum_g |f_g|^2 = (1/L) sum_k |u_hat_k|^2. Coefficients are stored in FFT order; the Nyquist mode
sits at frequency -pi/h.
"""

import logging
from dataclasses import dataclass

import numpy as np

from dnls_lab.exceptions import ResolutionMismatch, SizeMismatch
from dnls_lab.lattice import GridField

logger = logging.getLogger(__name__)

CUBIC_PADDING = 3
QUARTIC_PADDING = 8


@dataclass(frozen=True, eq=False)
class SpectralField:
    h: float
    coeffs: np.ndarray

    def __post_init__(self) -> None:
        coeffs = np.array(self.coeffs, dtype=np.complex128).reshape(-1)
        coeffs.setflags(write=False)
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "h", float(self.h))
        if not self.h > 0:
            raise ValueError(f"Lattice step must be positive, got {self.h}")

    @property
    def n_points(self) -> int:
        return self.coeffs.size

    @property
    def length(self) -> float:
        return self.n_points * self.h

    @property
    def mode_index(self) -> np.ndarray:
        return np.rint(np.fft.fftfreq(self.n_points) * self.n_points).astype(int)

    @property
    def omega(self) -> np.ndarray:
        return 2.0 * np.pi * self.mode_index / self.length

    @property
    def nyquist(self) -> int:
        """Storage position of the -pi/h mode."""
        return self.n_points // 2

    def with_coeffs(self, coeffs: np.ndarray) -> "SpectralField":
        return SpectralField(self.h, coeffs)

    def __add__(self, other: "SpectralField") -> "SpectralField":
        check_compatible(self, other)
        return self.with_coeffs(self.coeffs + other.coeffs)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        check_compatible(self, other)
        return self.with_coeffs(self.coeffs - other.coeffs)

    def __mul__(self, scalar: complex) -> "SpectralField":
        return self.with_coeffs(scalar * self.coeffs)

    __rmul__ = __mul__

    def __neg__(self) -> "SpectralField":
        return self.with_coeffs(-self.coeffs)

    @classmethod
    def zeros(cls, h: float, n_points: int) -> "SpectralField":
        return cls(h, np.zeros(n_points, dtype=np.complex128))


def check_compatible(a: SpectralField | GridField, b: SpectralField | GridField) -> None:
    if a.n_points != b.n_points or not np.isclose(a.h, b.h, rtol=1e-14, atol=0.0):
        raise SizeMismatch(f"Fields live on different lattices: (h={a.h}, n={a.n_points}) vs (h={b.h}, n={b.n_points})")


def to_spectral(f: GridField) -> SpectralField:
    return SpectralField(f.h, f.h * np.fft.fft(f.values))


def to_grid(u: SpectralField) -> GridField:
    return GridField(u.h, np.fft.ifft(u.coeffs) / u.h)


def inner(a: SpectralField, b: SpectralField) -> float:
    """Real L^2 inner product Re integral a conj(b) over one period."""
    check_compatible(a, b)
    return float(np.real(np.vdot(b.coeffs, a.coeffs)) / a.length)


def spectral_l2_norm(u: SpectralField) -> float:
    return float(np.sqrt(np.sum(np.abs(u.coeffs) ** 2) / u.length))


def spectral_l1_norm(u: SpectralField) -> float:
    """(1/L) sum |u_hat_k|, an upper bound for sup |u|."""
    return float(np.sum(np.abs(u.coeffs)) / u.length)


def shift(u: SpectralField, x0: float) -> SpectralField:
    """Exact advection of the band-limited interpolant: u(x) -> u(x - x0), any real x0."""
    return u.with_coeffs(u.coeffs * np.exp(-1j * u.omega * x0))


def gauge(u: SpectralField, gamma: float) -> SpectralField:
    return u.with_coeffs(np.exp(1j * gamma) * u.coeffs)


def derivative(u: SpectralField) -> SpectralField:
    return u.with_coeffs(1j * u.omega * u.coeffs)


def band_limit(u: SpectralField, cutoff: float | None = None) -> SpectralField:
    """Project on the open band (-pi/h, pi/h), optionally also dropping |w| > cutoff."""
    coeffs = u.coeffs.copy()
    coeffs[u.nyquist] = 0.0
    if cutoff is not None:
        coeffs[np.abs(u.omega) > cutoff] = 0.0
    return u.with_coeffs(coeffs)


def _padded_positions(u: SpectralField, size: int) -> np.ndarray:
    return u.mode_index % size


def padded_values(u: SpectralField, size: int) -> np.ndarray:
    """Samples of the band-limited interpolant on ``size`` equispaced points of the period."""
    fine = np.zeros(size, dtype=np.complex128)
    fine[_padded_positions(u, size)] = u.coeffs
    return np.fft.ifft(fine) * (size / u.length)


def restrict_padded(values: np.ndarray, like: SpectralField) -> SpectralField:
    """Spectral coefficients of padded samples restricted to the open band of ``like``."""
    size = values.size
    full = np.fft.fft(values) * (like.length / size)
    return band_limit(like.with_coeffs(full[_padded_positions(like, size)]))


def interpolate(u: SpectralField, factor: int) -> SpectralField:
    """Same band-limited function on a lattice refined ``factor`` times."""
    if factor < 1:
        raise ValueError(f"Refinement factor must be >= 1, got {factor}")
    size = u.n_points * factor
    fine = np.zeros(size, dtype=np.complex128)
    fine[_padded_positions(u, size)] = u.coeffs
    return SpectralField(u.h / factor, fine)


def fold_aliases(fine: SpectralField, factor: int) -> SpectralField:
    """Fold a field of step h/factor onto step h: u_hat(w) = sum_j u_hat_fine(w + 2 pi j / h)."""
    if factor < 1 or fine.n_points % factor:
        raise ResolutionMismatch(f"Cannot fold {fine.n_points} modes by a factor {factor}")
    coarse_n = fine.n_points // factor
    if coarse_n < 8 or coarse_n & (coarse_n - 1):
        raise ResolutionMismatch(f"Folded lattice would have {coarse_n} sites; a power of two >= 8 is required")
    return SpectralField(fine.h * factor, fine.coeffs.reshape(factor, coarse_n).sum(axis=0))


def dealiased_cubic(u: SpectralField) -> SpectralField:
    """Band-limited truncation of |u|^2 u, computed alias-free on a 3x padded grid."""
    size = CUBIC_PADDING * u.n_points
    values = padded_values(u, size)
    return restrict_padded(np.abs(values) ** 2 * values, u)


def grid_cubic(f: GridField) -> GridField:
    return f.with_values(np.abs(f.values) ** 2 * f.values)


def exp_mode_coefficient(f: GridField | SpectralField, harmonic: int = 1) -> complex:
    """Integral of exp(2 i pi harmonic x / h) |u|^4 for the interpolant u of f.

    ``harmonic`` counts multiples of the reciprocal lattice frequency 2 pi/h, not of the box
    frequency 2 pi/L: harmonic=1 is the 2 pi/h mode that enters E3, harmonic=0 is the plain
    quartic integral.

    |u|^4 has spectrum in (-4 pi/h, 4 pi/h); 8x padding keeps the 2 pi/h mode alias-free.
    """
    u = to_spectral(f) if isinstance(f, GridField) else f
    size = QUARTIC_PADDING * u.n_points
    values = padded_values(u, size)
    x = u.length * np.arange(size) / size
    quartic = np.abs(values) ** 4
    return complex(np.sum(np.exp(2j * np.pi * harmonic * x / u.h) * quartic) * (u.length / size))


def highfreq_mass(u: SpectralField, cutoff: float) -> float:
    """(1/L) sum over |w_k| >= cutoff of |u_hat_k|^2."""
    if not 0 < cutoff <= np.pi / u.h * (1 + 1e-12):
        raise ValueError(f"Cutoff must lie in (0, pi/h], got {cutoff}")
    mask = np.abs(u.omega) >= cutoff * (1 - 1e-12)
    return float(np.sum(np.abs(u.coeffs[mask]) ** 2) / u.length)


def continuous_sobolev_norm(u: SpectralField, n: int, homogeneous: bool = False) -> float:
    """Sobolev norm of the interpolant on the line-period: weight 1 + w^2 + ... + w^{2n} (or w^{2n})."""
    if n < 0:
        raise ValueError(f"Sobolev order must be >= 0, got {n}")
    w2 = u.omega**2
    weight = w2**n if homogeneous else sum(w2**j for j in range(n + 1))
    return float(np.sqrt(np.sum(weight * np.abs(u.coeffs) ** 2) / u.length))
