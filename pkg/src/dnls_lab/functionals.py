"""Energies and variational calculus on the band-limited space.

Gradients and Hessian actions are Riesz representatives for the real inner product
<a, b> = Re integral a conj(b), taken inside the open band (Nyquist coefficient zero).
"""

import logging
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from dnls_lab.continuous_waves import WaveParams
from dnls_lab.lattice import GridField, StencilSpec, difference_symbol, norm
from dnls_lab.spectral import (
    CUBIC_PADDING,
    SpectralField,
    band_limit,
    dealiased_cubic,
    exp_mode_coefficient,
    highfreq_mass,
    padded_values,
    restrict_padded,
    spectral_l1_norm,
    spectral_l2_norm,
    to_spectral,
)

logger = logging.getLogger(__name__)

ORIENTATION_SIGN = {"forward": 1.0, "printed": -1.0}


class AliasingEnergies(NamedTuple):
    E1: float
    E3: complex


@dataclass(frozen=True)
class EnergyReport:
    mass: float
    hamiltonian_grid: float
    hamiltonian_dealiased: float
    momentum: float
    E1: float
    E3: complex
    sobolev: list[tuple[int, float]] = field(default_factory=list)


def _as_spectral(u: SpectralField | GridField) -> SpectralField:
    return to_spectral(u) if isinstance(u, GridField) else u


def kinetic_energy(u: SpectralField, stencil: StencilSpec | None = None) -> float:
    """(1/2) integral |d_h u|^2 written with the difference symbol."""
    s = difference_symbol(u.omega, u.h, stencil)
    return float(0.5 * np.sum(s * np.abs(u.coeffs) ** 2) / u.length)


def quartic_integral(u: SpectralField) -> float:
    """integral |u|^4 over one period, exact on a 3x padded grid."""
    size = CUBIC_PADDING * u.n_points
    values = padded_values(u, size)
    return float(np.sum(np.abs(values) ** 4) * (u.length / size))


def hamiltonian_grid(f: GridField) -> float:
    diff = (np.roll(f.values, -1) - f.values) / f.h
    return float(0.5 * f.h * np.sum(np.abs(diff) ** 2) - 0.25 * f.h * np.sum(np.abs(f.values) ** 4))


def hamiltonian_dealiased(u: SpectralField | GridField, stencil: StencilSpec | None = None) -> float:
    u = _as_spectral(u)
    return kinetic_energy(u, stencil) - 0.25 * quartic_integral(u)


def mass(u: SpectralField | GridField) -> float:
    return spectral_l2_norm(_as_spectral(u)) ** 2


def momentum(u: SpectralField | GridField) -> float:
    """<i d_x u, u> = -(1/L) sum w_k |u_hat_k|^2."""
    u = _as_spectral(u)
    return float(-np.sum(u.omega * np.abs(u.coeffs) ** 2) / u.length)


def lagrangian(p: WaveParams, u: SpectralField, stencil: StencilSpec | None = None) -> float:
    return hamiltonian_dealiased(u, stencil) + 0.5 * p.xi1 * mass(u) + 0.5 * p.xi2 * momentum(u)


def gradient_multiplier(p: WaveParams, u: SpectralField, stencil: StencilSpec | None = None) -> np.ndarray:
    return difference_symbol(u.omega, u.h, stencil) + p.xi1 - p.xi2 * u.omega


def lagrangian_gradient(p: WaveParams, u: SpectralField, stencil: StencilSpec | None = None) -> SpectralField:
    linear = band_limit(u.with_coeffs(gradient_multiplier(p, u, stencil) * u.coeffs))
    return linear - dealiased_cubic(u)


def hessian_apply(p: WaveParams, u: SpectralField, v: SpectralField, stencil: StencilSpec | None = None) -> SpectralField:
    """Second variation at u in direction v: multiplier on v minus the truncation of 2|u|^2 v + u^2 conj(v)."""
    size = CUBIC_PADDING * u.n_points
    uu = padded_values(u, size)
    vv = padded_values(v, size)
    cubic = restrict_padded(2.0 * np.abs(uu) ** 2 * vv + uu**2 * np.conj(vv), u)
    linear = band_limit(v.with_coeffs(gradient_multiplier(p, u, stencil) * v.coeffs))
    return linear - cubic


def aliasing_energies(f: GridField | SpectralField) -> AliasingEnergies:
    """E3 = integral exp(2 i pi x / h) |u|^4 and E1 = (1/2) integral cos(2 pi x / h) |u|^4 = Re(E3) / 2."""
    e3 = exp_mode_coefficient(f, harmonic=1)
    return AliasingEnergies(E1=0.5 * e3.real, E3=e3)


def alias_bound(u: SpectralField | GridField) -> float:
    """Bound on |E3| from the quartic convolution: some mode of |u|^4 has to come from above pi/(3h)."""
    u = _as_spectral(u)
    return 6.0 * highfreq_mass(u, np.pi / (3.0 * u.h)) * spectral_l1_norm(u) ** 2


def momentum_drift_rate(f: GridField | SpectralField, orientation: str = "forward") -> float:
    """d/dt of the momentum along the lattice flow: sign * (2 pi / h) Im(E3)."""
    e3 = aliasing_energies(f).E3
    return ORIENTATION_SIGN[orientation] * (2.0 * np.pi / f.h) * e3.imag


def lagrangian_balance(p: WaveParams, f0: GridField, ft: GridField) -> tuple[float, float]:
    """Both sides of L(u(t)) - L(u(0)) = (E1(t) - E1(0)) + E2 / 2 with E2 = xi2 (M(t) - M(0))."""
    u0, ut = to_spectral(f0), to_spectral(ft)
    lhs = lagrangian(p, ut) - lagrangian(p, u0)
    e2 = p.xi2 * (momentum(ut) - momentum(u0))
    rhs = aliasing_energies(ft).E1 - aliasing_energies(f0).E1 + 0.5 * e2
    return lhs, rhs


def energy_report(f: GridField, sobolev_orders: list[int] | tuple[int, ...] = (1, 2, 3)) -> EnergyReport:
    u = to_spectral(f)
    aliasing = aliasing_energies(u)
    return EnergyReport(
        mass=mass(u),
        hamiltonian_grid=hamiltonian_grid(f),
        hamiltonian_dealiased=hamiltonian_dealiased(u),
        momentum=momentum(u),
        E1=aliasing.E1,
        E3=aliasing.E3,
        sobolev=[(n, norm(f, "homogeneous_sobolev", n)) for n in sobolev_orders],
    )


def free_modes(n_points: int) -> np.ndarray:
    """Signed indices of the open band, ascending: -n/2 + 1, ..., n/2 - 1."""
    return np.arange(-n_points // 2 + 1, n_points // 2)


def _product_coefficients(values: np.ndarray, like: SpectralField) -> np.ndarray:
    """Full padded transform of a product, indexable by signed mode modulo the padded size."""
    return np.fft.fft(values) * (like.length / values.size)


def hessian_blocks(p: WaveParams, u: SpectralField, stencil: StencilSpec | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Dense A, B with Hess v = A v_hat - B conj(v_hat) on the open band (ascending signed order).

    A = diag(multiplier) - (2/L) T_w and B = (1/L) H_z, where T_w[k, j] = w_hat(k - j) for
    w = |u|^2 and H_z[k, j] = z_hat(k + j) for z = u^2.
    """
    size = CUBIC_PADDING * u.n_points
    uu = padded_values(u, size)
    w_hat = _product_coefficients(np.abs(uu) ** 2, u)
    z_hat = _product_coefficients(uu**2, u)
    k = free_modes(u.n_points)
    toeplitz = w_hat[(k[:, None] - k[None, :]) % size]
    hankel = z_hat[(k[:, None] + k[None, :]) % size]
    multiplier = gradient_multiplier(p, u, stencil)[k % u.n_points]
    a = np.diag(multiplier.astype(np.complex128)) - (2.0 / u.length) * toeplitz
    b = hankel / u.length
    return a, b


def real_hessian_matrix(p: WaveParams, u: SpectralField, stencil: StencilSpec | None = None) -> np.ndarray:
    """Hessian on (Re v_hat, Im v_hat) of the open band, a symmetric 2(n-1) square matrix."""
    a, b = hessian_blocks(p, u, stencil)
    return np.block([[a.real - b.real, -a.imag - b.imag], [a.imag - b.imag, a.real + b.real]])


def symmetric_jacobian(p: WaveParams, u: SpectralField, stencil: StencilSpec | None = None) -> np.ndarray:
    """Hessian restricted to real coefficients (the symmetric class), for real-coefficient u."""
    a, b = hessian_blocks(p, u, stencil)
    return (a - b).real
