"""Closed-form solitons of the continuous cubic NLS and their band-limited projections."""

import logging
from dataclasses import dataclass

import numpy as np
from scipy.stats import linregress

from dnls_lab.config import GridSpec
from dnls_lab.exceptions import BandOverflow, DomainTooSmall
from dnls_lab.lattice import GridField
from dnls_lab.spectral import SpectralField, band_limit

logger = logging.getLogger(__name__)

MIN_DECAY_LENGTHS = 40.0


def _sech(z: np.ndarray | float) -> np.ndarray:
    """Overflow-free 1/cosh."""
    a = np.exp(-np.abs(np.asarray(z, dtype=float)))
    return 2.0 * a / (1.0 + a * a)


def _tanh(z: np.ndarray | float) -> np.ndarray:
    return np.tanh(np.asarray(z, dtype=float))


@dataclass(frozen=True)
class WaveParams:
    """Speeds xi = (xi1, xi2): oscillation and advection. Requires xi1 > (xi2/2)^2."""

    xi1: float
    xi2: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "xi1", float(self.xi1))
        object.__setattr__(self, "xi2", float(self.xi2))
        if not np.isfinite(self.xi1) or not np.isfinite(self.xi2):
            raise ValueError(f"Wave parameters must be finite, got ({self.xi1}, {self.xi2})")
        if not self.xi1 > (self.xi2 / 2.0) ** 2:
            raise ValueError(f"xi1 must exceed (xi2/2)^2, got xi=({self.xi1}, {self.xi2})")

    @property
    def m(self) -> float:
        return float(np.sqrt(self.xi1 - (self.xi2 / 2.0) ** 2))

    def moved(self, direction: tuple[float, float], step: float) -> "WaveParams":
        return WaveParams(self.xi1 + step * direction[0], self.xi2 + step * direction[1])

    def as_tuple(self) -> tuple[float, float]:
        return (self.xi1, self.xi2)


def psi_eval(p: WaveParams, x: np.ndarray | float) -> np.ndarray:
    """psi(x) = exp(i x xi2 / 2) sqrt(2) m sech(m x)."""
    x = np.asarray(x, dtype=float)
    m = p.m
    return np.exp(0.5j * p.xi2 * x) * np.sqrt(2.0) * m * _sech(m * x)


def psi_hat(p: WaveParams, omega: np.ndarray | float) -> np.ndarray:
    """Continuous transform integral psi(x) exp(-i w x) dx = sqrt(2) pi sech(pi (w - xi2/2) / (2 m)).

    Real for every xi: the profile is symmetric in the sense conj(psi(-x)) = psi(x).
    """
    omega = np.asarray(omega, dtype=float)
    z = np.pi * (omega - 0.5 * p.xi2) / (2.0 * p.m)
    return (np.sqrt(2.0) * np.pi * _sech(z)).astype(np.complex128)


def check_domain(p: WaveParams, grid: GridSpec) -> None:
    if p.m * grid.L < MIN_DECAY_LENGTHS:
        raise DomainTooSmall(f"Period L={grid.L:g} is too short for decay rate m={p.m:g}: need m*L >= {MIN_DECAY_LENGTHS:g}")


def psi_projected(p: WaveParams, grid: GridSpec) -> SpectralField:
    """Orthogonal projection of psi on the open band (-pi/h, pi/h), periodised on the torus."""
    check_domain(p, grid)
    template = SpectralField.zeros(grid.h, grid.n_points)
    return band_limit(template.with_coeffs(psi_hat(p, template.omega)))


def psi_sampled(p: WaveParams, grid: GridSpec, x0: float = 0.0, gamma: float = 0.0) -> GridField:
    """exp(i gamma) psi(x - x0) on the lattice, with x - x0 wrapped into [-L/2, L/2)."""
    check_domain(p, grid)
    x = grid.h * np.arange(grid.n_points)
    rel = np.mod(x - x0 + 0.5 * grid.L, grid.L) - 0.5 * grid.L
    return GridField(grid.h, np.exp(1j * gamma) * psi_eval(p, rel))


def psi_mass(p: WaveParams) -> float:
    return 4.0 * p.m


def dpsi_dxi(p: WaveParams, direction: tuple[float, float], grid: GridSpec) -> SpectralField:
    """Directional derivative of psi_hat^h with respect to (xi1, xi2), by the chain rule through m."""
    z1, z2 = direction
    template = SpectralField.zeros(grid.h, grid.n_points)
    m = p.m
    z = np.pi * (template.omega - 0.5 * p.xi2) / (2.0 * m)
    dm = z1 / (2.0 * m) - z2 * p.xi2 / (4.0 * m)
    dz = -z * dm / m - z2 * np.pi / (4.0 * m)
    d_hat = -np.sqrt(2.0) * np.pi * _sech(z) * _tanh(z) * dz
    return band_limit(template.with_coeffs(d_hat))


def galilean_boost(u: SpectralField, v: float) -> SpectralField:
    """Multiply the interpolant by exp(i v x / 2): exact translation of the spectrum by v/2.

    v/2 must be a multiple of 2 pi / L; energy may not cross the band edge.
    """
    step = 2.0 * np.pi / u.length
    shift = 0.5 * v / step
    k = int(round(shift))
    if abs(shift - k) > 1e-9 * max(1.0, abs(shift)):
        raise ValueError(f"Boost v/2={0.5 * v:g} is not a multiple of the frequency step {step:g}")
    if k == 0:
        return u
    n = u.n_points
    lo, hi = -n // 2 + 1, n // 2 - 1
    index = u.mode_index
    target = index + k
    inside = (target >= lo) & (target <= hi)
    scale = float(np.max(np.abs(u.coeffs))) if n else 0.0
    spill = np.abs(u.coeffs[~inside])
    if spill.size and np.max(spill) > 1e-13 * scale:
        raise BandOverflow(f"Boost by {v:g} pushes coefficients of size {np.max(spill):.3e} outside the band")
    coeffs = np.zeros(n, dtype=np.complex128)
    coeffs[target[inside] % n] = u.coeffs[inside]
    return u.with_coeffs(coeffs)


def decay_fit(coeffs: np.ndarray, omega: np.ndarray, floor: float = 1e-12, skip_fraction: float = 0.1) -> tuple[float, float, float]:
    """Least-squares fit of log|c| against |w|: returns (C, eps, r2) for |c| ~ C exp(-eps |w|).

    Modes below ``floor`` are dropped, as is the lowest ``skip_fraction`` of the remaining modes by |w|.
    """
    magnitude = np.abs(np.asarray(coeffs))
    freq = np.abs(np.asarray(omega, dtype=float))
    keep = magnitude > floor
    freq, magnitude = freq[keep], magnitude[keep]
    order = np.argsort(freq, kind="stable")
    start = int(np.floor(skip_fraction * order.size))
    sel = order[start:]
    if sel.size < 3:
        raise ValueError(f"Only {sel.size} modes above {floor:g}; cannot fit a decay rate")
    fit = linregress(freq[sel], np.log(magnitude[sel]))
    return float(np.exp(fit.intercept)), float(-fit.slope), float(fit.rvalue**2)
