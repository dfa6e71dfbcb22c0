import logging
import math
from collections.abc import Callable
from dataclasses import dataclass
from fractions import Fraction
from typing import Literal

import numpy as np
from scipy.optimize import minimize_scalar

from dnls_lab.exceptions import StencilTooWide

logger = logging.getLogger(__name__)

NormKind = Literal["L2", "H1", "homogeneous_sobolev", "sobolev"]

STABILITY_SAMPLES = 4096


def _is_power_of_two(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True, eq=False)
class GridField:
    """Complex samples u_g on the periodic lattice {0, h, ..., (n_points - 1) h}."""

    h: float
    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=np.complex128).reshape(-1)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "h", float(self.h))
        if not self.h > 0:
            raise ValueError(f"Lattice step must be positive, got {self.h}")
        if values.size < 8 or not _is_power_of_two(values.size):
            raise ValueError(f"n_points must be a power of two >= 8, got {values.size}")

    @property
    def n_points(self) -> int:
        return self.values.size

    @property
    def length(self) -> float:
        return self.n_points * self.h

    def coordinates(self, centered: bool = False) -> np.ndarray:
        """Site positions; ``centered`` maps them into [-L/2, L/2) for profiles peaked at 0."""
        x = self.h * np.arange(self.n_points)
        if centered:
            half = self.n_points // 2
            x = np.where(np.arange(self.n_points) >= half, x - self.length, x)
        return x

    def with_values(self, values: np.ndarray) -> "GridField":
        return GridField(self.h, values)

    def rotate(self, sites: int) -> "GridField":
        """Lattice translation by an integer number of sites: (T f)_g = f_{g - sites h}."""
        return self.with_values(np.roll(self.values, sites))

    @classmethod
    def zeros(cls, h: float, n_points: int) -> "GridField":
        return cls(h, np.zeros(n_points, dtype=np.complex128))

    @classmethod
    def sample(cls, func: Callable[[np.ndarray], np.ndarray], h: float, n_points: int, centered: bool = True) -> "GridField":
        """Evaluate ``func`` on the (optionally centred) lattice coordinates."""
        template = cls.zeros(h, n_points)
        return cls(h, func(template.coordinates(centered=centered)))


@dataclass(frozen=True)
class StencilSpec:
    """Symmetric second-difference stencil a_k = a_{-k}, stored one-sided as (a_0, a_1, ..., a_n)."""

    coefficients: tuple[float, ...]

    def __post_init__(self) -> None:
        coeffs = tuple(float(a) for a in self.coefficients)
        object.__setattr__(self, "coefficients", coeffs)
        if len(coeffs) < 2:
            raise ValueError("A stencil needs a positive half width")
        total = coeffs[0] + 2.0 * sum(coeffs[1:])
        scale = sum(abs(a) for a in coeffs)
        if abs(total) > 1e-12 * scale:
            raise ValueError(f"Stencil coefficients must sum to zero, got {total:.3e}")

    @property
    def half_width(self) -> int:
        return len(self.coefficients) - 1

    def a(self, k: int) -> float:
        k = abs(k)
        return self.coefficients[k] if k <= self.half_width else 0.0

    def symbol(self, theta: np.ndarray | float) -> np.ndarray:
        """sigma(theta) = a_0 + 2 sum_k a_k cos(k theta)."""
        theta = np.asarray(theta, dtype=float)
        out = np.full_like(theta, self.coefficients[0])
        for k, a_k in enumerate(self.coefficients[1:], start=1):
            out = out + 2.0 * a_k * np.cos(k * theta)
        return out


@dataclass(frozen=True)
class StencilAnalysis:
    consistency_order: int
    stability_alpha: float

    @property
    def unstable(self) -> bool:
        return not self.stability_alpha > 0


THREE_POINT = StencilSpec((-2.0, 1.0))


def difference_symbol(omega: np.ndarray, h: float, stencil: StencilSpec | None = None) -> np.ndarray:
    """Non-negative Fourier multiplier of -Delta_h (or of minus the stencil) at frequencies omega."""
    omega = np.asarray(omega, dtype=float)
    if stencil is None:
        return (4.0 / h**2) * np.sin(0.5 * omega * h) ** 2
    return -stencil.symbol(omega * h) / h**2


def discrete_laplacian(f: GridField) -> GridField:
    u = f.values
    return f.with_values((np.roll(u, -1) - 2.0 * u + np.roll(u, 1)) / f.h**2)


def apply_stencil(f: GridField, s: StencilSpec) -> GridField:
    """(1/h^2) sum_k a_k f_{g - k h} with periodic wraparound."""
    if f.n_points <= 2 * s.half_width:
        raise StencilTooWide(f"Stencil of half width {s.half_width} does not fit on {f.n_points} sites")
    u = f.values
    acc = s.coefficients[0] * u
    for k, a_k in enumerate(s.coefficients[1:], start=1):
        acc = acc + a_k * (np.roll(u, k) + np.roll(u, -k))
    return f.with_values(acc / f.h**2)


def dst_coefficients(n: int) -> StencilSpec:
    """Centred second-difference stencil of order 2n.

    a_{+-k} = 2 (-1)^{k+1} / k^2 * C(2n, n-k) / C(2n, n) for 0 < k <= n and
    a_0 = -2 sum_{j<=n} 1/j^2, evaluated exactly then rounded to float.
    """
    if n < 1:
        raise ValueError(f"Stencil order parameter must be >= 1, got {n}")
    central = math.comb(2 * n, n)
    a0 = -2 * sum(Fraction(1, j * j) for j in range(1, n + 1))
    side = [Fraction(2 * (-1) ** (k + 1), k * k) * Fraction(math.comb(2 * n, n - k), central) for k in range(1, n + 1)]
    return StencilSpec(tuple(float(a) for a in [a0, *side]))


def _symbol_moments(s: StencilSpec, count: int) -> tuple[list[float], list[float]]:
    """Even Taylor coefficients c_j of sigma(theta) = sum_j c_j theta^{2j} and their magnitudes."""
    moments, scales = [], []
    for j in range(count):
        if j == 0:
            moments.append(s.coefficients[0] + 2.0 * sum(s.coefficients[1:]))
            scales.append(sum(abs(a) for a in s.coefficients))
            continue
        terms = [2.0 * a_k * (-1) ** j * k ** (2 * j) / math.factorial(2 * j) for k, a_k in enumerate(s.coefficients[1:], start=1)]
        moments.append(sum(terms))
        scales.append(sum(abs(t) for t in terms))
    return moments, scales


def _consistency_order(s: StencilSpec) -> int:
    moments, scales = _symbol_moments(s, 2 * s.half_width + 3)

    def vanishes(j: int) -> bool:
        return abs(moments[j]) <= 1e-10 * max(scales[j], 1e-300)

    if not vanishes(0) or abs(moments[1] + 1.0) > 1e-10 * max(scales[1], 1.0):
        return 0
    order = 2
    for j in range(2, len(moments)):
        if not vanishes(j):
            break
        order = 2 * j
    return order


def _stability_alpha(s: StencilSpec) -> float:
    def ratio(theta: float) -> float:
        return float(-s.symbol(theta) / theta**2)

    theta = np.pi * np.arange(1, STABILITY_SAMPLES + 1) / STABILITY_SAMPLES
    values = -s.symbol(theta) / theta**2
    i = int(np.argmin(values))
    best = float(values[i])
    lo = theta[i - 1] if i > 0 else 0.5 * theta[0]
    hi = theta[min(i + 1, STABILITY_SAMPLES - 1)]
    if hi > lo:
        refined = minimize_scalar(ratio, bounds=(lo, hi), method="bounded", options={"xatol": 1e-12})
        if refined.success:
            best = min(best, float(refined.fun))
    return best


def stencil_symbol_analysis(s: StencilSpec) -> StencilAnalysis:
    """Consistency order (from the symbol's small-angle expansion) and stability constant alpha.

    alpha = min over (0, pi] of -sigma(theta)/theta^2; alpha <= 0 marks the stencil unstable.
    """
    analysis = StencilAnalysis(consistency_order=_consistency_order(s), stability_alpha=_stability_alpha(s))
    if analysis.unstable:
        logger.warning("Stencil %s is not coercive (alpha=%.3e)", s.coefficients, analysis.stability_alpha)
    return analysis


def _homogeneous_sobolev_squared(f: GridField, n: int) -> float:
    omega = 2.0 * np.pi * np.fft.fftfreq(f.n_points, d=f.h)
    coeffs = f.h * np.fft.fft(f.values)
    weight = difference_symbol(omega, f.h) ** n
    return float(np.sum(weight * np.abs(coeffs) ** 2) / f.length)


def norm(f: GridField, kind: NormKind = "L2", n: int | None = None) -> float:
    """Discrete norms on the lattice.

    L2: h sum |f_g|^2; H1 adds h sum |(f_g - f_{g-h})/h|^2; homogeneous_sobolev(n) is
    <(-Delta_h)^n f, f> computed spectrally; sobolev(n) sums the homogeneous ones for k <= n.
    """
    if kind == "L2":
        return float(np.sqrt(f.h * np.sum(np.abs(f.values) ** 2)))
    if kind == "H1":
        diff = (f.values - np.roll(f.values, 1)) / f.h
        return float(np.sqrt(f.h * np.sum(np.abs(diff) ** 2) + f.h * np.sum(np.abs(f.values) ** 2)))
    if n is None or n < 0:
        raise ValueError(f"Norm '{kind}' needs an order n >= 0, got {n}")
    if kind == "homogeneous_sobolev":
        return float(np.sqrt(max(_homogeneous_sobolev_squared(f, n), 0.0)))
    if kind == "sobolev":
        return float(np.sqrt(sum(max(_homogeneous_sobolev_squared(f, k), 0.0) for k in range(n + 1))))
    raise ValueError(f"Unknown norm kind: {kind}")
