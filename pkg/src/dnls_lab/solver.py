"""Discrete traveling waves: critical points of the Lagrangian in the real-spectrum subspace."""

import dataclasses
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np
from scipy import linalg
from scipy.optimize import brentq
from scipy.sparse.linalg import LinearOperator, eigsh, minres

from dnls_lab.config import GridSpec, SolverOptions
from dnls_lab.continuous_waves import WaveParams, check_domain, decay_fit, psi_projected, psi_sampled
from dnls_lab.exceptions import BracketFailure, NoConvergence, SymmetryViolation, UnstableStencil
from dnls_lab.functionals import (
    free_modes,
    hessian_apply,
    lagrangian_gradient,
    real_hessian_matrix,
    symmetric_jacobian,
)
from dnls_lab.lattice import StencilSpec, difference_symbol, norm, stencil_symbol_analysis
from dnls_lab.spectral import SpectralField, continuous_sobolev_norm, derivative, spectral_l1_norm, spectral_l2_norm, to_grid

logger = logging.getLogger(__name__)

COERCIVITY_DENSE_LIMIT = 512
SYMMETRY_TOL = 1e-8


@dataclass(frozen=True)
class GevreyFit:
    C: float
    eps: float
    r2: float


@dataclass(frozen=True)
class CoercivitySpectrum:
    alpha: float
    spectrum_head: list[float]
    unprojected_head: list[float]


@dataclass(frozen=True)
class SolitonSolution:
    params: WaveParams
    field: SpectralField
    residual_norm: float
    newton_iters: int
    coercivity_alpha: float | None = None
    gevrey: GevreyFit | None = None
    stencil: StencilSpec | None = None

    @property
    def grid(self) -> GridSpec:
        return GridSpec(h=self.field.h, n_points=self.field.n_points)

    def manifest(self) -> dict[str, Any]:
        return {
            "xi1": self.params.xi1,
            "xi2": self.params.xi2,
            "h": self.field.h,
            "n": self.field.n_points,
            "residual": self.residual_norm,
            "newton_iters": self.newton_iters,
            "alpha": self.coercivity_alpha,
            "gevrey": dataclasses.asdict(self.gevrey) if self.gevrey else None,
            "stencil": list(self.stencil.coefficients) if self.stencil else None,
        }

    async def to_files(self, directory: str | Path) -> list[Path]:
        """Write ``solution.json`` and ``spectrum.csv`` into ``directory``."""
        from dnls_lab.utils.field_io import format_spectral_csv, write_json, write_text

        directory = Path(directory)
        json_path, csv_path = directory / "solution.json", directory / "spectrum.csv"
        await write_json(json_path, self.manifest())
        await write_text(csv_path, format_spectral_csv(self.field))
        return [json_path, csv_path]

    @classmethod
    def from_files(cls, directory: str | Path) -> "SolitonSolution":
        from dnls_lab.utils.field_io import parse_spectral_csv

        directory = Path(directory)
        data = json.loads((directory / "solution.json").read_text(encoding="utf-8"))
        spectrum = parse_spectral_csv((directory / "spectrum.csv").read_text(encoding="utf-8"))
        return cls(
            params=WaveParams(data["xi1"], data["xi2"]),
            field=spectrum,
            residual_norm=data["residual"],
            newton_iters=data.get("newton_iters", 0),
            coercivity_alpha=data.get("alpha"),
            gevrey=GevreyFit(**data["gevrey"]) if data.get("gevrey") else None,
            stencil=StencilSpec(tuple(data["stencil"])) if data.get("stencil") else None,
        )


def residual(p: WaveParams, u: SpectralField, stencil: StencilSpec | None = None) -> float:
    """L^2 norm of the Lagrangian gradient."""
    return spectral_l2_norm(lagrangian_gradient(p, u, stencil))


def _free_positions(n_points: int) -> np.ndarray:
    return free_modes(n_points) % n_points


def _embed(values: np.ndarray, like: SpectralField) -> SpectralField:
    coeffs = np.zeros(like.n_points, dtype=np.complex128)
    coeffs[_free_positions(like.n_points)] = values
    return like.with_coeffs(coeffs)


def _newton_direction(p: WaveParams, u: SpectralField, rhs: np.ndarray, opts: SolverOptions, stencil: StencilSpec | None, res: float) -> np.ndarray:
    if u.n_points <= opts.dense_limit:
        jac = symmetric_jacobian(p, u, stencil)
        return linalg.solve(jac, rhs, assume_a="sym")

    positions = _free_positions(u.n_points)

    def matvec(x: np.ndarray) -> np.ndarray:
        return hessian_apply(p, u, _embed(x, u), stencil).coeffs[positions].real

    size = positions.size
    operator = LinearOperator((size, size), matvec=matvec, dtype=float)
    step, info = minres(operator, rhs, rtol=opts.iterative_rtol * min(1.0, res))
    if info < 0:
        raise NoConvergence(f"MINRES failed with code {info}", residual=res)
    return step


def _newton(p: WaveParams, start: SpectralField, opts: SolverOptions, stencil: StencilSpec | None) -> SolitonSolution:
    positions = _free_positions(start.n_points)
    coeffs = np.zeros(start.n_points)
    coeffs[positions] = start.coeffs[positions].real
    u = start.with_coeffs(coeffs)
    grad = lagrangian_gradient(p, u, stencil)
    res = spectral_l2_norm(grad)
    logger.debug("Newton start xi=%s h=%g residual=%.3e", p.as_tuple(), u.h, res)

    for iteration in range(1, opts.max_iter + 1):
        if res < opts.tol:
            return SolitonSolution(params=p, field=u, residual_norm=res, newton_iters=iteration - 1, stencil=stencil)
        g = grad.coeffs[positions]
        leak = float(np.max(np.abs(g.imag)))
        if leak > SYMMETRY_TOL * max(float(np.max(np.abs(g))), 1.0):
            raise SymmetryViolation(f"Gradient left the real-spectrum subspace: imaginary part {leak:.3e}")
        step = _newton_direction(p, u, -g.real, opts, stencil, res)

        scale = 1.0
        for _ in range(opts.max_halvings + 1):
            trial = coeffs.copy()
            trial[positions] += scale * step
            trial_field = u.with_coeffs(trial)
            trial_grad = lagrangian_gradient(p, trial_field, stencil)
            trial_res = spectral_l2_norm(trial_grad)
            if not opts.damping or trial_res < res:
                break
            scale *= 0.5
        else:
            raise NoConvergence(f"Line search stalled at residual {res:.3e}", iterations=iteration, residual=res)

        coeffs, u, grad, res = trial, trial_field, trial_grad, trial_res
        logger.debug("Newton iteration %d: residual %.3e (step scale %g)", iteration, res, scale)

    if res < opts.tol:
        return SolitonSolution(params=p, field=u, residual_norm=res, newton_iters=opts.max_iter, stencil=stencil)
    raise NoConvergence(f"No convergence after {opts.max_iter} Newton steps (residual {res:.3e})", iterations=opts.max_iter, residual=res)


def solve_wave(
    p: WaveParams,
    grid: GridSpec,
    opts: SolverOptions | None = None,
    initial: SpectralField | None = None,
    stencil: StencilSpec | None = None,
) -> SolitonSolution:
    """Newton iteration from the projected continuous soliton to a discrete traveling wave."""
    opts = opts or SolverOptions()
    check_domain(p, grid)
    start = initial if initial is not None else psi_projected(p, grid)
    sol = _newton(p, start, opts, stencil)
    logger.info("Solved xi=%s h=%g n=%d in %d Newton steps, residual %.3e", p.as_tuple(), grid.h, grid.n_points, sol.newton_iters, sol.residual_norm)
    return sol


def solve_wave_dst(s: StencilSpec, p: WaveParams, grid: GridSpec, opts: SolverOptions | None = None, initial: SpectralField | None = None) -> SolitonSolution:
    analysis = stencil_symbol_analysis(s)
    if analysis.unstable:
        raise UnstableStencil(f"Stencil {s.coefficients} has stability constant {analysis.stability_alpha:.3e} <= 0")
    return solve_wave(p, grid, opts, initial=initial, stencil=s)


def with_diagnostics(sol: SolitonSolution, coercivity: bool = True) -> SolitonSolution:
    alpha = coercivity_spectrum(sol).alpha if coercivity else sol.coercivity_alpha
    return dataclasses.replace(sol, coercivity_alpha=alpha, gevrey=gevrey_fit(sol))


def match_mass(
    xi2: float,
    target_mass: float,
    grid: GridSpec,
    bracket: tuple[float, float],
    opts: SolverOptions | None = None,
    stencil: StencilSpec | None = None,
) -> WaveParams:
    """Find xi1 in ``bracket`` whose discrete wave has L^2 mass ``target_mass`` at advection speed xi2."""
    lo, hi = bracket
    floor = (xi2 / 2.0) ** 2
    if not floor < lo < hi:
        raise BracketFailure(f"Bracket {bracket} must satisfy (xi2/2)^2={floor:g} < lo < hi")

    def mass_of(xi1: float) -> float:
        sol = solve_wave(WaveParams(xi1, xi2), grid, opts, stencil=stencil)
        return spectral_l2_norm(sol.field) ** 2

    m_lo, m_hi = mass_of(lo), mass_of(hi)
    if not m_lo < m_hi:
        raise BracketFailure(f"Mass is not increasing across the bracket: {m_lo:.6g} at {lo:g}, {m_hi:.6g} at {hi:g}")
    if not m_lo <= target_mass <= m_hi:
        raise BracketFailure(f"Target mass {target_mass:.6g} outside [{m_lo:.6g}, {m_hi:.6g}]")
    xi1 = brentq(lambda z: mass_of(z) - target_mass, lo, hi, xtol=1e-13, rtol=4 * np.finfo(float).eps)
    logger.info("Matched mass %.10g at xi=(%.12g, %g)", target_mass, xi1, xi2)
    return WaveParams(xi1, xi2)


def _constraint_vectors(u: SpectralField) -> np.ndarray:
    """eta, i eta, d_x eta as columns in (Re, Im) coordinates of the open band."""
    positions = _free_positions(u.n_points)
    columns = []
    for c in (u.coeffs, 1j * u.coeffs, derivative(u).coeffs):
        c = c[positions]
        columns.append(np.concatenate([c.real, c.imag]))
    return np.column_stack(columns)


def _sobolev_weight(u: SpectralField) -> np.ndarray:
    positions = _free_positions(u.n_points)
    s = difference_symbol(u.omega, u.h)[positions]
    return np.concatenate([1.0 + s, 1.0 + s])


def coercivity_spectrum(sol: SolitonSolution, head: int = 5) -> CoercivitySpectrum:
    """Lowest eigenvalues of the Hessian against the discrete H^1 form, with and without the symmetry span removed.

    alpha is the smallest eigenvalue on the L^2-orthogonal complement of span(eta, i eta, d_x eta).
    """
    u = sol.field
    weight = _sobolev_weight(u)
    scale = 1.0 / np.sqrt(weight)
    basis, _ = np.linalg.qr(scale[:, None] * _constraint_vectors(u))
    if u.n_points <= COERCIVITY_DENSE_LIMIT:
        k = real_hessian_matrix(sol.params, u, sol.stencil)
        ks = scale[:, None] * k * scale[None, :]
        unprojected = linalg.eigh(ks, eigvals_only=True, subset_by_index=[0, head - 1])
        complement = linalg.null_space(basis.T)
        projected = linalg.eigh(complement.T @ ks @ complement, eigvals_only=True, subset_by_index=[0, head - 1])
    else:
        unprojected, projected = _matrix_free_spectrum(sol, scale, basis, head)
    result = CoercivitySpectrum(alpha=float(projected[0]), spectrum_head=[float(x) for x in projected], unprojected_head=[float(x) for x in unprojected])
    logger.info("Coercivity xi=%s h=%g: alpha=%.6g, unprojected minimum %.6g", sol.params.as_tuple(), u.h, result.alpha, unprojected[0])
    return result


def _matrix_free_spectrum(sol: SolitonSolution, scale: np.ndarray, basis: np.ndarray, head: int) -> tuple[np.ndarray, np.ndarray]:
    u = sol.field
    positions = _free_positions(u.n_points)
    half = positions.size
    size = 2 * half

    def hess(x: np.ndarray) -> np.ndarray:
        y = scale * x
        v = _embed(y[:half] + 1j * y[half:], u)
        out = hessian_apply(sol.params, u, v, sol.stencil).coeffs[positions]
        return scale * np.concatenate([out.real, out.imag])

    lift = 10.0 * (1.0 + abs(sol.params.xi1) + abs(sol.params.xi2) / u.h + 3.0 * spectral_l1_norm(u) ** 2)

    def projected(x: np.ndarray) -> np.ndarray:
        inside = x - basis @ (basis.T @ x)
        out = hess(inside)
        return out - basis @ (basis.T @ out) + lift * (basis @ (basis.T @ x))

    unprojected = eigsh(LinearOperator((size, size), matvec=hess, dtype=float), k=head, which="SA", return_eigenvectors=False)
    restricted = eigsh(LinearOperator((size, size), matvec=projected, dtype=float), k=head, which="SA", return_eigenvectors=False)
    return np.sort(unprojected), np.sort(restricted)


def gevrey_fit(sol: SolitonSolution | SpectralField, floor: float = 1e-12, skip_fraction: float = 0.1) -> GevreyFit:
    """Fit |u_hat(w)| ~ C exp(-eps |w|) over the resolved tail of the spectrum."""
    u = sol.field if isinstance(sol, SolitonSolution) else sol
    positions = _free_positions(u.n_points)
    c, eps, r2 = decay_fit(u.coeffs[positions], u.omega[positions], floor=floor, skip_fraction=skip_fraction)
    return GevreyFit(C=c, eps=eps, r2=r2)


def h1_distance(a: SpectralField, b: SpectralField) -> float:
    return continuous_sobolev_norm(a - b, 1)


def continuity_rate(p: WaveParams, grid: GridSpec, direction: tuple[float, float], delta: float = 1e-3, opts: SolverOptions | None = None) -> float:
    """||eta_{xi + delta zeta} - eta_xi||_{H^1} / delta."""
    base = solve_wave(p, grid, opts)
    moved = solve_wave(p.moved(direction, delta), grid, opts, initial=base.field)
    return h1_distance(moved.field, base.field) / delta


@dataclass(frozen=True)
class ConsistencyError:
    lattice_h1: float
    line_h1: float


def consistency_error(sol: SolitonSolution) -> ConsistencyError:
    """Distance to the continuous soliton: on the lattice (discrete H^1 against samples) and on the line (against psi^h)."""
    grid = sol.grid
    eta = to_grid(sol.field)
    lattice_err = norm(eta.with_values(eta.values - psi_sampled(sol.params, grid).values), "H1")
    line_err = h1_distance(sol.field, psi_projected(sol.params, grid))
    return ConsistencyError(lattice_h1=lattice_err, line_h1=line_err)

