import asyncio
import logging
from abc import ABC, abstractmethod
from collections.abc import Callable, Iterable
from pathlib import Path
from typing import Any, TypeVar

import numpy as np

from dnls_lab.config import ExperimentConfig, GridSpec
from dnls_lab.continuous_waves import WaveParams, psi_sampled
from dnls_lab.lattice import GridField, StencilSpec, dst_coefficients, norm
from dnls_lab.solver import SolitonSolution, solve_wave, solve_wave_dst
from dnls_lab.spectral import SpectralField, band_limit, to_grid

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")

PERTURBATION_CUTOFF = 2.0


class BaseExperiment(ABC):
    """Base class for all dnls-lab experiments."""

    def __init__(self, config: ExperimentConfig):
        self.config = config

    @abstractmethod
    async def run(self, **kwargs) -> dict[str, Any]:
        """Execute the experiment and write its outputs."""
        pass

    @property
    @abstractmethod
    def name(self) -> str:
        """Experiment name (the CLI subcommand)."""
        pass

    @property
    @abstractmethod
    def description(self) -> str:
        """Experiment description."""
        pass

    @property
    def parameters(self) -> list[str]:
        """Configuration keys the experiment reads."""
        return ["xi", "h", "length", "stencil_order", "solver", "output_dir", "threads"]

    @property
    def output_dir(self) -> Path:
        return Path(self.config.output_dir)

    def points(self) -> list[tuple[tuple[float, float], float]]:
        return [(tuple(xi), h) for xi in self.config.xi for h in self.config.h]

    def stencil(self) -> StencilSpec | None:
        return dst_coefficients(self.config.stencil_order) if self.config.stencil_order else None

    def solve(self, xi: tuple[float, float], grid: GridSpec) -> SolitonSolution:
        p = WaveParams(*xi)
        stencil = self.stencil()
        if stencil is None:
            return solve_wave(p, grid, self.config.solver)
        return solve_wave_dst(stencil, p, grid, self.config.solver)

    def initial_field(self, xi: tuple[float, float], grid: GridSpec, sol: SolitonSolution | None, salt: int = 0) -> GridField:
        """eta (or psi) on the lattice plus a seeded random perturbation of the configured H^1 size."""
        if self.config.initial == "psi" or sol is None:
            base = psi_sampled(WaveParams(*xi), grid)
        else:
            base = to_grid(sol.field)
        if self.config.perturbation == 0:
            return base
        return base.with_values(base.values + random_perturbation(grid, self.config.perturbation, self.config.seed + salt).values)

    async def map_points(self, func: Callable[[T], R], items: Iterable[T]) -> list[R]:
        """Run blocking ``func`` over ``items`` in worker threads, at most ``threads`` at a time."""
        semaphore = asyncio.Semaphore(self.config.threads)

        async def one(item: T) -> R:
            async with semaphore:
                return await asyncio.to_thread(func, item)

        return list(await asyncio.gather(*(one(item) for item in items)))


def random_perturbation(grid: GridSpec, size: float, seed: int) -> GridField:
    """Smooth complex noise (modes with |w| < 2) normalised to discrete H^1 norm ``size``."""
    rng = np.random.default_rng(seed)
    template = SpectralField.zeros(grid.h, grid.n_points)
    coeffs = (rng.standard_normal(grid.n_points) + 1j * rng.standard_normal(grid.n_points)) * np.exp(-(template.omega**2))
    noise = to_grid(band_limit(template.with_coeffs(coeffs), cutoff=PERTURBATION_CUTOFF))
    scale = norm(noise, "H1")
    return noise.with_values(noise.values * (size / scale))


def trajectory_table(traj: Any) -> tuple[list[str], list[list[Any]]]:
    orders = [n for n, _ in traj.reports[0].sobolev] if traj.reports else []
    columns = ["t", "mass", "H_grid", "H_dealiased", "momentum", "E1_re", "E3_re", "E3_im", *[f"Hn_{n}" for n in orders]]
    shift = traj.momentum_shift()
    if shift is not None:
        columns.append("E2")
    rows = []
    for i, (t, r) in enumerate(zip(traj.times, traj.reports, strict=True)):
        row = [float(t), r.mass, r.hamiltonian_grid, r.hamiltonian_dealiased, r.momentum, r.E1, r.E3.real, r.E3.imag, *[v for _, v in r.sobolev]]
        if shift is not None:
            row.append(shift[i])
        rows.append([float(v) for v in row])
    return columns, rows


def track_table(track: Any) -> tuple[list[str], list[list[Any]]]:
    columns = ["t", "gamma", "x0", "gamma_dot", "x0_dot", "delta", "a_inv_norm"]
    rows = [
        [float(t), s.gamma, s.x0, r[0], r[1], d, a]
        for t, s, r, d, a in zip(track.times, track.states, track.rates, track.delta, track.a_inv_norm, strict=True)
    ]
    return columns, rows
