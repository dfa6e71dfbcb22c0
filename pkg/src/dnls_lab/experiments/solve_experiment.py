import logging
from typing import Any

from dnls_lab.experiments.base_experiment import BaseExperiment
from dnls_lab.solver import COERCIVITY_DENSE_LIMIT, SolitonSolution, with_diagnostics
from dnls_lab.utils.field_io import point_slug, write_index

logger = logging.getLogger(__name__)


class SolveExperiment(BaseExperiment):
    """Discrete traveling waves for every (xi, h) point, with coercivity and spectral decay diagnostics."""

    @property
    def name(self) -> str:
        return "solve"

    @property
    def description(self) -> str:
        return "Solve for discrete traveling waves by Newton iteration from the projected continuous soliton."

    @property
    def parameters(self) -> list[str]:
        return [*super().parameters, "diagnostics"]

    def _solve_point(self, point: tuple[tuple[float, float], float]) -> SolitonSolution:
        xi, h = point
        grid = self.config.grid(h)
        sol = self.solve(xi, grid)
        if self.config.diagnostics:
            sol = with_diagnostics(sol, coercivity=grid.n_points <= COERCIVITY_DENSE_LIMIT)
        return sol

    async def run(self, **kwargs) -> dict[str, Any]:
        points = self.points()
        solutions = await self.map_points(self._solve_point, points)
        entries = []
        for (xi, h), sol in zip(points, solutions, strict=True):
            slug = point_slug(xi, h, self.config.stencil_order)
            await sol.to_files(self.output_dir / "points" / slug)
            entries.append({"point": slug, **sol.manifest()})
        index = await write_index(self.output_dir, entries)
        return {
            "status": "success",
            "experiment": self.name,
            "points": [f"{e['point']}: residual={e['residual']:.3e} iters={e['newton_iters']} alpha={e['alpha']}" for e in entries],
            "index": str(index),
        }
