import logging
from typing import Any

import numpy as np

from dnls_lab.exceptions import GateFailure
from dnls_lab.experiments.base_experiment import BaseExperiment
from dnls_lab.lattice import stencil_symbol_analysis
from dnls_lab.solver import consistency_error
from dnls_lab.utils.field_io import format_table, write_index, write_json, write_text, xi_slug

logger = logging.getLogger(__name__)


def slope_tolerance(order: int) -> float:
    return 0.3 if order <= 2 else 0.4


def fitted_slope(steps: list[float], errors: list[float]) -> float | None:
    """Least-squares slope of log(error) against log(h); None for fewer than two steps."""
    if len(steps) < 2:
        return None
    slope, _ = np.polyfit(np.log(steps), np.log(errors), 1)
    return float(slope)


class ConsistencyExperiment(BaseExperiment):
    """Distance between discrete and continuous waves across a sweep of lattice steps."""

    @property
    def name(self) -> str:
        return "consistency"

    @property
    def description(self) -> str:
        return "Measure ||eta - psi||_H1 against h and fit the consistency order."

    @property
    def parameters(self) -> list[str]:
        return [*super().parameters, "gate"]

    def expected_order(self) -> int:
        stencil = self.stencil()
        return 2 if stencil is None else stencil_symbol_analysis(stencil).consistency_order

    def _measure(self, point: tuple[tuple[float, float], float]) -> dict[str, Any]:
        xi, h = point
        sol = self.solve(xi, self.config.grid(h))
        err = consistency_error(sol)
        return {"h": h, "lattice_h1": err.lattice_h1, "line_h1": err.line_h1, "residual": sol.residual_norm}

    async def run(self, **kwargs) -> dict[str, Any]:
        order = self.expected_order()
        tolerance = slope_tolerance(order)
        points = self.points()
        measured = await self.map_points(self._measure, points)

        entries, failures = [], []
        for xi in self.config.xi:
            rows = sorted((m for (p_xi, _), m in zip(points, measured, strict=True) if tuple(p_xi) == tuple(xi)), key=lambda m: -m["h"])
            steps = [m["h"] for m in rows]
            slope = fitted_slope(steps, [m["lattice_h1"] for m in rows])
            table = format_table(["h", "order", "err_h1_lattice", "err_h1_line", "residual"], [[m["h"], order, m["lattice_h1"], m["line_h1"], m["residual"]] for m in rows])
            slug = xi_slug(xi, self.config.stencil_order)
            await write_text(self.output_dir / f"consistency_{slug}.csv", table)
            passed = slope is None or abs(slope - order) <= tolerance
            entries.append({"point": slug, "order": order, "slope": slope, "tolerance": tolerance, "passed": passed, "errors": [m["lattice_h1"] for m in rows], "h": steps})
            logger.info("Consistency %s: slope %s (expected %d)", slug, f"{slope:.3f}" if slope is not None else "n/a", order)
            if not passed:
                failures.append(f"{slug}: slope {slope:.3f} not within {order} +- {tolerance}")

        await write_json(self.output_dir / "consistency.json", {"order": order, "points": entries})
        await write_index(self.output_dir, entries)
        if failures and self.config.gate:
            raise GateFailure("; ".join(failures))
        return {
            "status": "success" if not failures else "failed",
            "experiment": self.name,
            "points": [f"{e['point']}: slope={e['slope']}" for e in entries],
        }
