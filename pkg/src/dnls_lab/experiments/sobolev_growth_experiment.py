import logging
from typing import Any

import numpy as np
from scipy.stats import linregress

from dnls_lab.exceptions import GateFailure
from dnls_lab.experiments.trajectory_experiment import PointRun, TrajectoryExperiment
from dnls_lab.lattice import norm

logger = logging.getLogger(__name__)

EXPONENT_SLACK = 0.3


def growth_constant(f0: Any) -> float:
    """||u0||_{H^1 hom} + ||u0||_{L^2}^3."""
    return norm(f0, "homogeneous_sobolev", 1) + norm(f0, "L2") ** 3


def growth_bound_shape(times: np.ndarray, n: int, initial_norm: float, m: float) -> np.ndarray:
    """||u0||_{H^n} + M^((2n+1)/3) + t^((n-1)/2) M^((4n-1)/3)."""
    return initial_norm + m ** ((2 * n + 1) / 3) + np.abs(times) ** ((n - 1) / 2) * m ** ((4 * n - 1) / 3)


def growth_exponent(times: np.ndarray, sup_norms: np.ndarray, t_min: float) -> float | None:
    """Log-log slope of the running sup against t over t >= t_min; None with fewer than three usable frames."""
    mask = (times >= t_min) & (times > 0) & (sup_norms > 0)
    if np.count_nonzero(mask) < 3:
        return None
    return float(linregress(np.log(times[mask]), np.log(sup_norms[mask])).slope)


class SobolevGrowthExperiment(TrajectoryExperiment):
    """Running sup of the discrete Sobolev norms and their polynomial growth exponent."""

    tracks_orbit = False

    @property
    def name(self) -> str:
        return "sobolev-growth"

    @property
    def description(self) -> str:
        return "Fit the growth exponent of sup_{s<=t} ||u(s)||_{H^n} and compare with (n-1)/2."

    def orders(self) -> list[int]:
        return [n for n in self.config.evolution.sobolev_orders if n >= 1]

    def summarize(self, run: PointRun) -> None:
        traj = run.trajectory
        times = np.asarray(traj.times, dtype=float)
        m = growth_constant(traj.fields[0])
        t_min = 0.1 * times[-1]
        columns, series, growth = ["t"], [times], {}
        for n in self.orders():
            values = np.array([dict(r.sobolev)[n] for r in traj.reports])
            sup = np.maximum.accumulate(values)
            shape = growth_bound_shape(times, n, values[0], m)
            exponent = growth_exponent(times, sup, t_min)
            growth[str(n)] = {
                "exponent": exponent,
                "bound_exponent": (n - 1) / 2,
                "constant": float(np.max(sup / shape)),
                "initial_norm": float(values[0]),
            }
            columns += [f"sup_Hn_{n}", f"bound_{n}"]
            series += [sup, shape]
            logger.info("Sobolev growth %s n=%d: exponent %s", run.slug, n, exponent)
        run.summary.update({"M": m, "fit_from": t_min, "growth": growth})
        run.tables["sobolev_growth.csv"] = (columns, np.column_stack(series).tolist())

    async def run(self, **kwargs) -> dict[str, Any]:
        if not self.orders():
            raise ValueError("sobolev-growth needs at least one Sobolev order >= 1 in evolution.sobolev_orders")
        runs = await self.run_points()
        entries = await self.finish(runs)

        failures = []
        for entry in entries:
            for order, fit in entry.get("growth", {}).items():
                n = int(order)
                if n >= 2 and fit["exponent"] is not None and fit["exponent"] > (n - 1) / 2 + EXPONENT_SLACK:
                    failures.append(f"{entry['point']}: H^{n} exponent {fit['exponent']:.3f} > {(n - 1) / 2 + EXPONENT_SLACK:g}")
        if failures and self.config.gate:
            raise GateFailure("; ".join(failures))
        return {
            "status": "success" if not failures else "failed",
            "experiment": self.name,
            "points": [f"{e['point']}: " + ", ".join(f"n={n} exponent={fit['exponent']}" for n, fit in e.get("growth", {}).items()) for e in entries],
        }
