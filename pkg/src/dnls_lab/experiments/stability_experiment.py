import logging
from typing import Any

from dnls_lab.exceptions import GateFailure
from dnls_lab.experiments.trajectory_experiment import TrajectoryExperiment

logger = logging.getLogger(__name__)


class StabilityExperiment(TrajectoryExperiment):
    """Orbital stability of a perturbed wave: delta(t), modulation rates and the fitted envelopes."""

    @property
    def name(self) -> str:
        return "stability"

    @property
    def description(self) -> str:
        return "Evolve a perturbed discrete wave, track its orbit and compare delta(t) with the stability envelopes."

    @property
    def parameters(self) -> list[str]:
        return [*super().parameters, "delta_gate"]

    async def run(self, **kwargs) -> dict[str, Any]:
        runs = await self.run_points()
        entries = await self.finish(runs)

        failures = []
        for entry in entries:
            if entry.get("horizon") is not None:
                failures.append(f"{entry['point']}: orbit lost at t={entry['horizon']:g}")
            elif entry.get("max_delta", 0.0) >= self.config.delta_gate:
                failures.append(f"{entry['point']}: max delta {entry['max_delta']:.3e} >= {self.config.delta_gate:g}")
        for entry in entries:
            logger.info("Stability %s: max delta %s, horizon %s", entry["point"], entry.get("max_delta"), entry.get("horizon"))
        if failures and self.config.gate:
            raise GateFailure("; ".join(failures))
        return {
            "status": "success" if not failures else "failed",
            "experiment": self.name,
            "points": [f"{e['point']}: max_delta={e.get('max_delta')} control={e.get('max_modulation_control')} horizon={e.get('horizon')}" for e in entries],
        }
