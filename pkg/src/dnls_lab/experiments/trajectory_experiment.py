import logging
from dataclasses import asdict, dataclass, field
from typing import Any

from dnls_lab.config import GridSpec
from dnls_lab.continuous_waves import WaveParams
from dnls_lab.dynamics import EvolutionConfig, Trajectory, conservation_report, evolve
from dnls_lab.exceptions import NonFinite, ProjectionDiverged
from dnls_lab.experiments.base_experiment import BaseExperiment, track_table, trajectory_table
from dnls_lab.modulation import ModulationTrack, envelope_check, modulation_control, profile_deviation, track
from dnls_lab.solver import SolitonSolution
from dnls_lab.spectral import SpectralField
from dnls_lab.utils.field_io import format_table, point_slug, write_index, write_json, write_text

logger = logging.getLogger(__name__)


@dataclass
class PointRun:
    slug: str
    xi: tuple[float, float]
    h: float
    trajectory: Trajectory | None = None
    track: ModulationTrack | None = None
    summary: dict[str, Any] = field(default_factory=dict)
    tables: dict[str, tuple[list[str], list[list[Any]]]] = field(default_factory=dict)
    error: Exception | None = None


class TrajectoryExperiment(BaseExperiment):
    """Shared evolve-then-track pipeline for the time-dependent experiments."""

    tracks_orbit = True

    @property
    def parameters(self) -> list[str]:
        return [*super().parameters, "evolution", "initial", "perturbation", "seed", "max_wall_seconds", "gate"]

    def reference_wave(self, xi: tuple[float, float], grid: GridSpec) -> tuple[SpectralField, SolitonSolution | None]:
        """The wave whose orbit is tracked, and the solution it came from (if any)."""
        sol = self.solve(xi, grid)
        return sol.field, sol

    def summarize(self, run: PointRun) -> None:
        """Hook for experiment-specific summary fields, called after a complete evolution."""

    def _run_point(self, point: tuple[int, tuple[tuple[float, float], float]]) -> PointRun:
        index, (xi, h) = point
        grid = self.config.grid(h)
        p = WaveParams(*xi)
        run = PointRun(slug=point_slug(xi, h, self.config.stencil_order), xi=xi, h=h)
        eta, sol = self.reference_wave(xi, grid)
        f0 = self.initial_field(xi, grid, sol, salt=index)
        cfg = EvolutionConfig.from_options(self.config.evolution, h, self.stencil())
        try:
            run.trajectory = evolve(f0, cfg, reference_xi2=p.xi2, max_wall_seconds=self.config.max_wall_seconds)
        except NonFinite as e:
            logger.error("Evolution of %s blew up: %s", run.slug, e)
            run.trajectory, run.error = e.trajectory, e
            run.summary = {"status": "non_finite", "time": e.time}
            return run

        run.summary = {
            "status": "success",
            "truncated": run.trajectory.manifest.get("truncated", False),
            "t_reached": run.trajectory.times[-1],
            "conservation": asdict(conservation_report(run.trajectory)),
        }
        if self.tracks_orbit:
            self._track(run, eta, p)
        self.summarize(run)
        return run

    def _track(self, run: PointRun, eta: SpectralField, p: WaveParams) -> None:
        try:
            run.track = track(run.trajectory, eta)
            run.summary["horizon"] = None
        except ProjectionDiverged as e:
            run.track = e.partial
            run.summary["horizon"] = run.trajectory.times[e.frame] if e.frame is not None else None
        if run.track is None or not len(run.track):
            return
        control = modulation_control(run.track, p)
        deviation = [profile_deviation(f, p, s) for f, s in zip(run.trajectory.fields, run.track.states, strict=False)]
        run.summary.update(
            {
                "max_delta": max(run.track.delta),
                "final_delta": run.track.delta[-1],
                "max_modulation_control": max(control),
                "max_profile_deviation": max(deviation),
                "mean_x0_dot": sum(r[1] for r in run.track.rates) / len(run.track),
                "max_a_inv_norm": max(run.track.a_inv_norm),
                "envelope_gronwall": envelope_check(run.track, run.h, p, "gronwall").as_dict(),
                "envelope_sobolev": envelope_check(run.track, run.h, p, "sobolev", n=2).as_dict(),
            }
        )

    async def write_point(self, run: PointRun) -> None:
        directory = self.output_dir / "points" / run.slug
        if run.trajectory is not None and run.trajectory.reports:
            await write_text(directory / "trajectory.csv", format_table(*trajectory_table(run.trajectory)))
        if run.track is not None and len(run.track):
            await write_text(directory / "track.csv", format_table(*track_table(run.track)))
        for filename, (columns, rows) in run.tables.items():
            await write_text(directory / filename, format_table(columns, rows))
        evolution = run.trajectory.manifest if run.trajectory is not None else {}
        await write_json(directory / "summary.json", {"point": run.slug, "xi": list(run.xi), "h": run.h, **run.summary, "evolution": evolution})

    async def run_points(self) -> list[PointRun]:
        """Evolve every sweep point in the worker pool; numerical failures stay attached to their runs."""
        return await self.map_points(self._run_point, list(enumerate(self.points())))

    async def finish(self, runs: list[PointRun]) -> list[dict[str, Any]]:
        """Write per-point files and the index, then re-raise the first numerical failure."""
        entries = []
        for run in runs:
            await self.write_point(run)
            entries.append({"point": run.slug, "xi": list(run.xi), "h": run.h, **run.summary})
        await write_index(self.output_dir, entries)
        for run in runs:
            if run.error is not None:
                raise run.error
        return entries
