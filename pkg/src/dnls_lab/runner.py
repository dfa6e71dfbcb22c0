import logging
import time
from datetime import datetime, timezone
from importlib.metadata import PackageNotFoundError, version
from typing import Any

from dnls_lab.config import ExperimentConfig
from dnls_lab.continuous_waves import WaveParams, check_domain
from dnls_lab.exceptions import GateFailure
from dnls_lab.experiments.experiment_manager import ExperimentManager
from dnls_lab.utils.field_io import write_json

logger = logging.getLogger(__name__)

UTC = timezone.utc

MANIFEST_VERSION = 1
PACKAGE_NAME = "dnls-lab"

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_GATE = 4


def _format_value(value: Any) -> str:
    if isinstance(value, float):
        return f"{value:.6g}"
    if isinstance(value, dict):
        return ", ".join(f"{k}={_format_value(v)}" for k, v in value.items())
    return str(value)


def _format_result(result: Any) -> str:
    """Render an experiment result as ``Key: value`` lines with the values aligned; lists become bullets."""
    if not isinstance(result, dict):
        return _format_value(result)
    labels = {key: key.replace("_", " ").capitalize() + ":" for key in result}
    width = max((len(label) for key, label in labels.items() if not isinstance(result[key], list)), default=0)
    lines = []
    for key, value in result.items():
        if isinstance(value, list):
            lines.append(labels[key])
            lines.extend(f"  • {_format_value(item)}" for item in value)
        else:
            lines.append(f"{labels[key]:<{width}} {_format_value(value)}")
    return "\n".join(lines)


def package_version() -> str:
    try:
        return version(PACKAGE_NAME)
    except PackageNotFoundError:
        return "0+unknown"


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, GateFailure):
        return EXIT_GATE
    # NoConvergence, NonFinite, ProjectionDiverged, SingularA, SymmetryViolation
    if isinstance(exc, ArithmeticError):
        return EXIT_NUMERICAL
    if isinstance(exc, ValueError):
        return EXIT_CONFIG
    return 1


def validate_points(config: ExperimentConfig) -> list[dict[str, Any]]:
    """Check every sweep point against its box before any compute; returns the lattice facts for the manifest."""
    points = []
    for xi in config.xi:
        p = WaveParams(*xi)
        for h in config.h:
            grid = config.grid(h)
            check_domain(p, grid)
            points.append({"xi": list(xi), "h": h, "n_points": grid.n_points, "L": grid.L, "decay_lengths": p.m * grid.L})
    return points


async def run_experiment(config: ExperimentConfig) -> dict[str, Any]:
    """Run the configured experiment and write ``manifest.json`` next to its outputs, whatever the outcome."""
    manager = ExperimentManager(config)
    experiment = manager.get_experiment(config.experiment)
    points = validate_points(config) if experiment.name != "stencil-info" else []

    manifest: dict[str, Any] = {
        "manifest_version": MANIFEST_VERSION,
        "package": PACKAGE_NAME,
        "version": package_version(),
        "experiment": experiment.name,
        "started_at": datetime.now(UTC).isoformat(),
        "points": points,
        "config": config.model_dump(mode="json"),
    }
    started = time.perf_counter()
    try:
        logger.info("Running experiment %s with %d point(s) on %d thread(s)", experiment.name, len(points), config.threads)
        result = await experiment.run()
        manifest["status"] = result.get("status", "success")
        return result
    except Exception as e:
        logger.error("Experiment %s failed: %s", experiment.name, e)
        manifest["status"] = "error"
        manifest["error"] = {"type": type(e).__name__, "message": str(e), "exit_code": exit_code_for(e)}
        raise
    finally:
        manifest["wall_clock_seconds"] = time.perf_counter() - started
        await write_json(experiment.output_dir / "manifest.json", manifest)
