import logging
import math
import os
from pathlib import Path
from typing import Any, Literal

import yaml
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

logger = logging.getLogger(__name__)

ExperimentName = Literal["solve", "consistency", "stability", "sobolev-growth", "peierls", "stencil-info"]
FlowKind = Literal["dnls", "dealiased", "dst"]
Scheme = Literal["strang", "rk4"]
Orientation = Literal["forward", "printed"]

DEFAULT_LENGTH = 51.2
DEFAULT_OUTPUT_DIR = "dnls-lab-output"


def next_power_of_two(value: float) -> int:
    n = max(8, int(math.ceil(value - 1e-9)))
    return 1 << (n - 1).bit_length()


class GridSpec(BaseModel):
    """Periodic lattice {0, h, ..., (n_points - 1) h}; ``n_points`` defaults to the next power of two covering ``length``."""

    model_config = ConfigDict(frozen=True)

    h: float = Field(gt=0.0)
    n_points: int | None = None
    length: float | None = Field(default=None, gt=0.0)

    @model_validator(mode="before")
    @classmethod
    def _resolve_points(cls, data: Any) -> Any:
        if isinstance(data, dict) and data.get("n_points") is None:
            h = data.get("h")
            if isinstance(h, int | float) and h > 0:
                data = {**data, "n_points": next_power_of_two((data.get("length") or DEFAULT_LENGTH) / h)}
        return data

    @field_validator("n_points")
    @classmethod
    def _check_points(cls, value: int | None) -> int | None:
        if value is not None and (value < 8 or value & (value - 1)):
            raise ValueError(f"n_points must be a power of two >= 8, got {value}")
        return value

    @property
    def L(self) -> float:
        return self.n_points * self.h


class SolverOptions(BaseModel):
    model_config = ConfigDict(frozen=True)

    tol: float = Field(default=1e-11, gt=0.0)
    max_iter: int = Field(default=30, ge=1)
    damping: bool = True
    max_halvings: int = Field(default=10, ge=0)
    dense_limit: int = Field(default=1024, ge=8)
    iterative_rtol: float = Field(default=1e-3, gt=0.0, lt=1.0)


class EvolutionOptions(BaseModel):
    """Time-stepping settings; ``dt=None`` means min(0.01, h^2/2) on the chosen lattice."""

    model_config = ConfigDict(frozen=True)

    dt: float | None = Field(default=None, gt=0.0)
    t_final: float = Field(default=10.0, gt=0.0)
    flow: FlowKind = "dnls"
    scheme: Scheme = "strang"
    save_every: int = Field(default=100, ge=1)
    orientation: Orientation = "forward"
    sobolev_orders: list[int] = Field(default_factory=lambda: [1, 2, 3])

    @field_validator("sobolev_orders")
    @classmethod
    def _check_orders(cls, value: list[int]) -> list[int]:
        if any(n < 0 for n in value):
            raise ValueError(f"Sobolev orders must be >= 0, got {value}")
        return value


class ExperimentConfig(BaseModel):
    """Everything needed to replay one experiment; dumped verbatim into the run manifest."""

    experiment: ExperimentName = "solve"
    xi: list[tuple[float, float]] = Field(default_factory=lambda: [(1.0, 0.0)])
    h: list[float] = Field(default_factory=lambda: [0.1])
    length: float = Field(default=DEFAULT_LENGTH, gt=0.0)
    stencil_order: int | None = Field(default=None, ge=1)
    solver: SolverOptions = Field(default_factory=SolverOptions)
    evolution: EvolutionOptions = Field(default_factory=EvolutionOptions)
    initial: Literal["eta", "psi"] = "eta"
    perturbation: float = Field(default=0.0, ge=0.0)
    seed: int = 0
    threads: int = Field(default=1, ge=1)
    output_dir: str = DEFAULT_OUTPUT_DIR
    gate: bool = True
    delta_gate: float = Field(default=1e-2, gt=0.0)
    max_wall_seconds: float | None = Field(default=None, gt=0.0)
    diagnostics: bool = True

    @field_validator("xi")
    @classmethod
    def _check_speeds(cls, value: list[tuple[float, float]]) -> list[tuple[float, float]]:
        if not value:
            raise ValueError("At least one wave parameter pair is required")
        for xi1, xi2 in value:
            if not xi1 > (xi2 / 2.0) ** 2:
                raise ValueError(f"xi1 must exceed (xi2/2)^2, got xi=({xi1}, {xi2})")
        return value

    @field_validator("h")
    @classmethod
    def _check_steps(cls, value: list[float]) -> list[float]:
        if not value or any(not step > 0 for step in value):
            raise ValueError(f"Lattice steps must be a non-empty list of positive numbers, got {value}")
        return value

    def grid(self, h: float) -> GridSpec:
        return GridSpec(h=h, length=self.length)

    @classmethod
    def from_yaml(cls, path: str | Path) -> "ExperimentConfig":
        return cls.model_validate(_read_yaml(path))

    @classmethod
    def resolve(cls, path: str | Path | None = None, overrides: dict[str, Any] | None = None) -> "ExperimentConfig":
        """Merge file settings, flag overrides (which win) and environment fallbacks."""
        data = _read_yaml(path) if path else {}
        data = _merge(data, {k: v for k, v in (overrides or {}).items() if v is not None})
        if "output_dir" not in data:
            env_out = os.environ.get("DNLS_LAB_OUTPUT_DIR")
            if env_out:
                data["output_dir"] = env_out
        if "threads" not in data:
            env_threads = os.environ.get("DNLS_LAB_THREADS")
            if env_threads is not None:
                try:
                    data["threads"] = int(env_threads)
                except ValueError:
                    raise ValueError(f"Invalid thread count in DNLS_LAB_THREADS: {env_threads}")
        config = cls.model_validate(data)
        logger.debug("Resolved configuration: %s", config.model_dump(mode="json"))
        return config


def _read_yaml(path: str | Path) -> dict[str, Any]:
    text = Path(path).read_text(encoding="utf-8")
    data = yaml.safe_load(text) or {}
    if not isinstance(data, dict):
        raise ValueError(f"Configuration file {path} must hold a mapping, got {type(data).__name__}")
    return data.get("config", data) if "manifest_version" in data else data


def _merge(base: dict[str, Any], overrides: dict[str, Any]) -> dict[str, Any]:
    merged = dict(base)
    for key, value in overrides.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _merge(merged[key], value)
        else:
            merged[key] = value
    return merged
