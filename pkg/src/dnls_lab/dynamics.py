"""Fixed-step time integration of the lattice flow, the dealiased flow and stencil (DST) variants."""

import logging
import math
import time
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from dnls_lab.config import EvolutionOptions, FlowKind, Orientation, Scheme
from dnls_lab.exceptions import NonFinite, StencilTooWide
from dnls_lab.functionals import ORIENTATION_SIGN, EnergyReport, energy_report, hamiltonian_dealiased, hamiltonian_grid
from dnls_lab.lattice import GridField, StencilSpec, apply_stencil, difference_symbol, discrete_laplacian
from dnls_lab.spectral import dealiased_cubic, grid_cubic, to_grid, to_spectral

logger = logging.getLogger(__name__)

RK4_STIFFNESS_LIMIT = 0.5


@dataclass(frozen=True)
class Flow:
    kind: FlowKind = "dnls"
    stencil: StencilSpec | None = None

    def __post_init__(self) -> None:
        if self.kind == "dst" and self.stencil is None:
            raise ValueError("The dst flow needs a stencil")
        if self.kind != "dst" and self.stencil is not None:
            raise ValueError(f"Flow '{self.kind}' does not take a stencil")

    @classmethod
    def dst(cls, stencil: StencilSpec) -> "Flow":
        return cls("dst", stencil)

    def describe(self) -> dict[str, Any]:
        return {"kind": self.kind, "stencil": list(self.stencil.coefficients) if self.stencil else None}


def default_dt(h: float) -> float:
    return min(0.01, 0.5 * h * h)


@dataclass(frozen=True)
class EvolutionConfig:
    dt: float
    t_final: float
    flow: Flow = field(default_factory=Flow)
    save_every: int = 100
    scheme: Scheme = "strang"
    orientation: Orientation = "forward"
    sobolev_orders: tuple[int, ...] = (1, 2, 3)

    def __post_init__(self) -> None:
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not self.t_final > 0:
            raise ValueError(f"t_final must be positive, got {self.t_final}")
        if self.save_every < 1:
            raise ValueError(f"save_every must be >= 1, got {self.save_every}")
        if self.orientation not in ORIENTATION_SIGN:
            raise ValueError(f"Unknown orientation: {self.orientation}")
        object.__setattr__(self, "sobolev_orders", tuple(self.sobolev_orders))

    @property
    def n_steps(self) -> int:
        """Steps of size dt covering t_final; the run ends at n_steps * dt."""
        return max(1, math.ceil(self.t_final / self.dt - 1e-9))

    @classmethod
    def from_options(cls, opts: EvolutionOptions, h: float, stencil: StencilSpec | None = None) -> "EvolutionConfig":
        flow = Flow.dst(stencil) if opts.flow == "dst" else Flow(opts.flow)
        return cls(
            dt=opts.dt or default_dt(h),
            t_final=opts.t_final,
            flow=flow,
            save_every=opts.save_every,
            scheme=opts.scheme,
            orientation=opts.orientation,
            sobolev_orders=tuple(opts.sobolev_orders),
        )


@dataclass
class Trajectory:
    times: list[float]
    fields: list[GridField]
    reports: list[EnergyReport]
    flow: Flow
    orientation: Orientation = "forward"
    reference_xi2: float | None = None
    manifest: dict[str, Any] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.times)

    def momentum_shift(self) -> list[float] | None:
        """E2(t) = xi2 (M(t) - M(0)) against the reference advection speed."""
        if self.reference_xi2 is None or not self.reports:
            return None
        m0 = self.reports[0].momentum
        return [self.reference_xi2 * (r.momentum - m0) for r in self.reports]


@dataclass(frozen=True)
class ConservationReport:
    mass_drift: float
    energy_drift: float
    momentum_drift: float


def rhs(f: GridField, flow: Flow | FlowKind = "dnls", orientation: Orientation = "forward") -> GridField:
    """Time derivative sign * i (Delta u + cubic); 'printed' is i du/dt = Delta u + |u|^2 u."""
    flow = flow if isinstance(flow, Flow) else Flow(flow)
    sign = ORIENTATION_SIGN[orientation]
    if flow.kind == "dnls":
        total = discrete_laplacian(f).values + grid_cubic(f).values
    elif flow.kind == "dealiased":
        total = discrete_laplacian(f).values + to_grid(dealiased_cubic(to_spectral(f))).values
    else:
        total = apply_stencil(f, flow.stencil).values + grid_cubic(f).values
    return f.with_values(1j * sign * total)


class _Propagator:
    """One-step maps on raw lattice values, with the linear multipliers precomputed for a fixed dt."""

    def __init__(self, h: float, n_points: int, dt: float, flow: Flow, orientation: Orientation, scheme: Scheme) -> None:
        if flow.kind == "dst" and n_points <= 2 * flow.stencil.half_width:
            raise StencilTooWide(f"Stencil of half width {flow.stencil.half_width} does not fit on {n_points} sites")
        self.h = h
        self.dt = dt
        self.flow = flow
        self.scheme = scheme
        self.sign = ORIENTATION_SIGN[orientation]
        omega = 2.0 * np.pi * np.fft.fftfreq(n_points, d=h)
        self.symbol = difference_symbol(omega, h, flow.stencil)
        self.half_kinetic = np.exp(-0.5j * self.sign * self.symbol * dt)

    def cubic(self, values: np.ndarray) -> np.ndarray:
        if self.flow.kind == "dealiased":
            f = GridField(self.h, values)
            return to_grid(dealiased_cubic(to_spectral(f))).values
        return np.abs(values) ** 2 * values

    def derivative(self, values: np.ndarray) -> np.ndarray:
        linear = np.fft.ifft(-self.symbol * np.fft.fft(values))
        return 1j * self.sign * (linear + self.cubic(values))

    def _nonlinear(self, values: np.ndarray) -> np.ndarray:
        if self.flow.kind != "dealiased":
            return values * np.exp(1j * self.sign * self.dt * np.abs(values) ** 2)
        dt = self.dt

        def n(v: np.ndarray) -> np.ndarray:
            return 1j * self.sign * self.cubic(v)

        k1 = n(values)
        k2 = n(values + 0.5 * dt * k1)
        k3 = n(values + 0.5 * dt * k2)
        k4 = n(values + dt * k3)
        return values + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)

    def strang(self, values: np.ndarray) -> np.ndarray:
        values = np.fft.ifft(self.half_kinetic * np.fft.fft(values))
        values = self._nonlinear(values)
        return np.fft.ifft(self.half_kinetic * np.fft.fft(values))

    def rk4(self, values: np.ndarray) -> np.ndarray:
        dt = self.dt
        k1 = self.derivative(values)
        k2 = self.derivative(values + 0.5 * dt * k1)
        k3 = self.derivative(values + 0.5 * dt * k2)
        k4 = self.derivative(values + dt * k3)
        return values + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)

    def advance(self, values: np.ndarray) -> np.ndarray:
        return self.strang(values) if self.scheme == "strang" else self.rk4(values)


def step_strang(f: GridField, dt: float, flow: Flow | FlowKind = "dnls", orientation: Orientation = "forward") -> GridField:
    """Half kinetic rotation, full nonlinear substep, half kinetic rotation."""
    flow = flow if isinstance(flow, Flow) else Flow(flow)
    if dt == 0:
        return f
    return f.with_values(_Propagator(f.h, f.n_points, dt, flow, orientation, "strang").strang(f.values))


def step_rk4(f: GridField, dt: float, flow: Flow | FlowKind = "dnls", orientation: Orientation = "forward") -> GridField:
    flow = flow if isinstance(flow, Flow) else Flow(flow)
    if dt == 0:
        return f
    return f.with_values(_Propagator(f.h, f.n_points, dt, flow, orientation, "rk4").rk4(f.values))


def evolve(f0: GridField, cfg: EvolutionConfig, reference_xi2: float | None = None, max_wall_seconds: float | None = None) -> Trajectory:
    """Integrate from f0 with a fixed step, saving fields and energy reports every ``save_every`` steps.

    With ``max_wall_seconds`` the run stops early at the next save point once the budget is spent;
    the manifest then carries ``truncated = True``.
    """
    if cfg.scheme == "rk4" and cfg.dt > RK4_STIFFNESS_LIMIT * f0.h**2:
        logger.warning("rk4 step dt=%g exceeds %g h^2=%g; the kinetic part may be unstable", cfg.dt, RK4_STIFFNESS_LIMIT, RK4_STIFFNESS_LIMIT * f0.h**2)
    propagator = _Propagator(f0.h, f0.n_points, cfg.dt, cfg.flow, cfg.orientation, cfg.scheme)
    traj = Trajectory(times=[], fields=[], reports=[], flow=cfg.flow, orientation=cfg.orientation, reference_xi2=reference_xi2)

    def record(t: float, values: np.ndarray) -> None:
        f = GridField(f0.h, values)
        traj.times.append(t)
        traj.fields.append(f)
        traj.reports.append(energy_report(f, cfg.sobolev_orders))

    n_steps = cfg.n_steps
    progress_every = max(1, n_steps // 10)
    started = time.perf_counter()
    truncated = False
    values = np.array(f0.values)
    record(0.0, values)
    step = 0
    for step in range(1, n_steps + 1):
        values = propagator.advance(values)
        if not np.all(np.isfinite(values)):
            traj.manifest = _manifest(cfg, step - 1, time.perf_counter() - started, truncated=True)
            raise NonFinite(f"Non-finite values at t={step * cfg.dt:g} (step {step})", trajectory=traj, time=step * cfg.dt)
        if step % cfg.save_every == 0 or step == n_steps:
            record(step * cfg.dt, values)
            if max_wall_seconds is not None and step < n_steps and time.perf_counter() - started > max_wall_seconds:
                truncated = True
                logger.warning("Wall-clock budget %gs spent at t=%g; truncating run", max_wall_seconds, step * cfg.dt)
                break
        if step % progress_every == 0:
            logger.info("Evolution %s: step %d/%d (t=%g)", cfg.flow.kind, step, n_steps, step * cfg.dt)

    traj.manifest = _manifest(cfg, step, time.perf_counter() - started, truncated)
    return traj


def _manifest(cfg: EvolutionConfig, steps: int, wall_clock: float, truncated: bool) -> dict[str, Any]:
    return {
        "dt": cfg.dt,
        "t_final": cfg.t_final,
        "steps": steps,
        "flow": cfg.flow.describe(),
        "scheme": cfg.scheme,
        "orientation": cfg.orientation,
        "save_every": cfg.save_every,
        "wall_clock_seconds": wall_clock,
        "truncated": truncated,
    }


def flow_hamiltonian(f: GridField, flow: Flow) -> float:
    """The energy conserved by ``flow``."""
    if flow.kind == "dnls":
        return hamiltonian_grid(f)
    if flow.kind == "dealiased":
        return hamiltonian_dealiased(f)
    kinetic = -0.5 * f.h * float(np.real(np.vdot(f.values, apply_stencil(f, flow.stencil).values)))
    return kinetic - 0.25 * f.h * float(np.sum(np.abs(f.values) ** 4))


def _relative_drift(series: list[float]) -> float:
    values = np.asarray(series, dtype=float)
    ref = abs(values[0])
    spread = float(np.max(np.abs(values - values[0])))
    return spread / ref if ref > 1e-14 else spread


def conservation_report(traj: Trajectory) -> ConservationReport:
    """Max drift over save points, relative to the initial value (absolute when that value vanishes)."""
    return ConservationReport(
        mass_drift=_relative_drift([r.mass for r in traj.reports]),
        energy_drift=_relative_drift([flow_hamiltonian(f, traj.flow) for f in traj.fields]),
        momentum_drift=_relative_drift([r.momentum for r in traj.reports]),
    )
