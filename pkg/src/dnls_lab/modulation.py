"""Gauge and translation tracking of a solution near the orbit of a discrete traveling wave."""

import logging
from dataclasses import dataclass, field
from typing import Any, Literal

import numpy as np
from scipy.stats import linregress

from dnls_lab.continuous_waves import WaveParams, psi_eval
from dnls_lab.dynamics import Flow, Trajectory, rhs
from dnls_lab.exceptions import ProjectionDiverged, SingularA
from dnls_lab.lattice import GridField, norm
from dnls_lab.solver import SolitonSolution
from dnls_lab.spectral import SpectralField, check_compatible, continuous_sobolev_norm, derivative, gauge, inner, shift, to_grid, to_spectral

logger = logging.getLogger(__name__)

MAX_PROJECTION_STEPS = 12
CONDITION_LIMIT = 1e12
TRACK_SOBOLEV_ORDERS = (1, 2, 3, 4)


@dataclass(frozen=True)
class ModulationState:
    gamma: float = 0.0
    x0: float = 0.0


@dataclass
class ModulationTrack:
    times: list[float] = field(default_factory=list)
    states: list[ModulationState] = field(default_factory=list)
    rates: list[tuple[float, float]] = field(default_factory=list)
    delta: list[float] = field(default_factory=list)
    a_inv_norm: list[float] = field(default_factory=list)
    sobolev: dict[int, list[float]] = field(default_factory=dict)
    fit: dict[str, Any] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.times)


@dataclass(frozen=True)
class EnvelopeReport:
    mode: str
    kappa: float
    ell: float | None
    growth_rate: float
    max_ratio: float
    envelope: list[float]

    def as_dict(self) -> dict[str, Any]:
        return {"mode": self.mode, "kappa": self.kappa, "ell": self.ell, "growth_rate": self.growth_rate, "max_ratio": self.max_ratio}


def _field(eta: SolitonSolution | SpectralField) -> SpectralField:
    return eta.field if isinstance(eta, SolitonSolution) else eta


def _spectral(u: SpectralField | GridField) -> SpectralField:
    return to_spectral(u) if isinstance(u, GridField) else u


def pull_back(u: SpectralField, state: ModulationState) -> SpectralField:
    """T^{-1} u = exp(-i gamma) u(x + x0)."""
    return gauge(shift(u, -state.x0), -state.gamma)


def push_forward(eta: SpectralField, state: ModulationState) -> SpectralField:
    """T eta = exp(i gamma) eta(x - x0)."""
    return gauge(shift(eta, state.x0), state.gamma)


def modulation_matrix(w: SpectralField, eta: SpectralField) -> np.ndarray:
    """A[w] = [[<i eta, i w>, -<i eta, d w>], [<d eta, i w>, -<d eta, d w>]]."""
    i_eta, d_eta = 1j * eta, derivative(eta)
    i_w, d_w = 1j * w, derivative(w)
    return np.array([[inner(i_eta, i_w), -inner(i_eta, d_w)], [inner(d_eta, i_w), -inner(d_eta, d_w)]])


def _orthogonality(w: SpectralField, eta: SpectralField) -> np.ndarray:
    return np.array([inner(w, 1j * eta), inner(w, derivative(eta))])


def _solve_2x2(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    cond = np.linalg.cond(a) if np.all(np.isfinite(a)) else np.inf
    if not cond < CONDITION_LIMIT:
        raise SingularA(f"Modulation matrix is singular (cond={cond:.3e})")
    return np.linalg.solve(a, b)


def initial_guess(u: SpectralField | GridField, eta: SolitonSolution | SpectralField) -> ModulationState:
    """Best lattice shift and phase from the cross-correlation integral u(x) conj(eta(x - s)) dx."""
    u, eta = _spectral(u), _field(eta)
    check_compatible(u, eta)
    corr = np.fft.ifft(u.coeffs * np.conj(eta.coeffs)) / u.h
    j = int(np.argmax(np.abs(corr)))
    x0 = j * u.h
    if x0 >= 0.5 * u.length:
        x0 -= u.length
    return ModulationState(gamma=float(np.angle(corr[j])), x0=float(x0))


def project_orbit(
    u: SpectralField | GridField,
    eta: SolitonSolution | SpectralField,
    guess: ModulationState | None = None,
    radius: float = 0.5,
    tol: float = 1e-11,
) -> ModulationState:
    """Find (gamma, x0) with T^{-1} u - eta orthogonal to i eta and d_x eta."""
    u, eta = _spectral(u), _field(eta)
    check_compatible(u, eta)
    state = guess if guess is not None else initial_guess(u, eta)
    eta_h1 = continuous_sobolev_norm(eta, 1)
    start_distance = continuous_sobolev_norm(pull_back(u, state) - eta, 1)
    if start_distance > radius * eta_h1:
        raise ProjectionDiverged(f"Start point is {start_distance:.3e} from the wave, beyond {radius:g} * ||eta||_H1")

    scale = inner(eta, eta)
    for _ in range(MAX_PROJECTION_STEPS + 1):
        w = pull_back(u, state)
        residual = _orthogonality(w, eta)
        if np.max(np.abs(residual)) < tol * scale:
            return state
        step = _solve_2x2(modulation_matrix(w, eta), residual)
        if abs(step[1]) > 0.25 * u.length:
            raise ProjectionDiverged(f"Projection step {step[1]:.3e} in x0 leaves the orbit neighbourhood")
        state = ModulationState(gamma=state.gamma + float(step[0]), x0=state.x0 + float(step[1]))
    raise ProjectionDiverged(f"Projection did not converge in {MAX_PROJECTION_STEPS} steps (residual {np.max(np.abs(residual)):.3e})")


def modulation_rates(
    f: GridField,
    eta: SolitonSolution | SpectralField,
    state: ModulationState,
    flow: Flow | Literal["dnls", "dealiased", "dst"] = "dnls",
    orientation: Literal["forward", "printed"] = "forward",
) -> tuple[float, float]:
    """(gamma_dot, x0_dot) solving A[T^{-1} u] r = (<T^{-1} du/dt, i eta>, <T^{-1} du/dt, d_x eta>)."""
    eta = _field(eta)
    u = to_spectral(f)
    w = pull_back(u, state)
    dw = pull_back(to_spectral(rhs(f, flow, orientation)), state)
    b = np.array([inner(dw, 1j * eta), inner(dw, derivative(eta))])
    gamma_dot, x0_dot = _solve_2x2(modulation_matrix(w, eta), b)
    return float(gamma_dot), float(x0_dot)


def orbit_distance(f: GridField, eta: SolitonSolution | SpectralField, state: ModulationState) -> float:
    """Discrete H^1 distance from f to the samples of exp(i gamma) eta(x - x0)."""
    target = to_grid(push_forward(_field(eta), state))
    return norm(f.with_values(f.values - target.values), "H1")


def profile_deviation(f: GridField, p: WaveParams, state: ModulationState) -> float:
    """sup over sites of |f_g - exp(i gamma) psi(x_g - x0)|, positions wrapped into one period."""
    x = f.h * np.arange(f.n_points)
    rel = np.mod(x - state.x0 + 0.5 * f.length, f.length) - 0.5 * f.length
    return float(np.max(np.abs(f.values - np.exp(1j * state.gamma) * psi_eval(p, rel))))


def predict_state(state: ModulationState, rates: tuple[float, float], dt: float) -> ModulationState:
    """(gamma + gamma_dot dt, x0 + x0_dot dt)."""
    return ModulationState(gamma=state.gamma + rates[0] * dt, x0=state.x0 + rates[1] * dt)


def _project_frame(f: GridField, eta: SpectralField, predicted: ModulationState | None) -> ModulationState:
    if predicted is None:
        return project_orbit(f, eta)
    try:
        return project_orbit(f, eta, predicted)
    except ProjectionDiverged as e:
        logger.debug("Predicted start rejected (%s); restarting from the cross-correlation guess", e)
        return project_orbit(f, eta)


def _nearest_branch(state: ModulationState, reference: ModulationState, length: float) -> ModulationState:
    """The representative of ``state`` modulo (2 pi, L) closest to ``reference``."""
    gamma = state.gamma + 2.0 * np.pi * np.round((reference.gamma - state.gamma) / (2.0 * np.pi))
    x0 = state.x0 + length * np.round((reference.x0 - state.x0) / length)
    return ModulationState(gamma=float(gamma), x0=float(x0))


def track(
    traj: Trajectory,
    eta: SolitonSolution | SpectralField,
    guess: ModulationState | None = None,
    rates_flow: Flow | None = None,
) -> ModulationTrack:
    """Project every saved frame on the orbit.

    Each frame starts from the previous state advanced by its modulation rates over the frame
    interval; when that start is outside the projection radius the cross-correlation guess is used.
    A jump of pi in phase or L/4 in position away from the prediction marks the orbit as lost.
    """
    eta_field = _field(eta)
    flow = rates_flow or traj.flow
    result = ModulationTrack(sobolev={n: [] for n in TRACK_SOBOLEV_ORDERS})
    predicted = guess
    for frame, (t, f) in enumerate(zip(traj.times, traj.fields, strict=True)):
        if frame > 0:
            predicted = predict_state(result.states[-1], result.rates[-1], t - result.times[-1])
        try:
            state = _project_frame(f, eta_field, predicted)
        except ProjectionDiverged as e:
            logger.warning("Orbit lost at frame %d (t=%g): %s", frame, t, e)
            raise ProjectionDiverged(str(e), frame=frame, partial=result) from e
        if predicted is not None:
            state = _nearest_branch(state, predicted, f.length)
            jump_gamma, jump_x0 = abs(state.gamma - predicted.gamma), abs(state.x0 - predicted.x0)
            if jump_gamma >= np.pi or jump_x0 >= 0.25 * f.length:
                logger.warning("Orbit lost at frame %d (t=%g): jump of %.3g in phase, %.3g in position", frame, t, jump_gamma, jump_x0)
                raise ProjectionDiverged(f"Tracking jumped at frame {frame}", frame=frame, partial=result)
        w = pull_back(to_spectral(f), state)
        result.times.append(t)
        result.states.append(state)
        result.rates.append(modulation_rates(f, eta_field, state, flow, traj.orientation))
        result.delta.append(orbit_distance(f, eta_field, state))
        result.a_inv_norm.append(float(np.linalg.norm(np.linalg.inv(modulation_matrix(w, eta_field)), 2)))
        for n in TRACK_SOBOLEV_ORDERS:
            result.sobolev[n].append(norm(f, "homogeneous_sobolev", n))
    logger.info("Tracked %d frames, max delta %.3e", len(result), max(result.delta) if result.delta else float("nan"))
    return result


def modulation_control(track_result: ModulationTrack, p: WaveParams) -> list[float]:
    """|gamma_dot - xi1| + |x0_dot - xi2| per frame."""
    return [abs(g - p.xi1) + abs(x - p.xi2) for g, x in track_result.rates]


def _growth_rate(times: np.ndarray, delta: np.ndarray) -> float:
    positive = delta > 0
    if np.count_nonzero(positive) < 3 or np.ptp(times[positive]) == 0:
        return 0.0
    return max(float(linregress(times[positive], np.log(delta[positive])).slope), 0.0)


def envelope_check(
    track_result: ModulationTrack,
    h: float,
    p: WaveParams,
    mode: Literal["gronwall", "sobolev"] = "gronwall",
    n: int = 2,
    ell: float | None = None,
    fit_fraction: float = 0.1,
) -> EnvelopeReport:
    """Ratio of delta(t) to the stability envelope, with kappa fitted on the first ``fit_fraction`` of frames.

    gronwall: exp(h |xi2| t / ell^2) (delta(0) + exp(-ell/h)), ell from the measured growth rate unless given.
    sobolev:  delta(0) + exp(-ell/h) + sqrt(t |xi2|) h^(n - 1/2) sup_{s<=t} ||u(s)||_{H^n}.
    """
    times = np.asarray(track_result.times, dtype=float)
    delta = np.asarray(track_result.delta, dtype=float)
    if times.size == 0:
        raise ValueError("Cannot fit an envelope to an empty track")
    rate = _growth_rate(times, delta)
    if ell is None:
        ell = float(np.sqrt(h * abs(p.xi2) / rate)) if rate > 0 and p.xi2 != 0 else 1.0
    floor = float(np.exp(-ell / h))

    if mode == "gronwall":
        shape = np.exp(h * abs(p.xi2) * times / ell**2) * (delta[0] + floor)
    elif mode == "sobolev":
        if n not in track_result.sobolev:
            raise ValueError(f"Track holds no H^{n} norms; available orders: {sorted(track_result.sobolev)}")
        sup = np.maximum.accumulate(np.asarray(track_result.sobolev[n], dtype=float))
        shape = delta[0] + floor + np.sqrt(times * abs(p.xi2)) * h ** (n - 0.5) * sup
    else:
        raise ValueError(f"Unknown envelope mode: {mode}")

    shape = np.maximum(shape, np.finfo(float).tiny)
    window = max(1, int(np.ceil(fit_fraction * times.size)))
    kappa = float(np.max(delta[:window] / shape[:window]))
    kappa = kappa if kappa > 0 else 1.0
    envelope = kappa * shape
    ratio = float(np.max(delta / envelope))
    report = EnvelopeReport(mode=mode if mode == "gronwall" else f"sobolev({n})", kappa=kappa, ell=ell, growth_rate=rate, max_ratio=ratio, envelope=envelope.tolist())
    track_result.fit = report.as_dict()
    return report
