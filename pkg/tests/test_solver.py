import numpy as np
import pytest

from dnls_lab.config import GridSpec, SolverOptions
from dnls_lab.continuous_waves import WaveParams, psi_projected
from dnls_lab.exceptions import BracketFailure, NoConvergence, UnstableStencil
from dnls_lab.experiments.consistency_experiment import fitted_slope
from dnls_lab.lattice import StencilSpec, dst_coefficients
from dnls_lab.solver import (
    SolitonSolution,
    _constraint_vectors,
    _matrix_free_spectrum,
    _sobolev_weight,
    coercivity_spectrum,
    consistency_error,
    continuity_rate,
    gevrey_fit,
    h1_distance,
    match_mass,
    residual,
    solve_wave,
    solve_wave_dst,
    with_diagnostics,
)
from dnls_lab.spectral import spectral_l2_norm


@pytest.fixture
def coarse_grid():
    return GridSpec(h=0.4, length=51.2)


@pytest.fixture
def moving_wave(coarse_grid):
    return solve_wave(WaveParams(1.2, 0.6), coarse_grid)


def test_solve_wave_converges(moving_wave):
    """Test that Newton reaches the residual tolerance with a real, band-limited spectrum."""
    u = moving_wave.field
    assert moving_wave.residual_norm < 1e-11
    assert moving_wave.newton_iters >= 1
    assert residual(moving_wave.params, u) == pytest.approx(moving_wave.residual_norm, abs=1e-14)
    assert np.all(u.coeffs.imag == 0)
    assert u.coeffs[u.nyquist] == 0


def test_solution_is_close_to_continuous_soliton(moving_wave):
    err = consistency_error(moving_wave)
    assert 0 < err.lattice_h1 < 0.5
    assert 0 < err.line_h1 < 0.5


def test_iterative_newton_agrees_with_dense(coarse_grid, moving_wave):
    """Test that the matrix-free MINRES branch finds the same wave."""
    iterative = solve_wave(WaveParams(1.2, 0.6), coarse_grid, SolverOptions(dense_limit=64))
    assert iterative.residual_norm < 1e-11
    assert h1_distance(iterative.field, moving_wave.field) < 1e-9


def test_newton_budget_exhausted(coarse_grid):
    with pytest.raises(NoConvergence, match="No convergence") as exc_info:
        solve_wave(WaveParams(1.0, 0.0), coarse_grid, SolverOptions(max_iter=1))
    assert exc_info.value.iterations == 1
    assert exc_info.value.residual > 1e-11


def test_dst_solver(coarse_grid):
    sol = solve_wave_dst(dst_coefficients(2), WaveParams(1.0, 0.0), coarse_grid)
    assert sol.residual_norm < 1e-11
    assert sol.stencil == dst_coefficients(2)
    assert sol.manifest()["stencil"] == pytest.approx(list(dst_coefficients(2).coefficients))


def test_dst_solver_rejects_unstable_stencil(coarse_grid):
    with pytest.raises(UnstableStencil):
        solve_wave_dst(StencilSpec((2.0, -1.0)), WaveParams(1.0, 0.0), coarse_grid)


def test_coercivity_spectrum(moving_wave):
    """Test that the projected Hessian is coercive while the full one has a negative direction."""
    spectrum = coercivity_spectrum(moving_wave)
    assert spectrum.alpha > 0
    assert spectrum.unprojected_head[0] < 0
    assert spectrum.spectrum_head == sorted(spectrum.spectrum_head)
    assert len(spectrum.spectrum_head) == 5


def test_matrix_free_coercivity_matches_dense(moving_wave):
    dense = coercivity_spectrum(moving_wave, head=3)
    u = moving_wave.field
    scale = 1.0 / np.sqrt(_sobolev_weight(u))
    basis, _ = np.linalg.qr(scale[:, None] * _constraint_vectors(u))
    unprojected, projected = _matrix_free_spectrum(moving_wave, scale, basis, 3)
    assert projected[0] == pytest.approx(dense.alpha, rel=1e-6)
    assert unprojected[0] == pytest.approx(dense.unprojected_head[0], rel=1e-6)


def test_coercivity_kernel_directions(moving_wave):
    """Test that the gauge and translation directions give two near-zero eigenvalues above the negative one."""
    head = coercivity_spectrum(moving_wave).unprojected_head
    near_zero = [x for x in head if abs(x) < 1e-8]
    assert len(near_zero) == 2
    assert head[0] < -1e-3
    assert head[3] > 1e-6


def test_dst_order_one_is_the_lattice_wave(coarse_grid, moving_wave):
    sol = solve_wave_dst(dst_coefficients(1), moving_wave.params, coarse_grid)
    assert h1_distance(sol.field, moving_wave.field) < 1e-9


def test_newton_basin_under_symmetric_noise(coarse_grid, moving_wave):
    """Test that a start 1% off the projected soliton, inside the real-spectrum class, reaches the same wave."""
    rng = np.random.default_rng(7)
    start = psi_projected(moving_wave.params, coarse_grid)
    noisy = start.with_coeffs(start.coeffs * (1.0 + 0.01 * rng.standard_normal(start.n_points)))
    sol = solve_wave(moving_wave.params, coarse_grid, initial=noisy)
    assert h1_distance(sol.field, moving_wave.field) < 1e-8


def test_gevrey_fit(moving_wave):
    fit = gevrey_fit(moving_wave)
    assert fit.r2 > 0.99
    assert fit.eps > 0
    assert gevrey_fit(moving_wave.field) == fit


def test_with_diagnostics(moving_wave):
    sol = with_diagnostics(moving_wave)
    assert sol.coercivity_alpha > 0
    assert sol.gevrey is not None
    assert with_diagnostics(moving_wave, coercivity=False).coercivity_alpha is None


def test_match_mass(coarse_grid):
    """Test that the mass-matching change of variables hits the requested mass."""
    p = match_mass(0.0, 4.0, coarse_grid, bracket=(0.8, 1.2))
    sol = solve_wave(p, coarse_grid)
    assert spectral_l2_norm(sol.field) ** 2 == pytest.approx(4.0, rel=1e-9)
    assert p.xi1 == pytest.approx(1.0, abs=0.05)


def test_match_mass_bracket_errors(coarse_grid):
    with pytest.raises(BracketFailure, match="must satisfy"):
        match_mass(1.0, 4.0, coarse_grid, bracket=(0.2, 1.2))
    with pytest.raises(BracketFailure, match="outside"):
        match_mass(0.0, 40.0, coarse_grid, bracket=(0.8, 1.2))


def test_continuity_rate(coarse_grid):
    rate = continuity_rate(WaveParams(1.0, 0.0), coarse_grid, (1.0, 0.0), delta=1e-3)
    assert np.isfinite(rate)
    assert 0 < rate < 100


@pytest.mark.asyncio
async def test_solution_files_round_trip(tmp_path, moving_wave):
    sol = with_diagnostics(moving_wave)
    paths = await sol.to_files(tmp_path / "point")
    assert [p.name for p in paths] == ["solution.json", "spectrum.csv"]
    loaded = SolitonSolution.from_files(tmp_path / "point")
    assert loaded.params == sol.params
    assert loaded.coercivity_alpha == pytest.approx(sol.coercivity_alpha)
    assert loaded.gevrey.eps == pytest.approx(sol.gevrey.eps)
    assert np.array_equal(loaded.field.coeffs, sol.field.coeffs)


def test_projected_start_is_close_to_solution(coarse_grid, moving_wave):
    start = psi_projected(WaveParams(1.2, 0.6), coarse_grid)
    assert h1_distance(start, moving_wave.field) == pytest.approx(consistency_error(moving_wave).line_h1)


@pytest.mark.slow
@pytest.mark.parametrize("xi", [(1.0, 0.0), (1.2, 0.6)])
def test_consistency_order_two(xi):
    """Test that ||eta - psi||_H1 decays like h^2."""
    steps = [0.4, 0.2, 0.1]
    errors = [consistency_error(solve_wave(WaveParams(*xi), GridSpec(h=h, length=51.2))).lattice_h1 for h in steps]
    assert errors == sorted(errors, reverse=True)
    assert 1.7 <= fitted_slope(steps, errors) <= 2.3


@pytest.mark.slow
def test_consistency_order_four_for_dst():
    steps = [0.4, 0.2, 0.1]
    stencil = dst_coefficients(2)
    errors = [consistency_error(solve_wave_dst(stencil, WaveParams(1.2, 0.6), GridSpec(h=h, length=51.2))).lattice_h1 for h in steps]
    assert 3.6 <= fitted_slope(steps, errors) <= 4.4


@pytest.mark.slow
def test_coercivity_and_decay_are_uniform_in_h():
    """Test that alpha and the decay rate barely move between h = 0.2 and h = 0.1."""
    sols = [with_diagnostics(solve_wave(WaveParams(1.2, 0.6), GridSpec(h=h, length=51.2))) for h in (0.2, 0.1)]
    alphas = [s.coercivity_alpha for s in sols]
    assert min(alphas) > 0
    assert abs(alphas[0] - alphas[1]) / max(alphas) < 0.2
    eps = [s.gevrey.eps for s in sols]
    assert all(s.gevrey.r2 > 0.99 for s in sols)
    assert abs(eps[0] - eps[1]) / max(eps) < 0.15
