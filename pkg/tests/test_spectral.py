import numpy as np
import pytest

from dnls_lab.config import GridSpec
from dnls_lab.continuous_waves import WaveParams, psi_hat, psi_sampled
from dnls_lab.exceptions import ResolutionMismatch, SizeMismatch
from dnls_lab.lattice import GridField, norm
from dnls_lab.spectral import (
    SpectralField,
    band_limit,
    continuous_sobolev_norm,
    dealiased_cubic,
    derivative,
    exp_mode_coefficient,
    fold_aliases,
    gauge,
    grid_cubic,
    highfreq_mass,
    inner,
    interpolate,
    shift,
    spectral_l1_norm,
    spectral_l2_norm,
    to_grid,
    to_spectral,
)


def _modes(h: float, n: int, amplitudes: dict[int, complex]) -> GridField:
    """Trigonometric polynomial with the given mode amplitudes."""
    length = h * n
    return GridField.sample(lambda x: sum(a * np.exp(2j * np.pi * k * x / length) for k, a in amplitudes.items()), h, n, centered=False)


@pytest.fixture
def field():
    return GridField.sample(lambda x: np.exp(-0.5 * x**2) * np.exp(0.3j * x), h=0.2, n_points=64)


def test_transform_round_trip_and_parseval(field):
    u = to_spectral(field)
    assert np.allclose(to_grid(u).values, field.values, atol=1e-13)
    assert spectral_l2_norm(u) == pytest.approx(norm(field, "L2"), rel=1e-12)


def test_coefficients_approximate_continuous_transform():
    """Test the forward-h normalisation: a Gaussian's coefficients sample its Fourier transform."""
    f = GridField.sample(lambda x: np.exp(-0.5 * x**2), h=0.1, n_points=256)
    u = to_spectral(f)
    expected = np.sqrt(2 * np.pi) * np.exp(-0.5 * u.omega**2)
    assert np.allclose(u.coeffs, expected, atol=1e-10)


def test_integer_shift_is_rotation(field):
    """Test that advection by whole sites agrees with the lattice translation, Nyquist mode included."""
    u = to_spectral(field)
    moved = to_grid(shift(u, 3 * field.h))
    assert np.allclose(moved.values, field.rotate(3).values, atol=1e-12)


def test_shift_composes(field):
    u = to_spectral(field)
    assert np.allclose(shift(shift(u, 0.37), -1.1).coeffs, shift(u, 0.37 - 1.1).coeffs, atol=1e-12)


def test_gauge_and_inner(field):
    u = to_spectral(field)
    assert np.allclose(to_grid(gauge(u, 0.4)).values, np.exp(0.4j) * field.values)
    assert inner(u, u) == pytest.approx(spectral_l2_norm(u) ** 2)
    assert inner(u, gauge(u, np.pi / 2)) == pytest.approx(0.0, abs=1e-12)


def test_derivative_of_plane_wave():
    f = _modes(0.25, 32, {3: 1.0})
    u = to_spectral(f)
    omega = 2 * np.pi * 3 / (0.25 * 32)
    assert np.allclose(to_grid(derivative(u)).values, 1j * omega * f.values, atol=1e-12)


def test_incompatible_fields():
    with pytest.raises(SizeMismatch):
        SpectralField.zeros(0.1, 16) + SpectralField.zeros(0.1, 32)
    with pytest.raises(SizeMismatch):
        inner(SpectralField.zeros(0.1, 16), SpectralField.zeros(0.2, 16))


def test_band_limit_drops_nyquist_and_cutoff(field):
    u = to_spectral(field)
    limited = band_limit(u)
    assert limited.coeffs[u.nyquist] == 0
    assert np.array_equal(np.delete(limited.coeffs, u.nyquist), np.delete(u.coeffs, u.nyquist))
    cut = band_limit(u, cutoff=2.0)
    assert np.all(cut.coeffs[np.abs(u.omega) > 2.0] == 0)


def test_dealiased_cubic_matches_grid_cubic_without_aliasing():
    """Test that low-mode fields have an alias-free pointwise cube."""
    f = _modes(0.3, 32, {0: 0.5, 1: 0.2 - 0.1j, -2: 0.3j, 2: 0.1})
    assert np.allclose(dealiased_cubic(to_spectral(f)).coeffs, to_spectral(grid_cubic(f)).coeffs, atol=1e-12)


def test_dealiased_cubic_matches_direct_convolution():
    """Test the padded cube against the triple sum (1/L^2) sum_{k1-k2+k3=k} u1 conj(u2) u3 at 64 sites."""
    rng = np.random.default_rng(5)
    n, h = 64, 0.25
    u = band_limit(SpectralField(h, rng.standard_normal(n) + 1j * rng.standard_normal(n)))
    modes = u.mode_index
    in_band = modes != -n // 2
    by_mode = {int(k): c for k, c in zip(modes, u.coeffs, strict=True)}
    band = np.arange(-n // 2 + 1, n // 2)
    k1, k2 = np.meshgrid(band, band, indexing="ij")
    a = np.array([by_mode[int(k)] for k in band])
    pair = a[:, None] * np.conj(a)[None, :]
    expected = np.zeros(n, dtype=complex)
    for pos, k in enumerate(modes):
        if not in_band[pos]:
            continue
        k3 = k - k1 + k2
        valid = np.abs(k3) < n // 2
        third = np.array([by_mode[int(j)] for j in k3[valid]])
        expected[pos] = np.sum(pair[valid] * third) / u.length**2
    got = dealiased_cubic(u).coeffs
    assert np.max(np.abs(got - expected)) < 1e-11 * np.max(np.abs(expected))


def test_fold_matches_subsampling():
    """Test that sampling every fourth site of a fine field folds its spectrum onto the coarse band."""
    fine = GridField.sample(lambda x: np.exp(-0.3 * x**2) * (1 + 0.5j * np.sin(3 * x)), h=0.05, n_points=512)
    coarse = GridField(fine.h * 4, fine.values[::4])
    folded = fold_aliases(to_spectral(fine), 4)
    assert coarse.n_points == 128
    assert np.allclose(folded.coeffs, to_spectral(coarse).coeffs, atol=1e-10)


def test_sampled_soliton_is_folded_transform():
    """Test that the coefficients of the lattice samples are the continuous transform summed over its aliases."""
    p = WaveParams(1.2, 0.6)
    grid = GridSpec(h=0.4, length=51.2)
    fine = SpectralField.zeros(grid.h / 8, 8 * grid.n_points)
    folded = fold_aliases(fine.with_coeffs(psi_hat(p, fine.omega)), 8)
    sampled = to_spectral(psi_sampled(p, grid))
    assert np.max(np.abs(folded.coeffs - sampled.coeffs)) < 1e-10


def test_grid_cubic_is_folded_exact_cubic(field):
    """Test that the pointwise cube is the alias fold of the exact cube of the interpolant."""
    u = band_limit(to_spectral(field))
    f = to_grid(u)
    fine = interpolate(u, 4)
    exact = to_spectral(grid_cubic(to_grid(fine)))
    assert np.allclose(fold_aliases(exact, 4).coeffs, to_spectral(grid_cubic(f)).coeffs, atol=1e-12)
    unfolded = band_limit(u.with_coeffs(exact.coeffs[u.mode_index % fine.n_points]))
    assert np.allclose(unfolded.coeffs, dealiased_cubic(u).coeffs, atol=1e-12)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_lattice_sobolev_norm_is_sandwiched(field, n):
    """Test (2/pi)^n |u|_{H^n line} <= |f|_{H^n lattice} <= |u|_{H^n line} on the open band."""
    u = to_spectral(field)
    lattice = norm(field, "homogeneous_sobolev", n)
    line = continuous_sobolev_norm(u, n, homogeneous=True)
    assert lattice <= line * (1 + 1e-12)
    assert lattice >= (2 / np.pi) ** n * line * (1 - 1e-12)


def test_dealiased_cubic_drops_aliased_harmonic():
    """Test that cos^3 keeps only 3/4 cos once the third harmonic leaves the band."""
    h, n, k = 0.5, 16, 6
    f = _modes(h, n, {k: 0.5, -k: 0.5})
    u = to_spectral(f)
    assert np.allclose(dealiased_cubic(u).coeffs, 0.75 * u.coeffs, atol=1e-12)
    # the pointwise cube folds mode 18 onto mode 2
    assert abs(to_spectral(grid_cubic(f)).coeffs[2]) > 1e-3


def test_interpolate_and_fold(field):
    """Test that refinement keeps the coarse samples and folding undoes it."""
    u = to_spectral(field)
    fine = interpolate(u, 4)
    assert fine.n_points == 256
    assert np.allclose(to_grid(fine).values[::4], field.values, atol=1e-12)
    assert np.allclose(fold_aliases(fine, 4).coeffs, u.coeffs, atol=1e-12)


def test_fold_aliases_sums_images():
    fine = SpectralField(0.05, np.arange(32, dtype=complex))
    coarse = fold_aliases(fine, 2)
    assert coarse.h == pytest.approx(0.1)
    assert np.allclose(coarse.coeffs, np.arange(16) + np.arange(16, 32))


def test_fold_aliases_errors():
    with pytest.raises(ResolutionMismatch):
        fold_aliases(SpectralField.zeros(0.1, 32), 3)
    with pytest.raises(ResolutionMismatch):
        fold_aliases(SpectralField.zeros(0.1, 32), 8)


def test_quartic_integral_of_constant():
    f = GridField(0.5, 2.0 * np.ones(16))
    assert exp_mode_coefficient(f, harmonic=0) == pytest.approx(16.0 * 8.0)
    assert abs(exp_mode_coefficient(f)) < 1e-9


def test_highfreq_mass():
    f = _modes(0.5, 16, {1: 1.0, 7: 0.5})
    u = to_spectral(f)
    assert highfreq_mass(u, np.pi / (3 * 0.5)) == pytest.approx(0.25 * f.length)
    with pytest.raises(ValueError, match="Cutoff"):
        highfreq_mass(u, 3 * np.pi)


def test_norm_bounds(field):
    u = to_spectral(field)
    assert spectral_l1_norm(u) >= np.max(np.abs(field.values)) - 1e-12
    assert continuous_sobolev_norm(u, 0) == pytest.approx(spectral_l2_norm(u))
    assert continuous_sobolev_norm(u, 1) >= continuous_sobolev_norm(u, 1, homogeneous=True)
