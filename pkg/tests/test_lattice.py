import numpy as np
import pytest

from dnls_lab.exceptions import StencilTooWide
from dnls_lab.lattice import (
    THREE_POINT,
    GridField,
    StencilSpec,
    apply_stencil,
    difference_symbol,
    discrete_laplacian,
    dst_coefficients,
    norm,
    stencil_symbol_analysis,
)


@pytest.fixture
def smooth_field():
    """A smooth complex profile on 64 sites."""
    return GridField.sample(lambda x: np.exp(-(x**2)) * (1.0 + 0.5j * np.sin(x)), h=0.25, n_points=64)


def test_grid_field_requires_power_of_two():
    """Test that lattices must carry a power-of-two number (>= 8) of sites."""
    with pytest.raises(ValueError, match="power of two"):
        GridField(0.1, np.zeros(12))
    with pytest.raises(ValueError, match="power of two"):
        GridField(0.1, np.zeros(4))
    with pytest.raises(ValueError, match="positive"):
        GridField(0.0, np.zeros(8))


def test_grid_field_rotate_moves_sites():
    """Test that an integer translation moves the samples forward."""
    values = np.zeros(8, dtype=complex)
    values[0] = 1.0
    moved = GridField(1.0, values).rotate(3)
    assert moved.values[3] == 1.0
    assert np.count_nonzero(moved.values) == 1


def test_centered_coordinates():
    f = GridField.zeros(0.5, 8)
    assert np.allclose(f.coordinates(), 0.5 * np.arange(8))
    assert np.allclose(f.coordinates(centered=True), [0.0, 0.5, 1.0, 1.5, -2.0, -1.5, -1.0, -0.5])


def test_discrete_laplacian_on_plane_wave():
    """Test that plane waves are eigenvectors of the discrete Laplacian with eigenvalue -difference_symbol."""
    h, n, k = 0.2, 32, 5
    omega = 2 * np.pi * k / (n * h)
    f = GridField.sample(lambda x: np.exp(1j * omega * x), h, n, centered=False)
    expected = -difference_symbol(np.array([omega]), h)[0] * f.values
    assert np.allclose(discrete_laplacian(f).values, expected, atol=1e-10)


def test_three_point_stencil_matches_laplacian(smooth_field):
    assert np.allclose(apply_stencil(smooth_field, THREE_POINT).values, discrete_laplacian(smooth_field).values, atol=1e-12)
    omega = np.linspace(-3, 3, 11)
    assert np.allclose(difference_symbol(omega, 0.3, THREE_POINT), difference_symbol(omega, 0.3))


def test_apply_stencil_too_wide():
    """Test that a stencil wider than the lattice is rejected."""
    with pytest.raises(StencilTooWide):
        apply_stencil(GridField.zeros(0.1, 8), dst_coefficients(4))


def test_stencil_coefficients_must_sum_to_zero():
    with pytest.raises(ValueError, match="sum to zero"):
        StencilSpec((-2.0, 1.5))
    with pytest.raises(ValueError, match="half width"):
        StencilSpec((0.0,))


def test_dst_coefficients_low_orders():
    """Test the closed form against the classical second and fourth order stencils."""
    assert dst_coefficients(1).coefficients == pytest.approx((-2.0, 1.0))
    assert dst_coefficients(2).coefficients == pytest.approx((-2.5, 4.0 / 3.0, -1.0 / 12.0))
    with pytest.raises(ValueError):
        dst_coefficients(0)


def test_three_point_stability_constant():
    """Test that the three-point stencil has alpha = 4/pi^2 (infimum reached at theta = pi)."""
    analysis = stencil_symbol_analysis(THREE_POINT)
    assert analysis.consistency_order == 2
    assert analysis.stability_alpha == pytest.approx(4 / np.pi**2, abs=1e-9)
    assert not analysis.unstable


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_dst_stencils_are_consistent_and_stable(n):
    analysis = stencil_symbol_analysis(dst_coefficients(n))
    assert analysis.consistency_order == 2 * n
    assert analysis.stability_alpha > 0


def test_unstable_stencil_is_flagged():
    """Test that a sign-flipped Laplacian is reported unstable rather than raising."""
    analysis = stencil_symbol_analysis(StencilSpec((2.0, -1.0)))
    assert analysis.unstable
    assert analysis.stability_alpha == pytest.approx(-1.0, abs=1e-6)


def test_higher_order_stencil_is_more_accurate():
    """Test that the fourth order stencil differentiates a smooth periodic profile better."""
    h, n = 2 * np.pi / 32, 32
    f = GridField.sample(np.sin, h, n, centered=False)
    exact = -f.values
    err2 = np.max(np.abs(apply_stencil(f, dst_coefficients(1)).values - exact))
    err4 = np.max(np.abs(apply_stencil(f, dst_coefficients(2)).values - exact))
    assert err4 < 0.05 * err2


def test_norms_of_constant():
    f = GridField(0.5, np.ones(16))
    assert norm(f, "L2") == pytest.approx(np.sqrt(8.0))
    assert norm(f, "H1") == pytest.approx(np.sqrt(8.0))
    assert norm(f, "homogeneous_sobolev", 2) == pytest.approx(0.0, abs=1e-12)


def test_spectral_sobolev_matches_differences(smooth_field):
    """Test that the spectral homogeneous H^1 norm equals the backward-difference one."""
    h1 = norm(smooth_field, "H1")
    l2 = norm(smooth_field, "L2")
    dot1 = norm(smooth_field, "homogeneous_sobolev", 1)
    assert dot1**2 + l2**2 == pytest.approx(h1**2, rel=1e-12)
    assert norm(smooth_field, "sobolev", 1) == pytest.approx(h1, rel=1e-12)
    assert norm(smooth_field, "sobolev", 0) == pytest.approx(l2, rel=1e-12)


def test_norm_argument_errors(smooth_field):
    with pytest.raises(ValueError, match="order"):
        norm(smooth_field, "homogeneous_sobolev")
    with pytest.raises(ValueError, match="Unknown norm"):
        norm(smooth_field, "Linf", 1)
