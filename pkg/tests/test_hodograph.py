import numpy as np
import pytest

from strata_wave.errors import DomainError, StagnationError
from strata_wave.function_space import CoefficientFunction as CF
from strata_wave.hodograph import (physical_points, psi_at, reconstruct_psi, reconstruct_surface,
                                   streamline, velocity_field)
from strata_wave.strip_problem import HeightField, StripGrid

from conftest import P0, WAVE_TARGETS, wave_branch


def _laminar(kappa=1.0, grid=None):
    grid = grid or StripGrid(16, 12)
    return HeightField.from_function(grid, lambda q, p: kappa * (p - P0))


def _wavy(grid=None):
    grid = grid or StripGrid(16, 16)
    return HeightField.from_function(
        grid, lambda q, p: 0.8 * (p - P0) + 0.05 * np.cos(q) * np.sinh(p - P0) + 0.01 * np.sin(2 * q) * (p - P0) ** 2)


def test_laminar_surface_is_flat():
    eta = reconstruct_surface(_laminar(), 1.0)
    np.testing.assert_allclose(eta.y_samples, 0.0, atol=1e-15)
    assert eta.p_level == 0.0


def test_bed_and_mid_streamlines():
    h = _laminar()
    np.testing.assert_allclose(streamline(h, P0, 1.0).y_samples, -1.0, atol=0)
    mid = streamline(h, P0 / 2, 1.0)
    np.testing.assert_allclose(mid.y_samples, (P0 / 2 - P0) - 1.0, atol=1e-14)
    assert len(mid.rows()) == h.grid.n_q


def test_surface_is_zero_level_streamline():
    h = _wavy()
    np.testing.assert_array_equal(reconstruct_surface(h, 0.3).y_samples, streamline(h, 0.0, 0.3).y_samples)


def test_streamline_domain_error():
    with pytest.raises(DomainError):
        streamline(_laminar(), 0.1, 1.0)
    with pytest.raises(DomainError):
        streamline(_laminar(), -1.5, 1.0)


def test_off_node_interpolation_of_band_limited_field():
    h = _wavy(StripGrid(16, 24))
    p = -0.3719
    exact = 0.8 * (p - P0) + 0.05 * np.cos(h.grid.q) * np.sinh(p - P0) + 0.01 * np.sin(2 * h.grid.q) * (p - P0) ** 2
    np.testing.assert_allclose(streamline(h, p, 0.0).y_samples, exact, atol=1e-12)


def test_streamlines_ordered():
    h = _wavy()
    levels = np.linspace(P0, 0, 9)
    ys = np.array([streamline(h, p, 0.5).y_samples for p in levels])
    assert np.all(np.diff(ys, axis=0) > 0)


def test_velocity_examples():
    u, v = velocity_field(_laminar(), CF.constant(1.0, P0), 2.0)
    np.testing.assert_allclose(u, 1.0, atol=1e-13)
    np.testing.assert_allclose(v, 0.0, atol=0)
    h = _wavy()
    u, v = velocity_field(h, CF.polynomial([1.0, -0.1], P0), 3.0)
    assert np.all(u < 3.0) and np.abs(v).max() > 0
    x, y = physical_points(h, 0.5)
    assert x.shape == y.shape == h.grid.shape


def test_velocity_stagnation():
    h = HeightField.from_function(StripGrid(8, 8), lambda q, p: -(p - P0))
    with pytest.raises(StagnationError):
        velocity_field(h, CF.constant(1.0, P0), 1.0)


def test_laminar_psi_closed_form():
    h = _laminar()
    d = 1.0
    xs = np.linspace(0, 6, 5)
    ys = np.linspace(-d, 0, 7)
    psi, mask = reconstruct_psi(h, xs, ys, d)
    assert mask.all()
    np.testing.assert_allclose(psi, -(ys[None, :] + d + P0) * np.ones((5, 1)), atol=1e-12)
    # flux between bed and surface
    np.testing.assert_allclose(psi[:, 0] - psi[:, -1], -P0, atol=1e-12)


def test_psi_masks_exterior():
    psi, mask = reconstruct_psi(_laminar(), [0.5], [-1.5, 0.2, -0.5], 1.0)
    assert mask.tolist() == [[False, False, True]]
    assert np.isnan(psi[0, :2]).all()


def test_round_trip_on_analytic_field():
    h = _wavy()
    d = 0.4
    x, y = physical_points(h, d)
    psi = psi_at(h, x, y, d)
    np.testing.assert_allclose(psi, -np.broadcast_to(h.grid.p, h.grid.shape), atol=1e-10)
    # off-node x uses the trigonometric interpolant
    xo = np.full(5, 0.123)
    yo = np.interp(np.linspace(0.1, 0.9, 5), [0, 1], [-d + 1e-3, 0.8 * -P0 - d - 0.1])
    assert np.all(np.isfinite(psi_at(h, xo, yo, d)))


@pytest.fixture(scope="module")
def small_wave():
    return wave_branch(32, 16)[-1]


def test_solved_wave_surface_height(small_wave):
    eta = reconstruct_surface(small_wave.h, 0.5)
    a = WAVE_TARGETS[-1]
    assert eta.y_samples.max() - eta.y_samples.min() == pytest.approx(2 * a, rel=0.1)


def test_solved_wave_off_node_streamline_refinement(small_wave):
    fine = wave_branch(32, 32)[-1]
    p = -0.3719
    coarse_y = streamline(small_wave.h, p, 0.5).y_samples
    fine_y = streamline(fine.h, p, 0.5).y_samples
    np.testing.assert_allclose(coarse_y, fine_y, atol=1e-8)


def test_solved_wave_round_trip(small_wave):
    h = small_wave.h
    x, y = physical_points(h, 0.5)
    psi = psi_at(h, x, y, 0.5)
    np.testing.assert_allclose(psi, -np.broadcast_to(h.grid.p, h.grid.shape), atol=1e-10)
    assert np.all(psi[:, 0] == -P0)
