import numpy as np
import pytest

from qphase.grid import Grid, GridError, PhysicsParams, derivative, divergence, fd_gradient, gradient, laplacian


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(n_points=(7,), lower=0, upper=1),
        dict(n_points=(9,), lower=0, upper=1),
        dict(n_points=(16,), lower=1, upper=1),
        dict(n_points=(16, 16, 16, 16), lower=0, upper=1),
        dict(n_points=(130, 130, 130), lower=0, upper=1),
    ],
)
def test_invalid_grids_rejected(kwargs):
    with pytest.raises(GridError):
        Grid(**kwargs)


def test_physics_params_validation():
    assert PhysicsParams().h == pytest.approx(2 * np.pi)
    with pytest.raises(ValueError):
        PhysicsParams(mass=0.0)


def test_periodic_and_walled_spacing():
    p = Grid((10,), (0.0,), (1.0,))
    w = Grid((10,), (0.0,), (1.0,), periodic=False)
    assert p.spacing[0] == pytest.approx(0.1)
    assert w.spacing[0] == pytest.approx(1 / 9)
    assert w.axes[0][-1] == pytest.approx(1.0)
    assert p.axes[0][-1] == pytest.approx(0.9)


def test_round_trip_dict():
    g = Grid((8, 12), (-1.0, -2.0), (1.0, 3.0))
    assert Grid.from_dict(g.to_dict()) == g


def test_trapezoid_integrates_linear_exactly():
    g = Grid((20,), (0.0,), (2.0,), periodic=False)
    assert g.integrate(3 * g.axes[0] + 1) == pytest.approx(8.0, rel=1e-14)


@pytest.mark.parametrize("order", [1, 2])
@pytest.mark.parametrize("degree", [0, 1, 2, 3, 4])
def test_fd_stencils_exact_on_quartics(order, degree):
    # fourth-order stencils (including the one-sided edge ones) differentiate polynomials up to degree 4 exactly
    g = Grid((16,), (-1.0,), (2.0,), periodic=False)
    x = g.axes[0]
    f = x**degree
    exact = degree * x ** max(degree - 1, 0) if order == 1 else degree * (degree - 1) * x ** max(degree - 2, 0)
    np.testing.assert_allclose(derivative(f, g, 0, order), exact, atol=1e-10)


def test_spectral_derivatives_exact_on_trig():
    g = Grid((32, 16), (0.0, 0.0), (2 * np.pi, 2 * np.pi))
    X, Y = g.mesh()
    f = np.sin(3 * X) * np.cos(2 * Y)
    gx, gy = gradient(f, g)
    np.testing.assert_allclose(gx, 3 * np.cos(3 * X) * np.cos(2 * Y), atol=1e-12)
    np.testing.assert_allclose(gy, -2 * np.sin(3 * X) * np.sin(2 * Y), atol=1e-12)
    np.testing.assert_allclose(laplacian(f, g), -13 * f, atol=1e-11)
    np.testing.assert_allclose(divergence(np.stack([f, f]), g), gx + gy, atol=1e-12)


def test_fd_gradient_on_periodic_grid_uses_stencils():
    g = Grid((64,), (0.0,), (1.0,))
    x = g.axes[0]
    np.testing.assert_allclose(fd_gradient(x**2, g)[0], 2 * x, atol=1e-10)


def test_nyquist_kept_composes_to_second_derivative():
    g = Grid((16,), (0.0,), (1.0,))
    f = np.random.default_rng(0).normal(size=16) + 0j
    d1 = derivative(derivative(f, g, 0, keep_nyquist=True), g, 0, keep_nyquist=True)
    np.testing.assert_allclose(d1, derivative(f, g, 0, order=2), atol=1e-9)


def test_boundary_distance_and_contains():
    g = Grid((8,), (0.0,), (1.0,), periodic=False)
    assert list(g.boundary_distance()) == [0, 1, 2, 3, 3, 2, 1, 0]
    assert g.contains([1.0]) and not g.contains([1.01])
    assert not Grid((8,), (0.0,), (1.0,)).contains([1.0])


def test_lowpass_keeps_resolved_modes_and_damps_the_top():
    from qphase.grid import GridError, lowpass

    g = Grid.cube(64, 0.0, 2 * np.pi, 1)
    x = g.axes[0]
    low, near, top = np.cos(5 * x), np.cos(31 * x), np.cos(32 * x)
    np.testing.assert_allclose(lowpass(low, g), low, atol=1e-14)
    np.testing.assert_allclose(lowpass(near, g), np.exp(-36 * (31 / 32) ** 36) * near, atol=1e-13)
    assert np.max(np.abs(lowpass(top, g))) < 1e-14
    with pytest.raises(GridError):
        lowpass(low, Grid.cube(64, 0.0, 1.0, 1, periodic=False))
