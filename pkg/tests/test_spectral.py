import numpy as np
import numpy.testing as npt
import pytest

from reactmix.mixture import MixtureParams
from reactmix.spectral import SpectralGrid, stokesSolve
from reactmix.reactmix import DomainException


@pytest.mark.parametrize('size', [8, 48, 100])
def test_bad_size(size):
    with pytest.raises(DomainException):
        SpectralGrid(size)


def test_derivative(grid):
    x = grid.nodes
    npt.assert_allclose(grid.derivative(np.sin(2 * np.pi * x)),
                        2 * np.pi * np.cos(2 * np.pi * x), atol=1e-11)
    npt.assert_allclose(grid.derivative(np.sin(4 * np.pi * x), order=2),
                        -(4 * np.pi) ** 2 * np.sin(4 * np.pi * x), atol=1e-9)


def test_derivative_of_constant(grid):
    assert np.all(grid.derivative(np.full(grid.size, 3.7)) == 0.0)
    assert np.all(grid.derivative(np.full(grid.size, 3.7), order=2) == 0.0)


def test_derivative_order(grid):
    with pytest.raises(DomainException):
        grid.derivative(grid.nodes, order=3)


def test_dealias(grid):
    x = grid.nodes
    low = np.cos(2 * np.pi * 5 * x)
    high = np.cos(2 * np.pi * 30 * x)
    npt.assert_allclose(grid.dealias(1.0 + low + high), 1.0 + low,
                        atol=1e-13)


def test_without_nyquist(grid):
    x = grid.nodes
    smooth = 1.0 + np.sin(2 * np.pi * 3 * x)
    alternating = (-1.0) ** np.arange(grid.size)
    npt.assert_allclose(grid.withoutNyquist(smooth + 0.25 * alternating),
                        smooth, atol=1e-14)
    assert grid.nyquistAmplitude(smooth) < 1e-15
    assert grid.nyquistAmplitude(0.25 * alternating) == pytest.approx(0.25)


def test_stokes_single_mode(grid):
    params = MixtureParams((2.0, 2.0), (1.0, 1.0))
    x = grid.nodes
    u = stokesSolve(np.cos(2 * np.pi * x), params, grid)
    npt.assert_allclose(u, np.sin(2 * np.pi * x) / (4 * np.pi), atol=1e-12)


def test_stokes_viscous_flux(grid):
    params = MixtureParams((2.0, 2.0), (1.0, 1.0), mu=0.7, lam=0.4)
    x = grid.nodes
    p = 2.0 + 0.3 * np.cos(2 * np.pi * x) + 0.1 * np.sin(6 * np.pi * x)
    u = stokesSolve(p, params, grid)
    assert abs(u.mean()) < 1e-15
    npt.assert_allclose(params.viscosity() * grid.derivative(u),
                        p - p.mean(), atol=1e-12)
    assert np.all(stokesSolve(np.full(grid.size, 2.0), params, grid) == 0.0)
