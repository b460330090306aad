import numpy as np
import numpy.testing as npt
import pytest

from reactmix.mixture import DensityField, MixtureParams
from reactmix.spectral import SpectralGrid
from reactmix.fluxes import fluxCompute, fluxComputeDelta, pressureDelta, \
     entropyFluxIdentityResidual, entropyDissipation, matrixCTilde, matrixB, \
     detBClosedForm, qFromRho, fluxFromEntropy, detDGClosedForm, \
     codomainBoundary, codomainMembership, invertPoint, rhoFromQ
from reactmix.oracle import detNumeric, jacobianFd, entropyMapReference
from reactmix.reactmix import DegenerateStateException, DomainException, \
     NonMembershipException, ConvergenceException


def smoothState(grid, n):
    "Positive first-degree trigonometric polynomials."
    x = grid.nodes
    return DensityField(np.array([1.0 + 0.1 * i + 0.3 * np.sin(2 * np.pi * x
                                                              + i)
                                  for i in range(n)]))


def test_flux_cancellation(grid, rng):
    params = MixtureParams(tuple(rng.uniform(1.2, 3.0, 4)),
                           tuple(rng.uniform(0.5, 5.0, 4)))
    flux = fluxCompute(smoothState(grid, 4), params, grid.derivative)
    scale = np.max(np.abs(flux.values))
    assert scale > 0.0
    assert np.max(np.abs(flux.residual())) <= 1e-12 * scale


def test_non_diffusive_rows(grid):
    params = MixtureParams((2.0, 2.0, 2.0), (1.0, 2.0, 3.0), n_diffusive=2)
    flux = fluxCompute(smoothState(grid, 3), params, grid.derivative)
    npt.assert_array_equal(flux.values[2], 0.0)
    single = MixtureParams((2.0, 2.0), (1.0, 2.0), n_diffusive=1)
    npt.assert_array_equal(fluxCompute(smoothState(grid, 2), single,
                                       grid.derivative).values, 0.0)


def test_degenerate_denominator(grid):
    params = MixtureParams((2.0, 2.0), (1.0, 1.0))
    with pytest.raises(DegenerateStateException):
        fluxCompute(DensityField(np.zeros((2, grid.size))), params,
                    grid.derivative)


def test_entropy_flux_identity(grid):
    params = MixtureParams((2.0, 3.0, 2.0), (1.0, 2.0, 0.5))
    state = smoothState(grid, 3)
    flux = fluxCompute(state, params, grid.derivative)
    residual = entropyFluxIdentityResidual(state, flux, params,
                                           grid.derivative)
    rhs = entropyDissipation(state, flux, params)
    assert np.all(rhs >= 0.0)
    assert np.max(np.abs(residual)) <= 1e-10 * np.max(rhs)


def test_flux_from_entropy(rng):
    grid = SpectralGrid(32)
    params = MixtureParams((2.0, 3.0, 2.0), (1.0, 2.0, 0.5))
    state = smoothState(grid, 3)
    flux = fluxCompute(state, params, grid.derivative).values
    rebuilt = fluxFromEntropy(state, params, grid.derivative)
    npt.assert_allclose(rebuilt, flux[:2], atol=1e-10 * np.max(np.abs(flux)))


def test_truncated_pressure():
    rho = np.array([-3.0, -1.0, 0.0, 1.5, 2.0, 3.0])
    npt.assert_allclose(pressureDelta(rho, 2.0, 1.0, 0.5),
                        [-8.0, -1.0, 0.0, 2.25, 4.0, 8.0])
    cap = 2.0
    below = pressureDelta(np.array([cap - 1e-9]), 2.5, 3.0, 0.5)
    above = pressureDelta(np.array([cap + 1e-9]), 2.5, 3.0, 0.5)
    npt.assert_allclose(below, above, rtol=1e-8)


def test_truncated_flux(grid):
    params = MixtureParams((2.0, 2.5), (1.0, 2.0), delta=0.01)
    state = smoothState(grid, 2)
    npt.assert_allclose(fluxComputeDelta(state, params,
                                         grid.derivative).values,
                        fluxCompute(state, params, grid.derivative).values,
                        atol=1e-13)
    with pytest.raises(DomainException):
        fluxComputeDelta(state, MixtureParams((2.0, 2.5), (1.0, 2.0)),
                         grid.derivative)


def test_matrix_c_tilde(rng):
    z = rng.uniform(0.1, 3.0, 5)
    c = matrixCTilde(z)
    npt.assert_array_equal(c, c.T)
    npt.assert_allclose(c.sum(axis=1), 0.0, atol=1e-14)
    with pytest.raises(DomainException):
        matrixCTilde([1.0, 0.0])


@pytest.mark.parametrize('n', [2, 3, 4, 5, 6])
def test_det_b(n, rng):
    z = rng.uniform(0.05, 3.0, n)
    npt.assert_allclose(detNumeric(matrixB(z)), detBClosedForm(z),
                        rtol=1e-12)


def test_det_b_mutation(monkeypatch):
    z = np.array([1.0, 2.0, 3.0])
    assert detBClosedForm(z) == pytest.approx(1.0)
    npt.assert_allclose(detNumeric(matrixB(z)), 1.0, rtol=1e-13)
    monkeypatch.setenv('REACTMIX_MUTATION', 'b-sign')
    npt.assert_allclose(detNumeric(matrixB(z)), 2.0 / 3.0, rtol=1e-13)


def test_det_dg(rng):
    params = MixtureParams((1.4, 2.0, 1.7, 2.5), (1.0, 2.0, 0.5, 3.0))
    z = rng.uniform(0.2, 2.0, 4)
    fd = detNumeric(jacobianFd(entropyMapReference(params), z))
    npt.assert_allclose(fd, detDGClosedForm(z, params), rtol=1e-7)


def test_round_trip(rng):
    params = MixtureParams((1.4, 2.0, 1.7), (1.0, 2.0, 0.5))
    z = rng.uniform(0.2, 2.0, (3, 8))
    evars = qFromRho(z, params)
    assert codomainMembership(evars, params)
    npt.assert_allclose(rhoFromQ(evars, params, 1.5).values, z, rtol=1e-10)
    assert rhoFromQ(evars, params, 1.5).time == 1.5


def test_invert_point():
    params = MixtureParams((2.0, 2.0), (1.0, 1.0))
    assert codomainBoundary(np.array([2.0]), params) == pytest.approx(1.0)
    npt.assert_allclose(invertPoint(np.array([2.0]), 2.0, params),
                        [1.5, 0.5], rtol=1e-12)
    with pytest.raises(NonMembershipException):
        invertPoint(np.array([2.0]), 0.5, params)


def test_round_trip_small_components(rng):
    params = MixtureParams((1.8, 2.2, 2.5), (1.0, 2.0, 0.5))
    z = np.array([1.3, 0.8, 0.021])
    evars = qFromRho(z, params)
    back = invertPoint(evars.q, float(evars.rho_total), params)
    assert np.max(np.abs(back - z) / z) <= 1e-10
    worst = 0.0
    for _ in range(300):
        n = int(rng.integers(2, 7))
        params = MixtureParams(tuple(rng.uniform(1.2, 3.0, n)),
                               tuple(rng.uniform(0.5, 5.0, n)))
        z = rng.uniform(0.01, 5.0, n)
        evars = qFromRho(z, params)
        back = invertPoint(evars.q, float(evars.rho_total), params)
        worst = max(worst, float(np.max(np.abs(back - z) / z)))
    assert worst <= 1e-10


@pytest.mark.parametrize('gamma', [(2.0, 2.5), (1.5, 2.8), (2.4, 1.3)])
def test_invert_point_boundary_scale(gamma):
    params = MixtureParams(gamma, (1.0, 2.0))
    z = np.array([1.0, 1e-12])
    evars = qFromRho(z, params)
    try:
        back = invertPoint(evars.q, float(evars.rho_total), params)
    except (ConvergenceException, NonMembershipException):
        return
    assert np.all(back > 0.0)
