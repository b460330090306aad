import numpy as np
import numpy.testing as npt
import pytest

from reactmix.mixture import DensityField, MixtureParams, reactionRates
from reactmix.spectral import SpectralGrid
from reactmix.solver import InitialProfile, SimConfig, speciesRhs, \
     speciesRhsTerms, cflDt, stepRk4, RK4_WEIGHTS
from reactmix.oracle import wellmixedClosedForm
from reactmix.reactmix import ConfigException, MixtureException, \
     BlowUpException, DegenerateStateException


def makeConfig(params, network=None, profiles=None, size=32, **kwargs):
    if profiles is None:
        profiles = [InitialProfile('constant', 1.0)] * params.n_components
    return SimConfig(grid=SpectralGrid(size), params=params, network=network,
                     t_end=kwargs.pop('t_end', 0.1),
                     dt_max=kwargs.pop('dt_max', 0.01),
                     initial_data=tuple(profiles), **kwargs)


def test_initial_profiles():
    grid = SpectralGrid(16)
    npt.assert_array_equal(InitialProfile().evaluate(grid), 1.0)
    wave = InitialProfile('sinusoidal', 2.0, 0.5, 3, 0.0).evaluate(grid)
    npt.assert_allclose(wave, 2.0 + 0.5 * np.sin(6 * np.pi * grid.nodes))
    table = InitialProfile('tabulated', values=range(16)).evaluate(grid)
    npt.assert_array_equal(table, np.arange(16.0))
    with pytest.raises(ConfigException):
        InitialProfile('tabulated', values=(1.0, 2.0)).evaluate(grid)
    with pytest.raises(ConfigException):
        InitialProfile('gaussian')


def test_config_rejected(params3, abc):
    with pytest.raises(ConfigException):
        makeConfig(params3, dt_max=0.0)
    with pytest.raises(ConfigException):
        makeConfig(params3, t_end=-1.0)
    with pytest.raises(ConfigException):
        makeConfig(params3, cfl_safety=1.5)
    with pytest.raises(ConfigException):
        makeConfig(params3, profiles=[InitialProfile()] * 2)
    with pytest.raises(MixtureException):
        makeConfig(MixtureParams((2.0, 2.0), (1.0, 1.0)), abc)


def test_equilibrium(params3):
    config = makeConfig(params3)
    state = config.initialState()
    npt.assert_array_equal(speciesRhs(state, config), 0.0)
    after = stepRk4(state, config, 0.01)
    npt.assert_array_equal(after.values, state.values)
    assert after.time == pytest.approx(0.01)


def test_uniform_reaction(params3, abc):
    profiles = [InitialProfile('constant', v) for v in (0.8, 1.2, 0.1)]
    config = makeConfig(params3, abc, profiles)
    state = config.initialState()
    npt.assert_allclose(speciesRhs(state, config),
                        reactionRates(state, abc), atol=1e-15)


def test_mass_balance(abc):
    params = MixtureParams((2.0, 1.5, 2.5), (10.0, 5.0, 2.0), n_diffusive=2,
                           epsilon=1e-2, delta=0.1)
    profiles = [InitialProfile('sinusoidal', 1.0, 0.3, 1, 0.0),
                InitialProfile('sinusoidal', 0.8, 0.2, 2, 1.0),
                InitialProfile('sinusoidal', 0.5, 0.1, 3, 2.0)]
    config = makeConfig(params, abc, profiles)
    terms = speciesRhsTerms(config.initialState(), config)
    npt.assert_allclose(terms.total().mean(axis=1).sum(),
                        terms.damping.mean(axis=1).sum(), atol=1e-12)
    npt.assert_array_equal(terms.flux[2], 0.0)
    assert terms.damping.mean(axis=1).sum() < 0.0


def test_degenerate_state(params3):
    config = makeConfig(params3)
    with pytest.raises(DegenerateStateException):
        speciesRhs(DensityField(np.zeros((3, 32))), config)


def test_cfl_dt(params3, abc):
    quiet = MixtureParams((2.0, 2.0), (1.0, 1.0), n_diffusive=1)
    config = makeConfig(quiet)
    assert cflDt(config.initialState(), config) == config.dt_max

    profiles = [InitialProfile('sinusoidal', 1.0, 0.5, 1, 0.0)] * 3
    config = makeConfig(params3, abc, profiles, dt_max=1.0)
    dt = cflDt(config.initialState(), config)
    assert 0.0 < dt < 1.0
    assert dt <= config.cfl_safety * (1.0 / 32) ** 2


def test_stage_observer(params3, abc):
    config = makeConfig(params3, abc)
    weights = []
    stepRk4(config.initialState(), config, 1e-3,
            observer=lambda terms, weight: weights.append(weight))
    assert tuple(weights) == RK4_WEIGHTS
    assert sum(weights) == pytest.approx(1.0)


def test_blowup(params3, abc):
    profiles = [InitialProfile('constant', v) for v in (1.0, 1.0, 0.99)]
    config = makeConfig(params3, abc, profiles)
    with pytest.raises(BlowUpException):
        stepRk4(config.initialState(), config, 0.1, limit=1.0)
    with pytest.raises(BlowUpException):
        stepRk4(config.initialState(), config, np.inf)


def test_positivity_floor():
    params = MixtureParams((2.0, 2.0), (1.0, 1.0), n_diffusive=1,
                           positivity_floor=True)
    dipped = np.ones(32)
    dipped[5] = -1e-3
    profiles = [InitialProfile('tabulated', values=dipped),
                InitialProfile('constant', 1.0)]
    config = makeConfig(params, None, profiles)
    before = config.initialState()
    assert before.values.min() < 0.0
    after = stepRk4(before, config, 1e-6)
    assert np.all(after.values >= 0.0)


def test_heat_kernel_decay():
    # molar masses this large make the pressure, hence the velocity, negligible
    params = MixtureParams((2.0, 2.0), (1e12, 1e12), n_diffusive=1,
                           epsilon=1e-2)
    profiles = [InitialProfile('sinusoidal', 1.0, 0.5, 1, 0.0),
                InitialProfile('constant', 1.0)]
    config = makeConfig(params, None, profiles)
    state = config.initialState()
    for _ in range(10):
        state = stepRk4(state, config, 0.01)
    x = config.grid.nodes
    decay = np.exp(-4 * np.pi ** 2 * params.epsilon * state.time)
    npt.assert_allclose(state.values[0] - 1.0,
                        0.5 * decay * np.sin(2 * np.pi * x), atol=5e-7 * decay)
    npt.assert_allclose(state.values[1], 1.0, atol=1e-9)


def test_reaction_fourth_order(params3, abc):
    profiles = [InitialProfile('constant', v) for v in (1.0, 1.0, 0.0)]
    config = makeConfig(params3, abc, profiles, size=16)
    errors = []
    for steps in (5, 10, 20):
        state, dt = config.initialState(), 0.5 / steps
        for _ in range(steps):
            state = stepRk4(state, config, dt)
        exact = np.repeat(wellmixedClosedForm(0.5)[:, None], 16, axis=1)
        errors.append(np.max(np.abs(state.values - exact)))
    ratios = [a / b for a, b in zip(errors, errors[1:])]
    assert all(14.0 < r < 18.5 for r in ratios)


def test_rhs_spectral_convergence(abc):
    params = MixtureParams((2.0, 1.6, 2.4), (10.0, 5.0, 2.0), n_diffusive=2,
                           epsilon=1e-3)
    profiles = [InitialProfile('sinusoidal', 1.0, 0.2, 1, 0.0),
                InitialProfile('sinusoidal', 0.8, 0.15, 1, 2.0),
                InitialProfile('sinusoidal', 0.5, 0.1, 1, 4.0)]
    coarse = makeConfig(params, abc, profiles, size=64)
    fine = makeConfig(params, abc, profiles, size=128)
    rhs_coarse = speciesRhs(coarse.initialState(), coarse)
    rhs_fine = speciesRhs(fine.initialState(), fine)[:, ::2]
    assert np.max(np.abs(rhs_coarse - rhs_fine)) <= \
           1e-9 * np.max(np.abs(rhs_fine))


def test_mass_drift_long_run(abc):
    params = MixtureParams((2.0, 2.0, 2.0), (10.0, 10.0, 10.0), epsilon=1e-3)
    profiles = [InitialProfile('sinusoidal', 1.0, 0.2, 1, 0.0),
                InitialProfile('sinusoidal', 1.0, 0.2, 1, np.pi),
                InitialProfile('sinusoidal', 0.1, 0.05, 2, 0.0)]
    config = makeConfig(params, abc, profiles, size=128, dt_max=1e-3)
    state = config.initialState()
    initial = state.masses().sum()
    for _ in range(1000):
        state = stepRk4(state, config, cflDt(state, config))
    assert state.time > 0.0
    assert abs(state.masses().sum() - initial) <= 1e-8 * initial
