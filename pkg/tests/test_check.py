import numpy as np

from reactmix.spectral import SpectralGrid
from reactmix.check import INVARIANTS, randomParams, randomSmoothState, \
     runCase, runCheckSuite


def test_random_state(rng):
    grid = SpectralGrid(64)
    state = randomSmoothState(rng, 4, grid)
    assert state.values.shape == (4, 64)
    assert state.values.min() > 0.0
    params = randomParams(rng, 3, n_diffusive=2)
    assert params.n_diffusive == 2
    assert all(1.2 <= g <= 3.0 for g in params.gamma)


def test_no_cases():
    result = runCheckSuite(0, 0)
    assert result.ok()
    assert len(result.table(0).splitlines()) == 1


def test_cases_pass():
    outcome = runCase(7)
    assert set(outcome) == set(INVARIANTS)
    assert all(ok for ok, _ in outcome.values()), outcome
    result = runCheckSuite(3, 2, workers=2)
    assert result.ok(), result.failures
    assert all(n == 2 for n in result.passed.values())
    assert len(result.table(2).splitlines()) == 1 + len(INVARIANTS)


def test_mutation_detected(monkeypatch):
    monkeypatch.setenv('REACTMIX_MUTATION', 'b-sign')
    result = runCheckSuite(0, 1, workers=1)
    assert not result.ok()
    assert ('det_B', 0) in result.failures
    assert result.passed['det_B'] == 0
