"""
Seeded property suite over random states. Every case draws its own states
from a generator seeded with *seed + case index*, so a failure is reproduced
by rerunning that single seed.
"""

import logging, math
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from typing import Dict, List, Tuple

import numpy as np
from tqdm import tqdm # install with "pip install tqdm"

from .mixture import DensityField, MixtureParams
from .fluxes import fluxCompute, entropyFluxIdentityResidual, \
                    entropyDissipation, matrixB, matrixCTilde, \
                    detBClosedForm, detDGClosedForm, qFromRho, invertPoint, \
                    codomainMembership
from .spectral import SpectralGrid
from .diagnostics import compactnessFunctional, KernelFamily
from .oracle import detNumeric, jacobianFd, entropyMapReference, rhDoubleSum
from .reactmix import workerCount

logger = logging.getLogger(__name__)

INVARIANTS = ('flux_cancellation', 'entropy_flux_identity', 'det_B',
              'C_tilde_structure', 'det_DG', 'G_round_trip',
              'codomain_membership', 'R_h_cross_check', 'kernel_scaling')

FLUX_GRID = 128
RH_GRID = 64
POINTS_PER_CASE = 10


#######################################################################
#                            Random States                            #
#######################################################################

def randomParams(rng: np.random.Generator, n: int,
                 n_diffusive: int = None) -> MixtureParams:
    "Exponents in [1.2, 3] and molar masses in [0.5, 5]."
    return MixtureParams(gamma=tuple(rng.uniform(1.2, 3.0, n)),
                         molar_mass=tuple(rng.uniform(0.5, 5.0, n)),
                         n_diffusive=n_diffusive)


def randomSmoothState(rng: np.random.Generator, n: int,
                      grid: SpectralGrid) -> DensityField:
    """
    Strictly positive trigonometric polynomials of degree <= 2 with
    amplitudes adding up to at most half of the mean.
    """
    x = grid.nodes
    values = np.empty((n, grid.size))
    for i in range(n):
        mean = rng.uniform(0.5, 2.0)
        amp = rng.uniform(0.0, 0.25 * mean, 2)
        phase = rng.uniform(0.0, 2.0 * np.pi, 2)
        values[i] = mean + sum(a * np.sin(2.0 * np.pi * (k + 1) * x + p)
                               for k, (a, p) in enumerate(zip(amp, phase)))
    return DensityField(values)


#######################################################################
#                          Invariant Checks                           #
#######################################################################

Outcome = Tuple[bool, float]
"(passed, worst relative error)"

def checkFluxes(rng: np.random.Generator) -> Dict[str, Outcome]:
    grid = SpectralGrid(FLUX_GRID)
    cancel, identity = 0.0, 0.0
    for n in (2, 3, 5):
        params = randomParams(rng, n)
        state = randomSmoothState(rng, n, grid)
        flux = fluxCompute(state, params, grid.derivative)
        scale = float(np.max(np.abs(flux.values)))
        cancel = max(cancel, float(np.max(np.abs(flux.residual()))) /
                             max(scale, 1e-300))
        res = entropyFluxIdentityResidual(state, flux, params,
                                          grid.derivative)
        rhs = entropyDissipation(state, flux, params)
        identity = max(identity, float(np.max(np.abs(res))) /
                                 max(float(np.max(np.abs(rhs))), 1e-300))
    return {'flux_cancellation': (cancel <= 1e-12, cancel),
            'entropy_flux_identity': (identity <= 1e-10, identity)}


def checkMatrices(rng: np.random.Generator) -> Dict[str, Outcome]:
    det_b, c_tilde = 0.0, 0.0
    for n in range(2, 7):
        for _ in range(POINTS_PER_CASE):
            z = rng.uniform(0.05, 3.0, n)
            exact = detBClosedForm(z)
            det_b = max(det_b, abs(detNumeric(matrixB(z)) - exact) / exact)
            c = matrixCTilde(z)
            c_tilde = max(c_tilde, float(np.max(np.abs(c - c.T))),
                          float(np.max(np.abs(c.sum(axis=1)))) / z.sum())
    return {'det_B': (det_b <= 1e-12, det_b),
            'C_tilde_structure': (c_tilde <= 1e-13, c_tilde)}


def checkEntropyMap(rng: np.random.Generator) -> Dict[str, Outcome]:
    det_dg, round_trip, outside = 0.0, 0.0, 0
    for _ in range(POINTS_PER_CASE):
        n = int(rng.integers(2, 6))
        params = randomParams(rng, n)
        z = rng.uniform(0.1, 2.0, n)
        exact = detDGClosedForm(z, params)
        fd = detNumeric(jacobianFd(entropyMapReference(params), z))
        det_dg = max(det_dg, abs(fd - exact) / exact)
        z = rng.uniform(0.01, 5.0, n)
        evars = qFromRho(z, params)
        if not codomainMembership(evars, params):
            outside += 1
            continue
        back = invertPoint(evars.q, float(evars.rho_total), params)
        round_trip = max(round_trip, float(np.max(np.abs(back - z) / z)))
    return {'det_DG': (det_dg <= 1e-8, det_dg),
            'G_round_trip': (round_trip <= 1e-10, round_trip),
            'codomain_membership': (outside == 0, float(outside))}


def checkCompactness(rng: np.random.Generator) -> Dict[str, Outcome]:
    worst = 0.0
    for h in (1e-2, 1e-3):
        values = rng.standard_normal(RH_GRID)
        reference = rhDoubleSum(values, h)
        worst = max(worst, abs(compactnessFunctional(values, h) - reference)
                           / reference)
    ratios = KernelFamily((1e-2, 1e-3, 1e-4)).logRatios().values()
    band = max(ratios) / min(ratios)
    return {'R_h_cross_check': (worst <= 1e-12, worst),
            'kernel_scaling': (band <= 3.0, band)}


def runCase(seed: int) -> Dict[str, Outcome]:
    """
    All invariants on the states drawn from *seed*. An exception counts as
    a failure of the invariant group that raised it.
    """
    rng = np.random.default_rng(seed)
    outcome: Dict[str, Outcome] = {}
    for group, names in ((checkFluxes, INVARIANTS[0:2]),
                         (checkMatrices, INVARIANTS[2:4]),
                         (checkEntropyMap, INVARIANTS[4:7]),
                         (checkCompactness, INVARIANTS[7:9])):
        try:
            outcome.update(group(rng))
        except Exception as e:
            logger.warning(f'Seed {seed}: {group.__name__} raised {e!r}.')
            for name in names:
                outcome[name] = (False, math.inf)
    return outcome


#######################################################################
#                             Suite Runner                            #
#######################################################################

@dataclass
class CheckResult:
    "Per-invariant tallies of a suite run."

    passed   : Dict[str, int] = field(default_factory=lambda: dict.fromkeys(
                                                               INVARIANTS, 0))
    worst    : Dict[str, float] = field(default_factory=lambda: dict.fromkeys(
                                                              INVARIANTS, 0.0))
    failures : List[Tuple[str, int]] = field(default_factory=list)
    "(invariant, seed) pairs"

    def ok(self) -> bool:
        return not self.failures

    def table(self, n_cases: int) -> str:
        lines = [f'{"invariant":<22} {"passed":>7} {"failed":>7} '
                 f'{"worst error":>12}']
        if n_cases == 0:
            return lines[0]
        for name in INVARIANTS:
            failed = n_cases - self.passed[name]
            lines.append(f'{name:<22} {self.passed[name]:>7} {failed:>7} '
                         f'{self.worst[name]:>12.3e}')
        return '\n'.join(lines)


def runCheckSuite(seed: int, n_cases: int, progress_bar: bool = False,
                  workers: int = None) -> CheckResult:
    """
    Run the property suite on *n_cases* seeds seed, seed+1, ...

    :param seed: first seed.
    :type seed: int
    :param n_cases: number of cases, >= 0.
    :type n_cases: int
    :param progress_bar: show a progress bar over the cases.
    :type progress_bar: bool
    :param workers: number of threads, defaults to *workerCount()*.
    :type workers: int
    :returns: per-invariant tallies; failures are sorted by seed.
    """
    result = CheckResult()
    if n_cases <= 0:
        return result
    with ThreadPoolExecutor(max_workers=workers or workerCount()) as pool, \
         tqdm(total=n_cases, unit=' cases', disable=not progress_bar) \
         as progress:
        futures = {pool.submit(runCase, seed + k): seed + k
                   for k in range(n_cases)}
        for future in as_completed(futures):
            case_seed = futures[future]
            for name, (ok, error) in future.result().items():
                if ok:
                    result.passed[name] += 1
                else:
                    result.failures.append((name, case_seed))
                result.worst[name] = max(result.worst[name], error)
            progress.update(1)
    result.failures.sort(key=lambda f: (f[1], INVARIANTS.index(f[0])))
    logger.info(f'Property suite: {n_cases} cases, '
                f'{len(result.failures)} failures.')
    return result
