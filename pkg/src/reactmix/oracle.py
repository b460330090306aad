"""
Slow, independent reference computations. Nothing here shares a numerical
kernel with the flux algebra or the spectral solver; the oracles only call
the main code to obtain the values they check.
"""

import logging, math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import lu_factor

from .mixture import MixtureParams, ReactionNetwork
from .reactmix import OracleException, workerCount

logger = logging.getLogger(__name__)


#######################################################################
#                             Determinants                            #
#######################################################################

def detNumeric(matrix: np.ndarray) -> float:
    """
    Determinant by LU elimination with partial pivoting.

    :param matrix: square, finite array.
    :type matrix: np.ndarray
    :raises reactmix.reactmix.OracleException: if the matrix is not square.
    :returns: the determinant; 0 within rounding for singular matrices.
    """
    a = np.asarray(matrix, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise OracleException(f'Square matrix required, got {a.shape}.')
    lu, piv = lu_factor(a, check_finite=True)
    swaps = int(np.count_nonzero(piv != np.arange(piv.size)))
    return float((-1.0) ** swaps * np.prod(np.diag(lu)))


def jacobianFd(fn: Callable[[np.ndarray], np.ndarray], point: np.ndarray,
               step: Optional[float] = None) -> np.ndarray:
    """
    Central-difference Jacobian of *fn* at *point*. The default step is the
    cube root of the machine epsilon times max(1, |x_j|).

    :param fn: map from R^n to R^n.
    :param point: evaluation point.
    :type point: np.ndarray
    :param step: fixed step for all coordinates.
    :type step: Optional[float]
    :returns: n x n array.
    """
    x = np.asarray(point, dtype=float)
    n = x.size
    jac = np.empty((n, n))
    for j in range(n):
        hj = step if step is not None else \
                 np.finfo(float).eps ** (1.0 / 3.0) * max(1.0, abs(x[j]))
        up, down = x.copy(), x.copy()
        up[j] += hj
        down[j] -= hj
        jac[:, j] = (np.asarray(fn(up)) - np.asarray(fn(down))) / (2.0 * hj)
    return jac


def entropyMapReference(params: MixtureParams) \
                        -> Callable[[np.ndarray], np.ndarray]:
    """
    The map z -> (phi_1 - phi_2, ..., phi_{N-1} - phi_N, sum z) written out
    with scalar arithmetic.
    """
    gamma, mass = params.gamma, params.molar_mass

    def G(z: np.ndarray) -> np.ndarray:
        phi = [gamma[i] / ((gamma[i] - 1.0) * mass[i]) *
               z[i] ** (gamma[i] - 1.0) for i in range(len(z))]
        return np.array([phi[i] - phi[i + 1] for i in range(len(z) - 1)] +
                        [math.fsum(z)])
    return G


#######################################################################
#                        Compactness Functional                       #
#######################################################################

RH_MAX_SIZE = 1024

def _kernel(r: float, h: float) -> float:
    if r <= 0.25:
        return 1.0 / (r + h)
    if r >= 0.375:
        return 0.0
    s = (r - 0.25) * 8.0
    return (1.0 - (10.0 * s**3 - 15.0 * s**4 + 6.0 * s**5)) / (0.25 + h)


def kernelNormReference(h: float) -> float:
    "||K_h||_1 from the antiderivative of 1/(r+h) plus half the cutoff band."
    return 2.0 * (math.log(0.25 + h) - math.log(h)) + 0.125 / (0.25 + h)


def rhDoubleSum(values: Sequence[float], h: float) -> float:
    """
    R_h by the direct double sum over all pairs of grid points with the
    periodic distance.

    :param values: M samples.
    :param h: kernel width.
    :type h: float
    :raises reactmix.reactmix.OracleException: for M above 1024.
    :returns: R_h.
    """
    rho = np.asarray(values, dtype=float)
    size = rho.size
    if size > RH_MAX_SIZE:
        raise OracleException(f'Double sum limited to M <= {RH_MAX_SIZE}, '
                              f'got {size}.')
    weights = np.empty(size)
    for d in range(size):
        weights[d] = _kernel(min(d, size - d) / size, h)
    total = 0.0
    for m in range(size):
        diff = rho[m] - rho
        total += float(np.dot(weights[(m - np.arange(size)) % size],
                              diff * diff))
    return total / (size * size) / kernelNormReference(h)


#######################################################################
#                      Well-Mixed Reaction Reference                  #
#######################################################################

def odeReferenceWellmixed(network: Optional[ReactionNetwork],
                          initial: Sequence[float],
                          t_end: float) -> np.ndarray:
    """
    Integrate the spatially uniform system d rho/dt = omega(rho) with an
    adaptive eighth-order Runge-Kutta method at tolerance 1e-12.

    :param network: reaction network; *None* leaves the state unchanged.
    :type network: Optional[ReactionNetwork]
    :param initial: non-negative N-vector.
    :param t_end: final time.
    :type t_end: float
    :raises reactmix.reactmix.OracleException: on negative initial values or failure.
    :returns: N-vector at *t_end*.
    """
    y0 = np.asarray(initial, dtype=float)
    if np.any(y0 < 0.0):
        raise OracleException('Negative initial density.')
    if network is None or t_end == 0.0:
        return y0.copy()

    def rates(t: float, y: np.ndarray) -> np.ndarray:
        rate = 1.0
        for i in network.reagents:
            rate *= y[i]
        dy = np.zeros_like(y)
        for i, a in zip(network.reagents, network.alpha):
            dy[i] -= a * rate
        for c, b in zip(network.products, network.prod_weight):
            dy[c] += b * rate
        return dy

    sol = solve_ivp(rates, (0.0, t_end), y0, method='DOP853', rtol=1e-12,
                    atol=1e-14)
    if not sol.success:
        raise OracleException(f'Reference integration failed: '
                              f'{sol.message}')
    return sol.y[:, -1]


def wellmixedClosedForm(t: float) -> np.ndarray:
    """
    Symmetric solution for A + B -> C with alpha = (1, 1), product weight 2
    and rho(0) = (1, 1, 0): r = 1/(1+t) for both reagents, 2t/(1+t) for the
    product.
    """
    return np.array([1.0 / (1.0 + t), 1.0 / (1.0 + t), 2.0 * t / (1.0 + t)])


def wellmixedClosedFormResidual(t: float) -> float:
    """
    Substitute *wellmixedClosedForm* into its ODE, r' = -r^2 and
    c' = 2 r^2; returns the larger defect.
    """
    r = 1.0 / (1.0 + t)
    dr = -1.0 / (1.0 + t) ** 2
    dc = 2.0 / (1.0 + t) ** 2
    return max(abs(dr + r * r), abs(dc - 2.0 * r * r))


#######################################################################
#                             Oracle Suite                            #
#######################################################################

@dataclass(frozen=True)
class OracleReport:
    """
    Outcome of one oracle case. For vector-valued cases *computed* and
    *reference* are max norms and the errors are taken componentwise.
    """

    case      : str
    computed  : float
    reference : float
    abs_error : float
    rel_error : float
    tolerance : float

    def passed(self) -> bool:
        return self.rel_error < self.tolerance

    COLUMNS = ('case', 'computed', 'reference', 'abs_error', 'rel_error',
               'tolerance', 'passed')

    def row(self) -> List[str]:
        return [self.case] + [f'{v:.17g}' for v in
                              (self.computed, self.reference, self.abs_error,
                               self.rel_error, self.tolerance)] + \
               [str(self.passed())]


def compare(case: str, computed, reference, tolerance: float) -> OracleReport:
    """
    Build the report of one case; the relative error divides by the max
    norm of the reference.
    """
    c = np.atleast_1d(np.asarray(computed, dtype=float))
    r = np.atleast_1d(np.asarray(reference, dtype=float))
    abs_error = float(np.max(np.abs(c - r)))
    scale = float(np.max(np.abs(r)))
    rel_error = abs_error / scale if scale > 0.0 else abs_error
    value = lambda a: float(a[0]) if a.size == 1 else float(np.max(np.abs(a)))
    return OracleReport(case, value(c), value(r), abs_error, rel_error,
                        tolerance)


OracleCase = Tuple[str, float, Callable[[], Tuple[object, object]]]

def _abcNetwork() -> ReactionNetwork:
    return ReactionNetwork(reagents=(0, 1), products=(2,), alpha=(1.0, 1.0),
                           prod_weight=(2.0,))


def _randomPositive(seed: int, n: int) -> np.ndarray:
    return np.random.default_rng(seed).uniform(0.1, 2.0, n)


def registeredCases() -> List[OracleCase]:
    """
    All oracle cases as (name, default tolerance, evaluation); each
    evaluation returns (computed, reference).
    """
    from .diagnostics import compactnessFunctional, kernelNorm
    from .fluxes import matrixB, detBClosedForm, detDGClosedForm, \
                        qFromRho, rhoFromQ
    from .solver import InitialProfile, SimConfig, cflDt, stepRk4
    from .spectral import SpectralGrid, stokesSolve

    cases: List[OracleCase] = [
        ('det_identity_3x3', 1e-14, lambda: (detNumeric(np.eye(3)), 1.0)),
        ('det_2x2', 1e-14,
         lambda: (detNumeric([[5/6, 1/2], [-1/3, 1.0]]), 1.0)),
        ('det_diagonal', 1e-14,
         lambda: (detNumeric(np.diag([2.0, 3.0, 0.5, 4.0])), 12.0)),
    ]

    for n in range(2, 7):
        def detB(n=n):
            z = _randomPositive(100 + n, n)
            return detNumeric(matrixB(z)), detBClosedForm(z)
        cases.append((f'det_B_N{n}', 1e-12, detB))

    mixed = MixtureParams(gamma=(1.4, 2.0, 1.7, 2.5), molar_mass=(1.0, 2.0,
                                                                   0.5, 3.0))
    def detDG():
        z = _randomPositive(200, 4)
        return detNumeric(jacobianFd(entropyMapReference(mixed), z)), \
               detDGClosedForm(z, mixed)
    cases.append(('det_DG_mixed_gamma', 1e-8, detDG))

    def roundTrip():
        z = np.random.default_rng(300).uniform(0.01, 5.0, (4, 32))
        return rhoFromQ(qFromRho(z, mixed), mixed).values / z, np.ones_like(z)
    cases.append(('G_round_trip', 1e-10, roundTrip))

    def twoPoint(h=1e-2):
        computed = rhDoubleSum([1.0, -1.0, 1.0, -1.0], h)
        return computed, 2.0 / ((0.25 + h) * kernelNormReference(h))
    cases.append(('R_h_alternating_M4', 1e-14, twoPoint))

    for h in (1e-2, 1e-3):
        def spectral(h=h):
            field = np.random.default_rng(400).standard_normal(128)
            return compactnessFunctional(field, h), rhDoubleSum(field, h)
        cases.append((f'R_h_spectral_M128_h{h:g}', 1e-12, spectral))

    for h in (1e-2, 1e-3, 1e-4):
        cases.append((f'kernel_norm_h{h:g}', 1e-10,
                      lambda h=h: (kernelNorm(h), kernelNormReference(h))))

    def stokes():
        grid = SpectralGrid(64)
        params = MixtureParams(gamma=(2.0, 2.0), molar_mass=(1.0, 1.0))
        u = stokesSolve(np.cos(2.0 * np.pi * grid.nodes), params, grid)
        return u, np.sin(2.0 * np.pi * grid.nodes) / (4.0 * np.pi)
    cases.append(('stokes_single_mode', 1e-12, stokes))

    cases.append(('wellmixed_closed_form_residual', 1e-14,
                  lambda: (max(wellmixedClosedFormResidual(t)
                               for t in np.linspace(0.0, 2.0, 21)), 0.0)))

    cases.append(('wellmixed_ode_vs_closed_form', 1e-9,
                  lambda: (odeReferenceWellmixed(_abcNetwork(),
                                                 [1.0, 1.0, 0.0], 1.0),
                           wellmixedClosedForm(1.0))))

    cases.append(('wellmixed_mass', 1e-10,
                  lambda: (odeReferenceWellmixed(_abcNetwork(),
                                                 [1.0, 1.0, 0.0], 3.0).sum(),
                           2.0)))

    def wellmixedSolver():
        initial = (0.8, 1.2, 0.1)
        config = SimConfig(grid=SpectralGrid(16),
                           params=MixtureParams(gamma=(2.0, 2.0, 2.0),
                                                molar_mass=(10.0, 10.0, 10.0)),
                           network=_abcNetwork(), t_end=1.0, dt_max=0.01,
                           initial_data=tuple(InitialProfile('constant', v)
                                              for v in initial))
        state = config.initialState()
        while state.time < 1.0:
            state = stepRk4(state, config,
                            min(cflDt(state, config), 1.0 - state.time))
        return state.values[:, 0], odeReferenceWellmixed(_abcNetwork(),
                                                         initial, 1.0)
    cases.append(('wellmixed_solver_vs_ode', 1e-6, wellmixedSolver))
    return cases


def runOracleSuite(tolerance: Optional[float] = None,
                   workers: Optional[int] = None) -> List[OracleReport]:
    """
    Evaluate every registered case, in parallel, and report in registration
    order.

    :param tolerance: replaces every case's default tolerance.
    :type tolerance: Optional[float]
    :param workers: number of threads, defaults to *workerCount()*.
    :type workers: Optional[int]
    :returns: one report per registered case.
    """
    cases = registeredCases()

    def evaluate(case: OracleCase) -> OracleReport:
        name, default, fn = case
        computed, reference = fn()
        return compare(name, computed, reference,
                       default if tolerance is None else tolerance)

    with ThreadPoolExecutor(max_workers=workers or workerCount()) as pool:
        reports = list(pool.map(evaluate, cases))
    failed = [r.case for r in reports if not r.passed()]
    logger.info(f'Oracle suite: {len(reports) - len(failed)} of '
                f'{len(reports)} cases passed.')
    return reports
