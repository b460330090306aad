"""
Pointwise algebra of the diffusion fluxes and of the entropy variables.

Gradients are never computed here: every function that needs one takes a
*derivative* callable, normally *SpectralGrid.derivative*.
"""

import logging, os
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from .mixture import DensityField, MixtureParams, pressurePartial
from .reactmix import DegenerateStateException, DomainException, \
                      NonMembershipException, ConvergenceException

logger = logging.getLogger(__name__)

Derivative = Callable[[np.ndarray], np.ndarray]


#######################################################################
#                           Data Structures                           #
#######################################################################

@dataclass(frozen=True)
class FluxField:
    """
    Diffusion fluxes F_i on the grid, an N x M array. Rows of
    non-diffusive components are zero.
    """

    values: np.ndarray

    def residual(self) -> np.ndarray:
        "Pointwise sum of all fluxes; zero up to rounding."
        return self.values.sum(axis=0)


@dataclass(frozen=True)
class EntropyVars:
    """
    Entropy variables q_1..q_{N-1} as an (N-1) x M array (or an N-1 vector
    for a single point) together with the total density.
    """

    q         : np.ndarray
    rho_total : np.ndarray


#######################################################################
#                           Helper Functions                          #
#######################################################################

def _checkDenominator(denominator: np.ndarray, params: MixtureParams,
                      name: str) -> None:
    smallest = float(np.min(denominator))
    if smallest < params.density_floor:
        raise DegenerateStateException(f'{name} = {smallest:.3e} below the '
                                       f'density floor '
                                       f'{params.density_floor:.1e}.')
    if smallest < params.density_warning:
        logger.warning(f'{name} = {smallest:.3e} below the warning '
                       f'threshold {params.density_warning:.1e}.')


def _values(state: Union[DensityField, np.ndarray]) -> np.ndarray:
    return state.values if isinstance(state, DensityField) else \
               np.asarray(state, dtype=float)


def _requirePositive(rho: np.ndarray) -> None:
    if np.any(rho <= 0.0):
        raise DomainException('Strictly positive densities required.')


def potentialPrefactors(params: MixtureParams) -> np.ndarray:
    "Prefactors gamma_i / ((gamma_i - 1) m_i) of the entropy potentials."
    gamma = np.asarray(params.gamma)
    return gamma / ((gamma - 1.0) * np.asarray(params.molar_mass))


#######################################################################
#                               Fluxes                                #
#######################################################################

def fluxCompute(state: DensityField, params: MixtureParams,
                derivative: Derivative) -> FluxField:
    """
    Diffusion fluxes F_i = p_i' - (rho_i / rho^(1)) p^(1)' for the diffusive
    components i < n_diffusive, where rho^(1) and p^(1) sum the diffusive
    components only; F_i = 0 for the remaining components. Undershoots below
    zero enter the pressure through |rho_i|.

    :param state: densities.
    :type state: DensityField
    :param params: mixture parameters.
    :type params: MixtureParams
    :param derivative: spatial derivative operator.
    :type derivative: Callable[[np.ndarray], np.ndarray]
    :raises reactmix.reactmix.DegenerateStateException: if rho^(1) falls below the density floor.
    :returns: the fluxes.
    """
    rho = state.values
    n1 = params.n_diffusive
    flux = np.zeros_like(rho)
    if n1 == 1:
        return FluxField(flux)
    rho1 = rho[:n1].sum(axis=0)
    _checkDenominator(rho1, params, 'Diffusive density')
    dp = np.array([derivative(pressurePartial(np.abs(rho[i]), params.gamma[i],
                                              params.molar_mass[i]))
                   for i in range(n1)])
    dp1 = dp.sum(axis=0)
    flux[:n1] = dp - rho[:n1] / rho1 * dp1
    return FluxField(flux)


def pressureDelta(rho: np.ndarray, gamma: float, m: float,
                  delta: float) -> np.ndarray:
    """
    Truncated pressure p^delta(rho) = (gamma/m) int_0^rho min(|w|,1/delta)^(gamma-1) dw.
    Agrees with rho^gamma/m for 0 <= rho <= 1/delta and grows linearly beyond;
    odd in rho.

    :param rho: densities, possibly signed.
    :param gamma: adiabatic exponent.
    :param m: molar mass.
    :param delta: truncation parameter, > 0.
    :returns: truncated pressure.
    """
    cap = 1.0 / delta
    a = np.abs(rho)
    inner = np.power(np.minimum(a, cap), gamma)
    outer = gamma * cap ** (gamma - 1.0) * np.maximum(a - cap, 0.0)
    return np.sign(rho) * (inner + outer) / m


def fluxComputeDelta(state: DensityField, params: MixtureParams,
                     derivative: Derivative) -> FluxField:
    """
    Truncated fluxes F_i^delta = p_i^delta(rho_i)' - (rt_i / rt) p^delta'
    with rt_i = min(|rho_i|, 1/delta) and rt the sum over the diffusive
    components.

    :param state: densities, may touch zero.
    :type state: DensityField
    :param params: mixture parameters with delta > 0.
    :type params: MixtureParams
    :param derivative: spatial derivative operator.
    :type derivative: Callable[[np.ndarray], np.ndarray]
    :raises reactmix.reactmix.DomainException: if delta is not positive.
    :raises reactmix.reactmix.DegenerateStateException: if rt falls below the density floor.
    :returns: the truncated fluxes.
    """
    if not params.delta > 0.0:
        raise DomainException('Truncated fluxes require delta > 0.')
    rho = state.values
    n1 = params.n_diffusive
    flux = np.zeros_like(rho)
    if n1 == 1:
        return FluxField(flux)
    rt = np.minimum(np.abs(rho[:n1]), 1.0 / params.delta)
    rt_total = rt.sum(axis=0)
    _checkDenominator(rt_total, params, 'Truncated diffusive density')
    dp = np.array([derivative(pressureDelta(rho[i], params.gamma[i],
                                            params.molar_mass[i],
                                            params.delta))
                   for i in range(n1)])
    flux[:n1] = dp - rt / rt_total * dp.sum(axis=0)
    return FluxField(flux)


def entropyFluxIdentityResidual(state: DensityField, flux: FluxField,
                                params: MixtureParams,
                                derivative: Derivative) -> np.ndarray:
    """
    Pointwise defect of the flux-entropy identity
    sum_i gamma_i/((gamma_i-1) m_i) (rho_i^(gamma_i-1))' F_i = sum_i F_i^2/rho_i
    over the diffusive components.

    :param state: strictly positive densities.
    :type state: DensityField
    :param flux: fluxes from *fluxCompute*.
    :type flux: FluxField
    :param params: mixture parameters.
    :type params: MixtureParams
    :param derivative: spatial derivative operator.
    :type derivative: Callable[[np.ndarray], np.ndarray]
    :raises reactmix.reactmix.DegenerateStateException: on non-positive densities.
    :returns: left-hand side minus right-hand side, M samples.
    """
    n1 = params.n_diffusive
    rho = state.values[:n1]
    if np.any(rho <= 0.0):
        raise DegenerateStateException('Flux-entropy identity needs strictly '
                                       'positive densities.')
    c = potentialPrefactors(params)[:n1]
    lhs = sum(c[i] * derivative(rho[i] ** (params.gamma[i] - 1.0)) *
              flux.values[i] for i in range(n1))
    return lhs - entropyDissipation(state, flux, params)


def entropyDissipation(state: DensityField, flux: FluxField,
                       params: MixtureParams) -> np.ndarray:
    "Pointwise sum_i F_i^2 / rho_i over the diffusive components."
    n1 = params.n_diffusive
    return (flux.values[:n1] ** 2 / state.values[:n1]).sum(axis=0)


#######################################################################
#                     Matrices C-tilde and B                          #
#######################################################################

def matrixCTilde(rho_point: np.ndarray) -> np.ndarray:
    """
    Symmetric N x N matrix with diagonal (rho_i/rho) sum_{k != i} rho_k and
    off-diagonal entries -rho_i rho_j / rho. Its rows sum to zero.

    :param rho_point: N strictly positive densities at one point.
    :type rho_point: np.ndarray
    :raises reactmix.reactmix.DomainException: on non-positive densities.
    :returns: the matrix.
    """
    rho = np.asarray(rho_point, dtype=float)
    _requirePositive(rho)
    total = rho.sum()
    c = -np.outer(rho, rho) / total
    np.fill_diagonal(c, rho * (total - rho) / total)
    return c


def matrixB(rho_point: np.ndarray) -> np.ndarray:
    """
    (N-1) x (N-1) matrix expressing the fluxes in the entropy variables,
    F_i = sum_j b_ij q_j', with b_ij = -(rho_i/rho) sum_{k<=j} rho_k for j < i
    and b_ij = (rho_i/rho) sum_{k>j} rho_k for j >= i.

    Setting REACTMIX_MUTATION=b-sign flips the sign of the strictly lower
    triangle; the det-B invariant of the property suite must catch it.

    :param rho_point: N strictly positive densities at one point.
    :type rho_point: np.ndarray
    :raises reactmix.reactmix.DomainException: on non-positive densities.
    :returns: the matrix B.
    """
    rho = np.asarray(rho_point, dtype=float)
    _requirePositive(rho)
    total = rho.sum()
    n = rho.size - 1
    head = np.cumsum(rho)[:n]
    i, j = np.indices((n, n))
    lower = -1.0 if os.environ.get('REACTMIX_MUTATION') == 'b-sign' else 1.0
    b = np.where(j < i, -lower * head[j], total - head[j])
    return rho[:n, None] / total * b


def detBClosedForm(rho_point: np.ndarray) -> float:
    """
    Closed-form determinant of B, rho_1 ... rho_N / rho.

    :param rho_point: N strictly positive densities at one point.
    :type rho_point: np.ndarray
    :raises reactmix.reactmix.DomainException: on non-positive densities.
    :returns: det B.
    """
    rho = np.asarray(rho_point, dtype=float)
    _requirePositive(rho)
    return float(np.prod(rho) / rho.sum())


#######################################################################
#                          Entropy Variables                          #
#######################################################################

def entropyPotentials(state: Union[DensityField, np.ndarray],
                      params: MixtureParams) -> np.ndarray:
    "phi_i = gamma_i/((gamma_i-1) m_i) rho_i^(gamma_i-1), first axis indexes i."
    rho = _values(state)
    c = potentialPrefactors(params)
    gamma = np.asarray(params.gamma)
    shape = (-1,) + (1,) * (rho.ndim - 1)
    return c.reshape(shape) * np.power(rho, (gamma - 1.0).reshape(shape))


def qFromRho(state: Union[DensityField, np.ndarray],
             params: MixtureParams) -> EntropyVars:
    """
    Map G: densities to entropy variables q_i = phi_i - phi_{i+1} and the
    total density.

    :param state: non-negative densities, a field or a single N-vector.
    :param params: mixture parameters.
    :type params: MixtureParams
    :returns: the entropy variables.
    """
    rho = _values(state)
    phi = entropyPotentials(rho, params)
    return EntropyVars(phi[:-1] - phi[1:], rho.sum(axis=0))


def fluxFromEntropy(state: DensityField, params: MixtureParams,
                    derivative: Derivative) -> np.ndarray:
    """
    Fluxes F_1..F_{N-1} rebuilt as sum_j b_ij q_j' from the entropy
    variables, for the case that all components diffuse.

    :param state: strictly positive densities.
    :type state: DensityField
    :param params: mixture parameters.
    :type params: MixtureParams
    :param derivative: spatial derivative operator.
    :type derivative: Callable[[np.ndarray], np.ndarray]
    :returns: (N-1) x M array.
    """
    dq = np.array([derivative(q) for q in qFromRho(state, params).q])
    rho = state.values
    out = np.empty_like(dq)
    for m in range(state.grid_size):
        out[:, m] = matrixB(rho[:, m]) @ dq[:, m]
    return out


def detDGClosedForm(rho_point: np.ndarray, params: MixtureParams) -> float:
    """
    Closed-form Jacobian determinant of G, sum_i prod_{j != i} a_j with
    a_i = (gamma_i/m_i) z_i^(gamma_i-2).

    :param rho_point: N strictly positive densities z.
    :type rho_point: np.ndarray
    :param params: mixture parameters.
    :type params: MixtureParams
    :raises reactmix.reactmix.DomainException: on non-positive densities.
    :returns: det DG(z) > 0.
    """
    z = np.asarray(rho_point, dtype=float)
    _requirePositive(z)
    a = _jacobianDiagonal(z, params)
    return float(sum(np.prod(np.delete(a, i)) for i in range(a.size)))


def _jacobianDiagonal(z: np.ndarray, params: MixtureParams) -> np.ndarray:
    gamma = np.asarray(params.gamma)
    return gamma / np.asarray(params.molar_mass) * z ** (gamma - 2.0)


def codomainBoundary(q: np.ndarray, params: MixtureParams) -> float:
    """
    The function g whose graph is the image of the boundary of the positive
    orthant. With the potentials rebuilt from q and shifted so that the
    smallest one vanishes (this selects the sector), g is the sum of the
    densities those potentials belong to.

    :param q: N-1 entropy variables at one point.
    :type q: np.ndarray
    :param params: mixture parameters.
    :type params: MixtureParams
    :returns: g(q).
    """
    phi = np.concatenate(([0.0], -np.cumsum(q)))
    phi -= phi.min()
    c = potentialPrefactors(params)
    alpha = np.asarray(params.gamma) - 1.0
    return float(np.sum((phi / c) ** (1.0 / alpha)))


def codomainMembership(evars: EntropyVars, params: MixtureParams) -> bool:
    """
    Does (q, rho) lie in the codomain {rho > g(q)} of G, at every point?

    :param evars: entropy variables, a single point or a field.
    :type evars: EntropyVars
    :param params: mixture parameters.
    :type params: MixtureParams
    :returns: *True* if every point lies in the codomain.
    """
    q = np.asarray(evars.q, dtype=float)
    rho = np.atleast_1d(evars.rho_total)
    q = q.reshape(q.shape[0], -1)
    return all(rho[m] > codomainBoundary(q[:, m], params)
               for m in range(rho.size))


#######################################################################
#                          Inverse of the Map G                       #
#######################################################################

NEWTON_MAX_ITER = 100
NEWTON_TOL      = 1e-12
NEWTON_STEP_TOL = 1e-13
MAX_HALVINGS    = 60
MAX_REFINEMENTS = 8

def _newtonStep(z: np.ndarray, res: np.ndarray,
                params: MixtureParams) -> np.ndarray:
    n = z.size
    a = _jacobianDiagonal(z, params)
    jac = np.zeros((n, n))
    idx = np.arange(n - 1)
    jac[idx, idx] = a[:-1]
    jac[idx, idx + 1] = -a[1:]
    jac[-1] = 1.0
    return np.linalg.solve(jac, -res)


def invertPoint(q: np.ndarray, rho: float, params: MixtureParams,
                max_iter: int = NEWTON_MAX_ITER) -> np.ndarray:
    """
    Solve G(z) = (q, rho) for z > 0 at a single point by damped Newton
    iteration from z_i = rho/N. Steps are halved until all iterates stay
    strictly positive and the residual norm decreases. Once the residual is
    below 1e-12*(1+|rho|), full Newton steps polish the iterate until no
    component moves by more than 1e-13 of its value.

    :param q: N-1 entropy variables.
    :type q: np.ndarray
    :param rho: total density.
    :type rho: float
    :param params: mixture parameters.
    :type params: MixtureParams
    :param max_iter: maximum number of Newton iterations.
    :type max_iter: int
    :raises reactmix.reactmix.NonMembershipException: if rho <= g(q).
    :raises reactmix.reactmix.ConvergenceException: if Newton fails.
    :returns: N strictly positive densities.
    """
    q = np.asarray(q, dtype=float)
    g = codomainBoundary(q, params)
    if not rho > g:
        raise NonMembershipException(f'rho={rho:.6g} <= g(q)={g:.6g}.')
    n = q.size + 1
    target = np.append(q, rho)
    scale = NEWTON_TOL * (1.0 + abs(rho))
    c = potentialPrefactors(params)
    alpha = np.asarray(params.gamma) - 1.0

    def residual(z: np.ndarray) -> np.ndarray:
        phi = c * z ** alpha
        return np.append(phi[:-1] - phi[1:], z.sum()) - target

    z = np.full(n, rho / n)
    res = residual(z)
    for iteration in range(max_iter):
        if np.max(np.abs(res)) <= scale:
            logger.debug(f'Newton converged in {iteration} iterations.')
            return _polish(z, res, residual, params)
        step = _newtonStep(z, res, params)
        norm = np.linalg.norm(res)
        lam = 1.0
        for _ in range(MAX_HALVINGS):
            trial = z + lam * step
            if np.all(trial > 0.0):
                trial_res = residual(trial)
                if np.linalg.norm(trial_res) < norm:
                    break
            lam *= 0.5
        else:
            raise ConvergenceException(f'Line search failed at iteration '
                                       f'{iteration}, |res|={norm:.3e}.')
        z, res = trial, trial_res
    if np.max(np.abs(res)) <= scale:
        return _polish(z, res, residual, params)
    raise ConvergenceException(f'No convergence after {max_iter} iterations, '
                               f'|res|={np.max(np.abs(res)):.3e}.')


def _polish(z: np.ndarray, res: np.ndarray,
            residual: Callable[[np.ndarray], np.ndarray],
            params: MixtureParams) -> np.ndarray:
    # full steps only; stop once the relative correction is at roundoff
    # level or stops shrinking
    last = np.inf
    for _ in range(MAX_REFINEMENTS):
        step = _newtonStep(z, res, params)
        rel = float(np.max(np.abs(step) / z))
        if rel <= NEWTON_STEP_TOL or rel >= last:
            break
        trial = z + step
        if not np.all(trial > 0.0):
            break
        z, res, last = trial, residual(trial), rel
    return z


def rhoFromQ(evars: EntropyVars, params: MixtureParams,
             time: float = 0.0) -> DensityField:
    """
    Inverse of G on a field, point by point.

    :param evars: entropy variables on M points.
    :type evars: EntropyVars
    :param params: mixture parameters.
    :type params: MixtureParams
    :param time: time stamp of the returned field.
    :type time: float
    :raises reactmix.reactmix.NonMembershipException: if a point lies outside the codomain.
    :raises reactmix.reactmix.ConvergenceException: if Newton fails at a point.
    :returns: strictly positive densities.
    """
    q = np.asarray(evars.q, dtype=float)
    rho = np.asarray(evars.rho_total, dtype=float)
    values = np.array([invertPoint(q[:, m], rho[m], params)
                       for m in range(rho.size)]).T
    return DensityField(values, time)
