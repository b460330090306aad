import logging, math
from dataclasses import dataclass, field
from typing import Optional, Tuple, Union

import numpy as np

from .reactmix import MixtureException, DomainException

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]


#######################################################################
#                            MixtureParams                            #
#######################################################################

@dataclass(frozen=True)
class MixtureParams:
    """
    Physical constants of an N-component mixture for a whole run. Instances
    are immutable; *__post_init__* validates the structural hypotheses.

    :raises reactmix.reactmix.MixtureException: if a hypothesis is violated.
    """

    gamma        : Tuple[float, ...]
    "adiabatic exponents, one per component, all > 1"

    molar_mass   : Tuple[float, ...]
    "molar masses, one per component, all > 0"

    n_diffusive  : Optional[int] = None
    "components 0..n_diffusive-1 diffuse; defaults to all components"

    mu           : float = 1.0
    "shear viscosity"

    lam          : float = 0.0
    "bulk viscosity parameter lambda"

    epsilon      : float = 0.0
    "parabolic regularization"

    delta        : float = 0.0
    "truncation and damping parameter"

    beta         : float = 6.0
    "damping exponent"

    density_floor: float = 1e-300
    "denominators below this value are degenerate"

    density_warning: float = 1e-12
    "denominators below this value are logged"

    positivity_floor: bool = False
    "clamp negative densities at 0 after each step"

    def __post_init__(self):
        object.__setattr__(self, 'gamma', tuple(float(g) for g in self.gamma))
        object.__setattr__(self, 'molar_mass',
                           tuple(float(m) for m in self.molar_mass))
        n = len(self.gamma)
        if self.n_diffusive is None:
            object.__setattr__(self, 'n_diffusive', n)
        if n < 2:
            raise MixtureException(f'At least 2 components required, got {n}.')
        if len(self.molar_mass) != n:
            raise MixtureException(f'{len(self.molar_mass)} molar masses for '
                                   f'{n} components.')
        if not 1 <= self.n_diffusive <= n:
            raise MixtureException(f'n_diffusive={self.n_diffusive} must be '
                                   f'in 1..{n}.')
        if any(not g > 1.0 for g in self.gamma):
            raise MixtureException(f'All exponents must be > 1: {self.gamma}.')
        if any(not m > 0.0 for m in self.molar_mass):
            raise MixtureException('All molar masses must be > 0: '
                                   f'{self.molar_mass}.')
        if not self.mu > 0.0:
            raise MixtureException(f'Viscosity mu={self.mu} must be > 0.')
        if not self.lam + 2.0 * self.mu / 3.0 > 0.0:
            raise MixtureException(f'lambda + 2/3 mu must be > 0, got '
                                   f'{self.lam + 2.0 * self.mu / 3.0}.')
        if self.epsilon < 0.0 or self.delta < 0.0:
            raise MixtureException('epsilon and delta must be >= 0.')

    @property
    def n_components(self) -> int:
        "Number of components N."
        return len(self.gamma)

    def gammaArray(self) -> np.ndarray:
        "Exponents as an (N, 1) array, broadcastable against N x M fields."
        return np.asarray(self.gamma)[:, None]

    def massArray(self) -> np.ndarray:
        "Molar masses as an (N, 1) array, broadcastable against N x M fields."
        return np.asarray(self.molar_mass)[:, None]

    def viscosity(self) -> float:
        "The 1-D Stokes coefficient 2 mu + lambda."
        return 2.0 * self.mu + self.lam


#######################################################################
#                           ReactionNetwork                           #
#######################################################################

@dataclass(frozen=True)
class ReactionNetwork:
    """
    A single irreversible reaction A_1 + ... + A_K -> C_1 + ... + C_L.
    Indices are 0-based. The product weights must add up to the sum of the
    reagent rates so that the production rates sum to zero.

    :raises reactmix.reactmix.MixtureException: if the network is invalid.
    """

    reagents    : Tuple[int, ...]
    products    : Tuple[int, ...]
    alpha       : Tuple[float, ...]
    "rate coefficient per reagent"
    prod_weight : Tuple[float, ...]
    "weight per product"

    SUM_TOLERANCE = 1e-12

    def __post_init__(self):
        for name in ('reagents', 'products'):
            object.__setattr__(self, name,
                               tuple(int(i) for i in getattr(self, name)))
        for name in ('alpha', 'prod_weight'):
            object.__setattr__(self, name,
                               tuple(float(v) for v in getattr(self, name)))
        if not self.reagents or not self.products:
            raise MixtureException('Reagent and product sets must be '
                                   'nonempty.')
        if set(self.reagents) & set(self.products):
            raise MixtureException(f'Reagents {self.reagents} and products '
                                   f'{self.products} are not disjoint.')
        if len(set(self.reagents)) != len(self.reagents) or \
           len(set(self.products)) != len(self.products):
            raise MixtureException('Duplicate species in reaction network.')
        if len(self.alpha) != len(self.reagents) or \
           len(self.prod_weight) != len(self.products):
            raise MixtureException('One coefficient per reagent and product '
                                   'required.')
        if any(not a > 0.0 for a in self.alpha) or \
           any(not b > 0.0 for b in self.prod_weight):
            raise MixtureException('Rate coefficients and product weights '
                                   'must be > 0.')
        if not math.isclose(sum(self.alpha), sum(self.prod_weight),
                            rel_tol=self.SUM_TOLERANCE):
            raise MixtureException(f'Product weights sum to '
                                   f'{sum(self.prod_weight)} but reagent '
                                   f'rates sum to {sum(self.alpha)}.')

    def checkSpecies(self, n_components: int) -> None:
        """
        Make sure that all indices refer to one of *n_components* species.

        :param n_components: number of components N.
        :type n_components: int
        :raises reactmix.reactmix.MixtureException: on an out-of-range index.
        """
        for i in self.reagents + self.products:
            if not 0 <= i < n_components:
                raise MixtureException(f'Species index {i} out of range for '
                                       f'{n_components} components.')


#######################################################################
#                             DensityField                            #
#######################################################################

@dataclass(frozen=True)
class DensityField:
    """
    N density fields on M collocation points of the periodic domain [0,1) at
    time *time*. The array is copied and made read-only so that snapshots can
    be handed to diagnostics while integration continues.

    :raises reactmix.reactmix.DomainException: if a value is not finite.
    """

    values: np.ndarray
    time  : float = 0.0

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 2:
            raise DomainException('Densities must be an N x M array, got '
                                  f'shape {values.shape}.')
        if not np.all(np.isfinite(values)):
            raise DomainException(f'Non-finite density at t={self.time}.')
        values.flags.writeable = False
        object.__setattr__(self, 'values', values)
        object.__setattr__(self, 'time', float(self.time))

    @property
    def n_components(self) -> int:
        return self.values.shape[0]

    @property
    def grid_size(self) -> int:
        return self.values.shape[1]

    def total(self) -> np.ndarray:
        "Total density rho = sum of all components."
        return self.values.sum(axis=0)

    def masses(self) -> np.ndarray:
        "Component masses by the mean-value quadrature on [0,1)."
        return self.values.mean(axis=1)


#######################################################################
#                           Gamma Condition                           #
#######################################################################

def validateGammaCondition(params: MixtureParams,
                           network: Optional[ReactionNetwork]) -> bool:
    """
    Check the exponent condition 2 gamma_max < 3 gamma_min - gamma_S + 1 with
    gamma_S the largest exponent among the products. Without a reaction the
    product term drops out (gamma_S = 1). A violation is logged as a warning;
    the scheme still runs.

    :param params: mixture parameters.
    :type params: MixtureParams
    :param network: reaction network or *None*.
    :type network: Optional[ReactionNetwork]
    :returns: *True* if the condition holds.
    """
    gamma_max = max(params.gamma)
    gamma_min = min(params.gamma)
    gamma_s = 1.0 if network is None else \
                  max(params.gamma[c] for c in network.products)
    ok = 2.0 * gamma_max < 3.0 * gamma_min - gamma_s + 1.0
    if not ok:
        logger.warning(f'Exponent condition violated: 2*{gamma_max} >= '
                       f'3*{gamma_min} - {gamma_s} + 1.')
    return ok


#######################################################################
#                             Pressure Law                            #
#######################################################################

def pressurePartial(rho: ArrayLike, gamma: float, m: float) -> ArrayLike:
    """
    Partial pressure p_i(rho) = rho^gamma / m.

    :param rho: non-negative density, scalar or array.
    :param gamma: adiabatic exponent.
    :param m: molar mass.
    :raises reactmix.reactmix.DomainException: on a negative density.
    :returns: partial pressure, same shape as *rho*.
    """
    if np.any(np.asarray(rho) < 0.0):
        raise DomainException('Negative density passed to the pressure law.')
    return np.power(rho, gamma) / m


def pressureTotal(state: DensityField, params: MixtureParams,
                  diffusive_only: bool = False) -> np.ndarray:
    """
    Total pressure p = sum_i p_i(rho_i) or, with *diffusive_only*, the
    pressure p^(1) of the diffusive components 0..n_diffusive-1.

    :param state: non-negative densities.
    :type state: DensityField
    :param params: mixture parameters.
    :type params: MixtureParams
    :param diffusive_only: sum over the diffusive components only.
    :type diffusive_only: bool
    :raises reactmix.reactmix.DomainException: on a negative density.
    :returns: pressure field of length M.
    """
    n = params.n_diffusive if diffusive_only else params.n_components
    p = np.zeros(state.grid_size)
    for i in range(n):
        p += pressurePartial(state.values[i], params.gamma[i],
                             params.molar_mass[i])
    return p


def pressureBounds(state: DensityField,
                   params: MixtureParams) -> Tuple[float, float]:
    """
    Slack of the two-sided bound c_low rho^gamma_min - N/max(m) <= p <=
    c_high N (rho^gamma_max + 1) on a state, with
    c_low = N^(1-gamma_min)/max(m) and c_high = 1/min(m). Both returned
    values are >= 0 whenever the bounds hold.

    :param state: non-negative densities.
    :type state: DensityField
    :param params: mixture parameters.
    :type params: MixtureParams
    :returns: (lower slack, upper slack), minimum over the grid.
    """
    gmin, gmax = min(params.gamma), max(params.gamma)
    n = params.n_components
    minv = 1.0 / max(params.molar_mass)
    c_low = minv * n ** (1.0 - gmin)
    c_high = 1.0 / min(params.molar_mass)
    rho = state.total()
    p = pressureTotal(state, params)
    lower = p - (c_low * rho ** gmin - minv * n)
    upper = c_high * n * (rho ** gmax + 1.0) - p
    return float(lower.min()), float(upper.min())


#######################################################################
#                            Reaction Rates                           #
#######################################################################

def _values(state: Union[DensityField, np.ndarray]) -> np.ndarray:
    return state.values if isinstance(state, DensityField) else \
               np.asarray(state, dtype=float)


def reactionRates(state: Union[DensityField, np.ndarray],
                  network: Optional[ReactionNetwork]) -> np.ndarray:
    """
    Production rates omega_i = -alpha_i prod_{j in R} rho_j for reagents,
    omega_c = beta_c prod_{j in R} rho_j for products, 0 otherwise.

    :param state: densities, a *DensityField* or an array whose first axis
                  indexes components.
    :param network: reaction network; *None* means no reaction.
    :type network: Optional[ReactionNetwork]
    :returns: rates, same shape as the densities.
    """
    rho = _values(state)
    omega = np.zeros_like(rho)
    if network is None:
        return omega
    rate = np.prod(rho[list(network.reagents)], axis=0)
    for i, a in zip(network.reagents, network.alpha):
        omega[i] = -a * rate
    for c, b in zip(network.products, network.prod_weight):
        omega[c] = b * rate
    return omega


def omegaExtended(state: Union[DensityField, np.ndarray],
                  network: Optional[ReactionNetwork]) -> np.ndarray:
    """
    Extension of the rates to signed densities: omega evaluated on the
    componentwise absolute values, and clipped at 0 from below wherever the
    component's own density is negative. Agrees with *reactionRates* on
    non-negative input.

    :param state: possibly signed densities.
    :param network: reaction network; *None* means no reaction.
    :type network: Optional[ReactionNetwork]
    :returns: rates, same shape as the densities.
    """
    rho = _values(state)
    omega = reactionRates(np.abs(rho), network)
    return np.where(rho < 0.0, np.maximum(omega, 0.0), omega)


def truncateDensity(state: Union[DensityField, np.ndarray],
                    delta: float) -> np.ndarray:
    """
    Truncation rho^delta = sgn(rho) min(|rho|, 1/delta); identity for
    delta = 0.

    :param state: possibly signed densities.
    :param delta: truncation parameter.
    :type delta: float
    :returns: truncated densities.
    """
    rho = _values(state)
    if delta <= 0.0:
        return rho.copy()
    return np.sign(rho) * np.minimum(np.abs(rho), 1.0 / delta)
