"""
Method of lines for the regularized mixture system on the periodic grid:

    d rho_i/dt = -(rho_i u)' + (F_i^delta)' - delta rt^(beta-2) rho_i
                 + omega_i(rho^delta) + epsilon rho_i''

with u slaved to the pressure through the Stokes solve at every stage.
"""

import logging
from dataclasses import dataclass
from typing import Callable, Optional, Tuple, Union

import numpy as np

from .mixture import DensityField, MixtureParams, ReactionNetwork, \
                     pressurePartial, omegaExtended, truncateDensity
from .fluxes import fluxCompute, fluxComputeDelta
from .spectral import SpectralGrid, stokesSolve
from .reactmix import ConfigException, BlowUpException

logger = logging.getLogger(__name__)


#######################################################################
#                            Initial Data                             #
#######################################################################

@dataclass(frozen=True)
class InitialProfile:
    """
    Initial density of one component: 'constant' (*mean*), 'sinusoidal'
    (*mean* + *amplitude* sin(2 pi *mode* x + *phase*)) or 'tabulated'
    (*values* sampled at the M grid points).

    :raises reactmix.reactmix.ConfigException: on an unknown kind.
    """

    kind      : str = 'constant'
    mean      : float = 1.0
    amplitude : float = 0.0
    mode      : int = 1
    phase     : float = 0.0
    values    : Tuple[float, ...] = ()

    KINDS = ('constant', 'sinusoidal', 'tabulated')

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ConfigException(f"Unknown initial profile '{self.kind}', "
                                  f"expected one of {', '.join(self.KINDS)}.")
        object.__setattr__(self, 'values', tuple(float(v)
                                                 for v in self.values))

    def evaluate(self, grid: SpectralGrid) -> np.ndarray:
        """
        Sample the profile on *grid*.

        :raises reactmix.reactmix.ConfigException: if a tabulated profile has the wrong length.
        """
        if self.kind == 'constant':
            return np.full(grid.size, float(self.mean))
        if self.kind == 'sinusoidal':
            return self.mean + self.amplitude * \
                       np.sin(2.0 * np.pi * self.mode * grid.nodes + self.phase)
        if len(self.values) != grid.size:
            raise ConfigException(f'Tabulated profile has {len(self.values)} '
                                  f'values, grid has {grid.size} points.')
        return np.array(self.values)


#######################################################################
#                               SimConfig                             #
#######################################################################

@dataclass(frozen=True)
class SimConfig:
    """
    Everything that determines a run. Two runs with equal configurations
    produce bitwise-identical results.

    :raises reactmix.reactmix.ConfigException: if a field is out of range.
    """

    grid               : SpectralGrid
    params             : MixtureParams
    network            : Optional[ReactionNetwork]
    t_end              : float
    dt_max             : float
    initial_data       : Tuple[InitialProfile, ...]
    cfl_safety         : float = 0.4
    dealias            : bool = True
    diagnostics_every  : int = 10
    h_values           : Tuple[float, ...] = (1e-2, 1e-3)
    energy_tolerance   : float = 1e-6
    divu_fraction      : float = 0.9
    snapshot_every     : int = 0
    snapshot_compression: str = ''
    blowup_factor      : float = 1e6

    def __post_init__(self):
        object.__setattr__(self, 'initial_data', tuple(self.initial_data))
        object.__setattr__(self, 'h_values',
                           tuple(float(h) for h in self.h_values))
        if self.t_end < 0.0:
            raise ConfigException(f'time.t_end={self.t_end} must be >= 0.')
        if not self.dt_max > 0.0:
            raise ConfigException(f'time.dt_max={self.dt_max} must be > 0.')
        if not 0.0 < self.cfl_safety <= 1.0:
            raise ConfigException(f'time.cfl_safety={self.cfl_safety} must '
                                  'be in (0,1].')
        if len(self.initial_data) != self.params.n_components:
            raise ConfigException(f'{len(self.initial_data)} initial '
                                  f'profiles for {self.params.n_components} '
                                  'components.')
        if self.diagnostics_every < 1:
            raise ConfigException('diagnostics.every must be >= 1.')
        if self.snapshot_every < 0:
            raise ConfigException('snapshots.every must be >= 0.')
        if not self.blowup_factor > 0.0:
            raise ConfigException(f'time.blowup_factor={self.blowup_factor} '
                                  'must be > 0.')
        if self.network is not None:
            self.network.checkSpecies(self.params.n_components)

    def initialState(self) -> DensityField:
        "Densities at t = 0."
        return DensityField(np.array([p.evaluate(self.grid)
                                      for p in self.initial_data]), 0.0)


#######################################################################
#                            Right-Hand Side                          #
#######################################################################

@dataclass
class RhsTerms:
    """
    The separate contributions to d rho/dt at one state, each N x M, plus
    the fields they were computed from.
    """

    transport   : np.ndarray
    flux        : np.ndarray
    damping     : np.ndarray
    reaction    : np.ndarray
    smoothing   : np.ndarray
    rho         : np.ndarray
    "the state itself"
    velocity    : np.ndarray
    pressure    : np.ndarray
    flux_field  : np.ndarray
    "F_i before dealiasing"
    rho_tilde   : np.ndarray
    "sum_k |rho_k|"

    def total(self) -> np.ndarray:
        return self.transport + self.flux + self.damping + self.reaction + \
               self.smoothing


def stagePressure(rho: np.ndarray, params: MixtureParams) -> np.ndarray:
    "Total pressure of possibly signed stage values, through |rho_i|."
    return sum(pressurePartial(np.abs(rho[i]), params.gamma[i],
                               params.molar_mass[i])
               for i in range(params.n_components))


def speciesRhsTerms(state: Union[DensityField, np.ndarray],
                    config: SimConfig) -> RhsTerms:
    """
    Evaluate all terms of the right-hand side. Non-diffusive components get
    no flux term. With delta = 0 the untruncated fluxes and rates are used;
    with epsilon = 0 the smoothing term vanishes.

    :param state: densities, a field or a raw N x M stage array.
    :param config: run configuration.
    :type config: SimConfig
    :raises reactmix.reactmix.DegenerateStateException: if the flux denominator degenerates.
    :returns: the separate terms.
    """
    rho = state.values if isinstance(state, DensityField) else state
    params, grid = config.params, config.grid
    filt = grid.dealias if config.dealias else (lambda f: f)
    D = grid.derivative

    pressure = stagePressure(rho, params)
    velocity = stokesSolve(pressure, params, grid)
    transport = -np.array([D(filt(r * velocity)) for r in rho])

    field_ = state if isinstance(state, DensityField) else DensityField(rho)
    if params.delta > 0.0:
        flux_field = fluxComputeDelta(field_, params, D).values
    else:
        flux_field = fluxCompute(field_, params, D).values
    flux = np.zeros_like(rho)
    for i in range(params.n_diffusive):
        flux[i] = D(filt(flux_field[i]))

    rho_tilde = np.abs(rho).sum(axis=0)
    if params.delta > 0.0:
        damping = -params.delta * rho_tilde ** (params.beta - 2.0) * rho
    else:
        damping = np.zeros_like(rho)

    reaction = omegaExtended(truncateDensity(rho, params.delta),
                             config.network)

    if params.epsilon > 0.0:
        smoothing = params.epsilon * np.array([D(r, order=2) for r in rho])
    else:
        smoothing = np.zeros_like(rho)

    return RhsTerms(transport, flux, damping, reaction, smoothing,
                    np.asarray(rho), velocity, pressure, flux_field,
                    rho_tilde)


def speciesRhs(state: Union[DensityField, np.ndarray],
               config: SimConfig) -> np.ndarray:
    """
    Right-hand side d rho/dt as an N x M array.

    :param state: densities.
    :param config: run configuration.
    :type config: SimConfig
    :raises reactmix.reactmix.DegenerateStateException: if the flux denominator degenerates.
    :returns: time derivative of the densities.
    """
    return speciesRhsTerms(state, config).total()


#######################################################################
#                              Time Step                              #
#######################################################################

def cflDt(state: DensityField, config: SimConfig,
          velocity: Optional[np.ndarray] = None) -> float:
    """
    Stable time step. With dx = 1/M the candidates are dx/max|u| (transport),
    dx^2/(2 D_max) with D_max = 2 max_{i,x} gamma_i |rho_i|^(gamma_i-1)/m_i
    + epsilon (diffusion) and 1/omega_scale (reaction and damping); the
    smallest active one is scaled by *cfl_safety*. The result never exceeds
    *dt_max*.

    :param state: densities.
    :type state: DensityField
    :param config: run configuration.
    :type config: SimConfig
    :param velocity: velocity of *state* if already known.
    :type velocity: Optional[np.ndarray]
    :returns: a positive, finite time step.
    """
    params, grid = config.params, config.grid
    rho = np.abs(state.values)
    if velocity is None:
        velocity = stokesSolve(stagePressure(rho, params), params, grid)
    bounds = []

    umax = float(np.max(np.abs(velocity)))
    if umax > 0.0:
        bounds.append(grid.dx / umax)

    d_max = params.epsilon
    if params.n_diffusive > 1:
        d_max += 2.0 * max(float(np.max(params.gamma[i] *
                                        rho[i] ** (params.gamma[i] - 1.0) /
                                        params.molar_mass[i]))
                           for i in range(params.n_diffusive))
    if d_max > 0.0:
        bounds.append(grid.dx ** 2 / (2.0 * d_max))

    rho_max = float(np.max(rho))
    omega_scale = 0.0
    if rho_max > 0.0:
        omega = omegaExtended(truncateDensity(state, params.delta),
                              config.network)
        omega_scale = float(np.max(np.abs(omega))) / rho_max
        if params.delta > 0.0:
            omega_scale += params.delta * \
                           float(np.max(rho.sum(axis=0))) ** (params.beta - 2.0)
    if omega_scale > 0.0:
        bounds.append(1.0 / omega_scale)

    if not bounds:
        return config.dt_max
    return min(config.cfl_safety * min(bounds), config.dt_max)


RK4_WEIGHTS = (1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0)

Observer = Callable[[RhsTerms, float], None]

def _checkStage(values: np.ndarray, limit: Optional[float],
                time: float) -> None:
    if not np.all(np.isfinite(values)):
        raise BlowUpException(f'Non-finite density near t={time:.6g}.')
    if limit is not None:
        peak = float(np.max(np.abs(values)))
        if peak > limit:
            raise BlowUpException(f'Density {peak:.3e} exceeds blow-up limit '
                                  f'{limit:.3e} near t={time:.6g}.')


def stepRk4(state: DensityField, config: SimConfig, dt: float,
            observer: Optional[Observer] = None,
            limit: Optional[float] = None) -> DensityField:
    """
    One classical four-stage Runge-Kutta step. The velocity is recomputed
    from the pressure at every stage.

    :param state: densities at time t.
    :type state: DensityField
    :param config: run configuration.
    :type config: SimConfig
    :param dt: time step, normally from *cflDt*.
    :type dt: float
    :param observer: called with the terms and the quadrature weight of each
                     stage, in stage order; stage-weighted sums of any
                     quantity are then integrated to fourth order.
    :type observer: Optional[Callable[[RhsTerms, float], None]]
    :param limit: abort when a density exceeds this magnitude.
    :type limit: Optional[float]
    :raises reactmix.reactmix.BlowUpException: on non-finite or too large densities.
    :raises reactmix.reactmix.DegenerateStateException: if a flux denominator degenerates.
    :returns: densities at time t + dt.
    """
    y0 = state.values
    stages = (0.0, 0.5, 0.5, 1.0)
    increment = np.zeros_like(y0)
    k = None
    for fraction, weight in zip(stages, RK4_WEIGHTS):
        y = y0 if k is None else y0 + fraction * dt * k
        _checkStage(y, limit, state.time + fraction * dt)
        terms = speciesRhsTerms(y, config)
        if observer is not None:
            observer(terms, weight)
        k = terms.total()
        increment += weight * k
    y1 = y0 + dt * increment
    _checkStage(y1, limit, state.time + dt)

    if config.params.positivity_floor and np.any(y1 < 0.0):
        created = float(-np.minimum(y1, 0.0).mean(axis=1).sum())
        y1 = np.maximum(y1, 0.0)
        logger.warning(f'Positivity clamp at t={state.time + dt:.6g} added '
                       f'mass {created:.3e}.')
    return DensityField(y1, state.time + dt)
