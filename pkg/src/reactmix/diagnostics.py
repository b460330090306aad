"""
Computable forms of the a-priori estimates: the energy balance, the
effective viscous flux, the positivity of div u at large densities, and the
compactness functional R_h with its log-Gronwall envelope.

All integrals over [0,1) use the mean-value quadrature, which is exact for
trigonometric polynomials below the Nyquist limit.
"""

import csv, json, logging, math
from dataclasses import dataclass, field, fields
from functools import lru_cache
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import quad, solve_ivp
from scipy.optimize import brentq

from .mixture import DensityField, MixtureParams
from .fluxes import potentialPrefactors
from .solver import RhsTerms, SimConfig, speciesRhsTerms
from .spectral import SpectralGrid
from .reactmix import DomainException

logger = logging.getLogger(__name__)


#######################################################################
#                           Energy Balance                            #
#######################################################################

def energyFunctional(state: DensityField, params: MixtureParams) -> float:
    """
    E = sum_i 1/((gamma_i-1) m_i) int rho_i^gamma_i dx. Undershoots below
    zero enter through |rho_i|.

    :param state: densities.
    :type state: DensityField
    :param params: mixture parameters.
    :type params: MixtureParams
    :returns: the energy.
    """
    gamma = params.gammaArray()
    weight = 1.0 / ((gamma - 1.0) * params.massArray())
    return float((weight * np.abs(state.values) ** gamma).mean(axis=1).sum())


@dataclass
class EnergyRates:
    """
    Rates in the energy balance dE/dt = reaction - viscous - flux - eps -
    delta. All dissipation rates are non-negative for non-negative states.
    *product_work* is the part of *reaction* contributed by the products.
    """

    viscous      : float = 0.0
    flux         : float = 0.0
    eps          : float = 0.0
    delta        : float = 0.0
    reaction     : float = 0.0
    product_work : float = 0.0

    def dissipation(self) -> float:
        return self.viscous + self.flux + self.eps + self.delta

    def net(self) -> float:
        "Dissipation minus reaction work, i.e. -dE/dt."
        return self.dissipation() - self.reaction

    def accumulate(self, other: 'EnergyRates', weight: float) -> None:
        for f in fields(self):
            setattr(self, f.name, getattr(self, f.name) +
                                  weight * getattr(other, f.name))


def _signedPower(rho: np.ndarray, exponent: np.ndarray) -> np.ndarray:
    return np.sign(rho) * np.abs(rho) ** exponent


def energyRates(terms: RhsTerms, config: SimConfig) -> EnergyRates:
    """
    Split the energy balance at one state into its rates.

    :param terms: right-hand side terms at the state.
    :type terms: RhsTerms
    :param config: run configuration.
    :type config: SimConfig
    :returns: the rates.
    """
    params, grid = config.params, config.grid
    rho = terms.rho
    gamma = params.gammaArray()
    mass = params.massArray()
    c = potentialPrefactors(params)[:, None]
    n1 = params.n_diffusive

    du = grid.derivative(terms.velocity)
    viscous = params.viscosity() * float(np.mean(du ** 2))

    denom = np.abs(rho[:n1])
    if params.delta > 0.0:
        denom = np.minimum(denom, 1.0 / params.delta)
    f2 = terms.flux_field[:n1] ** 2
    flux = float(np.divide(f2, denom, out=np.zeros_like(f2),
                           where=denom > 0.0).mean(axis=1).sum())

    eps = 0.0
    if params.epsilon > 0.0:
        grads = np.array([grid.derivative(r) for r in rho])
        eps = params.epsilon * float((gamma / mass *
                                      np.abs(rho) ** (gamma - 2.0) *
                                      grads ** 2).mean(axis=1).sum())

    delta = 0.0
    if params.delta > 0.0:
        delta = params.delta * float((c * terms.rho_tilde **
                                      (params.beta - 2.0) *
                                      np.abs(rho) ** gamma
                                      ).mean(axis=1).sum())

    work = (c * _signedPower(rho, gamma - 1.0) * terms.reaction).mean(axis=1)
    products = list(config.network.products) if config.network else []
    return EnergyRates(viscous, flux, eps, delta, float(work.sum()),
                       float(work[products].sum()))


def energyResidual(before: DensityField, after: DensityField, dt: float,
                   config: SimConfig,
                   rates: Optional[EnergyRates] = None) -> float:
    """
    Discrete defect of the energy balance over one step,
    R = (E(after) - E(before))/dt + dissipation - reaction work.
    Pass the stage-weighted *rates* tallied during the step to make R a
    fourth-order quantity; without them the rates at both ends are averaged.

    :param before: state at the start of the step.
    :type before: DensityField
    :param after: state at the end of the step.
    :type after: DensityField
    :param dt: the step, > 0.
    :type dt: float
    :param config: run configuration.
    :type config: SimConfig
    :param rates: stage-weighted rates of the step.
    :type rates: Optional[EnergyRates]
    :returns: the residual; positive values mean energy was created.
    """
    params = config.params
    if rates is None:
        rates = EnergyRates()
        for state in (before, after):
            rates.accumulate(energyRates(speciesRhsTerms(state, config),
                                         config), 0.5)
    change = energyFunctional(after, params) - \
             energyFunctional(before, params)
    return change / dt + rates.net()


#######################################################################
#                      Effective Viscous Flux                         #
#######################################################################

def effectiveViscousFluxResidual(pressure: np.ndarray, velocity: np.ndarray,
                                 params: MixtureParams,
                                 grid: SpectralGrid) -> float:
    """
    ||(2 mu + lambda) u' - (p - mean p)||_inf. On the periodic domain the
    harmonic part of the effective viscous flux vanishes, so this is the
    full residual. The Nyquist mode of p is left out: the velocity has none,
    and its amplitude is reported separately by *nyquistAmplitude*.

    :param pressure: pressure samples.
    :type pressure: np.ndarray
    :param velocity: velocity from *stokesSolve* on the same pressure.
    :type velocity: np.ndarray
    :param params: mixture parameters.
    :type params: MixtureParams
    :param grid: collocation grid.
    :type grid: SpectralGrid
    :returns: the residual.
    """
    evf = params.viscosity() * grid.derivative(velocity)
    resolved = grid.withoutNyquist(pressure)
    return float(np.max(np.abs(evf - (resolved - resolved.mean()))))


def momentumResidual(pressure: np.ndarray, velocity: np.ndarray,
                     params: MixtureParams, grid: SpectralGrid) -> float:
    "||(2 mu + lambda) u'' - p'||_inf."
    return float(np.max(np.abs(params.viscosity() *
                               grid.derivative(velocity, order=2) -
                               grid.derivative(pressure))))


def divuPositivityProbe(state: DensityField, velocity: np.ndarray,
                        grid: SpectralGrid,
                        threshold_fraction: float = 0.9) -> np.ndarray:
    """
    Grid indices where the total density exceeds *threshold_fraction* times
    its maximum but u' <= 0. At large densities u' should be positive, so
    the list is expected to be empty; it is reported, never asserted.

    :param state: densities.
    :type state: DensityField
    :param velocity: velocity of *state*.
    :type velocity: np.ndarray
    :param grid: collocation grid.
    :type grid: SpectralGrid
    :param threshold_fraction: fraction of the maximal total density.
    :type threshold_fraction: float
    :returns: indices of the violations.
    """
    rho = state.total()
    du = grid.derivative(velocity)
    probe = rho > threshold_fraction * rho.max()
    return np.flatnonzero(probe & (du <= 0.0))


#######################################################################
#                        Compactness Functional                       #
#######################################################################

INNER_RADIUS = 0.25
CUTOFF_RADIUS = 0.375
H_MAX = 0.125

def _checkH(h: float) -> None:
    if not 0.0 < h <= H_MAX:
        raise DomainException(f'Kernel width h={h} outside (0, {H_MAX}].')


def kernelValue(x: np.ndarray, h: float) -> np.ndarray:
    """
    K_h at the periodic distance r of *x* from 0: 1/(r+h) for r <= 1/4,
    blended to 0 on [1/4, 3/8] by the quintic smoothstep, and 0 beyond.

    :param x: positions.
    :param h: kernel width in (0, 1/8].
    :type h: float
    :raises reactmix.reactmix.DomainException: for h outside the range.
    :returns: kernel values, same shape as *x*.
    """
    _checkH(h)
    x = np.mod(np.asarray(x, dtype=float), 1.0)
    r = np.minimum(x, 1.0 - x)
    s = np.clip((r - INNER_RADIUS) / (CUTOFF_RADIUS - INNER_RADIUS), 0.0, 1.0)
    step = s ** 3 * (10.0 - 15.0 * s + 6.0 * s * s)
    return np.where(r <= INNER_RADIUS, 1.0 / (r + h),
                    (1.0 - step) / (INNER_RADIUS + h))


@lru_cache(maxsize=64)
def kernelNorm(h: float) -> float:
    """
    ||K_h||_1 by adaptive quadrature, to a relative tolerance near 1e-13.

    :param h: kernel width in (0, 1/8].
    :type h: float
    :raises reactmix.reactmix.DomainException: for h outside the range.
    :returns: the L1 norm over one period.
    """
    _checkH(h)
    K = lambda r: float(kernelValue(r, h))
    core, _ = quad(K, 0.0, INNER_RADIUS, epsabs=0.0, epsrel=1e-13,
                   limit=200, points=[min(h, INNER_RADIUS / 2)])
    tail, _ = quad(K, INNER_RADIUS, CUTOFF_RADIUS, epsabs=0.0, epsrel=1e-13,
                   limit=200)
    return 2.0 * (core + tail)


def kernelNormClosedForm(h: float) -> float:
    """
    ||K_h||_1 = 2 ln((1/4+h)/h) + 1/(8 (1/4+h)); the smoothstep averages 1/2
    over the blending interval.

    :raises reactmix.reactmix.DomainException: for h outside the range.
    """
    _checkH(h)
    return 2.0 * math.log((INNER_RADIUS + h) / h) + \
           (CUTOFF_RADIUS - INNER_RADIUS) / (INNER_RADIUS + h)


@dataclass(frozen=True)
class KernelFamily:
    """
    The kernels K_h for a list of widths.

    :raises reactmix.reactmix.DomainException: if a width is outside (0, 1/8].
    """

    h_values: Tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, 'h_values',
                           tuple(float(h) for h in self.h_values))
        for h in self.h_values:
            _checkH(h)

    def norms(self) -> Dict[float, float]:
        return {h: kernelNormClosedForm(h) for h in self.h_values}

    def logRatios(self) -> Dict[float, float]:
        "||K_h||_1 / |log h| per width; bounded above and below."
        return {h: n / abs(math.log(h)) for h, n in self.norms().items()}


def compactnessFunctional(values: np.ndarray, h: float) -> float:
    """
    R_h = (1/||K_h||_1) (1/M^2) sum_m sum_l K_h(x_m - x_l) (rho_m - rho_l)^2,
    evaluated as 2 (S/M) mean(rho^2) - 2 mean(rho (K * rho))/M with a
    spectral circular convolution; S is the sum of the sampled kernel. The
    field is centered first, which leaves R_h unchanged.

    :param values: M samples of one field.
    :type values: np.ndarray
    :param h: kernel width in (0, 1/8].
    :type h: float
    :raises reactmix.reactmix.DomainException: for h outside the range.
    :returns: R_h >= 0; exactly 0 for a constant field.
    """
    _checkH(h)
    values = np.asarray(values, dtype=float)
    if np.ptp(values) == 0.0:
        return 0.0
    size = values.size
    rho = values - values.mean()
    kvec = kernelValue(np.arange(size) / size, h)
    kvec[0] = 0.0
    conv = np.fft.irfft(np.fft.rfft(kvec) * np.fft.rfft(rho), n=size)
    r_h = 2.0 * (kvec.sum() / size * np.mean(rho * rho) -
                 np.mean(rho * conv) / size) / kernelNormClosedForm(h)
    return max(float(r_h), 0.0)


def compactnessFunctionalMixture(state: DensityField, h: float,
                                 params: MixtureParams) -> float:
    "sum_i (1/m_i) R_h(rho_i)."
    return sum(compactnessFunctional(state.values[i], h) /
               params.molar_mass[i] for i in range(state.n_components))


#######################################################################
#                        Log-Gronwall Envelope                        #
#######################################################################

def logGronwallEnvelope(x0: float, eps: float,
                        t_end: float) -> Callable[[np.ndarray], np.ndarray]:
    """
    Solution of z' = z (|ln z| + 1), z(0) = x0 + eps, on [0, t_end]. The
    equation is integrated for w = ln z, w' = |w| + 1, with an eighth-order
    Runge-Kutta method. While z < 1 it obeys z(t) <= e^t z(0)^(1-t).

    :param x0: initial value, >= 0.
    :type x0: float
    :param eps: offset, > 0.
    :type eps: float
    :param t_end: final time.
    :type t_end: float
    :raises reactmix.reactmix.DomainException: if x0 < 0 or eps <= 0.
    :returns: vectorized function t -> z(t), non-decreasing.
    """
    if x0 < 0.0 or not eps > 0.0:
        raise DomainException(f'Envelope needs x0 >= 0 and eps > 0, got '
                              f'x0={x0}, eps={eps}.')
    w0 = math.log(x0 + eps)
    if t_end <= 0.0:
        return lambda t: np.full_like(np.asarray(t, dtype=float), x0 + eps)
    sol = solve_ivp(lambda t, w: np.abs(w) + 1.0, (0.0, t_end), [w0],
                    method='DOP853', rtol=1e-12, atol=1e-14,
                    dense_output=True)
    return lambda t: np.exp(sol.sol(np.asarray(t, dtype=float))[0])


def fitEnvelopeOffset(times: Sequence[float], values: Sequence[float],
                      h: float) -> float:
    """
    Smallest C >= 0 such that the trajectory *values* stays below the
    log-Gronwall envelope started at values[0] + C/|log h|.

    :param times: increasing sample times, starting at 0.
    :param values: R_h at those times.
    :param h: kernel width in (0, 1/8].
    :type h: float
    :returns: the fitted offset C.
    """
    _checkH(h)
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    scale = abs(math.log(h))
    t_end = float(times[-1])

    def excess(c: float) -> float:
        z = logGronwallEnvelope(float(values[0]), max(c, 0.0) / scale +
                                np.finfo(float).tiny, t_end)
        return float(np.max(values - z(times)))

    if excess(0.0) <= 0.0:
        return 0.0
    upper = max(float(values.max()), 1.0) * scale
    while excess(upper) > 0.0:
        upper *= 2.0
    return float(brentq(excess, 0.0, upper, xtol=1e-12 * upper))


#######################################################################
#                          Diagnostics Report                         #
#######################################################################

@dataclass
class RunTally:
    """
    Running sums carried through a simulation: stage-weighted energy rates
    of the last step, and time integrals of the product work and of the
    damping loss of mass.
    """

    rates           : EnergyRates = field(default_factory=EnergyRates)
    omega3_cumulative: float = 0.0
    leakage_cumulative: float = 0.0
    energy_residual : float = 0.0
    _leak_rate      : float = 0.0

    def startStep(self) -> None:
        self.rates = EnergyRates()
        self._leak_rate = 0.0

    def observer(self, config: SimConfig) -> Callable[[RhsTerms, float], None]:
        "A *stepRk4* observer that tallies the stage rates."
        def observe(terms: RhsTerms, weight: float) -> None:
            self.rates.accumulate(energyRates(terms, config), weight)
            self._leak_rate -= weight * float(terms.damping.mean(axis=1).sum())
        return observe

    def endStep(self, dt: float, residual: float) -> None:
        self.omega3_cumulative += dt * self.rates.product_work
        self.leakage_cumulative += dt * self._leak_rate
        self.energy_residual = residual


@dataclass
class DiagnosticsRecord:
    "One row of the diagnostics time series."

    t                  : float
    total_mass         : float
    masses             : List[float]
    min_density        : List[float]
    max_density        : float
    energy             : float
    dissipation_viscous: float
    dissipation_flux   : float
    dissipation_eps    : float
    dissipation_delta  : float
    omega3_cumulative  : float
    energy_residual    : float
    evf_residual       : float
    divu_max           : float
    r_h                : List[float]
    dt                 : float
    reaction_work      : float
    leakage_cumulative : float
    pressure_max       : float
    pressure_fluctuation: float
    pressure_nyquist   : float
    pressure_gradient  : float
    momentum_residual  : float
    divu_violations    : int


def makeRecord(state: DensityField, dt: float, config: SimConfig,
               tally: RunTally) -> DiagnosticsRecord:
    """
    Evaluate all diagnostics at *state*. The dissipation columns are the
    stage-weighted rates of the step that produced *state*; for the
    initial record they are the rates at *state*.
    """
    params, grid = config.params, config.grid
    terms = speciesRhsTerms(state, config)
    rates = tally.rates if dt > 0.0 else energyRates(terms, config)
    p = terms.pressure
    du = grid.derivative(terms.velocity)
    violations = divuPositivityProbe(state, terms.velocity, grid,
                                     config.divu_fraction)
    return DiagnosticsRecord(
        t=state.time,
        total_mass=float(state.masses().sum()),
        masses=[float(m) for m in state.masses()],
        min_density=[float(v) for v in state.values.min(axis=1)],
        max_density=float(state.values.max()),
        energy=energyFunctional(state, params),
        dissipation_viscous=rates.viscous,
        dissipation_flux=rates.flux,
        dissipation_eps=rates.eps,
        dissipation_delta=rates.delta,
        omega3_cumulative=tally.omega3_cumulative,
        energy_residual=tally.energy_residual,
        evf_residual=effectiveViscousFluxResidual(p, terms.velocity,
                                                  params, grid),
        divu_max=float(np.max(du)),
        r_h=[compactnessFunctional(state.total(), h)
             for h in config.h_values],
        dt=dt,
        reaction_work=rates.reaction,
        leakage_cumulative=tally.leakage_cumulative,
        pressure_max=float(np.max(np.abs(p))),
        pressure_fluctuation=float(np.max(np.abs(p - p.mean()))),
        pressure_nyquist=grid.nyquistAmplitude(p),
        pressure_gradient=float(np.max(np.abs(grid.derivative(p)))),
        momentum_residual=momentumResidual(p, terms.velocity, params, grid),
        divu_violations=int(violations.size))


class DiagnosticsReport:
    """
    Time-ordered diagnostics of one run, with CSV and JSON writers.

    :param config: run configuration.
    :type config: SimConfig
    :param config_hash: SHA-256 of the configuration file, if any.
    :type config_hash: str
    """

    EVF_TOLERANCE = 1e-10
    MOMENTUM_TOLERANCE = 1e-10
    # times M max|p|: residuals below this are rounding
    ROUNDOFF = 1e-14
    NEGATIVITY_TOLERANCE = 1e-8
    MASS_TOLERANCE = 1e-8

    def __init__(self, config: SimConfig, config_hash: str = ''):
        self.config = config
        self.config_hash = config_hash
        self.records: List[DiagnosticsRecord] = []
        self.energy_violations = 0
        self.max_energy_residual = 0.0
        self.min_density_seen = math.inf
        self.max_density_seen = 0.0
        self.initial_energy = 0.0

    def add(self, record: DiagnosticsRecord) -> None:
        if self.records and not record.t > self.records[-1].t:
            raise ValueError(f'Diagnostics time {record.t} not increasing.')
        if not self.records:
            self.initial_energy = record.energy
        self.records.append(record)

    def checkStep(self, state: DensityField, dt: float,
                  residual: float) -> None:
        """
        Per-step checks: the energy residual against
        *energy_tolerance* E(0)/dt and the density extremes.
        """
        limit = self.config.energy_tolerance * self.initial_energy / dt
        if residual > limit:
            if self.energy_violations == 0:
                logger.warning(f'Energy residual {residual:.3e} above '
                               f'{limit:.3e} at t={state.time:.6g}.')
            self.energy_violations += 1
        self.max_energy_residual = max(self.max_energy_residual, residual)
        self.min_density_seen = min(self.min_density_seen,
                                    float(state.values.min()))
        self.max_density_seen = max(self.max_density_seen,
                                    float(state.values.max()))

    def columns(self) -> List[str]:
        "The documented columns first, the supplementary ones after R_h."
        n = self.config.params.n_components
        return ['t', 'total_mass'] + \
               [f'mass_{i}' for i in range(n)] + \
               [f'min_density_{i}' for i in range(n)] + \
               ['max_density', 'energy', 'dissipation_viscous',
                'dissipation_flux', 'dissipation_eps', 'dissipation_delta',
                'omega3_cumulative', 'energy_residual', 'evf_residual',
                'divu_max'] + \
               [f'R_h_{h:g}' for h in self.config.h_values] + \
               ['dt', 'reaction_work', 'leakage_cumulative', 'pressure_max',
                'pressure_fluctuation', 'pressure_nyquist',
                'pressure_gradient', 'momentum_residual', 'divu_violations']

    def rows(self) -> List[List[str]]:
        rows = []
        for rec in self.records:
            values = [rec.t, rec.total_mass] + rec.masses + \
                     rec.min_density + \
                     [rec.max_density, rec.energy, rec.dissipation_viscous,
                      rec.dissipation_flux, rec.dissipation_eps,
                      rec.dissipation_delta, rec.omega3_cumulative,
                      rec.energy_residual, rec.evf_residual,
                      rec.divu_max] + rec.r_h + \
                     [rec.dt, rec.reaction_work, rec.leakage_cumulative,
                      rec.pressure_max, rec.pressure_fluctuation,
                      rec.pressure_nyquist, rec.pressure_gradient,
                      rec.momentum_residual, rec.divu_violations]
            rows.append([str(v) if isinstance(v, int) else f'{v:.17g}'
                         for v in values])
        return rows

    def writeCsv(self, filename: str) -> None:
        with open(filename, 'w', newline='', encoding='utf-8') as f:
            writer = csv.writer(f)
            writer.writerow(self.columns())
            writer.writerows(self.rows())

    def _withinTolerance(self, residual: float, reference: float,
                         tolerance: float, floor: float) -> bool:
        return residual <= max(tolerance * reference, floor)

    def flags(self) -> Dict[str, bool]:
        "Pass flags of the run; a *False* entry is a warning."
        first = self.records[0]
        scale = max(self.max_density_seen, first.max_density, 1e-300)
        mass_ok = all(abs(r.total_mass + r.leakage_cumulative -
                          first.total_mass)
                      <= self.MASS_TOLERANCE * abs(first.total_mass)
                      for r in self.records) \
                  or self.config.params.positivity_floor
        floor = self.ROUNDOFF * self.config.grid.size
        return {
            'mass': mass_ok,
            'nonnegative': min(self.min_density_seen,
                               min(min(r.min_density) for r in self.records))
                           >= -self.NEGATIVITY_TOLERANCE * scale,
            'energy_residual': self.energy_violations == 0,
            'effective_viscous_flux': all(
                self._withinTolerance(r.evf_residual, r.pressure_fluctuation,
                                      self.EVF_TOLERANCE,
                                      floor * r.pressure_max)
                for r in self.records),
            'momentum': all(
                self._withinTolerance(r.momentum_residual,
                                      r.pressure_gradient,
                                      self.MOMENTUM_TOLERANCE,
                                      floor * r.pressure_max)
                for r in self.records),
        }

    def summary(self) -> Dict:
        """
        Summary for the JSON file: configuration hash, minimum and maximum
        of every diagnostic column, pass flags.
        """
        columns = self.columns()
        rows = np.array([[float(v) for v in row] for row in self.rows()])
        ranges = {c: {'min': float(rows[:, i].min()),
                      'max': float(rows[:, i].max())}
                  for i, c in enumerate(columns)}
        flags = self.flags()
        return {'config_hash': self.config_hash,
                'records': len(self.records),
                'final_time': self.records[-1].t,
                'energy_violations': self.energy_violations,
                'max_energy_residual': self.max_energy_residual,
                'ranges': ranges,
                'flags': flags,
                'all_pass': all(flags.values())}

    def writeSummary(self, filename: str) -> None:
        with open(filename, 'w', encoding='utf-8') as f:
            json.dump(self.summary(), f, indent=2, sort_keys=True)
            f.write('\n')

    def __len__(self) -> int:
        return len(self.records)
