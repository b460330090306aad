"""
Fourier collocation on the periodic unit interval.

Fields are real arrays of M samples at x_m = m/M. Derivatives are exact for
the trigonometric interpolant; the Nyquist mode is dropped from odd
derivatives so that real fields stay real.
"""

import numpy as np

from .mixture import MixtureParams
from .reactmix import DomainException


#######################################################################
#                             SpectralGrid                            #
#######################################################################

class SpectralGrid:
    """
    Periodic collocation grid with M points on [0,1).

    :param size: number of points M, a power of two >= 16.
    :type size: int
    :raises reactmix.reactmix.DomainException: if *size* is not acceptable.
    """

    MIN_SIZE = 16

    def __init__(self, size: int):
        if size < self.MIN_SIZE or size & (size - 1) != 0:
            raise DomainException(f'Grid size {size} must be a power of two '
                                  f'>= {self.MIN_SIZE}.')
        self.size = size
        self.nodes = np.arange(size) / size
        self.wavenumbers = 2.0 * np.pi * np.fft.rfftfreq(size, d=1.0 / size)
        self.ik = 1j * self.wavenumbers
        self.ik[-1] = 0.0                       # Nyquist
        self.dealias_mask = np.fft.rfftfreq(size, d=1.0 / size) < size / 3.0

    @property
    def dx(self) -> float:
        "Grid spacing 1/M."
        return 1.0 / self.size

    def derivative(self, field: np.ndarray, order: int = 1) -> np.ndarray:
        """
        Differentiate the trigonometric interpolant of *field*.

        :param field: M samples.
        :type field: np.ndarray
        :param order: derivative order, 1 or 2.
        :type order: int
        :raises reactmix.reactmix.DomainException: for any other order.
        :returns: M samples of the derivative; exactly 0 for constant fields.
        """
        if order not in (1, 2):
            raise DomainException(f'Derivative order {order} not supported.')
        if np.ptp(field) == 0.0:
            return np.zeros(self.size)
        spectrum = np.fft.rfft(field)
        if order == 1:
            spectrum *= self.ik
        else:
            spectrum *= -self.wavenumbers ** 2
        return np.fft.irfft(spectrum, n=self.size)

    def dealias(self, field: np.ndarray) -> np.ndarray:
        """
        Apply the 2/3 rule: remove all modes with |k| >= M/3.

        :param field: M samples.
        :type field: np.ndarray
        :returns: filtered samples with the same mean.
        """
        spectrum = np.fft.rfft(field)
        spectrum[~self.dealias_mask] = 0.0
        return np.fft.irfft(spectrum, n=self.size)

    def mean(self, field: np.ndarray) -> float:
        "Spectral quadrature of *field* over [0,1)."
        return float(np.mean(field))

    def nyquistAmplitude(self, field: np.ndarray) -> float:
        "Amplitude of the (-1)^m component of *field*."
        return float(abs(np.fft.rfft(field)[-1])) / self.size

    def withoutNyquist(self, field: np.ndarray) -> np.ndarray:
        """
        *field* with its Nyquist mode removed, the part that odd
        derivatives and *stokesSolve* can represent.

        :param field: M samples.
        :type field: np.ndarray
        :returns: M samples.
        """
        spectrum = np.fft.rfft(field)
        spectrum[-1] = 0.0
        return np.fft.irfft(spectrum, n=self.size)

    def __str__(self) -> str:
        return f'SpectralGrid(M={self.size}, dx={self.dx:.3e})'


#######################################################################
#                             Stokes Solve                            #
#######################################################################

def stokesSolve(pressure: np.ndarray, params: MixtureParams,
                grid: SpectralGrid) -> np.ndarray:
    """
    Solve the 1-D quasi-static momentum equation (2 mu + lambda) u'' = p'
    mode by mode, u_hat(k) = -i p_hat(k) / ((2 mu + lambda) k), with the mean
    velocity fixed at 0.

    :param pressure: M samples of the pressure.
    :type pressure: np.ndarray
    :param params: mixture parameters, supply mu and lambda.
    :type params: MixtureParams
    :param grid: collocation grid.
    :type grid: SpectralGrid
    :returns: M samples of the velocity.
    """
    if np.ptp(pressure) == 0.0:
        return np.zeros(grid.size)
    spectrum = np.fft.rfft(pressure)
    k = grid.wavenumbers
    velocity = np.zeros_like(spectrum)
    velocity[1:-1] = -1j * spectrum[1:-1] / (params.viscosity() * k[1:-1])
    return np.fft.irfft(velocity, n=grid.size)
