"""
Brute-force scattering oracles for the collective fringe.

In the relative coordinate of the particle and the scatterer pair, the CQI
problem is a single body of reduced mass mu scattering from two delta
potentials x0 apart. Two independent solvers are provided: exact stationary
transfer matrices, and split-step Fourier evolution of a wavepacket against
Gaussian-regularized deltas.
"""

import logging
import math
from dataclasses import dataclass

import numpy
from scipy.signal.windows import tukey

from .core import NATURAL, DomainError, ScatteringScenario, UnitSystem
from .kinematics import reduced_mass
from .utils.periods import estimate_period

# Largest single-delta reflectance of the weak-scattering regime
WEAK_REFLECTANCE = 0.05

# Minimum number of grid points per shortest wavelength
POINTS_PER_WAVELENGTH = 8


@dataclass(frozen=True)
class DeltaChain:
    """
    Delta potentials g*delta(x - a) at the given positions, for a body of mass mu.
    """

    g: float
    positions: tuple[float, ...]
    mu: float
    units: UnitSystem = NATURAL

    def __post_init__(self):
        object.__setattr__(self, "positions", tuple(float(a) for a in self.positions))
        if not self.mu > 0:
            raise DomainError(f"mu must be strictly positive, got {self.mu}")
        if not self.positions:
            raise DomainError("a delta chain needs at least one position")

    @property
    def kappa(self) -> float:
        return 2 * self.mu * self.g / self.units.hbar**2

    def single_reflectance(self, k):
        return single_delta_reflectance(k, self.g, self.mu, self.units)

    def is_weak(self, k) -> bool:
        return bool(numpy.max(self.single_reflectance(k)) <= WEAK_REFLECTANCE)

    def transfer_matrix(self, k: float) -> numpy.ndarray:
        return delta_chain_transfer_matrix(k, self.g, self.positions, self.mu, self.units)


class DoubleDeltaPotential(DeltaChain):
    """
    Two deltas at -x0/2 and +x0/2 in the relative coordinate.
    """

    def __init__(self, g: float, x0: float, mu: float, units: UnitSystem = NATURAL):
        if not x0 > 0:
            raise DomainError(f"x0 must be strictly positive, got {x0}")
        super().__init__(g, (-x0 / 2, x0 / 2), mu, units)

    @property
    def x0(self) -> float:
        return self.positions[1] - self.positions[0]

    @classmethod
    def for_scenario(cls, scenario: ScatteringScenario, g: float) -> "DoubleDeltaPotential":
        """
        Relative-coordinate potential of a particle against a collectively
        recoiling scatterer pair, mu = 2mM/(m+2M).
        """
        mu = reduced_mass(scenario.m, 2 * scenario.M)
        return cls(g, scenario.x0, mu, scenario.units)


def _check_wavevector(k: float):
    if not k > 0:
        raise DomainError(f"wavevector must be strictly positive, got {k}")


def delta_chain_transfer_matrix(
    k: float,
    g: float,
    positions,
    mu: float,
    units: UnitSystem = NATURAL,
) -> numpy.ndarray:
    """
    Returns M mapping the plane-wave coefficients (A, B) of A e^{ikx} + B e^{-ikx}
    left of every delta to those right of them.
    """
    _check_wavevector(k)
    beta = 2 * mu * g / units.hbar**2 / (2j * k)
    total = numpy.eye(2, dtype=complex)
    for a in sorted(positions):
        phase = numpy.exp(2j * k * a)
        step = numpy.array(
            [[1 + beta, beta / phase], [-beta * phase, 1 - beta]], dtype=complex
        )
        total = step @ total
    return total


def _amplitudes(matrix: numpy.ndarray) -> tuple[complex, complex]:
    r = -matrix[1, 0] / matrix[1, 1]
    t = 1 / matrix[1, 1]
    return complex(r), complex(t)


def transfer_matrix_double_delta(
    k: float, g: float, x0: float, mu: float, units: UnitSystem = NATURAL
) -> tuple[complex, complex]:
    """
    Exact reflection and transmission amplitudes of two deltas x0 apart, for a
    wave incident from the left.
    """
    return _amplitudes(DoubleDeltaPotential(g, x0, mu, units).transfer_matrix(k))


def single_delta_reflectance(k, g: float, mu: float, units: UnitSystem = NATURAL):
    """
    |r|^2 = kappa^2 / (4k^2 + kappa^2) with kappa = 2*mu*g/hbar^2.
    """
    k = numpy.asarray(k, dtype=float)
    kappa = 2 * mu * g / units.hbar**2
    return kappa**2 / (4 * k**2 + kappa**2)


@dataclass(frozen=True, eq=False)
class ReflectionSpectrum:
    k: numpy.ndarray
    reflectance: numpy.ndarray
    single: numpy.ndarray
    x0: float
    weak: bool

    @property
    def normalized(self) -> numpy.ndarray:
        """
        Reflectance relative to one delta, 4*cos^2(k*x0) in the weak limit.
        """
        if not numpy.all(self.single > 0):
            raise DomainError("no scattering: the spectrum cannot be normalized")
        return self.reflectance / self.single

    def period(self) -> float:
        return estimate_period(self.k, self.normalized)

    def separation_period(self, k_rel: float) -> float | None:
        """
        Converts the fringe period in k into the fringe period in the scatterer
        separation at the relative wavevector k_rel. None outside the weak regime.
        """
        if not self.weak:
            logging.getLogger(__name__).warning(
                "Strong coupling, comparison with the closed-form fringe disabled"
            )
            return None
        return self.period() * self.x0 / abs(k_rel)


def reflection_spectrum(
    k, g: float, x0: float, mu: float, units: UnitSystem = NATURAL
) -> ReflectionSpectrum:
    """
    Samples |r(k)|^2 of the double delta on the given wavevectors.
    """
    k = numpy.asarray(k, dtype=float)
    potential = DoubleDeltaPotential(g, x0, mu, units)
    reflectance = numpy.array(
        [abs(_amplitudes(potential.transfer_matrix(ki))[0]) ** 2 for ki in k]
    )
    single = potential.single_reflectance(k)
    weak = potential.is_weak(k)
    if not weak:
        logging.getLogger(__name__).warning(
            "Single-delta reflectance %.3g exceeds %.3g: strong coupling, "
            "comparison against the closed-form fringe disabled",
            float(numpy.max(single)),
            WEAK_REFLECTANCE,
        )
    return ReflectionSpectrum(k, reflectance, single, x0, weak)


def reflection_vs_separation(
    k: float, g: float, separations, mu: float, units: UnitSystem = NATURAL
) -> numpy.ndarray:
    """
    |r|^2 at fixed wavevector as the delta separation is swept; its period in
    the separation is pi/k.
    """
    return numpy.array(
        [abs(transfer_matrix_double_delta(k, g, x0, mu, units)[0]) ** 2 for x0 in separations]
    )


@dataclass(frozen=True, eq=False)
class WavepacketState:
    """
    Complex amplitude samples on a uniform periodic grid at time t.
    """

    x: numpy.ndarray
    psi: numpy.ndarray
    t: float = 0.0

    def __post_init__(self):
        x = numpy.asarray(self.x, dtype=float)
        psi = numpy.asarray(self.psi, dtype=complex)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "psi", psi)
        if x.ndim != 1 or x.shape != psi.shape or x.size < 2:
            raise DomainError("wavepacket samples must match a 1D grid")
        steps = numpy.diff(x)
        if not numpy.allclose(steps, steps[0], rtol=1e-9, atol=0) or steps[0] <= 0:
            raise DomainError("wavepacket grid must be uniform and increasing")

    @classmethod
    def gaussian(
        cls, x, centre: float, k0: float, sigma: float, t: float = 0.0
    ) -> "WavepacketState":
        """
        Normalized Gaussian packet with position spread sigma and mean wavevector k0.
        """
        if not sigma > 0:
            raise DomainError(f"sigma must be strictly positive, got {sigma}")
        x = numpy.asarray(x, dtype=float)
        psi = (2 * math.pi * sigma**2) ** -0.25 * numpy.exp(
            -((x - centre) ** 2) / (4 * sigma**2) + 1j * k0 * (x - centre)
        )
        return cls(x, psi, t)

    @property
    def dx(self) -> float:
        return float(self.x[1] - self.x[0])

    @property
    def density(self) -> numpy.ndarray:
        return numpy.abs(self.psi) ** 2

    @property
    def wavevectors(self) -> numpy.ndarray:
        return 2 * math.pi * numpy.fft.fftfreq(self.x.size, self.dx)

    def norm(self) -> float:
        return float(numpy.sum(self.density) * self.dx)

    def mean_position(self) -> float:
        return float(numpy.sum(self.x * self.density) * self.dx / self.norm())

    def width(self) -> float:
        centre = self.mean_position()
        return math.sqrt(numpy.sum((self.x - centre) ** 2 * self.density) * self.dx / self.norm())

    def spectral_extent(self) -> tuple[float, float]:
        """
        Returns the mean and standard deviation of the wavevector distribution.
        """
        weights = numpy.abs(numpy.fft.fft(self.psi)) ** 2
        weights /= weights.sum()
        k = self.wavevectors
        mean = float(numpy.sum(k * weights))
        return mean, math.sqrt(float(numpy.sum((k - mean) ** 2 * weights)))


def regularize(potential: DeltaChain, x, width: float | None = None) -> numpy.ndarray:
    """
    Samples the deltas as Gaussians of the given width (one grid spacing by
    default), each normalized on the grid so that sum(V)*dx = g per delta.
    """
    x = numpy.asarray(x, dtype=float)
    dx = float(x[1] - x[0])
    width = dx if width is None else width
    if not 0 < width <= 4 * dx:
        raise DomainError(f"regularization width {width} must lie in (0, 4*dx]")
    values = numpy.zeros_like(x)
    for a in potential.positions:
        bump = numpy.exp(-((x - a) ** 2) / (2 * width**2))
        values += potential.g * bump / (numpy.sum(bump) * dx)
    return values


def check_resolution(
    potential: DeltaChain, initial: WavepacketState, dt: float
) -> None:
    """
    Raises DomainError when the grid does not resolve the shortest wavelength of
    the packet with POINTS_PER_WAVELENGTH points, or when a potential is present
    and the kinetic phase at the grid Nyquist wavevector reaches 2*pi per step
    (the kicked propagator would then alias high wavevectors onto the shell).
    """
    if not dt > 0:
        raise DomainError(f"time step must be strictly positive, got {dt}")
    mean, spread = initial.spectral_extent()
    k_max = abs(mean) + 6 * spread
    dx = initial.dx
    if k_max * dx > 2 * math.pi / POINTS_PER_WAVELENGTH:
        raise DomainError(
            f"grid spacing {dx:g} resolves wavevectors up to "
            f"{2 * math.pi / (POINTS_PER_WAVELENGTH * dx):g}, packet reaches {k_max:g}"
        )
    if potential.g != 0:
        hbar = potential.units.hbar
        nyquist = math.pi / dx
        phase = hbar * nyquist**2 * dt / (2 * potential.mu)
        if phase >= 2 * math.pi:
            raise DomainError(
                f"time step {dt:g} too large for the grid: Nyquist kinetic phase "
                f"{phase:.3g} reaches 2*pi"
            )


def evolve_wavepacket(
    potential: DeltaChain,
    initial: WavepacketState,
    dt: float,
    steps: int,
    width: float | None = None,
) -> WavepacketState:
    """
    Strang split-step Fourier evolution: half potential kick, exact free
    propagation in k space, half potential kick.
    """
    check_resolution(potential, initial, dt)
    hbar, mu = potential.units.hbar, potential.mu
    k = initial.wavevectors
    kinetic = numpy.exp(-1j * hbar * k**2 * dt / (2 * mu))
    kick = numpy.exp(-1j * regularize(potential, initial.x, width) * dt / (2 * hbar))

    psi = initial.psi.copy()
    for _ in range(steps):
        psi *= kick
        psi = numpy.fft.ifft(numpy.fft.fft(psi) * kinetic)
        psi *= kick

    state = WavepacketState(initial.x, psi, initial.t + steps * dt)
    logging.getLogger(__name__).debug(
        "Evolved %d steps to t=%g, norm drift %.3g",
        steps,
        state.t,
        state.norm() - initial.norm(),
    )
    return state


def reflected_fraction(state: WavepacketState, boundary: float) -> float:
    """
    Probability found left of the boundary, relative to the total norm.
    """
    mask = state.x < boundary
    return float(numpy.sum(state.density[mask]) * state.dx / state.norm())


def reflected_spectrum(
    state: WavepacketState, boundary: float, taper: float = 0.1
) -> tuple[numpy.ndarray, numpy.ndarray]:
    """
    Returns (k, |phi(k)|^2) of the part of the packet left of the boundary,
    after a Tukey window over that region. k is sorted increasingly; reflected
    waves travel at k < 0.
    """
    mask = state.x < boundary
    count = int(numpy.count_nonzero(mask))
    if count < 2:
        raise DomainError("no grid point lies left of the boundary")
    window = numpy.zeros(state.x.size)
    window[mask] = tukey(count, taper)
    phi = numpy.fft.fftshift(numpy.fft.fft(state.psi * window)) * state.dx
    k = numpy.fft.fftshift(state.wavevectors)
    return k, numpy.abs(phi) ** 2 / (2 * math.pi)
