"""
Momentum-space three-body PDFs of the standard and collective models.

The scatterers start in Gaussian momentum states of spread dp around M*V, the
one at x0 carrying the offset phase p*x0/hbar. A recoil shifts a scatterer
distribution by the recoil momentum; interference between the two reflection
amplitudes survives only as far as the shifted and unshifted distributions
overlap.
"""

import logging
import math
from dataclasses import dataclass

import numpy

from .core import NATURAL, DomainError, Model, PdfGrid, UnitSystem
from .kinematics import solve_collective_recoil, solve_two_body_recoil
from .transitions import COHERENT, INCOHERENT, TransitionReport, classify
from .utils.periods import fringe_visibility

# Half-width of the momentum windows, in momentum spreads
WINDOW = 8.0


@dataclass(frozen=True)
class GaussianMomentumState:
    """
    phi(p) = g(p) * exp(-i p x_off / hbar), with
    g(p) = (dp sqrt(2 pi))^(-1/2) exp(-(p - p0)^2 / (4 dp^2)).
    """

    p0: float
    dp: float
    x_off: float = 0.0
    units: UnitSystem = NATURAL

    def __post_init__(self):
        if not self.dp > 0:
            raise DomainError(f"momentum spread must be strictly positive, got {self.dp}")

    @classmethod
    def from_coherence_length(
        cls, p0: float, L_c: float, x_off: float = 0.0, units: UnitSystem = NATURAL
    ) -> "GaussianMomentumState":
        return cls(p0, units.hbar / (2 * L_c), x_off, units)

    @property
    def coherence_length(self) -> float:
        return self.units.hbar / (2 * self.dp)

    def g(self, p):
        p = numpy.asarray(p, dtype=float)
        return (self.dp * math.sqrt(2 * math.pi)) ** -0.5 * numpy.exp(
            -((p - self.p0) ** 2) / (4 * self.dp**2)
        )

    def amplitude(self, p):
        return self.g(p) * numpy.exp(-1j * numpy.asarray(p) * self.x_off / self.units.hbar)

    def shifted(self, shift: float) -> "GaussianMomentumState":
        return GaussianMomentumState(self.p0 + shift, self.dp, self.x_off, self.units)

    def window(self, samples: int = 1024) -> numpy.ndarray:
        return numpy.linspace(
            self.p0 - WINDOW * self.dp, self.p0 + WINDOW * self.dp, samples
        )


@dataclass(frozen=True)
class MomentumScenario:
    """
    A particle (m, v) reflecting from two equal scatterers (M, V) separated by x0,
    the scatterers having momentum spread dp_s. A particle spread dp_p of None
    stands for a momentum eigenstate.
    """

    m: float
    v: float
    M: float
    V: float
    x0: float
    dp_s: float
    dp_p: float | None = None
    units: UnitSystem = NATURAL

    def __post_init__(self):
        if not (self.m > 0 and self.M > 0):
            raise DomainError("masses must be strictly positive")
        if not self.x0 > 0:
            raise DomainError(f"x0 must be strictly positive, got {self.x0}")
        if not self.dp_s > 0:
            raise DomainError(f"dp_s must be strictly positive, got {self.dp_s}")
        if self.dp_p is not None and not self.dp_p > 0:
            raise DomainError(f"dp_p must be strictly positive, got {self.dp_p}")

    def recoil(self, model: Model):
        if model is Model.SQI:
            return solve_two_body_recoil(self.m, self.v, self.M, self.V, self.units)
        return solve_collective_recoil(self.m, self.v, self.M, self.V, 2, self.units)

    def recoil_shift(self, model: Model) -> float:
        """
        Momentum transferred to a recoiling scatterer, M*(V_r - V).
        """
        return self.M * (self.recoil(model).V_sr[0] - self.V)

    def scatterer_state(self) -> GaussianMomentumState:
        return GaussianMomentumState(self.M * self.V, self.dp_s, units=self.units)

    def particle_g(self, model: Model, p1):
        p1 = numpy.asarray(p1, dtype=float)
        if self.dp_p is None:
            return numpy.ones_like(p1)
        centre = self.m * self.recoil(model).v_pr[0]
        return GaussianMomentumState(centre, self.dp_p, units=self.units).g(p1)


def pdf_sqi_momentum(scenario: MomentumScenario, p1, p2, p3):
    """
    |phi_2 + phi_3|^2 for the SQI amplitudes in momentum space: each direct
    term has one scatterer recoiled, the cross term is weighted by the overlap
    of the recoiled and unrecoiled distributions of both scatterers and
    oscillates as cos[(2 p1 - shift) x0 / hbar].
    """
    p1, p2, p3 = numpy.broadcast_arrays(
        *(numpy.asarray(p, dtype=float) for p in (p1, p2, p3))
    )
    shift = scenario.recoil_shift(Model.SQI)
    state = scenario.scatterer_state()
    recoiled = state.shifted(shift)

    g2, g2r = state.g(p2), recoiled.g(p2)
    g3, g3r = state.g(p3), recoiled.g(p3)
    g1 = scenario.particle_g(Model.SQI, p1)
    phase = (2 * p1 - shift) * scenario.x0 / scenario.units.hbar

    density = g1**2 * (
        (g3 * g2r) ** 2 + (g2 * g3r) ** 2 + 2 * g3 * g3r * g2 * g2r * numpy.cos(phase)
    )
    scale = max(float(numpy.max(numpy.abs(density), initial=0.0)), 1e-300)
    if numpy.min(density, initial=0.0) < -1e-12 * scale:
        raise DomainError("internal inconsistency: negative SQI momentum density")
    return numpy.clip(density, 0.0, None)


def pdf_cqi_momentum(scenario: MomentumScenario, p1, p2, p3):
    """
    (g1 g2r' g3r')^2 (1 + cos[2 p1 x0 / hbar]): both amplitudes share the same
    collective recoil, so the fringe never loses contrast.
    """
    p1, p2, p3 = numpy.broadcast_arrays(
        *(numpy.asarray(p, dtype=float) for p in (p1, p2, p3))
    )
    recoiled = scenario.scatterer_state().shifted(scenario.recoil_shift(Model.CQI))
    g1 = scenario.particle_g(Model.CQI, p1)
    envelope = (g1 * recoiled.g(p2) * recoiled.g(p3)) ** 2
    return envelope * (1 + numpy.cos(2 * p1 * scenario.x0 / scenario.units.hbar))


@dataclass(frozen=True)
class SqiVisibility:
    """
    Contrast left by the scatterer recoil, with the quantities to compare it to.
    """

    visibility: float
    recoil_shift: float
    first_principles_shift: float
    half_visibility_shift: float
    mass_scaled_threshold: float


def sqi_visibility(
    m: float, v: float, M: float, dp_s: float, V: float = 0.0, units: UnitSystem = NATURAL
) -> SqiVisibility:
    """
    Returns the overlap g[p_r] g[p_0] of both scatterers, relative to its
    no-recoil maximum, exp(-shift^2 / (4 dp^2)). Also reports the mass-scaled
    half-visibility momentum M*dp*sqrt(ln 4) next to the first-principles
    half-visibility shift 2*sqrt(ln 2)*dp.
    """
    if not (m > 0 and M > 0 and dp_s > 0):
        raise DomainError("masses and momentum spread must be strictly positive")
    shift = M * (solve_two_body_recoil(m, v, M, V, units).V_sr[0] - V)
    return SqiVisibility(
        visibility=math.exp(-(shift**2) / (4 * dp_s**2)),
        recoil_shift=shift,
        first_principles_shift=2 * m * M * (v - V) / (m + M),
        half_visibility_shift=2 * math.sqrt(math.log(2)) * dp_s,
        mass_scaled_threshold=M * dp_s * math.sqrt(math.log(4)),
    )


def _integration_axis(
    state: GaussianMomentumState, centres: tuple[float, ...], resolution: int
) -> numpy.ndarray:
    """
    Samples a common lattice of step dp/resolution inside windows of
    +-(WINDOW + 2)*dp around each centre. Between windows the density is
    negligible, so the trapezoidal rule stays spectrally accurate on every
    uniform stretch.
    """
    step = state.dp / resolution
    half = (WINDOW + 2) * state.dp
    origin = min(centres) - half
    indices = [
        numpy.arange(
            math.floor((c - half - origin) / step), math.ceil((c + half - origin) / step) + 1
        )
        for c in centres
    ]
    return origin + step * numpy.unique(numpy.concatenate(indices))


def momentum_marginal_p1(
    model: Model, scenario: MomentumScenario, p1, resolution: int = 4
) -> PdfGrid:
    """
    Traces p2 and p3 out of the momentum PDF with a 2D trapezoidal rule,
    returning the (unnormalized) particle marginal on p1.
    """
    pdf = pdf_sqi_momentum if model is Model.SQI else pdf_cqi_momentum
    shift = scenario.recoil_shift(model)
    state = scenario.scatterer_state()
    p1 = numpy.asarray(p1, dtype=float)
    if model is Model.SQI:
        centres = (state.p0, state.p0 + shift / 2, state.p0 + shift)
    else:
        centres = (state.p0 + shift,)
    p2 = p3 = _integration_axis(state, centres, resolution)

    values = numpy.empty_like(p1)
    for i, p in enumerate(p1):
        joint = PdfGrid((("p2", p2), ("p3", p3)), pdf(scenario, p, p2[:, None], p3[None, :]))
        values[i] = joint.integrate_out("p3").integral()
    logging.getLogger(__name__).debug(
        "Traced %s momentum marginal on %d x %d points", model.value, p2.size, p3.size
    )
    return PdfGrid((("p1", p1),), values)


def p1_fringe_visibility(model: Model, scenario: MomentumScenario, p1=None) -> float:
    """
    Fits the fringe of period pi*hbar/x0 to the traced p1 marginal and returns
    its visibility. The particle envelope is divided out before the fit; by
    default p1 spans two periods either side of the particle centre m*v_1r,
    clipped to the envelope window when the particle has a momentum spread.
    """
    period = math.pi * scenario.units.hbar / scenario.x0
    if p1 is None:
        if scenario.dp_p is None:
            centre, half = 0.0, 2 * period
        else:
            centre = scenario.m * scenario.recoil(model).v_pr[0]
            half = min(WINDOW * scenario.dp_p, 2 * period)
        p1 = numpy.linspace(centre - half, centre + half, 257)
    marginal = momentum_marginal_p1(model, scenario, p1)
    p1 = marginal.axis("p1")
    envelope = scenario.particle_g(model, p1) ** 2
    kept = envelope > 0
    if numpy.count_nonzero(kept) < 3:
        raise DomainError("p1 samples lie outside the particle distribution")
    return fringe_visibility(p1[kept], marginal.values[kept] / envelope[kept], period)


def momentum_threshold_wavelength(L_c: float) -> float:
    if not L_c > 0:
        raise DomainError(f"L_c must be strictly positive, got {L_c}")
    return 4 * math.pi * L_c / math.sqrt(math.log(4))


def momentum_transition_wavelength(
    L_c: float, wavelength: float | None = None
) -> TransitionReport:
    """
    Momentum-space interference survives for incident wavelengths below
    4*pi*L_c/sqrt(ln 4). Without a wavelength only the threshold is reported.
    """
    threshold = momentum_threshold_wavelength(L_c)
    if wavelength is None:
        value = margin = math.nan
        verdict = "threshold only"
    else:
        if not wavelength >= 0:
            raise DomainError(f"wavelength cannot be negative, got {wavelength}")
        value = wavelength
        margin = wavelength / threshold
        verdict = classify(margin, COHERENT, INCOHERENT)
    return TransitionReport(
        name="momentum",
        inequality="lambda_0 < 4*pi*L_c/sqrt(ln 4)",
        threshold=threshold,
        value=value,
        margin=margin,
        verdict=verdict,
    )
