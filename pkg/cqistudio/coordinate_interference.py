"""
Coordinate-space interference of a particle retro-reflecting from two scatterers.

The standard (SQI) model sums one amplitude per scatterer, only that scatterer
recoiling; the collective (CQI) model lets both scatterers recoil in every
amplitude. After the interaction both reduce to a cos^2 fringe whose wavenumber
is a reduced mass times the relative speed, over hbar.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy

from .core import DomainError, Model, PdfGrid, ScatteringScenario, UnitSystem, NATURAL
from .kinematics import (
    classical_offsets,
    reduced_mass,
    solve_collective_recoil,
    solve_two_body_recoil,
)

REFLECT_FROM_2 = "reflect-from-scatterer-2"
REFLECT_FROM_3 = "reflect-from-scatterer-3"

COHERENT = "coherent"
PARTIALLY_COHERENT = "partially coherent"
NO_INTERFERENCE = "path information: no interference"


def _check_offsets_domain(m: float, M: float, x0: float):
    if not (m > 0 and M > 0):
        raise DomainError("masses must be strictly positive")
    if not x0 > 0:
        raise DomainError(f"x0 must be strictly positive, got {x0}")


def phase_offsets_sqi(m: float, M: float, x0: float) -> tuple[float, float]:
    """
    Returns (x_10, x_30), the particle and scatterer offsets of the amplitude
    reflecting from the scatterer at x0.
    """
    _check_offsets_domain(m, M, x0)
    return 2 * M * x0 / (m + M), (M - m) * x0 / (m + M)


def phase_offsets_cqi(m: float, M: float, x0: float) -> tuple[float, float]:
    """
    Returns (x_31, x_33) for the collective amplitude reflecting from the
    scatterer at x0. The scatterer offset is the SQI one with M -> 2M; the
    particle offset is half the corresponding meeting-point value.
    """
    _check_offsets_domain(m, M, x0)
    return 2 * M * x0 / (m + 2 * M), (2 * M - m) * x0 / (m + 2 * M)


def fringe_wavenumber(
    m_total: float, M_total: float, v: float, V: float, units: UnitSystem = NATURAL
) -> float:
    """
    Returns q such that the correlated PDF is cos^2(q * separation):
    the reduced mass of the colliding groups times their relative speed, over hbar.
    """
    return reduced_mass(m_total, M_total) * (v - V) / units.hbar


@dataclass(frozen=True)
class CorrelatedPdf:
    """
    A closed-form correlated PDF (1 + visibility*cos(2*q*s))/2, which is
    cos^2(q*s) at full visibility. `s` is x3 - x2 for SQI and x0 for CQI.
    """

    model: Model
    wavenumber: float
    visibility: float = 1.0

    def __post_init__(self):
        if not 0 <= self.visibility <= 1:
            raise DomainError(f"visibility must lie in [0, 1], got {self.visibility}")

    def __call__(self, separation):
        phase = 2 * self.wavenumber * numpy.asarray(separation, dtype=float)
        return 0.5 * (1 + self.visibility * numpy.cos(phase))

    @property
    def period(self) -> float:
        if self.wavenumber == 0:
            return math.inf
        return math.pi / abs(self.wavenumber)


def correlated_pdf(scenario: ScatteringScenario) -> CorrelatedPdf:
    """
    Builds the closed-form PDF of the scenario: SQI three-body, CQI three-body or
    CQI four-body depending on the model and the number of particles.
    """
    m, M, v, V = scenario.m, scenario.M, scenario.v, scenario.V
    n_p = len(scenario.particles)
    if scenario.model is Model.SQI:
        if n_p != 1:
            raise DomainError("the SQI closed form covers a single particle")
        q = fringe_wavenumber(m, M, v, V, scenario.units)
    else:
        q = fringe_wavenumber(n_p * m, 2 * M, v, V, scenario.units)
    return CorrelatedPdf(scenario.model, q, _envelope_visibility(scenario))


def fringe_period(model: Model, scenario: ScatteringScenario) -> float:
    """
    Returns the analytic fringe period: in x3 - x2 for SQI, in x0 for CQI.
    """
    return correlated_pdf(scenario.with_model(model)).period


def _require(scenario: ScatteringScenario, model: Model):
    if scenario.model is not model:
        raise DomainError(f"expected a {model.value} scenario, got {scenario.model.value}")
    if scenario.unequal:
        raise DomainError("closed-form PDFs need equal scatterers")


def pdf_sqi_3body(scenario: ScatteringScenario, x1, x2, x3):
    """
    cos^2[mM(v-V)(x3-x2)/(hbar(m+M))], times the envelope visibility when
    coherence lengths are set. x1 only enters through the envelopes.
    """
    _require(scenario, Model.SQI)
    x1, x2, x3 = numpy.broadcast_arrays(*(numpy.asarray(x, dtype=float) for x in (x1, x2, x3)))
    return correlated_pdf(scenario)(x3 - x2)


def pdf_cqi_3body(scenario: ScatteringScenario, x0=None):
    """
    cos^2[2mM(v-V)x0/(hbar(m+2M))]. The fringe lives in the scatterer separation
    x0 (the scenario's by default), not in the body coordinates.
    """
    _require(scenario, Model.CQI)
    if len(scenario.particles) != 1:
        raise DomainError("use pdf_cqi_4body for two particles")
    return correlated_pdf(scenario)(scenario.x0 if x0 is None else x0)


def pdf_cqi_4body(
    m: float, M: float, v: float, V: float, x0, units: UnitSystem = NATURAL
):
    """
    cos^2[2mM(v-V)x0/(hbar(m+M))]: the two particles interfere as one body of
    mass 2m against the scatterer pair.
    """
    return CorrelatedPdf(Model.CQI, fringe_wavenumber(2 * m, 2 * M, v, V, units))(x0)


@dataclass(frozen=True)
class AmplitudeBranch:
    """
    One reflected plane-wave amplitude of the (particle, scatterer 2, scatterer 3)
    system: sign * exp(i * sum_j k_j (x_j - x0_j)), optionally with Gaussian
    envelopes (standard deviation L/2) following the classical trajectories.
    """

    branch: str
    wavevectors: tuple[float, float, float]
    offsets: tuple[float, float, float]
    velocities: tuple[float, float, float]
    # Incident configuration, used by the meeting-point check
    initial_positions: tuple[float, float, float]
    initial_velocities: tuple[float, float, float]
    meeting_time: float
    coherence_lengths: tuple[float | None, float | None, float | None] = (None,) * 3
    sign: float = -1.0

    def amplitude(self, x1, x2, x3, t: float = 0.0):
        coordinates = numpy.broadcast_arrays(
            *(numpy.asarray(x, dtype=float) for x in (x1, x2, x3))
        )
        phase = sum(
            k * (x - o) for k, x, o in zip(self.wavevectors, coordinates, self.offsets)
        )
        psi = self.sign * numpy.exp(1j * phase)
        for x, o, u, L in zip(coordinates, self.offsets, self.velocities, self.coherence_lengths):
            if L is not None:
                psi = psi * numpy.exp(-(((x - o - u * t) / L) ** 2))
        return psi


def _branch_pair(
    scenario: ScatteringScenario,
    velocities_2: tuple[float, float, float],
    offsets_2: tuple[float, float, float],
    velocities_3: tuple[float, float, float],
    offsets_3: tuple[float, float, float],
) -> list[AmplitudeBranch]:
    masses = (scenario.m, scenario.M, scenario.M)
    hbar = scenario.hbar
    initial_positions = (0.0, 0.0, scenario.x0)
    initial_velocities = (scenario.v, scenario.V, scenario.V)
    lengths = (
        scenario.particles[0].coherence_length,
        scenario.scatterers[0].coherence_length,
        scenario.scatterers[1].coherence_length,
    )

    def make(branch, velocities, offsets, meeting_time):
        return AmplitudeBranch(
            branch=branch,
            wavevectors=tuple(mass * u / hbar for mass, u in zip(masses, velocities)),
            offsets=offsets,
            velocities=velocities,
            initial_positions=initial_positions,
            initial_velocities=initial_velocities,
            meeting_time=meeting_time,
            coherence_lengths=lengths,
        )

    return [
        make(REFLECT_FROM_2, velocities_2, offsets_2, 0.0),
        make(REFLECT_FROM_3, velocities_3, offsets_3, scenario.x0 / (scenario.v - scenario.V)),
    ]


def _check_branch_domain(scenario: ScatteringScenario):
    if len(scenario.particles) != 1 or scenario.unequal:
        raise DomainError("amplitude branches need one particle and equal scatterers")
    if not scenario.v > scenario.V:
        raise DomainError("the particle must catch up with the scatterers (v > V)")


def sqi_branches(scenario: ScatteringScenario) -> list[AmplitudeBranch]:
    """
    Returns the two SQI amplitudes: the particle reflects from one scatterer,
    which alone recoils, the other keeping its incident wave.
    """
    _check_branch_domain(scenario)
    m, v, M, V, x0 = scenario.m, scenario.v, scenario.M, scenario.V, scenario.x0
    recoil = solve_two_body_recoil(m, v, M, V, scenario.units)
    v1r, V_r = recoil.v_pr[0], recoil.V_sr[0]
    x_1, x_s = classical_offsets(m, v, M, V, x0, n_s=1)
    return _branch_pair(
        scenario,
        (v1r, V_r, V),
        (0.0, 0.0, x0),
        (v1r, V, V_r),
        (x_1, 0.0, x_s),
    )


def cqi_branches(scenario: ScatteringScenario) -> list[AmplitudeBranch]:
    """
    Returns the two CQI amplitudes: the particle reflects from either scatterer
    while both recoil together. Offsets follow the classical meeting points of
    the collective recoil.
    """
    _check_branch_domain(scenario)
    m, v, M, V, x0 = scenario.m, scenario.v, scenario.M, scenario.V, scenario.x0
    recoil = solve_collective_recoil(m, v, M, V, n_s=2, units=scenario.units)
    v1r, V_r = recoil.v_pr[0], recoil.V_sr[0]
    x_1, x_s = classical_offsets(m, v, M, V, x0, n_s=2)
    return _branch_pair(
        scenario,
        (v1r, V_r, V_r),
        (0.0, 0.0, x0),
        (v1r, V_r, V_r),
        # Scatterer 2 recoils at the same instant, a distance x0 behind scatterer 3
        (x_1, x_s - x0, x_s),
    )


def assembled_pdf(branches: list[AmplitudeBranch], x1, x2, x3, t: float = 0.0):
    """
    Returns |sum of branch amplitudes|^2 / n^2, so that fully constructive
    interference of n unit plane waves gives 1.
    """
    total = sum(branch.amplitude(x1, x2, x3, t) for branch in branches)
    return numpy.abs(total) ** 2 / len(branches) ** 2


def two_body_boundary_amplitude(
    m: float, v: float, M: float, V: float, x1, x2, units: UnitSystem = NATURAL
):
    """
    Incident plus reflected plane wave of a particle and one scatterer. The
    hard-sphere condition makes it vanish wherever x1 = x2.
    """
    recoil = solve_two_body_recoil(m, v, M, V, units)
    x1, x2 = numpy.broadcast_arrays(numpy.asarray(x1, dtype=float), numpy.asarray(x2, dtype=float))
    incident = numpy.exp(1j * (m * v * x1 + M * V * x2) / units.hbar)
    reflected = numpy.exp(1j * (recoil.k_pr[0] * x1 + recoil.K_sr[0] * x2))
    return incident - reflected


def classical_meeting_check(branch: AmplitudeBranch) -> float:
    """
    Returns the largest gap, at the meeting time, between the incident and the
    reflected classical trajectory of each body (0 when the offsets are right).
    """
    t = branch.meeting_time
    gaps = [
        abs((x_in + u_in * t) - (x_out + u_out * t))
        for x_in, u_in, x_out, u_out in zip(
            branch.initial_positions,
            branch.initial_velocities,
            branch.offsets,
            branch.velocities,
        )
    ]
    return max(gaps)


@dataclass(frozen=True)
class MarginalResult:
    grid: PdfGrid
    converged: bool


def _default_range(centre: float, period: float, periods: int, samples: int) -> numpy.ndarray:
    half = 0.5 * periods * period
    return numpy.linspace(centre - half, centre + half, samples)


def marginal_particle_pdf(
    model: Model,
    scenario: ScatteringScenario,
    x1,
    x2=None,
    x3=None,
    periods: int = 10,
    samples: int = 401,
) -> MarginalResult:
    """
    Traces the scatterer coordinates out of the three-body PDF.

    The result is the mean of the joint PDF over the (x2, x3) window, sampled
    on x1. Default windows span `periods` fringe periods around each scatterer.
    A window shorter than one fringe period is flagged as not converged.
    """
    scenario = scenario.with_model(model)
    pdf = correlated_pdf(scenario)
    period = pdf.period
    if x2 is None or x3 is None:
        if math.isinf(period):
            period = scenario.x0
        x2 = _default_range(0.0, period, periods, samples) if x2 is None else x2
        x3 = _default_range(scenario.x0, period, periods, samples) if x3 is None else x3
    x1 = numpy.asarray(x1, dtype=float)
    x2 = numpy.asarray(x2, dtype=float)
    x3 = numpy.asarray(x3, dtype=float)

    span = min(x2[-1] - x2[0], x3[-1] - x3[0])
    converged = bool(math.isinf(pdf.period) or span >= pdf.period)
    if not converged:
        logging.getLogger(__name__).warning(
            "marginal not converged: integration window %g is shorter than the fringe period %g",
            span,
            pdf.period,
        )

    if model is Model.SQI:
        joint = pdf(x3[None, :] - x2[:, None])
    else:
        joint = numpy.full((x2.size, x3.size), pdf(scenario.x0))
    area = (x2[-1] - x2[0]) * (x3[-1] - x3[0])
    mean = PdfGrid((("x2", x2), ("x3", x3)), joint).integrate_out("x3").integral() / area

    # x1 enters only through envelopes, which the closed form folds into the visibility
    values = numpy.full(x1.shape, float(mean))
    return MarginalResult(PdfGrid((("x1", x1),), values), converged)


@dataclass(frozen=True)
class OverlapReport:
    visibility: float
    components: dict[str, float] = field(default_factory=dict)
    verdict: str = COHERENT


def gaussian_overlap(displacement: float, coherence_length: float) -> float:
    """
    Overlap of two Gaussian amplitudes of standard deviation L/2 displaced by d:
    exp(-d^2 / (2 L^2)).
    """
    if math.isinf(coherence_length) or displacement == 0:
        return 1.0
    return math.exp(-(displacement**2) / (2 * coherence_length**2))


def overlap_visibility(scenario: ScatteringScenario) -> OverlapReport:
    """
    Multiplies the overlap factors that can carry path information:
    the particle path difference 2*x0 against its coherence length (both
    models), the recoil displacement of the reflecting scatterer against its
    coherence length (SQI), the recoil of the scatterer centre of mass against
    the c.m. coherence length (CQI).
    """
    l_coh = scenario.particle_coherence_length
    L_coh = scenario.scatterer_coherence_length
    components = {"path": gaussian_overlap(2 * scenario.x0, l_coh)}

    m, v, M, V = scenario.m, scenario.v, scenario.M, scenario.V
    if scenario.model is Model.SQI:
        recoil = solve_two_body_recoil(m, v, M, V, scenario.units)
        displacement = abs(recoil.V_sr[0] - V) * scenario.elapsed
        components["scatterer_recoil"] = gaussian_overlap(displacement, L_coh)
    else:
        recoil = solve_collective_recoil(m, v, M, V, n_s=2, units=scenario.units)
        displacement = abs(recoil.V_sr[0] - V) * scenario.elapsed
        components["centre_of_mass_recoil"] = gaussian_overlap(displacement, L_coh / math.sqrt(2))

    visibility = math.prod(components.values())
    if visibility >= 0.5:
        verdict = COHERENT
    elif visibility >= 1e-3:
        verdict = PARTIALLY_COHERENT
    else:
        verdict = NO_INTERFERENCE
    return OverlapReport(visibility, components, verdict)


def _envelope_visibility(scenario: ScatteringScenario) -> float:
    bodies = scenario.particles + scenario.scatterers
    if all(body.coherence_length is None for body in bodies):
        return 1.0
    return overlap_visibility(scenario).visibility
