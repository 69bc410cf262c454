"""
Elastic recoil of particles retro-reflecting from scatterers.

Sign convention: velocities are signed along the x axis; the incident particle
moves towards +x and a retro-reflected particle has its relative velocity with
respect to the scatterers reversed. Ratios are reported signed, as computed.
"""

import logging
from dataclasses import dataclass

import numpy

from .core import NATURAL, SI, DomainError, UnitSystem


class ConvergenceError(DomainError):
    """
    Raised when the recoil root-finder does not converge.
    """

    def __init__(self, message: str, residuals: numpy.ndarray):
        super().__init__(f"{message} (residuals: {numpy.array2string(residuals)})")
        self.residuals = residuals


NO_SCATTERING = "no scattering"


@dataclass(frozen=True)
class RecoilSolution:
    """
    Post-collision velocities and wavevectors of one amplitude branch.
    Each particle/scatterer entry may stand for several identical bodies, counted
    by its weight.
    """

    branch: str
    m: tuple[float, ...]
    M: tuple[float, ...]
    v_in: tuple[float, ...]
    V_in: tuple[float, ...]
    v_pr: tuple[float, ...]
    V_sr: tuple[float, ...]
    k_pr: tuple[float, ...]
    K_sr: tuple[float, ...]
    weights_p: tuple[float, ...] | None = None
    weights_s: tuple[float, ...] | None = None

    @property
    def scattered(self) -> bool:
        return self.branch != NO_SCATTERING

    @property
    def delta_v_p(self) -> float:
        return self.v_pr[0] - self.v_in[0]

    @property
    def delta_v_s(self) -> float:
        return self.V_sr[0] - self.V_in[0]

    def _weights(self) -> tuple[numpy.ndarray, numpy.ndarray]:
        wp = numpy.ones(len(self.m)) if self.weights_p is None else numpy.asarray(self.weights_p)
        ws = numpy.ones(len(self.M)) if self.weights_s is None else numpy.asarray(self.weights_s)
        return wp, ws

    def conservation_residuals(self) -> tuple[float, float]:
        """
        Returns the relative momentum and kinetic energy mismatch between the
        incident and the recoiled configuration.
        """
        wp, ws = self._weights()
        m, M = wp * numpy.asarray(self.m), ws * numpy.asarray(self.M)
        v_in, V_in = numpy.asarray(self.v_in), numpy.asarray(self.V_in)
        v_out, V_out = numpy.asarray(self.v_pr), numpy.asarray(self.V_sr)

        p_in = numpy.dot(m, v_in) + numpy.dot(M, V_in)
        p_out = numpy.dot(m, v_out) + numpy.dot(M, V_out)
        p_scale = numpy.dot(m, numpy.abs(v_in)) + numpy.dot(M, numpy.abs(V_in))

        e_in = numpy.dot(m, v_in**2) + numpy.dot(M, V_in**2)
        e_out = numpy.dot(m, v_out**2) + numpy.dot(M, V_out**2)

        dp = abs(p_out - p_in) / p_scale if p_scale > 0 else abs(p_out - p_in)
        de = abs(e_out - e_in) / e_in if e_in > 0 else abs(e_out - e_in)
        return float(dp), float(de)


@dataclass(frozen=True)
class EnsembleSpec:
    """
    N_p particles of mass m and N_s scatterers of mass M, of which the
    fractions R_p and R_s take part in the collision.
    """

    N_p: int
    N_s: int
    R_p: float
    R_s: float
    m: float
    M: float
    V_p: float
    V_s: float

    def __post_init__(self):
        if self.N_p < 1 or self.N_s < 1:
            raise DomainError("N_p and N_s must be positive integers")
        if not (0 <= self.R_p <= 1 and 0 <= self.R_s <= 1):
            raise DomainError("participation fractions must lie in [0, 1]")
        if not (self.m > 0 and self.M > 0):
            raise DomainError("masses must be strictly positive")
        if self.R_p * self.N_p < 1 or self.R_s * self.N_s < 1:
            raise DomainError("R_p*N_p and R_s*N_s must be at least 1")

    @property
    def particle_weight(self) -> float:
        return self.R_p * self.N_p

    @property
    def scatterer_weight(self) -> float:
        return self.R_s * self.N_s


def _check_masses(*masses: float):
    for mass in masses:
        if not mass > 0:
            raise DomainError(f"masses must be strictly positive, got {mass}")


def solve_two_body_recoil(
    m: float, v: float, M: float, V: float, units: UnitSystem = NATURAL
) -> RecoilSolution:
    """
    Retro-reflection of a particle (m, v) from a single scatterer (M, V).
    """
    _check_masses(m, M)
    v1r = (2 * M * V - M * v + m * v) / (M + m)
    V2r = (M * V - m * V + 2 * m * v) / (M + m)
    return RecoilSolution(
        branch="reflect-from-scatterer",
        m=(m,),
        M=(M,),
        v_in=(v,),
        V_in=(V,),
        v_pr=(v1r,),
        V_sr=(V2r,),
        k_pr=(m * v1r / units.hbar,),
        K_sr=(M * V2r / units.hbar,),
    )


def solve_collective_recoil(
    m: float, v: float, M: float, V: float, n_s: int = 2, units: UnitSystem = NATURAL
) -> RecoilSolution:
    """
    Retro-reflection of a particle from n_s scatterers recoiling together as one
    body of mass n_s*M. The scatterer wavevectors follow the collective
    convention K'_sr = n_s*M*V'_sr/hbar.
    """
    _check_masses(m, M)
    if n_s < 1:
        raise DomainError("n_s must be at least 1")
    total = n_s * M
    v1r = ((m - total) * v + 2 * total * V) / (m + total)
    Vsr = (2 * m * v + (total - m) * V) / (m + total)
    return RecoilSolution(
        branch="collective",
        m=(m,),
        M=(M,) * n_s,
        v_in=(v,),
        V_in=(V,) * n_s,
        v_pr=(v1r,),
        V_sr=(Vsr,) * n_s,
        k_pr=(m * v1r / units.hbar,),
        K_sr=(total * Vsr / units.hbar,) * n_s,
    )


def solve_ensemble_conservation(
    spec: EnsembleSpec, units: UnitSystem = NATURAL
) -> RecoilSolution:
    """
    Solves the ensemble momentum and energy balance for the retro-reflection
    root. Eliminating the scatterer change from the momentum equation leaves a
    quadratic in dV_p whose dV_p = 0 root is the trivial no-scatter one.
    """
    a, b = spec.particle_weight * spec.m, spec.scatterer_weight * spec.M

    if spec.V_p == spec.V_s:
        logging.getLogger(__name__).info(
            "Particles and scatterers co-move, only the trivial root exists"
        )
        dVp = dVs = 0.0
        branch = NO_SCATTERING
    else:
        # Non-trivial root, in the form that reduces exactly to the two-body formulas
        dVp = -2 * b * (spec.V_p - spec.V_s) / (a + b)
        dVs = 2 * a * (spec.V_p - spec.V_s) / (a + b)
        branch = "ensemble"

    v_pr = spec.V_p + dVp
    V_sr = spec.V_s + dVs
    return RecoilSolution(
        branch=branch,
        m=(spec.m,),
        M=(spec.M,),
        v_in=(spec.V_p,),
        V_in=(spec.V_s,),
        v_pr=(v_pr,),
        V_sr=(V_sr,),
        k_pr=(spec.m * v_pr / units.hbar,),
        K_sr=(spec.scatterer_weight * spec.M * V_sr / units.hbar,),
        weights_p=(spec.particle_weight,),
        weights_s=(spec.scatterer_weight,),
    )


def _unequal_residuals(
    x: numpy.ndarray,
    m: float,
    M2: float,
    M3: float,
    p_in: float,
    e_in: float,
    rel_in: float,
    scales: numpy.ndarray,
) -> numpy.ndarray:
    v1, u2, u3 = x
    return (
        numpy.array(
            [
                m * v1 + M2 * u2 + M3 * u3 - p_in,
                m * v1**2 + M2 * u2**2 + M3 * u3**2 - e_in,
                (u3 - u2) - rel_in,
            ]
        )
        / scales
    )


def _unequal_jacobian(
    x: numpy.ndarray, m: float, M2: float, M3: float, scales: numpy.ndarray
) -> numpy.ndarray:
    v1, u2, u3 = x
    return (
        numpy.array(
            [
                [m, M2, M3],
                [2 * m * v1, 2 * M2 * u2, 2 * M3 * u3],
                [0.0, -1.0, 1.0],
            ]
        )
        / scales[:, None]
    )


def solve_unequal_scatterer_recoil(
    m: float,
    v: float,
    M2: float,
    V2: float,
    M3: float,
    V3: float,
    units: UnitSystem = NATURAL,
    tol: float = 1e-12,
    max_iter: int = 100,
) -> RecoilSolution:
    """
    Collective retro-reflection from two scatterers of different masses or
    speeds. Besides momentum and energy conservation, the relative scatterer
    velocity (hence momentum in their c.m. frame) is left unchanged.
    Solved with a damped Newton iteration seeded by the equal-mass solution of
    the pair recoiling as one body.
    """
    _check_masses(m, M2, M3)
    total = M2 + M3
    V_cm = (M2 * V2 + M3 * V3) / total
    velocity_scale = max(abs(v), abs(V2), abs(V3))

    if abs(v - V_cm) <= 1e-15 * max(velocity_scale, 1e-300):
        logging.getLogger(__name__).info(
            "Particle co-moves with the scatterer pair, no scattering"
        )
        return RecoilSolution(
            branch=NO_SCATTERING,
            m=(m,),
            M=(M2, M3),
            v_in=(v,),
            V_in=(V2, V3),
            v_pr=(v,),
            V_sr=(V2, V3),
            k_pr=(m * v / units.hbar,),
            K_sr=(M2 * V2 / units.hbar, M3 * V3 / units.hbar),
        )

    # Newton runs in the scatterer c.m. frame, so a boost of the inputs leaves
    # the iteration unchanged up to rounding
    w, w2, w3 = v - V_cm, V2 - V_cm, V3 - V_cm
    p_in = m * w + M2 * w2 + M3 * w3
    e_in = m * w**2 + M2 * w2**2 + M3 * w3**2
    rel_in = w3 - w2
    scales = numpy.array(
        [
            m * abs(w) + M2 * abs(w2) + M3 * abs(w3),
            e_in,
            max(abs(w), abs(w2), abs(w3)),
        ]
    )

    seed = solve_collective_recoil(m, w, total / 2, 0.0, n_s=2, units=units)
    x = numpy.array([seed.v_pr[0], seed.V_sr[0] + w2, seed.V_sr[1] + w3])
    args = (m, M2, M3, p_in, e_in, rel_in, scales)
    residuals = _unequal_residuals(x, *args)

    def newton_step(x, residuals):
        try:
            return numpy.linalg.solve(_unequal_jacobian(x, m, M2, M3, scales), -residuals)
        except numpy.linalg.LinAlgError:
            raise ConvergenceError("singular recoil Jacobian", residuals) from None

    iteration = 0
    while numpy.max(numpy.abs(residuals)) >= tol:
        if iteration == max_iter:
            raise ConvergenceError(
                "unequal-scatterer recoil did not converge", residuals
            )
        step = newton_step(x, residuals)
        damping = 1.0
        while True:
            candidate = x + damping * step
            candidate_residuals = _unequal_residuals(candidate, *args)
            norm = numpy.linalg.norm(candidate_residuals)
            if norm < numpy.linalg.norm(residuals) or damping < 1e-6:
                break
            damping /= 2
        x, residuals = candidate, candidate_residuals
        iteration += 1

    # Polish to rounding level; Newton converges quadratically from here
    for _ in range(2):
        try:
            candidate = x + newton_step(x, residuals)
        except ConvergenceError:
            break
        candidate_residuals = _unequal_residuals(candidate, *args)
        if numpy.linalg.norm(candidate_residuals) >= numpy.linalg.norm(residuals):
            break
        x, residuals = candidate, candidate_residuals

    logging.getLogger(__name__).debug(
        "Unequal-scatterer recoil converged in %d iterations", iteration
    )
    v1r, u2, u3 = (float(value) + V_cm for value in x)
    return RecoilSolution(
        branch="collective",
        m=(m,),
        M=(M2, M3),
        v_in=(v,),
        V_in=(V2, V3),
        v_pr=(v1r,),
        V_sr=(u2, u3),
        k_pr=(m * v1r / units.hbar,),
        K_sr=(total * u2 / units.hbar, total * u3 / units.hbar),
    )


@dataclass(frozen=True)
class WavevectorShift:
    """
    Relative SQI/CQI wavevector difference: the mass-ratio closed form and the
    value recomputed from the recoil solvers, normalized by the incident m*v/hbar.
    """

    ratio: float
    cross_check: float

    def __float__(self) -> float:
        return self.ratio


def wavevector_ratio_massive(
    m: float, M: float, v: float, V: float, units: UnitSystem = NATURAL
) -> WavevectorShift:
    _check_masses(m, M)
    if v == 0:
        raise DomainError("undefined ratio: incident speed is zero")
    ratio = 2 * m * M * (V - v) / ((m + M) * (m + 2 * M) * v)

    sqi = solve_two_body_recoil(m, v, M, V, units)
    cqi = solve_collective_recoil(m, v, M, V, n_s=2, units=units)
    incident = m * v / units.hbar
    # Reflected wavevectors measured along the retro-reflection direction (-x)
    cross_check = ((-sqi.k_pr[0]) - (-cqi.k_pr[0])) / incident
    return WavevectorShift(ratio, cross_check)


def wavevector_ratio_photon(nu: float, M: float, units: UnitSystem = SI) -> float:
    """
    Relative SQI/CQI wavevector difference for a photon of frequency nu
    retro-reflecting from scatterers of mass M.
    """
    _check_masses(M)
    if nu < 0:
        raise DomainError("photon frequency cannot be negative")
    return units.h * nu / (M * units.c**2)


def reduced_mass(m_total: float, M_total: float) -> float:
    _check_masses(m_total, M_total)
    return m_total * M_total / (m_total + M_total)


def relative_wavevector(
    m_total: float, M_total: float, v: float, V: float, units: UnitSystem = NATURAL
) -> float:
    """
    Returns the wavevector of the particle-scatterer relative motion, mu*(v-V)/hbar.
    """
    return reduced_mass(m_total, M_total) * (v - V) / units.hbar


def classical_offsets(
    m: float, v: float, M: float, V: float, x0: float, n_s: int = 1
) -> tuple[float, float]:
    """
    Returns the offsets (x_1, x_s) such that the reflected classical trajectories
    x_1 + v_r*t and x_s + V_r*t pass through the meeting point of the incident
    particle (from the origin) and the scatterer starting at x0.
    """
    if v == V:
        raise DomainError("the particle never reaches the scatterer")
    solution = solve_collective_recoil(m, v, M, V, n_s=n_s)
    t_meet = x0 / (v - V)
    x_meet = v * t_meet
    if t_meet < 0:
        raise DomainError("the particle moves away from the scatterer")
    return (
        x_meet - solution.v_pr[0] * t_meet,
        x_meet - solution.V_sr[0] * t_meet,
    )


def heavy_scatterer_gap(m: float, v: float, M: float, V: float) -> float:
    """
    Returns |v_1r(SQI) - v'_1r(CQI)|, the particle recoil difference between models.
    """
    sqi = solve_two_body_recoil(m, v, M, V)
    cqi = solve_collective_recoil(m, v, M, V, n_s=2)
    return abs(sqi.v_pr[0] - cqi.v_pr[0])
