"""
Coherent to incoherent transition predictors for slabs and dimers.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum

from .core import SI, DomainError, UnitSystem
from .utils.constants import Codata

TRANSITION_REGION = "transition region"
COHERENT = "coherent"
INCOHERENT = "incoherent"
DIMER_COHERENT = "coherent (no rotation path information)"
DIMER_INCOHERENT = "incoherent (rotation path information)"

# Margins this close to 1 are reported as the transition region
BOUNDARY_BAND = (0.99, 1.01)


class Probe(Enum):
    Photon = "photon"
    Neutron = "neutron"


class Scope(Enum):
    Slab = "slab"
    Atom = "atom"


@dataclass(frozen=True)
class TransitionReport:
    name: str
    inequality: str
    threshold: float
    value: float
    margin: float
    verdict: str

    def as_row(self) -> dict[str, float | str]:
        return {
            "name": self.name,
            "inequality": self.inequality,
            "threshold": self.threshold,
            "value": self.value,
            "margin": self.margin,
            "verdict": self.verdict,
        }


def classify(margin: float, below: str, above: str) -> str:
    """
    Returns `below` for margin < 1, `above` for margin > 1, or the transition
    region when the margin lies within the boundary band.
    """
    low, high = BOUNDARY_BAND
    if low <= margin <= high:
        return TRANSITION_REGION
    return below if margin < 1 else above


def _positive(**values: float):
    for name, value in values.items():
        if value is None or not value > 0:
            raise DomainError(f"{name} must be strictly positive, got {value}")


@dataclass(frozen=True)
class SlabSpec:
    """
    A transparent slab of thickness D and mass M made of atoms of mass m_atom
    at temperature T, crossed by a photon of frequency nu or a neutron of mass m_n.
    """

    D: float
    M: float
    m_atom: float
    n_g: float
    T: float
    probe: Probe = Probe.Photon
    nu: float | None = None
    m_n: float = Codata.NeutronMass.value

    def __post_init__(self):
        if isinstance(self.probe, str):
            object.__setattr__(self, "probe", Probe(self.probe.lower()))
        _positive(D=self.D, M=self.M, m_atom=self.m_atom, T=self.T)
        if not self.n_g >= 1:
            raise DomainError(f"n_g must be at least 1, got {self.n_g}")
        if self.probe is Probe.Photon:
            _positive(nu=self.nu)
        else:
            _positive(m_n=self.m_n)


@dataclass(frozen=True)
class DimerSpec:
    d0: float
    dL: float
    wavelength: float

    def __post_init__(self):
        _positive(d0=self.d0, dL=self.dL, wavelength=self.wavelength)


def slab_displacement(
    spec: SlabSpec, per: Scope | str = Scope.Slab, units: UnitSystem = SI
) -> float:
    """
    Displacement of the slab (or of one free atom of it) while the probe is
    delayed by the group index: D(n_g-1)h*nu/(Mc^2) for photons,
    D(n_g-1)m_n/M for neutrons.
    """
    if isinstance(per, str):
        per = Scope(per.lower())
    mass = spec.M if per is Scope.Slab else spec.m_atom
    if spec.probe is Probe.Photon:
        return spec.D * (spec.n_g - 1) * units.h * spec.nu / (mass * units.c**2)
    return spec.D * (spec.n_g - 1) * spec.m_n / mass


def thermal_coherence_length(M: float, T: float, units: UnitSystem = SI) -> float:
    _positive(M=M, T=T)
    return units.h / math.sqrt(2 * M * units.kB * T)


def slab_transition(spec: SlabSpec, units: UnitSystem = SI) -> TransitionReport:
    """
    Interference vanishes once a single atom is displaced by more than its
    thermal coherence length.
    """
    coherence_length = thermal_coherence_length(spec.m_atom, spec.T, units)
    displacement = slab_displacement(spec, Scope.Atom, units)
    margin = displacement / coherence_length
    report = TransitionReport(
        name=f"slab-{spec.probe.value}",
        inequality="L_c < dS_atom",
        threshold=coherence_length,
        value=displacement,
        margin=margin,
        verdict=classify(margin, COHERENT, INCOHERENT),
    )
    logging.getLogger(__name__).debug("Slab transition: %s", report)
    return report


def dimer_threshold_wavelength(d0: float, dL: float, units: UnitSystem = SI) -> float:
    _positive(d0=d0, dL=dL)
    return units.h * d0 / dL


def dimer_transition(spec: DimerSpec, units: UnitSystem = SI) -> TransitionReport:
    """
    A dimer keeps no record of the path when the incident wavelength exceeds
    h*d0/dL, the angular momentum it could absorb being below its uncertainty.
    """
    threshold = dimer_threshold_wavelength(spec.d0, spec.dL, units)
    margin = spec.wavelength / threshold
    return TransitionReport(
        name="dimer",
        inequality="lambda_0 > h*d_0/dL",
        threshold=threshold,
        value=spec.wavelength,
        margin=margin,
        verdict=classify(margin, DIMER_INCOHERENT, DIMER_COHERENT),
    )
