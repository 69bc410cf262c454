import logging
import math
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy
from scipy.integrate import trapezoid

from .utils.constants import Codata


class DomainError(ValueError):
    """
    Raised when the inputs of an operation leave its physical domain.
    """


class UnitMode(Enum):
    Natural = "natural"
    SI = "si"


class Model(Enum):
    """
    Superposition model: standard (one scatterer recoils per amplitude) or
    collective (every scatterer recoils in every amplitude).
    """

    SQI = "SQI"
    CQI = "CQI"


@dataclass(frozen=True)
class UnitSystem:
    hbar: float
    h: float
    c: float
    kB: float
    mode: UnitMode

    def __post_init__(self):
        if not math.isclose(self.h, 2 * math.pi * self.hbar, rel_tol=1e-12):
            raise DomainError("h must equal 2*pi*hbar")

    @property
    def label(self) -> str:
        """
        Returns the unit annotation used in CSV headers.
        """
        return "natural" if self.mode is UnitMode.Natural else "SI"


def make_unit_system(mode: UnitMode | str = UnitMode.Natural) -> UnitSystem:
    """
    Returns the constants of the requested unit mode.
    Natural units set hbar = c = kB = 1; SI units come from the CODATA table.
    """
    if isinstance(mode, str):
        try:
            mode = UnitMode(mode.lower())
        except ValueError:
            raise DomainError(f"Unknown unit mode {mode!r}") from None

    if mode is UnitMode.Natural:
        return UnitSystem(hbar=1.0, h=2 * math.pi, c=1.0, kB=1.0, mode=mode)

    # h is exact in SI, hbar follows from it
    h = Codata.PlanckConstant.value
    return UnitSystem(
        hbar=h / (2 * math.pi),
        h=h,
        c=Codata.SpeedOfLight.value,
        kB=Codata.BoltzmannConstant.value,
        mode=mode,
    )


NATURAL = make_unit_system(UnitMode.Natural)
SI = make_unit_system(UnitMode.SI)


@dataclass(frozen=True)
class Body:
    """
    One particle or scatterer. A coherence length of None means a momentum
    eigenstate (infinite coherence length).
    """

    mass: float
    velocity: float = 0.0
    position: float = 0.0
    coherence_length: float | None = None

    def __post_init__(self):
        if not self.mass > 0:
            raise DomainError(f"mass must be strictly positive, got {self.mass}")
        if self.coherence_length is not None and not self.coherence_length > 0:
            raise DomainError(
                f"coherence_length must be strictly positive, got {self.coherence_length}"
            )

    @property
    def momentum(self) -> float:
        return self.mass * self.velocity


@dataclass(frozen=True)
class ScatteringScenario:
    """
    A few-body configuration: one or two particles retro-reflecting from two
    scatterers initially separated by x0.
    """

    particles: tuple[Body, ...]
    scatterers: tuple[Body, ...]
    x0: float
    model: Model = Model.SQI
    d: float | None = None
    unequal: bool = False
    # Time since the interaction at which recoil separations are evaluated
    elapsed: float = 0.0
    units: UnitSystem = field(default=NATURAL)

    def __post_init__(self):
        object.__setattr__(self, "particles", tuple(self.particles))
        object.__setattr__(self, "scatterers", tuple(self.scatterers))
        if isinstance(self.model, str):
            object.__setattr__(self, "model", Model(self.model.upper()))

        if len(self.particles) not in (1, 2):
            raise DomainError("a scenario holds one or two particles")
        if len(self.scatterers) != 2:
            raise DomainError("a scenario holds exactly two scatterers")
        if not self.x0 > 0:
            raise DomainError(f"x0 must be strictly positive, got {self.x0}")
        if self.d is not None and not self.d > 0:
            raise DomainError(f"d must be strictly positive, got {self.d}")
        if self.elapsed < 0:
            raise DomainError("elapsed time cannot be negative")

        if not self.unequal and not _identical(self.scatterers):
            raise DomainError(
                "scatterers must share mass and velocity unless 'unequal' is set"
            )
        if len(self.particles) == 2 and not _identical(self.particles):
            raise DomainError("four-body scenarios need identical particles")

    @classmethod
    def three_body(
        cls,
        m: float,
        v: float,
        M: float,
        V: float,
        x0: float,
        model: Model | str = Model.SQI,
        l_coh: float | None = None,
        L_coh: float | None = None,
        elapsed: float = 0.0,
        units: UnitSystem = NATURAL,
    ) -> "ScatteringScenario":
        """
        Builds the particle + two equal scatterers configuration, the particle
        starting at the origin and the scatterers at 0 and x0.
        """
        return cls(
            particles=(Body(m, v, 0.0, l_coh),),
            scatterers=(Body(M, V, 0.0, L_coh), Body(M, V, x0, L_coh)),
            x0=x0,
            model=model,
            elapsed=elapsed,
            units=units,
        )

    @classmethod
    def four_body(
        cls,
        m: float,
        v: float,
        M: float,
        V: float,
        x0: float,
        d: float,
        units: UnitSystem = NATURAL,
    ) -> "ScatteringScenario":
        return cls(
            particles=(Body(m, v, -d), Body(m, v, 0.0)),
            scatterers=(Body(M, V, 0.0), Body(M, V, x0)),
            x0=x0,
            model=Model.CQI,
            d=d,
            units=units,
        )

    def with_model(self, model: Model) -> "ScatteringScenario":
        return replace(self, model=model)

    @property
    def m(self) -> float:
        return self.particles[0].mass

    @property
    def v(self) -> float:
        return self.particles[0].velocity

    @property
    def M(self) -> float:
        return self.scatterers[0].mass

    @property
    def V(self) -> float:
        return self.scatterers[0].velocity

    @property
    def hbar(self) -> float:
        return self.units.hbar

    @property
    def particle_coherence_length(self) -> float:
        lc = self.particles[0].coherence_length
        return math.inf if lc is None else lc

    @property
    def scatterer_coherence_length(self) -> float:
        lc = self.scatterers[0].coherence_length
        return math.inf if lc is None else lc

    def coherence_regime(self) -> dict[str, float | bool]:
        """
        Returns the coherence bookkeeping of the scenario: the particle coherence
        length against the path difference 2*x0, the scatterer coherence length
        against their separation x0.
        """
        particle_ratio = self.particle_coherence_length / (2 * self.x0)
        scatterer_ratio = self.scatterer_coherence_length / self.x0
        return {
            "particle_ratio": particle_ratio,
            "scatterer_ratio": scatterer_ratio,
            "particle_coherent": particle_ratio > 1.0,
            "scatterers_localized": scatterer_ratio < 1.0,
        }


def _identical(bodies: tuple[Body, ...]) -> bool:
    first = bodies[0]
    return all(
        math.isclose(b.mass, first.mass, rel_tol=1e-12)
        and math.isclose(b.velocity, first.velocity, rel_tol=1e-12, abs_tol=1e-300)
        for b in bodies[1:]
    )


@dataclass(frozen=True, eq=False)
class PdfGrid:
    """
    A probability density sampled on a rectilinear grid.
    `norm` is the cumulated factor divided out by normalize() (1 for raw grids).
    """

    axes: tuple[tuple[str, numpy.ndarray], ...]
    values: numpy.ndarray
    norm: float = 1.0

    def __post_init__(self):
        axes = tuple((str(name), numpy.asarray(s, dtype=float)) for name, s in self.axes)
        values = numpy.asarray(self.values, dtype=float)
        object.__setattr__(self, "axes", axes)
        object.__setattr__(self, "values", values)

        for name, samples in axes:
            if samples.ndim != 1 or samples.size < 2:
                raise DomainError(f"axis {name!r} needs at least 2 samples")
            if not numpy.all(numpy.diff(samples) > 0):
                raise DomainError(f"axis {name!r} must be strictly increasing")
        if values.shape != tuple(s.size for _, s in axes):
            raise DomainError(
                f"values shape {values.shape} does not match the axes"
            )
        if not numpy.all(numpy.isfinite(values)):
            raise DomainError("PDF values must be finite")
        if values.min() < 0:
            raise DomainError("PDF values must be non-negative")

    @property
    def names(self) -> list[str]:
        return [name for name, _ in self.axes]

    def axis(self, name: str) -> numpy.ndarray:
        for axis_name, samples in self.axes:
            if axis_name == name:
                return samples
        raise KeyError(name)

    def integral(self) -> float:
        """
        Returns the trapezoidal integral over every axis.
        """
        result = self.values
        for _, samples in reversed(self.axes):
            result = trapezoid(result, samples, axis=-1)
        return float(result)

    def integrate_out(self, name: str) -> "PdfGrid":
        """
        Traces one coordinate out of the density.
        """
        index = self.names.index(name)
        if len(self.axes) == 1:
            raise DomainError("cannot integrate out the last axis")
        values = trapezoid(self.values, self.axes[index][1], axis=index)
        axes = self.axes[:index] + self.axes[index + 1 :]
        return PdfGrid(axes, values, self.norm)


def normalize(grid: PdfGrid) -> PdfGrid:
    """
    Rescales the grid so that its trapezoidal integral is 1.
    """
    total = grid.integral()
    if not total > 0:
        raise DomainError("degenerate PDF")
    logging.getLogger(__name__).debug("Normalizing PDF grid by %g", total)
    return PdfGrid(grid.axes, grid.values / total, grid.norm * total)
