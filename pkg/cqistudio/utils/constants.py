from enum import Enum


class Codata(Enum):
    """
    CODATA 2018 recommended values, SI units.
    This is the only place where physical constants are written down.
    """

    PlanckConstant = 6.62607015e-34  # J s
    ReducedPlanckConstant = 1.054571817e-34  # J s
    SpeedOfLight = 299792458.0  # m / s
    BoltzmannConstant = 1.380649e-23  # J / K
    AtomicMassConstant = 1.66053906660e-27  # kg
    ElectronMass = 9.1093837015e-31  # kg
    NeutronMass = 1.67492749804e-27  # kg


# Masses used by the worked examples, in atomic mass units
NEON_MASS_U = 20.18
HYDROGEN_BOND_LENGTH = 0.74e-10  # m, H2 internuclear distance
