import math

import numpy as np
import pytest

from cqistudio.core import NATURAL, SI, DomainError
from cqistudio.kinematics import (
    NO_SCATTERING,
    EnsembleSpec,
    classical_offsets,
    heavy_scatterer_gap,
    reduced_mass,
    relative_wavevector,
    solve_collective_recoil,
    solve_ensemble_conservation,
    solve_two_body_recoil,
    solve_unequal_scatterer_recoil,
    wavevector_ratio_massive,
    wavevector_ratio_photon,
)
from cqistudio.utils.constants import NEON_MASS_U, Codata


@pytest.mark.parametrize(
    "M, v1r, V2r",
    [
        (1, 0.0, 1.0),
        (3, -0.5, 0.5),
        (1e6, -1.0, 2e-6),
    ],
)
def test_two_body_recoil(M, v1r, V2r):
    solution = solve_two_body_recoil(1, 1, M, 0)
    assert solution.v_pr[0] == pytest.approx(v1r, rel=1e-5, abs=1e-12)
    assert solution.V_sr[0] == pytest.approx(V2r, rel=1e-5, abs=1e-12)
    assert solution.k_pr[0] == pytest.approx(solution.v_pr[0], abs=1e-12)
    assert solution.K_sr[0] == pytest.approx(M * solution.V_sr[0])


def test_collective_recoil():
    solution = solve_collective_recoil(1, 1, 1, 0, n_s=2)
    assert solution.v_pr[0] == pytest.approx(-1 / 3)
    assert solution.V_sr == pytest.approx((2 / 3, 2 / 3))
    # Collective convention: K = n_s * M * V / hbar
    assert solution.K_sr[0] == pytest.approx(4 / 3)


def test_collective_recoil_limits():
    assert solve_collective_recoil(1, 1, 1e9, 0).v_pr[0] == pytest.approx(-1, rel=1e-8)
    co_moving = solve_collective_recoil(1, 1, 1, 1)
    assert co_moving.v_pr[0] == pytest.approx(1)
    assert co_moving.V_sr[0] == pytest.approx(1)


def test_invalid_masses():
    with pytest.raises(DomainError):
        solve_two_body_recoil(0, 1, 1, 0)
    with pytest.raises(DomainError):
        solve_collective_recoil(1, 1, -1, 0)
    with pytest.raises(DomainError):
        solve_collective_recoil(1, 1, 1, 0, n_s=0)


def all_solvers(rng):
    m, M, M3 = rng.uniform(0.1, 10, size=3)
    v, V, V3 = rng.uniform(-5, 5, size=3)
    n_s = int(rng.integers(1, 5))
    N_p, N_s = (int(n) for n in rng.integers(1, 4, size=2))
    return {
        "two-body": lambda u: solve_two_body_recoil(m, v + u, M, V + u),
        "collective": lambda u: solve_collective_recoil(m, v + u, M, V + u, n_s),
        "ensemble": lambda u: solve_ensemble_conservation(
            EnsembleSpec(N_p, N_s, 1, 1, m, M, v + u, V + u)
        ),
        "unequal": lambda u: solve_unequal_scatterer_recoil(m, v + u, M, V + u, M3, V3 + u),
    }


def test_conservation_random_draws():
    rng = np.random.default_rng(7)
    for _ in range(10_000):
        for name, solve in all_solvers(rng).items():
            dp, de = solve(0.0).conservation_residuals()
            assert dp < 1e-12, name
            assert de < 1e-12, name


def test_galilean_covariance():
    rng = np.random.default_rng(11)
    for _ in range(500):
        u = rng.uniform(-5, 5)
        for name, solve in all_solvers(rng).items():
            rest, boosted = solve(0.0), solve(u)
            np.testing.assert_allclose(
                boosted.v_pr, np.add(rest.v_pr, u), rtol=0, atol=1e-10, err_msg=name
            )
            np.testing.assert_allclose(
                boosted.V_sr, np.add(rest.V_sr, u), rtol=0, atol=1e-10, err_msg=name
            )


@pytest.mark.parametrize(
    "N_p, N_s, dVp, dVs",
    [
        (1, 2, -4 / 3, 2 / 3),
        (1, 1, -1.0, 1.0),
        (2, 2, -1.0, 1.0),
    ],
)
def test_ensemble_conservation(N_p, N_s, dVp, dVs):
    spec = EnsembleSpec(N_p=N_p, N_s=N_s, R_p=1, R_s=1, m=1, M=1, V_p=1, V_s=0)
    solution = solve_ensemble_conservation(spec)
    assert solution.delta_v_p == pytest.approx(dVp)
    assert solution.delta_v_s == pytest.approx(dVs)
    dp, de = solution.conservation_residuals()
    assert dp < 1e-12
    assert de < 1e-12


def test_ensemble_reduces_to_closed_forms():
    rng = np.random.default_rng(3)
    for _ in range(200):
        m, M = rng.uniform(0.1, 10, size=2)
        v, V = rng.uniform(-5, 5, size=2)
        single = solve_ensemble_conservation(EnsembleSpec(1, 1, 1, 1, m, M, v, V))
        pair = solve_ensemble_conservation(EnsembleSpec(1, 2, 1, 1, m, M, v, V))
        two_body = solve_two_body_recoil(m, v, M, V)
        collective = solve_collective_recoil(m, v, M, V, n_s=2)
        assert single.v_pr[0] == pytest.approx(two_body.v_pr[0], abs=1e-10)
        assert single.V_sr[0] == pytest.approx(two_body.V_sr[0], abs=1e-10)
        assert pair.v_pr[0] == pytest.approx(collective.v_pr[0], abs=1e-10)
        assert pair.K_sr[0] == pytest.approx(collective.K_sr[0], rel=1e-10, abs=1e-10)


def test_ensemble_co_moving():
    solution = solve_ensemble_conservation(EnsembleSpec(1, 1, 1, 1, 1, 1, 2, 2))
    assert solution.branch == NO_SCATTERING
    assert not solution.scattered
    assert solution.delta_v_p == 0


def test_ensemble_validation():
    with pytest.raises(DomainError):
        EnsembleSpec(N_p=1, N_s=2, R_p=1, R_s=0.2, m=1, M=1, V_p=1, V_s=0)
    with pytest.raises(DomainError):
        EnsembleSpec(N_p=0, N_s=2, R_p=1, R_s=1, m=1, M=1, V_p=1, V_s=0)


def test_unequal_symmetric_reduction():
    unequal = solve_unequal_scatterer_recoil(1, 1, 1, 0, 1, 0)
    collective = solve_collective_recoil(1, 1, 1, 0, n_s=2)
    assert unequal.v_pr[0] == pytest.approx(collective.v_pr[0], abs=1e-12)
    assert unequal.V_sr == pytest.approx(collective.V_sr, abs=1e-12)


def test_unequal_masses():
    solution = solve_unequal_scatterer_recoil(1, 1, 1, 0, 3, 0)
    v1, u2, u3 = solution.v_pr[0], *solution.V_sr
    assert 1 * v1 + 1 * u2 + 3 * u3 == pytest.approx(1, abs=1e-10)
    assert v1**2 + u2**2 + 3 * u3**2 == pytest.approx(1, abs=1e-10)
    assert u3 - u2 == pytest.approx(0, abs=1e-10)
    # The pair recoils as one body of mass 4
    assert v1 == pytest.approx(-3 / 5, abs=1e-10)
    assert u2 == pytest.approx(2 / 5, abs=1e-10)


def test_unequal_speeds_keep_relative_velocity():
    solution = solve_unequal_scatterer_recoil(1, 2, 1.5, 0.2, 0.7, -0.3)
    dp, de = solution.conservation_residuals()
    assert dp < 1e-10
    assert de < 1e-10
    assert solution.V_sr[1] - solution.V_sr[0] == pytest.approx(-0.5, abs=1e-10)


def test_unequal_co_moving():
    solution = solve_unequal_scatterer_recoil(1, 1, 2, 1, 5, 1)
    assert solution.branch == NO_SCATTERING


def test_wavevector_ratio_equal_masses():
    shift = wavevector_ratio_massive(1, 1, 1, 0)
    assert shift.ratio == pytest.approx(-1 / 3)
    assert shift.cross_check == pytest.approx(-1 / 3)
    assert float(shift) == shift.ratio


def test_wavevector_ratio_matches_solvers():
    rng = np.random.default_rng(5)
    for _ in range(500):
        m, M = rng.uniform(0.1, 10, size=2)
        v = rng.uniform(0.1, 5)
        V = rng.uniform(-5, 5)
        shift = wavevector_ratio_massive(m, M, v, V)
        assert shift.cross_check == pytest.approx(shift.ratio, rel=1e-9, abs=1e-12)


def test_wavevector_ratio_electron_neon():
    m = Codata.ElectronMass.value
    M = NEON_MASS_U * Codata.AtomicMassConstant.value
    shift = wavevector_ratio_massive(m, M, 1e6, 0, SI)
    assert abs(shift.ratio) == pytest.approx(2.7e-5, rel=0.02)
    assert shift.cross_check == pytest.approx(shift.ratio, rel=1e-6)


def test_wavevector_ratio_edge_cases():
    assert wavevector_ratio_massive(1, 1, 2, 2).ratio == 0
    with pytest.raises(DomainError, match="undefined ratio"):
        wavevector_ratio_massive(1, 1, 0, 0)


def test_ratio_unit_consistency():
    natural = wavevector_ratio_massive(2, 3, 1.5, 0.25, NATURAL)
    si = wavevector_ratio_massive(2, 3, 1.5, 0.25, SI)
    assert si.ratio == pytest.approx(natural.ratio, rel=1e-10)
    assert si.cross_check == pytest.approx(natural.cross_check, rel=1e-10)


def test_wavevector_ratio_photon():
    nu = Codata.SpeedOfLight.value / 500e-9
    ratio = wavevector_ratio_photon(nu, Codata.AtomicMassConstant.value)
    assert ratio == pytest.approx(2.66e-9, rel=0.01)
    assert wavevector_ratio_photon(0, 1) == 0
    assert wavevector_ratio_photon(nu, 1e30) < 1e-40
    with pytest.raises(DomainError):
        wavevector_ratio_photon(-1, 1)


def test_reduced_mass_and_relative_wavevector():
    assert reduced_mass(1, 2) == pytest.approx(2 / 3)
    assert relative_wavevector(1, 2, 2, 0.5) == pytest.approx(1.0)
    with pytest.raises(DomainError):
        reduced_mass(0, 1)


def test_heavy_scatterer_gap():
    gaps = [heavy_scatterer_gap(1, 1, M, 0) for M in (10, 100, 1000, 10000)]
    assert all(a > b for a, b in zip(gaps, gaps[1:]))
    rng = np.random.default_rng(13)
    for _ in range(200):
        m = rng.uniform(0.1, 10)
        M = m * rng.uniform(100, 1e6)
        v, V = rng.uniform(-5, 5, size=2)
        assert heavy_scatterer_gap(m, v, M, V) <= 4 * m / M * abs(v - V) + 1e-12


def test_classical_offsets_meet():
    m, v, M, V, x0 = 1.0, 2.0, 3.0, 0.5, 4.0
    x_1, x_s = classical_offsets(m, v, M, V, x0)
    solution = solve_two_body_recoil(m, v, M, V)
    t = x0 / (v - V)
    meeting = v * t
    assert x_1 + solution.v_pr[0] * t == pytest.approx(meeting)
    assert x_s + solution.V_sr[0] * t == pytest.approx(meeting)
    assert x0 + V * t == pytest.approx(meeting)


def test_classical_offsets_no_meeting():
    with pytest.raises(DomainError):
        classical_offsets(1, 1, 1, 1, 1)
    with pytest.raises(DomainError):
        classical_offsets(1, 0.5, 1, 1, 1)


def test_equal_mass_offsets():
    # Equal masses: the particle stops at x0 and the scatterer leaves from there
    x_1, x_s = classical_offsets(1, 1, 1, 0, 1)
    assert x_1 == pytest.approx(1)
    assert x_s == pytest.approx(0)
    assert math.isclose(heavy_scatterer_gap(1, 1, 1, 1), 0, abs_tol=1e-15)
