import numpy as np
import pytest

from cqistudio.core import DomainError
from cqistudio.utils.periods import estimate_period, fringe_visibility


@pytest.mark.parametrize("period", [0.37, 1.3, 2 * np.pi])
def test_estimate_period(period):
    x = np.linspace(-3, 17, 801)
    y = 1 + 0.5 * np.cos(2 * np.pi * x / period + 0.4)
    assert estimate_period(x, y) == pytest.approx(period, rel=1e-8)


def test_coarse_estimate():
    x = np.linspace(0, 20, 801)
    y = np.cos(2 * np.pi * x / 1.3)
    assert estimate_period(x, y, refine=False) == pytest.approx(1.3, rel=0.02)


def test_estimate_period_cos2():
    x = np.linspace(0, 20, 1001)
    y = np.cos(0.75 * x) ** 2
    assert estimate_period(x, y) == pytest.approx(np.pi / 0.75, rel=1e-8)


def test_estimate_period_validation():
    with pytest.raises(DomainError):
        estimate_period(np.arange(5.0), np.ones(5))
    x = np.linspace(0, 1, 20) ** 2
    with pytest.raises(DomainError):
        estimate_period(x, np.cos(x))
    with pytest.raises(DomainError):
        estimate_period(np.linspace(0, 1, 20), np.ones(20))


def test_fringe_visibility():
    x = np.linspace(0, 7, 301)
    y = 2 + 0.6 * np.sin(2 * np.pi * x / 2.0)
    assert fringe_visibility(x, y, 2.0) == pytest.approx(0.3, abs=1e-10)
    assert fringe_visibility(x, np.full(x.size, 3.0), 2.0) == pytest.approx(0, abs=1e-12)
    with pytest.raises(DomainError):
        fringe_visibility(x, y, 0.0)
