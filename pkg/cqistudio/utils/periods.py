"""
Fringe period and visibility estimation on uniformly sampled signals.
"""

import logging

import numpy
from scipy.optimize import curve_fit

from ..core import DomainError

# Zero-padding factor of the coarse FFT estimate
PADDING = 16


def _check_uniform(x: numpy.ndarray, y: numpy.ndarray) -> float:
    if x.ndim != 1 or x.shape != y.shape:
        raise DomainError("samples must be 1D arrays of the same length")
    if x.size < 8:
        raise DomainError("at least 8 samples are needed to estimate a period")
    steps = numpy.diff(x)
    dx = float(steps.mean())
    if not dx > 0 or not numpy.allclose(steps, dx, rtol=1e-6, atol=0):
        raise DomainError("samples must be uniformly spaced and increasing")
    return dx


def _sinusoid(u, a, b, c, f):
    phase = 2 * numpy.pi * f * u
    return a + b * numpy.cos(phase) + c * numpy.sin(phase)


def _coarse_frequency(y: numpy.ndarray, dx: float) -> float:
    """
    Returns the dominant frequency from the peak of a Hann-windowed, zero-padded
    FFT, refined by a parabola through the peak bin and its neighbours.
    """
    signal = (y - y.mean()) * numpy.hanning(y.size)
    n_fft = 1 << int(numpy.ceil(numpy.log2(PADDING * y.size)))
    spectrum = numpy.abs(numpy.fft.rfft(signal, n_fft))
    freqs = numpy.fft.rfftfreq(n_fft, dx)

    peak = int(numpy.argmax(spectrum[1:])) + 1
    if spectrum[peak] == 0:
        raise DomainError("signal has no oscillating component")
    if peak == spectrum.size - 1:
        return float(freqs[peak])

    left, centre, right = spectrum[peak - 1 : peak + 2]
    denominator = left - 2 * centre + right
    shift = 0.5 * (left - right) / denominator if denominator != 0 else 0.0
    return float(freqs[peak] + shift * (freqs[1] - freqs[0]))


def estimate_period(x, y, refine: bool = True) -> float:
    """
    Estimates the period of the dominant oscillation of y(x).

    The coarse estimate comes from the FFT peak; with `refine` a sinusoid
    a + b*cos + c*sin is then least-squares fitted to the samples, which
    recovers the period of a noiseless fringe to near machine precision.
    """
    x = numpy.asarray(x, dtype=float)
    y = numpy.asarray(y, dtype=float)
    dx = _check_uniform(x, y)
    frequency = _coarse_frequency(y, dx)
    if not refine:
        return 1.0 / frequency

    # Fit in a centred, unit-span coordinate to keep the parameters well scaled
    centre = 0.5 * (x[0] + x[-1])
    span = x[-1] - x[0]
    u = (x - centre) / span
    f0 = frequency * span
    a0, b0, c0 = _linear_fit(u, y, f0)
    try:
        popt, _ = curve_fit(
            _sinusoid,
            u,
            y,
            p0=(a0, b0, c0, f0),
            ftol=1e-12,
            xtol=1e-12,
            maxfev=10000,
        )
    except RuntimeError as e:
        logging.getLogger(__name__).warning(
            "Period refinement failed (%s), keeping the FFT estimate", e
        )
        return 1.0 / frequency
    return float(span / abs(popt[3]))


def _linear_fit(u: numpy.ndarray, y: numpy.ndarray, f: float):
    phase = 2 * numpy.pi * f * u
    design = numpy.column_stack(
        [numpy.ones_like(u), numpy.cos(phase), numpy.sin(phase)]
    )
    coefficients, *_ = numpy.linalg.lstsq(design, y, rcond=None)
    return coefficients


def fringe_visibility(x, y, period: float) -> float:
    """
    Returns the visibility (max - min)/(max + min) of the fringe of known period
    best fitting y(x), from a linear least-squares fit of 1, cos and sin.
    """
    x = numpy.asarray(x, dtype=float)
    y = numpy.asarray(y, dtype=float)
    if not period > 0:
        raise DomainError(f"period must be strictly positive, got {period}")
    a, b, c = _linear_fit(x, y, 1.0 / period)
    if not a > 0:
        raise DomainError("fringe has no positive mean")
    return float(min(numpy.hypot(b, c) / a, 1.0))
