"""Closed-form QBER and key-rate analysis (the non-Monte-Carlo path)."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

from .model import convert_dispersion

SQRT_PI = math.sqrt(math.pi)
DEFAULT_F_EC = 1.16
DEFAULT_DELTA_SCALE = 2.0

_SERIES_CUTOFF = 1e-15
_BISECTION_TOL = 1e-10


@dataclass(frozen=True)
class RatePoint:
    jitter_sigma: float
    delta: float
    qber_bound: float
    qber_exact: float
    key_rate: float


def binary_entropy(e: float) -> float:
    """Shannon entropy in bits of a Bernoulli(e) variable, with H(0) = H(1) = 0."""
    if not 0.0 <= e <= 1.0:
        raise ValueError(f"binary_entropy needs 0 <= e <= 1, got {e}")
    if e == 0.0 or e == 1.0:
        return 0.0
    return -e * math.log2(e) - (1.0 - e) * math.log2(1.0 - e)


def delta_from_jitter(jitter_sigma: float, d_tilde: float, scale: float = DEFAULT_DELTA_SCALE) -> float:
    """Dimensionless conditional-noise width for detector jitter ``jitter_sigma`` ps.

    Two detectors contribute ``sqrt(2) * jitter_sigma`` of timing noise;
    rescaling by ``sqrt(|d_tilde|)`` gives ``sigma_n = delta / sqrt(2)`` with
    the default ``scale`` of 2.
    """
    if d_tilde == 0:
        raise ValueError("delta is undefined for zero dispersion")
    if jitter_sigma < 0:
        raise ValueError("jitter_sigma must be >= 0")
    return scale * jitter_sigma / math.sqrt(abs(d_tilde))


def jitter_from_delta(delta: float, d_tilde: float, scale: float = DEFAULT_DELTA_SCALE) -> float:
    """Inverse of :func:`delta_from_jitter`."""
    if d_tilde == 0:
        raise ValueError("delta is undefined for zero dispersion")
    if delta < 0:
        raise ValueError("delta must be >= 0")
    return delta * math.sqrt(abs(d_tilde)) / scale


def qber_bound(delta: float) -> float:
    """Upper bound ``(2 delta / pi) exp(-pi / (4 delta^2))`` on the QBER."""
    if delta < 0:
        raise ValueError("delta must be >= 0")
    if delta == 0:
        return 0.0
    return 2.0 * delta / math.pi * math.exp(-math.pi / (4.0 * delta * delta))


def _upper_tail(z: float) -> float:
    return 0.5 * math.erfc(z / math.sqrt(2.0))


def qber_exact(delta: float) -> float:
    """Exact error rate of sqrt(pi)-slot parity decoding under Gaussian noise.

    The residual noise has std ``delta / sqrt(2)``; decoding fails whenever
    it lands in an odd slot, ``|n| in [(k - 1/2) sqrt(pi), (k + 1/2) sqrt(pi)]``
    for odd k.
    """
    if delta < 0:
        raise ValueError("delta must be >= 0")
    if delta == 0:
        return 0.0
    sigma_n = delta / math.sqrt(2.0)
    total = 0.0
    k = 1
    while True:
        lo = (k - 0.5) * SQRT_PI / sigma_n
        hi = (k + 0.5) * SQRT_PI / sigma_n
        term = 2.0 * (_upper_tail(lo) - _upper_tail(hi))
        total += term
        if term < _SERIES_CUTOFF:
            return total
        k += 2


def key_rate(e: float, gain: float, f: float) -> float:
    """Secret key rate ``gain/2 * (1 - f H(e) - H(e))``; may be negative."""
    if not 0.0 <= e <= 0.5:
        raise ValueError(f"QBER must lie in [0, 0.5], got {e}")
    if not 0.0 <= gain <= 1.0:
        raise ValueError(f"gain must lie in [0, 1], got {gain}")
    if not f >= 1.0:
        raise ValueError(f"error-correction efficiency must be >= 1, got {f}")
    h = binary_entropy(e)
    return 0.5 * gain * (1.0 - f * h - h)


def security_threshold(f: float = 1.0) -> float:
    """QBER at which the key rate crosses zero, found by bisection on (0, 1/2)."""
    if not f >= 1.0:
        raise ValueError(f"error-correction efficiency must be >= 1, got {f}")

    def residual(e):
        return 1.0 - (1.0 + f) * binary_entropy(e)

    lo, hi = 0.0, 0.5
    while True:
        mid = 0.5 * (lo + hi)
        r = residual(mid)
        if abs(r) < _BISECTION_TOL or hi - lo < 1e-15:
            return mid
        if r > 0:
            lo = mid
        else:
            hi = mid


def jitter_sweep(jitters: Iterable[float], d_ps_per_nm: float = 7000.0, wavelength_nm: float = 1550.0,
                 f: float = DEFAULT_F_EC, gain: float = 1.0,
                 delta_scale: float = DEFAULT_DELTA_SCALE) -> list[RatePoint]:
    """Analytic QBER and key rate versus detector jitter.

    The key rate is evaluated at the QBER bound, i.e. the conservative end.
    """
    jitters = list(jitters)
    if not jitters:
        raise ValueError("jitter list is empty")
    d_tilde = convert_dispersion(d_ps_per_nm, wavelength_nm)
    points = []
    for sigma in jitters:
        delta = delta_from_jitter(sigma, d_tilde, delta_scale)
        bound = qber_bound(delta)
        points.append(RatePoint(
            jitter_sigma=float(sigma),
            delta=delta,
            qber_bound=bound,
            qber_exact=qber_exact(delta),
            key_rate=key_rate(min(bound, 0.5), gain, f),
        ))
    return points
