"""Intercept-resend eavesdropper on Bob's arm."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from .model import PhotonPairs, SourceParams
from .rng import PairStreams, Slot


class EveMode(str, Enum):
    NONE = "none"
    INTERCEPT_RESEND = "intercept-resend"


class EvePolicy(str, Enum):
    ALWAYS_TIME = "time"
    ALWAYS_FREQUENCY = "frequency"
    RANDOM = "random"


@dataclass(frozen=True)
class EveStrategy:
    """Eavesdropper configuration.

    Eve measures one variable of Bob's photon (arrival time with std
    ``eve_jitter_sigma`` ps, or frequency with std ``eve_freq_sigma`` ps^-1)
    and resends a photon carrying her estimate. The conjugate variable of the
    resent photon is drawn fresh around its source-level center; ``None``
    widths default to ``10 * sigma_single`` (frequency) and
    ``emission_window`` (time).
    """

    mode: EveMode = EveMode.NONE
    measure_basis_policy: EvePolicy = EvePolicy.ALWAYS_TIME
    eve_jitter_sigma: float = 70.0
    eve_freq_sigma: float = 0.0
    resend_sigma_t: float | None = None
    resend_sigma_nu: float | None = None
    intercept_fraction: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "mode", EveMode(self.mode))
        object.__setattr__(self, "measure_basis_policy", EvePolicy(self.measure_basis_policy))
        for name in ("eve_jitter_sigma", "eve_freq_sigma", "resend_sigma_t", "resend_sigma_nu"):
            value = getattr(self, name)
            if value is not None and not (math.isfinite(value) and value >= 0):
                raise ValueError(f"{name}: must be a finite number >= 0")
        if not 0.0 <= self.intercept_fraction <= 1.0:
            raise ValueError("intercept_fraction: must lie in [0, 1]")

    @property
    def active(self) -> bool:
        return self.mode is EveMode.INTERCEPT_RESEND and self.intercept_fraction > 0


def attack_pairs(pairs: PhotonPairs, strategy: EveStrategy, src: SourceParams,
                 rng: PairStreams) -> PhotonPairs:
    """Return the pairs after Eve has acted on Bob's arm.

    Alice's arrays are passed through untouched. With ``mode`` none the input
    object itself is returned.
    """
    if not strategy.active:
        return pairs
    n = len(pairs)
    hit = rng.uniform(Slot.EVE_INTERCEPT) < strategy.intercept_fraction
    policy = strategy.measure_basis_policy
    if policy is EvePolicy.ALWAYS_TIME:
        eve_time = np.ones(n, dtype=bool)
    elif policy is EvePolicy.ALWAYS_FREQUENCY:
        eve_time = np.zeros(n, dtype=bool)
    else:
        eve_time = rng.uniform(Slot.EVE_BASIS) < 0.5

    sigma_t = src.emission_window if strategy.resend_sigma_t is None else strategy.resend_sigma_t
    sigma_nu = 10.0 * src.sigma_single if strategy.resend_sigma_nu is None else strategy.resend_sigma_nu
    measure = rng.normal(Slot.EVE_MEASURE)
    conj = rng.normal(Slot.EVE_CONJ)

    # measured variable: Bob's value plus Eve's resolution; conjugate: fresh draw
    t_measured = pairs.t_b + strategy.eve_jitter_sigma * measure
    nu_fresh = (src.nu_pump - src.nu_center) + sigma_nu * conj
    nu_measured = pairs.nu_b + strategy.eve_freq_sigma * measure
    t_fresh = 0.5 * src.emission_window + sigma_t * conj

    t_b = np.where(hit, np.where(eve_time, t_measured, t_fresh), pairs.t_b)
    nu_b = np.where(hit, np.where(eve_time, nu_fresh, nu_measured), pairs.nu_b)
    return replace(pairs, t_b=t_b, nu_b=nu_b)
