"""Entangled source, dispersive paths and jittered time-resolving detectors.

Units: times in ps, optical frequencies in ps^-1 (i.e. THz), dispersion in
ps/nm at the configuration boundary and ps^2 internally.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum, IntEnum

import numpy as np

from .rng import PairStreams, Slot

SPEED_OF_LIGHT_NM_PER_PS = 299792.458
DEFAULT_WAVELENGTH_NM = 1550.0
DEFAULT_DISPERSION_PS_PER_NM = 7000.0


class Party(str, Enum):
    ALICE = "alice"
    BOB = "bob"


class Basis(IntEnum):
    TIME = 0
    FREQUENCY = 1


def optical_frequency(wavelength_nm: float) -> float:
    """Optical frequency (ps^-1) of light at ``wavelength_nm``."""
    return SPEED_OF_LIGHT_NM_PER_PS / wavelength_nm


@dataclass(frozen=True)
class SourceParams:
    """SPDC pair source.

    ``nu_center`` is the shared detuning reference used by both dispersive
    measurements; it defaults to half the pump frequency.
    """

    nu_pump: float = 2.0 * optical_frequency(DEFAULT_WAVELENGTH_NM)
    nu_center: float | None = None
    sigma_single: float = 0.1
    sigma_corr_nu: float = 0.0
    emission_window: float = 10_000.0
    sigma_corr_t: float = 1.0

    def __post_init__(self):
        if self.nu_center is None:
            object.__setattr__(self, "nu_center", self.nu_pump / 2.0)
        for name in ("nu_pump", "nu_center", "sigma_single", "sigma_corr_nu",
                     "emission_window", "sigma_corr_t"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name}: must be finite")
        if self.nu_pump <= 0:
            raise ValueError("nu_pump: must be > 0")
        if self.emission_window <= 0:
            raise ValueError("emission_window: must be > 0")
        for name in ("sigma_single", "sigma_corr_nu", "sigma_corr_t"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name}: must be >= 0")


@dataclass(frozen=True)
class DetectorParams:
    jitter_sigma: float = 70.0
    efficiency: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.jitter_sigma) and self.jitter_sigma >= 0):
            raise ValueError("jitter_sigma: must be a finite number >= 0")
        if not 0.0 <= self.efficiency <= 1.0:
            raise ValueError("efficiency: must lie in [0, 1]")


@dataclass(frozen=True)
class OpticalPath:
    """One party's optical path.

    The insertion loss belongs to the dispersive element and only applies to
    photons routed into the frequency-basis arm.
    """

    dispersion_ps_per_nm: float = DEFAULT_DISPERSION_PS_PER_NM
    wavelength_nm: float = DEFAULT_WAVELENGTH_NM
    insertion_loss_db: float = 5.0
    channel_loss_db: float = 0.0

    def __post_init__(self):
        if not math.isfinite(self.dispersion_ps_per_nm):
            raise ValueError("dispersion_ps_per_nm: must be finite")
        if not (math.isfinite(self.wavelength_nm) and self.wavelength_nm > 0):
            raise ValueError("wavelength_nm: must be > 0")
        for name in ("insertion_loss_db", "channel_loss_db"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 0):
                raise ValueError(f"{name}: must be a finite number >= 0")

    @property
    def d_tilde(self) -> float:
        return convert_dispersion(self.dispersion_ps_per_nm, self.wavelength_nm)

    def transmission(self, basis):
        """Power transmission for photons measured in ``basis`` (scalar or array)."""
        basis = np.asarray(basis)
        loss = self.channel_loss_db + np.where(basis == Basis.FREQUENCY, self.insertion_loss_db, 0.0)
        return 10.0 ** (-loss / 10.0)


def paired_paths(dispersion_ps_per_nm: float = DEFAULT_DISPERSION_PS_PER_NM,
                 wavelength_nm: float = DEFAULT_WAVELENGTH_NM,
                 insertion_loss_db: tuple[float, float] = (5.0, 5.0),
                 channel_loss_db: tuple[float, float] = (0.0, 0.0)) -> dict[Party, OpticalPath]:
    """Alice's and Bob's paths with equal-magnitude, opposite-sign dispersion."""
    magnitude = abs(dispersion_ps_per_nm)
    return {
        Party.ALICE: OpticalPath(magnitude, wavelength_nm, insertion_loss_db[0], channel_loss_db[0]),
        Party.BOB: OpticalPath(-magnitude, wavelength_nm, insertion_loss_db[1], channel_loss_db[1]),
    }


@dataclass
class PhotonPairs:
    """A batch of sampled pairs, one array element per pair."""

    t_emit: np.ndarray
    t_a: np.ndarray
    t_b: np.ndarray
    nu_a: np.ndarray
    nu_b: np.ndarray

    def __len__(self) -> int:
        return len(self.t_emit)


@dataclass
class DetectionEvents:
    """One party's measurement record for a batch of pairs.

    ``timestamp`` is NaN wherever ``detected`` is False.
    """

    party: Party
    basis: np.ndarray
    timestamp: np.ndarray
    detected: np.ndarray = field(repr=False)

    def __len__(self) -> int:
        return len(self.basis)


def convert_dispersion(d_ps_per_nm: float, wavelength_nm: float) -> float:
    """Convert a dispersion coefficient from ps/nm to ps per ps^-1 (ps^2).

    The group-delay slope with respect to optical frequency is
    ``D * lambda**2 / c``; the sign of ``D`` is kept.

    >>> round(convert_dispersion(7000, 1550))
    56097
    """
    if not (math.isfinite(d_ps_per_nm) and math.isfinite(wavelength_nm)):
        raise ValueError("dispersion and wavelength must be finite")
    if wavelength_nm <= 0:
        raise ValueError("wavelength_nm must be > 0")
    return d_ps_per_nm * wavelength_nm**2 / SPEED_OF_LIGHT_NM_PER_PS


def spectral_resolution(time_resolution: float, d_ps_per_nm: float) -> float:
    """Wavelength resolution (nm) of a dispersive spectrometer with timing resolution ``time_resolution`` ps."""
    if d_ps_per_nm == 0:
        raise ValueError("spectral resolution is undefined for zero dispersion")
    if not (math.isfinite(time_resolution) and math.isfinite(d_ps_per_nm)):
        raise ValueError("inputs must be finite")
    return time_resolution / abs(d_ps_per_nm)


def sample_pairs(src: SourceParams, rng: PairStreams) -> PhotonPairs:
    """Draw one SPDC pair per index in ``rng``."""
    t_emit = src.emission_window * rng.uniform(Slot.EMIT)
    half_dt = 0.5 * src.sigma_corr_t * rng.normal(Slot.DT)
    nu_a = src.nu_center + src.sigma_single * rng.normal(Slot.NU_A)
    nu_b = src.nu_pump - nu_a
    if src.sigma_corr_nu > 0:
        nu_b = nu_b + src.sigma_corr_nu * rng.normal(Slot.NU_CORR)
    return PhotonPairs(t_emit=t_emit, t_a=t_emit + half_dt, t_b=t_emit - half_dt, nu_a=nu_a, nu_b=nu_b)


def dispersed_arrival(t, nu, d_tilde: float, nu_center: float):
    """Arrival time after a dispersive element: ``t + d_tilde * (nu - nu_center)``."""
    return t + d_tilde * (nu - nu_center)


def detect(t_arrival, basis, det: DetectorParams, path: OpticalPath, rng: PairStreams,
           party: Party) -> DetectionEvents:
    """Apply path loss, detector efficiency and timing jitter.

    ``t_arrival`` is the dispersed arrival time for frequency-basis photons
    and the raw arm time for time-basis photons.
    """
    party = Party(party)
    if party is Party.ALICE:
        click_slot, jitter_slot = Slot.DETECT_A, Slot.JITTER_A
    else:
        click_slot, jitter_slot = Slot.DETECT_B, Slot.JITTER_B
    t_arrival = np.asarray(t_arrival, dtype=np.float64)
    basis = np.broadcast_to(np.asarray(basis, dtype=np.int8), t_arrival.shape)
    p_click = det.efficiency * path.transmission(basis)
    detected = rng.uniform(click_slot) < p_click
    stamp = t_arrival
    if det.jitter_sigma > 0:
        stamp = t_arrival + det.jitter_sigma * rng.normal(jitter_slot)
    timestamp = np.where(detected, stamp, np.nan)
    return DetectionEvents(party=party, basis=np.array(basis), timestamp=timestamp, detected=detected)
