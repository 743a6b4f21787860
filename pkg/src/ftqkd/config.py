"""Simulation configuration: JSON document plus dotted-key overrides.

Example document (every key optional)::

    {
      "source": {"sigma_single_ghz": 100, "emission_window": 10000},
      "detectors": {"alice": {"jitter_sigma": 40}, "bob": {"jitter_sigma": 40}},
      "paths": {"dispersion_ps_per_nm": 7000, "wavelength_nm": 1550},
      "eve": {"mode": "intercept-resend", "measure_basis_policy": "time"},
      "pairs": 1000000, "seed": 7, "f_ec": 1.16
    }

Only ``nu_pump``, ``nu_center``, ``sigma_single`` and ``sigma_corr_nu`` accept
a ``_ghz`` variant (converted on merge, so the last one written wins);
everything else is in ps, ps^-1, nm or dB.
"""
from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

from .adversary import EveStrategy
from .analytics import DEFAULT_DELTA_SCALE, DEFAULT_F_EC
from .model import DetectorParams, OpticalPath, Party, SourceParams, optical_frequency, paired_paths


class ConfigError(ValueError):
    """Invalid configuration; the message starts with the offending field path."""


_PARTIES = ("alice", "bob")
_FREQ_FIELDS = ("nu_pump", "nu_center", "sigma_single", "sigma_corr_nu")

DEFAULTS: dict[str, Any] = {
    "source": {
        "nu_pump": None,  # None: twice the optical frequency at paths.wavelength_nm
        "nu_center": None,  # None: nu_pump / 2
        "sigma_single": 0.1,
        "sigma_corr_nu": 0.0,
        "emission_window": 10_000.0,
        "sigma_corr_t": 1.0,
    },
    "detectors": {p: {"jitter_sigma": 70.0, "efficiency": 1.0} for p in _PARTIES},
    "paths": {
        "dispersion_ps_per_nm": 7000.0,
        "wavelength_nm": 1550.0,
        **{p: {"insertion_loss_db": 5.0, "channel_loss_db": 0.0} for p in _PARTIES},
    },
    "eve": {
        "mode": "none",
        "measure_basis_policy": "time",
        "eve_jitter_sigma": 70.0,  # same detector class as Alice and Bob
        "eve_freq_sigma": 0.0,
        "resend_sigma_t": None,
        "resend_sigma_nu": None,
        "intercept_fraction": 1.0,
    },
    "pairs": 1_000_000,
    "seed": 1,
    "f_ec": DEFAULT_F_EC,
    "delta_scale": DEFAULT_DELTA_SCALE,
}


@dataclass(frozen=True)
class SimConfig:
    source: SourceParams = field(default_factory=SourceParams)
    detectors: dict = field(default_factory=lambda: {p: DetectorParams() for p in Party})
    paths: dict = field(default_factory=paired_paths)
    eve: EveStrategy = field(default_factory=EveStrategy)
    pairs: int = 1_000_000
    seed: int = 1
    f_ec: float = DEFAULT_F_EC
    delta_scale: float = DEFAULT_DELTA_SCALE

    def __post_init__(self):
        a, b = self.paths[Party.ALICE], self.paths[Party.BOB]
        if a.dispersion_ps_per_nm != -b.dispersion_ps_per_nm or a.wavelength_nm != b.wavelength_nm:
            raise ConfigError("paths: Alice and Bob need opposite-sign, equal-magnitude dispersion")
        if a.dispersion_ps_per_nm == 0:
            raise ConfigError("paths.dispersion_ps_per_nm: must be nonzero")
        if self.pairs < 1:
            raise ConfigError("pairs: must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed: must be a 64-bit unsigned integer")
        if not self.f_ec >= 1:
            raise ConfigError("f_ec: must be >= 1")
        if not (math.isfinite(self.delta_scale) and self.delta_scale > 0):
            raise ConfigError("delta_scale: must be > 0")

    @property
    def d_tilde(self) -> float:
        """Alice's (positive) dispersion in ps^2."""
        return self.paths[Party.ALICE].d_tilde

    @property
    def tau(self) -> float:
        return math.sqrt(abs(self.d_tilde))


def _merge(base: dict, update: Mapping, prefix: str = "") -> None:
    for key, value in update.items():
        where = f"{prefix}{key}"
        if key not in base:
            if prefix == "source." and key.endswith("_ghz") and key[:-4] in _FREQ_FIELDS:
                base[key[:-4]] = _number(value, where) / 1000.0
                continue
            raise ConfigError(f"{where}: unknown key")
        if isinstance(base[key], dict):
            if not isinstance(value, Mapping):
                raise ConfigError(f"{where}: expected an object")
            _merge(base[key], value, where + ".")
        else:
            base[key] = value


def _override(raw: dict, dotted: str, value: Any) -> None:
    *parents, leaf = dotted.split(".")
    _merge(raw, _nest(parents, {leaf: value}))


def _nest(parents: list[str], leaf: dict) -> dict:
    for key in reversed(parents):
        leaf = {key: leaf}
    return leaf


def _number(value, where: str, allow_none: bool = False):
    if value is None and allow_none:
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where}: expected a number, got {value!r}")
    return float(value)


def _integer(value, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        if isinstance(value, float) and value.is_integer():
            return int(value)
        raise ConfigError(f"{where}: expected an integer, got {value!r}")
    return value


def _build(cls, kwargs: dict, where: str):
    try:
        return cls(**kwargs)
    except ValueError as exc:
        raise ConfigError(f"{where}.{exc}") from None


def from_dict(raw: Mapping) -> SimConfig:
    """Validate a fully merged raw document and build the config."""
    paths_raw = raw["paths"]
    wavelength = _number(paths_raw["wavelength_nm"], "paths.wavelength_nm")
    dispersion = _number(paths_raw["dispersion_ps_per_nm"], "paths.dispersion_ps_per_nm")
    if not wavelength > 0:
        raise ConfigError("paths.wavelength_nm: must be > 0")
    if dispersion == 0 or not math.isfinite(dispersion):
        raise ConfigError("paths.dispersion_ps_per_nm: must be finite and nonzero")

    src = {k: _number(v, f"source.{k}", allow_none=k in ("nu_pump", "nu_center"))
           for k, v in raw["source"].items()}
    if src["nu_pump"] is None:
        src["nu_pump"] = 2.0 * optical_frequency(wavelength)
    source = _build(SourceParams, src, "source")

    detectors = {}
    for name in _PARTIES:
        where = f"detectors.{name}"
        kw = {k: _number(v, f"{where}.{k}") for k, v in raw["detectors"][name].items()}
        detectors[Party(name)] = _build(DetectorParams, kw, where)

    losses = {}
    for name in _PARTIES:
        where = f"paths.{name}"
        losses[name] = {k: _number(v, f"{where}.{k}") for k, v in paths_raw[name].items()}
        _build(OpticalPath, {"dispersion_ps_per_nm": dispersion, "wavelength_nm": wavelength,
                             **losses[name]}, where)
    paths = paired_paths(
        dispersion, wavelength,
        insertion_loss_db=tuple(losses[p]["insertion_loss_db"] for p in _PARTIES),
        channel_loss_db=tuple(losses[p]["channel_loss_db"] for p in _PARTIES),
    )

    eve_raw = dict(raw["eve"])
    for k in ("eve_jitter_sigma", "eve_freq_sigma", "resend_sigma_t", "resend_sigma_nu", "intercept_fraction"):
        eve_raw[k] = _number(eve_raw[k], f"eve.{k}", allow_none=k.startswith("resend"))
    try:
        eve = EveStrategy(**eve_raw)
    except ValueError as exc:
        raise ConfigError(f"eve.{exc}") from None

    return SimConfig(
        source=source,
        detectors=detectors,
        paths=paths,
        eve=eve,
        pairs=_integer(raw["pairs"], "pairs"),
        seed=_integer(raw["seed"], "seed"),
        f_ec=_number(raw["f_ec"], "f_ec"),
        delta_scale=_number(raw["delta_scale"], "delta_scale"),
    )


def load_config(path: str | Path | None = None, overrides: Mapping[str, Any] | None = None) -> SimConfig:
    """Defaults, then the JSON file at ``path``, then dotted-key ``overrides``.

    >>> load_config(overrides={"detectors.alice.jitter_sigma": 40.0}).detectors[Party.ALICE].jitter_sigma
    40.0
    """
    raw = copy.deepcopy(DEFAULTS)
    if path is not None:
        try:
            document = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from None
        if not isinstance(document, dict):
            raise ConfigError(f"{path}: top level must be an object")
        _merge(raw, document)
    for dotted, value in (overrides or {}).items():
        _override(raw, dotted, value)
    return from_dict(raw)
