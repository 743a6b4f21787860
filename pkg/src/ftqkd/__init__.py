"""Simulator and analytic toolbox for entanglement-based frequency-time coding QKD."""
from .adversary import EveMode, EvePolicy, EveStrategy, attack_pairs
from .analytics import (
    RatePoint,
    binary_entropy,
    delta_from_jitter,
    jitter_from_delta,
    jitter_sweep,
    key_rate,
    qber_bound,
    qber_exact,
    security_threshold,
)
from .config import ConfigError, SimConfig, load_config
from .model import (
    Basis,
    DetectionEvents,
    DetectorParams,
    OpticalPath,
    Party,
    PhotonPairs,
    SourceParams,
    convert_dispersion,
    detect,
    dispersed_arrival,
    paired_paths,
    sample_pairs,
    spectral_resolution,
)
from .protocol import (
    ProtocolStats,
    SiftedPairs,
    choose_basis,
    estimate_stats,
    gp_decode,
    gp_encode,
    rescale,
    run_session,
    sift,
    simulate_block,
)
from .rng import PairStreams

__version__ = "0.1.0"
