"""Sifting, continuous-to-bit extraction and session statistics."""
from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields

import numpy as np

from .adversary import attack_pairs
from .analytics import SQRT_PI, key_rate
from .model import Basis, DetectionEvents, Party, detect, dispersed_arrival, sample_pairs
from .rng import PairStreams, Slot

CHUNK_PAIRS = 1 << 16


@dataclass
class SiftedPairs:
    """Matched-basis pairs; ``u_a``/``u_b`` are timestamps divided by tau."""

    basis: np.ndarray
    u_a: np.ndarray
    u_b: np.ndarray

    def __len__(self) -> int:
        return len(self.basis)


@dataclass(frozen=True)
class ProtocolStats:
    pairs_emitted: int
    pairs_sifted: int
    gain: float
    qber_time: float
    qber_freq: float
    qber_overall: float
    cond_variance: float
    delta_estimate: float
    key_rate: float

    def as_row(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def choose_basis(rng: PairStreams, party: Party) -> np.ndarray:
    """Passive 50/50 beam-splitter basis choice, one per pair."""
    slot = Slot.BASIS_A if Party(party) is Party.ALICE else Slot.BASIS_B
    return np.where(rng.uniform(slot) < 0.5, Basis.TIME, Basis.FREQUENCY).astype(np.int8)


def rescale(timestamp, tau: float):
    if not tau > 0:
        raise ValueError("tau must be > 0")
    return np.asarray(timestamp, dtype=np.float64) / tau


def sift(events_a: DetectionEvents, events_b: DetectionEvents, tau: float) -> SiftedPairs:
    """Keep index-aligned pairs where both arms clicked in the same basis."""
    if len(events_a) != len(events_b):
        raise ValueError(f"event lists differ in length: {len(events_a)} != {len(events_b)}")
    keep = events_a.detected & events_b.detected & (events_a.basis == events_b.basis)
    return SiftedPairs(
        basis=events_a.basis[keep],
        u_a=rescale(events_a.timestamp[keep], tau),
        u_b=rescale(events_b.timestamp[keep], tau),
    )


def gp_encode(u_a):
    """Split ``u_a`` into a key bit (parity of its sqrt(pi) slot) and the public in-slot offset."""
    u_a = np.asarray(u_a, dtype=np.float64)
    slot = np.floor(u_a / SQRT_PI)
    bit = np.mod(slot, 2).astype(np.int8)
    offset = u_a - slot * SQRT_PI
    if bit.ndim == 0:
        return int(bit), float(offset)
    return bit, offset


def _round_half_away(x):
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


def gp_decode(u_b, offset):
    """Bob's bit: parity of the sqrt(pi) slot nearest to ``u_b - offset``."""
    m = _round_half_away((np.asarray(u_b, dtype=np.float64) - offset) / SQRT_PI)
    bit = np.mod(m, 2).astype(np.int8)
    return int(bit) if bit.ndim == 0 else bit


@dataclass
class _Tally:
    """Mergeable per-chunk aggregates. Merging in a fixed order is bit-stable."""

    n_time: int = 0
    err_time: int = 0
    n_freq: int = 0
    err_freq: int = 0
    n: int = 0
    mean: float = 0.0
    m2: float = 0.0

    @classmethod
    def from_sifted(cls, sifted: SiftedPairs) -> "_Tally":
        bit_a, offset = gp_encode(sifted.u_a)
        bit_b = gp_decode(sifted.u_b, offset)
        err = np.atleast_1d(bit_a != bit_b)
        is_time = np.atleast_1d(sifted.basis == Basis.TIME)
        tally = cls(
            n_time=int(is_time.sum()),
            err_time=int(err[is_time].sum()),
            n_freq=int((~is_time).sum()),
            err_freq=int(err[~is_time].sum()),
        )
        if len(sifted):
            diff = sifted.u_b - sifted.u_a
            tally.n = diff.size
            tally.mean = float(diff.mean())
            tally.m2 = float(((diff - tally.mean) ** 2).sum())
        return tally

    def merge(self, other: "_Tally") -> "_Tally":
        n = self.n + other.n
        if n == 0:
            mean, m2 = 0.0, 0.0
        else:
            d = other.mean - self.mean
            mean = self.mean + d * other.n / n
            m2 = self.m2 + other.m2 + d * d * self.n * other.n / n
        return _Tally(self.n_time + other.n_time, self.err_time + other.err_time,
                      self.n_freq + other.n_freq, self.err_freq + other.err_freq, n, mean, m2)

    def finish(self, pairs_emitted: int, f: float) -> ProtocolStats:
        sifted = self.n_time + self.n_freq
        if sifted == 0:
            raise ValueError("no sifted pairs: QBER is undefined")
        if pairs_emitted < sifted:
            raise ValueError("pairs_emitted is smaller than the sifted count")
        qber = (self.err_time + self.err_freq) / sifted
        cond_variance = self.m2 / self.n
        gain = sifted / pairs_emitted
        return ProtocolStats(
            pairs_emitted=pairs_emitted,
            pairs_sifted=sifted,
            gain=gain,
            qber_time=self.err_time / self.n_time if self.n_time else math.nan,
            qber_freq=self.err_freq / self.n_freq if self.n_freq else math.nan,
            qber_overall=qber,
            cond_variance=cond_variance,
            delta_estimate=math.sqrt(2.0 * cond_variance),
            # above 1/2 the bits are as good as anti-correlated noise; charge the maximum
            key_rate=key_rate(min(qber, 0.5), gain, f),
        )


def estimate_stats(sifted: SiftedPairs, pairs_emitted: int, f: float) -> ProtocolStats:
    """Per-basis and overall QBER, conditional variance and key rate of a sifted batch."""
    if len(sifted) == 0:
        raise ValueError("no sifted pairs: QBER is undefined")
    return _Tally.from_sifted(sifted).finish(pairs_emitted, f)


def simulate_block(config, seed: int, start: int, stop: int) -> SiftedPairs:
    """Sifted data for pairs ``start <= i < stop`` of a session."""
    streams = PairStreams.for_range(seed, start, stop)
    src = config.source
    pairs = attack_pairs(sample_pairs(src, streams), config.eve, src, streams)
    arms = ((Party.ALICE, pairs.t_a, pairs.nu_a), (Party.BOB, pairs.t_b, pairs.nu_b))
    events = []
    for party, t, nu in arms:
        path = config.paths[party]
        basis = choose_basis(streams, party)
        arrival = np.where(basis == Basis.FREQUENCY,
                           dispersed_arrival(t, nu, path.d_tilde, src.nu_center), t)
        events.append(detect(arrival, basis, config.detectors[party], path, streams, party))
    return sift(events[0], events[1], config.tau)


def _simulate_chunk(config, seed: int, start: int, stop: int) -> _Tally:
    return _Tally.from_sifted(simulate_block(config, seed, start, stop))


def default_workers() -> int:
    return max(1, int(os.environ.get("FTQKD_WORKERS", "1")))


def run_session(config, seed: int | None = None, workers: int | None = None) -> ProtocolStats:
    """Simulate ``config.pairs`` pairs end to end and aggregate the statistics.

    Pairs are processed in fixed-size chunks whose tallies are merged in
    chunk order, so the result is bit-identical for any ``workers``.
    """
    seed = config.seed if seed is None else seed
    workers = default_workers() if workers is None else max(1, int(workers))
    bounds = [(s, min(s + CHUNK_PAIRS, config.pairs)) for s in range(0, config.pairs, CHUNK_PAIRS)]
    if workers == 1 or len(bounds) == 1:
        tallies = [_simulate_chunk(config, seed, a, b) for a, b in bounds]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            tallies = list(pool.map(_simulate_chunk, [config] * len(bounds), [seed] * len(bounds),
                                    [a for a, _ in bounds], [b for _, b in bounds]))
    total = _Tally()
    for tally in tallies:
        total = total.merge(tally)
    if total.n == 0:
        raise RuntimeError("session produced no sifted pairs")
    return total.finish(config.pairs, config.f_ec)
