"""
Scene -> gated slow-time matrix, streaming over symbol chunks.

Range profiles for the full (M x N) grid are held in memory only when they fit
`max_bytes`; otherwise the chain integrates power in a first pass and
re-synthesizes the gated bins in a second. Both routes give identical output
because every symbol depends only on its index and the noise key; gated
samples are rounded to complex64 either way (the profile file precision).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .receiver import (Detection, SlowTimeMatrix, detect_from_power, estimate_channels,
                       range_profiles)
from .synth import Scene, map_chunks, noise_variance, received_block
from .waveform import newman_symbol


@dataclass
class Observation:
    scene: Scene
    detection: Detection
    stm: SlowTimeMatrix | None

    @property
    def found(self) -> bool:
        return self.detection.found


def _profiles_for(scene: Scene, x, variance: float):
    cfg = scene.cfg
    window = scene.processing.range_window

    def run(idx):
        y = received_block(scene, idx, x, variance)
        return range_profiles(estimate_channels(y, x, cfg), cfg, window)
    return run


def observe(scene: Scene, chunk: int = 512, workers: int = 1,
            max_bytes: int = 400 * 2**20, threshold_db: float | None = None) -> Observation:
    cfg = scene.cfg
    x = newman_symbol(cfg)
    variance = noise_variance(scene, x)
    run = _profiles_for(scene, x, variance)
    thr = scene.processing.detect_threshold_db if threshold_db is None else threshold_db
    keep = cfg.n_symbols * cfg.n_carriers * 8 <= max_bytes

    def pass1(idx):
        r = run(idx)
        p = np.sum(np.abs(r) ** 2, axis=0)
        return p, (r.astype(np.complex64) if keep else None)

    parts = map_chunks(pass1, cfg.n_symbols, chunk, workers)
    power = np.sum([p for p, _ in parts], axis=0) / cfg.n_symbols
    det = detect_from_power(power, thr)
    if not det.found:
        return Observation(scene, det, None)
    gate = det.gate
    if keep:
        data = np.concatenate([r[:, gate] for _, r in parts], axis=0).T.astype(complex)
    else:
        data = np.concatenate(map_chunks(lambda idx: run(idx)[:, gate].astype(np.complex64),
                                         cfg.n_symbols, chunk, workers), axis=0).T.astype(complex)
    meta = {"n_carriers": cfg.n_carriers, "sample_rate": cfg.sample_rate,
            "center_freq": cfg.center_freq}
    return Observation(scene, det, SlowTimeMatrix(data, gate, cfg.symbol_period, meta))
