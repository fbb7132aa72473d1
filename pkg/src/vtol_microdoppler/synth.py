"""
Forward model: per-symbol frequency-domain channel synthesis from scatterer
states (stop-and-hop) and receive-symbol generation with counter-keyed noise.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .airframe import FlightMode, VtolAirframe, scatterer_arrays
from .geometry import SPEED_OF_LIGHT, BistaticGeometry, bistatic_range
from .waveform import FreqSymbol, OfdmConfig, Role, newman_symbol


@dataclass(frozen=True)
class ProcessingParams:
    """Receiver/feature knobs carried alongside a scene."""

    window: str = "hann"
    range_window: str = "hann"
    stft_window_len: int = 128
    stft_hop: int | None = None  # defaults to window_len // 4
    detect_threshold_db: float = 12.0
    floor_margin_db: float = 10.0
    comb_margin_db: float = 6.0
    use_gate_sum: bool = True
    remove_direct_delay: bool = False

    @property
    def hop(self) -> int:
        return self.stft_hop if self.stft_hop else max(1, self.stft_window_len // 4)


@dataclass(frozen=True)
class Scene:
    geometry: BistaticGeometry
    airframe: VtolAirframe
    mode: FlightMode
    cfg: OfdmConfig
    snr_db: float | None = 20.0  # None means noiseless
    noise_seed: int = 0
    include_direct_path: bool = False
    direct_path_gain: float = 1.0
    processing: ProcessingParams = field(default_factory=ProcessingParams)

    def __post_init__(self):
        object.__setattr__(self, "mode", FlightMode.parse(self.mode))
        if self.snr_db is not None and not math.isfinite(self.snr_db):
            raise ValueError("snr_db must be finite or None (noiseless)")
        if self.airframe.position != self.geometry.target_ref:
            object.__setattr__(self, "airframe", self.airframe.placed_at(self.geometry.target_ref))

    @property
    def noiseless(self) -> bool:
        return self.snr_db is None


@dataclass(frozen=True)
class ChannelSnapshot:
    h: FreqSymbol
    symbol_index: int
    slow_time: float


def _phase_factors(n: int) -> tuple[int, int]:
    """Split the N-bin grid into an a x b product (a*b >= N) for phase tables."""
    b = int(math.ceil(math.sqrt(n)))
    a = int(math.ceil(n / b))
    return a, b


def channel_from_delays(delays: np.ndarray, amps: np.ndarray, cfg: OfdmConfig,
                        reference_delay: float = 0.0) -> np.ndarray:
    """Sum of point-scatterer responses on the carrier grid.

    delays, amps: (n_sym, K). Returns H of shape (n_sym, N) in FFT bin order,
    H[m, n] = sum_k amps[m, k] * exp(-j 2 pi (f_c + f_n) (tau[m, k] - reference_delay)).

    The per-bin factor z**s (s the signed bin index) is built from two short
    cumulative-product tables and contracted with a batched matmul, which
    avoids one complex exponential per (symbol, scatterer, bin).
    """
    n = cfg.n_carriers
    tau = np.asarray(delays, dtype=float) - reference_delay
    amps = np.asarray(amps, dtype=complex)
    n_sym, k = tau.shape
    if k == 0:
        return np.zeros((n_sym, n), dtype=complex)
    a, b = _phase_factors(n)
    s0 = -(n // 2)  # most negative signed index
    step = -2 * np.pi * tau * (cfg.sample_rate / n)  # phase per bin
    carrier = amps * np.exp(-2j * np.pi * cfg.center_freq * tau) * np.exp(1j * step * s0)
    z = np.exp(1j * step)
    zb = np.exp(1j * step * b)
    fine = np.empty((n_sym, k, b), dtype=complex)
    fine[..., 0] = 1.0
    fine[..., 1:] = z[..., None]
    np.cumprod(fine, axis=-1, out=fine)
    coarse = np.empty((n_sym, k, a), dtype=complex)
    coarse[..., 0] = carrier
    coarse[..., 1:] = zb[..., None]
    np.cumprod(coarse, axis=-1, out=coarse)
    grid = np.matmul(coarse.transpose(0, 2, 1), fine).reshape(n_sym, a * b)[:, :n]
    # grid is indexed by signed bin s0 + i; rotate into FFT order
    return np.roll(grid, s0, axis=1)


def scatterer_delays(scene: Scene, times):
    """Delays and spreading-scaled amplitudes for all scatterers at `times`."""
    arr = scatterer_arrays(scene.airframe, scene.mode, times)
    geom = scene.geometry
    pos = arr.pos
    r_tx = np.linalg.norm(pos - np.asarray(geom.tx_pos), axis=-1)
    r_rx = np.linalg.norm(pos - np.asarray(geom.rx_pos), axis=-1)
    tau = (r_tx + r_rx) / SPEED_OF_LIGHT
    amps = arr.reflectivity[None, :] / (r_tx * r_rx)
    if scene.include_direct_path:
        base = geom.baseline
        d_tau = np.full((tau.shape[0], 1), base / SPEED_OF_LIGHT)
        d_amp = np.full((tau.shape[0], 1), scene.direct_path_gain / max(base, 1e-9), dtype=complex)
        tau = np.concatenate([tau, d_tau], axis=1)
        amps = np.concatenate([amps, d_amp], axis=1)
    return tau, amps


def reference_delay(scene: Scene) -> float:
    if scene.processing.remove_direct_delay:
        return scene.geometry.baseline / SPEED_OF_LIGHT
    return 0.0


def synthesize_channels(scene: Scene, symbol_indices) -> np.ndarray:
    """Noiseless channel H_m for the given symbol indices, shape (len, N)."""
    m = np.atleast_1d(np.asarray(symbol_indices))
    if m.size and (m.min() < 0 or m.max() >= scene.cfg.n_symbols):
        raise IndexError("symbol index out of range [0, M)")
    times = m * scene.cfg.symbol_period
    tau, amps = scatterer_delays(scene, times)
    return channel_from_delays(tau, amps, scene.cfg, reference_delay(scene))


def synthesize_channel(scene: Scene, m: int) -> ChannelSnapshot:
    h = synthesize_channels(scene, [m])[0]
    return ChannelSnapshot(FreqSymbol(h, Role.CHANNEL), int(m), m * scene.cfg.symbol_period)


def noise_variance(scene: Scene, x: FreqSymbol | None = None) -> float:
    """Per-bin complex noise variance giving the scene's receiver-referred SNR.

    Reference power is the mean |H_0 X|^2 over energized bins of symbol 0, so it
    does not depend on which symbols are evaluated. A scene whose channel is
    identically zero gets unit-variance noise.
    """
    if scene.noiseless:
        return 0.0
    x = newman_symbol(scene.cfg) if x is None else x
    h0 = synthesize_channels(scene, [0])[0]
    e = scene.cfg.energized_set
    p_ref = float(np.mean(np.abs(h0[e] * x.bins[e]) ** 2))
    if p_ref == 0.0:
        return 1.0
    return p_ref / 10 ** (scene.snr_db / 10)


def noise_block(seed: int, symbol_indices, n: int, variance: float) -> np.ndarray:
    """Circular Gaussian noise keyed by (seed, symbol); bin n is stream position n."""
    m = np.atleast_1d(np.asarray(symbol_indices))
    out = np.empty((m.size, n), dtype=complex)
    scale = math.sqrt(variance / 2)
    for i, mi in enumerate(m):
        gen = np.random.Generator(np.random.Philox(key=[int(seed) & (2**64 - 1), int(mi)]))
        w = gen.standard_normal(2 * n)
        out[i].real = w[:n]
        out[i].imag = w[n:]
    out *= scale
    return out


def received_symbol(snapshot: ChannelSnapshot, x: FreqSymbol, snr_db: float | None = None,
                    noise_seed: int = 0, variance: float | None = None) -> FreqSymbol:
    """Y = H X + w for one symbol.

    Noise variance is `variance` if given, otherwise derived from this symbol's
    own energized-bin power and `snr_db`.
    """
    hx = snapshot.h.bins * x.bins
    if variance is None:
        if snr_db is None:
            variance = 0.0
        else:
            e = np.abs(x.bins) > 0
            p = float(np.mean(np.abs(hx[e]) ** 2)) if e.any() else 0.0
            variance = (p if p > 0 else 1.0) / 10 ** (snr_db / 10)
    y = hx
    if variance > 0:
        y = hx + noise_block(noise_seed, [snapshot.symbol_index], hx.size, variance)[0]
    return FreqSymbol(y, Role.RECEIVE)


def received_block(scene: Scene, symbol_indices, x: FreqSymbol | None = None,
                   variance: float | None = None) -> np.ndarray:
    """Receive symbols Y for a batch of symbol indices, shape (len, N)."""
    x = newman_symbol(scene.cfg) if x is None else x
    if variance is None:
        variance = noise_variance(scene, x)
    y = synthesize_channels(scene, symbol_indices) * x.bins
    if variance > 0:
        y += noise_block(scene.noise_seed, symbol_indices, scene.cfg.n_carriers, variance)
    return y


def iter_symbol_chunks(n_symbols: int, chunk: int):
    for start in range(0, n_symbols, chunk):
        yield np.arange(start, min(start + chunk, n_symbols))


def map_chunks(fn, n_symbols: int, chunk: int = 512, workers: int = 1) -> list:
    """Apply fn to consecutive symbol-index chunks, optionally in threads.

    Results come back in chunk order; each symbol's result depends only on its
    index, so output is identical for any `workers`/`chunk`.
    """
    chunks = list(iter_symbol_chunks(n_symbols, chunk))
    if workers <= 1:
        return [fn(c) for c in chunks]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, chunks))


def max_blade_doppler(scene: Scene) -> float:
    """Upper bound on blade Doppler magnitude: 2 * tip speed / lambda."""
    from .airframe import active_propellers
    props = active_propellers(scene.airframe, scene.mode)
    if not props:
        return 0.0
    tip = max(p.angular_rate * p.blade_length for p in props)
    return 2 * tip / scene.geometry.wavelength


def direct_bistatic_range(geom: BistaticGeometry) -> float:
    return float(bistatic_range(geom, np.asarray(geom.target_ref)))
