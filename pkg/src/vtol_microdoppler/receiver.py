"""
Receive processing: channel estimation, range profiles, target gating,
slow-time extraction, Doppler spectra, spectrograms and range-Doppler maps.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.signal import get_window

from .waveform import FreqSymbol, OfdmConfig, Role

DB_EPS = 1e-300
RENDER_FLOOR_DB = -80.0


class ReceiverError(ValueError):
    pass


class NoTargetError(RuntimeError):
    """No range bin exceeded the detection threshold."""


def to_db(power: np.ndarray) -> np.ndarray:
    return 10 * np.log10(np.maximum(power, DB_EPS))


def normalized_db(power: np.ndarray) -> np.ndarray:
    p = np.asarray(power, dtype=float)
    peak = p.max() if p.size else 0.0
    if peak <= 0:
        return np.full(p.shape, to_db(np.array(0.0)))
    return to_db(p / peak)


def taper(name: str, n: int) -> np.ndarray:
    """Periodic window of length n ('rect' / 'rectangular' / 'boxcar' or any scipy name)."""
    if name in ("rect", "rectangular", "none", "boxcar"):
        return np.ones(n)
    return get_window(name, n, fftbins=True)


# ---------------------------------------------------------------------------
# channel estimation and range profiles

def _check_division(x: np.ndarray, cfg: OfdmConfig) -> np.ndarray:
    inc = cfg.included_mask
    if x.shape[-1] != cfg.n_carriers:
        raise ReceiverError("symbol length does not match n_carriers")
    if np.any(np.abs(x[inc]) < 1e-12):
        raise ReceiverError("transmit symbol has |X| < 1e-12 on an energized bin")
    return inc


def estimate_channel(y: FreqSymbol, x: FreqSymbol, cfg: OfdmConfig) -> FreqSymbol:
    """H = Y / X on energized non-pilot bins; other bins zeroed and flagged excluded."""
    inc = _check_division(x.bins, cfg)
    h = np.zeros(cfg.n_carriers, dtype=complex)
    h[inc] = y.bins[inc] / x.bins[inc]
    return FreqSymbol(h, Role.CHANNEL, excluded=~inc)


def estimate_channels(y: np.ndarray, x: FreqSymbol, cfg: OfdmConfig) -> np.ndarray:
    """Batched estimate_channel over rows of y (n_sym, N)."""
    inc = _check_division(x.bins, cfg)
    h = np.zeros(y.shape, dtype=complex)
    h[:, inc] = y[:, inc] / x.bins[inc]
    return h


@dataclass(frozen=True)
class RangeProfile:
    bins: np.ndarray
    delay_step: float
    symbol_index: int = 0

    @property
    def delays(self) -> np.ndarray:
        return np.arange(self.bins.size) * self.delay_step


def range_window(cfg: OfdmConfig, window: str = "hann") -> np.ndarray:
    """Frequency-domain taper laid over the energized bins in ascending frequency."""
    w = np.zeros(cfg.n_carriers)
    w[cfg.energized_set] = taper(window, cfg.n_energized)
    return w


def range_profiles(h: np.ndarray, cfg: OfdmConfig, window: str = "hann") -> np.ndarray:
    """Unitary inverse DFT of windowed channel estimates; rows are symbols.

    Bin d corresponds to delay d / f_s.
    """
    h = np.atleast_2d(h)
    return np.fft.ifft(h * range_window(cfg, window), axis=-1, norm="ortho")


def range_profile(h: FreqSymbol, cfg: OfdmConfig, window: str = "hann",
                  symbol_index: int = 0) -> RangeProfile:
    r = range_profiles(h.bins, cfg, window)[0]
    return RangeProfile(r, cfg.delay_step, symbol_index)


# ---------------------------------------------------------------------------
# detection

@dataclass(frozen=True)
class Detection:
    gate: np.ndarray | None  # None means no target
    integrated_db: np.ndarray
    floor_db: float
    threshold_db: float

    @property
    def found(self) -> bool:
        return self.gate is not None


def _stack(profiles) -> np.ndarray:
    if isinstance(profiles, np.ndarray):
        return np.atleast_2d(profiles)
    return np.vstack([p.bins for p in profiles])


def detect_from_power(power: np.ndarray, threshold_db: float = 12.0, guard: int = 1,
                      circular: bool = True) -> Detection:
    """Gate from a noncoherently integrated power profile.

    Bins above (median floor + threshold_db) are grouped into contiguous runs,
    each run dilated by `guard` bins; the run with the largest summed power wins.
    """
    p_db = to_db(np.asarray(power, dtype=float))
    floor = float(np.median(p_db))
    above = p_db > floor + threshold_db
    n = above.size
    if not above.any():
        return Detection(None, p_db, floor, threshold_db)
    runs = _runs(above, circular=circular)
    lin = np.asarray(power, dtype=float)
    best = max(runs, key=lambda r: lin[np.arange(r[0], r[0] + r[1]) % n].sum())
    start, length = best
    idx = np.arange(start - guard, start + length + guard)
    idx = idx % n if circular else idx[(idx >= 0) & (idx < n)]
    return Detection(np.unique(idx) if not circular else idx, p_db, floor, threshold_db)


def detect_target(profiles, threshold_db: float = 12.0, guard: int = 1) -> Detection:
    """Noncoherent integration over >= 32 range profiles and threshold gating."""
    r = _stack(profiles)
    if r.shape[0] < 32:
        raise ReceiverError("detection needs at least 32 range profiles")
    return detect_from_power(np.mean(np.abs(r) ** 2, axis=0), threshold_db, guard)


def _runs(mask: np.ndarray, circular: bool = False) -> list[tuple[int, int]]:
    """(start, length) of True runs; with circular=True a run may wrap the end."""
    n = mask.size
    if mask.all():
        return [(0, n)]
    m = mask.astype(np.int8)
    d = np.diff(np.concatenate([[0], m, [0]]))
    starts = np.flatnonzero(d == 1)
    ends = np.flatnonzero(d == -1)
    runs = [(int(s), int(e - s)) for s, e in zip(starts, ends)]
    if circular and len(runs) > 1 and mask[0] and mask[-1]:
        first = runs.pop(0)
        last = runs.pop()
        runs.append((last[0], last[1] + first[1]))
    return runs


# ---------------------------------------------------------------------------
# slow time

@dataclass(frozen=True)
class SlowTimeMatrix:
    data: np.ndarray  # (len(gate), M) complex
    gate: np.ndarray
    symbol_period: float
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        d = np.atleast_2d(np.asarray(self.data))
        if d.shape[0] < 1 or d.shape[1] < 1:
            raise ReceiverError("slow-time matrix needs at least one row and one column")
        if d.shape[0] != len(self.gate):
            raise ReceiverError("row count must equal gate size")
        object.__setattr__(self, "data", d)
        object.__setattr__(self, "gate", np.asarray(self.gate, dtype=np.int64))

    @property
    def n_symbols(self) -> int:
        return self.data.shape[1]

    def gate_sum(self) -> np.ndarray:
        """Coherent sum over gated range bins."""
        return self.data.sum(axis=0)

    def vector(self, use_gate_sum: bool = True) -> np.ndarray:
        if use_gate_sum:
            return self.gate_sum()
        return self.data[int(np.argmax(np.sum(np.abs(self.data) ** 2, axis=1)))]


def slow_time(profiles, gate, symbol_period: float) -> SlowTimeMatrix:
    r = _stack(profiles)
    g = np.asarray(gate, dtype=np.int64)
    if g.size == 0:
        raise ReceiverError("gate is empty")
    if g.min() < 0 or g.max() >= r.shape[1]:
        raise ReceiverError("gate outside range-bin span")
    return SlowTimeMatrix(r[:, g].T.copy(), g, symbol_period)


# ---------------------------------------------------------------------------
# Doppler analysis

@dataclass(frozen=True)
class DopplerSpectrum:
    freq_hz: np.ndarray
    power_db: np.ndarray  # 0 dB max

    @property
    def bin_width(self) -> float:
        return float(self.freq_hz[1] - self.freq_hz[0])

    @property
    def zero_index(self) -> int:
        return int(np.argmin(np.abs(self.freq_hz)))

    def power(self) -> np.ndarray:
        return 10 ** (self.power_db / 10)


def doppler_axis(n: int, symbol_period: float) -> np.ndarray:
    return np.fft.fftshift(np.fft.fftfreq(n, d=symbol_period))


def doppler_spectrum(v, symbol_period: float, window: str = "hann",
                     remove_static: bool = False) -> DopplerSpectrum:
    """Windowed DFT over slow time, centred on zero Doppler, normalized to 0 dB.

    remove_static subtracts the slow-time mean first, which nulls the
    zero-Doppler line from static returns.
    """
    v = np.asarray(v, dtype=complex)
    if v.ndim != 1 or v.size < 2:
        raise ReceiverError("Doppler spectrum needs a slow-time vector of length >= 2")
    if remove_static:
        v = v - v.mean()
    spec = np.fft.fftshift(np.fft.fft(v * taper(window, v.size)))
    return DopplerSpectrum(doppler_axis(v.size, symbol_period), normalized_db(np.abs(spec) ** 2))


@dataclass(frozen=True)
class Spectrogram:
    power_db: np.ndarray  # (n_frames, W), 0 dB global max
    time_s: np.ndarray  # frame centres
    freq_hz: np.ndarray
    window_len: int
    hop: int
    reference: float  # linear power mapped to 0 dB

    @property
    def frame_step(self) -> float:
        return float(self.time_s[1] - self.time_s[0]) if self.time_s.size > 1 else 0.0


def stft_spectrogram(v, symbol_period: float, window_len: int = 128, hop: int | None = None,
                     window: str = "hann") -> Spectrogram:
    v = np.asarray(v, dtype=complex)
    if window_len > v.size:
        raise ReceiverError("STFT window longer than the slow-time vector")
    if window_len < 2:
        raise ReceiverError("STFT window must be >= 2 samples")
    hop = hop if hop is not None else max(1, window_len // 4)
    if hop < 1:
        raise ReceiverError("hop must be >= 1")
    frames = np.lib.stride_tricks.sliding_window_view(v, window_len)[::hop]
    spec = np.fft.fftshift(np.fft.fft(frames * taper(window, window_len), axis=-1), axes=-1)
    p = np.abs(spec) ** 2
    ref = float(p.max())
    t = (np.arange(frames.shape[0]) * hop + window_len / 2) * symbol_period
    return Spectrogram(normalized_db(p), t, doppler_axis(window_len, symbol_period),
                       window_len, hop, ref)


@dataclass(frozen=True)
class RangeDopplerMap:
    power_db: np.ndarray  # (rows, Doppler bins), 0 dB max
    range_bins: np.ndarray
    delay_step: float
    freq_hz: np.ndarray

    @property
    def doppler_bin(self) -> float:
        return float(self.freq_hz[1] - self.freq_hz[0])


def range_doppler(stm: SlowTimeMatrix, window: str = "hann", delay_step: float = 1.0,
                  remove_static: bool = False) -> RangeDopplerMap:
    d = stm.data
    if remove_static:
        d = d - d.mean(axis=1, keepdims=True)
    spec = np.fft.fftshift(np.fft.fft(d * taper(window, stm.n_symbols), axis=1), axes=1)
    return RangeDopplerMap(normalized_db(np.abs(spec) ** 2), stm.gate.copy(), delay_step,
                           doppler_axis(stm.n_symbols, stm.symbol_period))
