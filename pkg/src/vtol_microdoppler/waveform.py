"""
OFDM-like sounding waveform: carrier grid, Newman-phase multitone and crest
factor evaluation.

Bins use FFT ordering: index n maps to baseband frequency n*f_s/N for
n < N/2 and (n - N)*f_s/N above.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

DEFAULT_N_CARRIERS = 2500
DEFAULT_N_ENERGIZED = 2048
DEFAULT_SAMPLE_RATE = 2.4e9  # Hz; symbol period N/f_s ~ 1.04 us, delay bin 1/f_s ~ 0.417 ns
DEFAULT_CENTER_FREQ = 7e9
DEFAULT_BANDWIDTH = 2.4e9


class WaveformError(ValueError):
    pass


@dataclass(frozen=True)
class OfdmConfig:
    n_carriers: int = DEFAULT_N_CARRIERS
    n_energized: int = DEFAULT_N_ENERGIZED
    pilots: tuple[int, ...] = ()
    sample_rate: float = DEFAULT_SAMPLE_RATE
    n_symbols: int = 4096
    center_freq: float = DEFAULT_CENTER_FREQ
    bandwidth: float = DEFAULT_BANDWIDTH
    symbol_period: float | None = None  # defaults to N / f_s

    def __post_init__(self):
        if self.n_carriers < 1:
            raise WaveformError("n_carriers must be >= 1")
        if not 1 <= self.n_energized <= self.n_carriers:
            raise WaveformError("n_energized must be in [1, n_carriers]")
        if self.n_symbols < 1:
            raise WaveformError("n_symbols must be >= 1")
        if not (self.sample_rate > 0 and self.center_freq > 0 and self.bandwidth > 0):
            raise WaveformError("sample_rate, center_freq and bandwidth must be > 0")
        pilots = tuple(sorted(int(p) for p in self.pilots))
        object.__setattr__(self, "pilots", pilots)
        energized = set(self.energized_set.tolist())
        bad = [p for p in pilots if p not in energized]
        if bad:
            raise WaveformError(f"pilots must be a subset of the energized bins: {bad[:5]}")
        if self.symbol_period is None:
            object.__setattr__(self, "symbol_period", self.n_carriers / self.sample_rate)
        if abs(self.symbol_period * self.sample_rate - self.n_carriers) > 0.5:
            raise WaveformError("symbol_period * sample_rate must equal n_carriers within 0.5 sample")

    @cached_property
    def energized_set(self) -> np.ndarray:
        """Energized bin indices, centered on DC, ordered by ascending frequency."""
        k = self.n_energized
        signed = np.arange(k) - k // 2
        return np.mod(signed, self.n_carriers)

    @cached_property
    def included_mask(self) -> np.ndarray:
        """Bins used for channel estimation: energized minus pilots."""
        mask = np.zeros(self.n_carriers, dtype=bool)
        mask[self.energized_set] = True
        mask[list(self.pilots)] = False
        return mask

    @property
    def doppler_span(self) -> float:
        return 1.0 / self.symbol_period

    @property
    def doppler_bin(self) -> float:
        return 1.0 / (self.n_symbols * self.symbol_period)

    @property
    def delay_step(self) -> float:
        return 1.0 / self.sample_rate

    @property
    def occupied_bandwidth(self) -> float:
        return self.n_energized * self.sample_rate / self.n_carriers

    def with_(self, **changes) -> "OfdmConfig":
        from dataclasses import replace
        if "sample_rate" in changes or "n_carriers" in changes:
            changes.setdefault("symbol_period", None)
        return replace(self, **changes)


class Role(enum.Enum):
    TRANSMIT = "X"
    RECEIVE = "Y"
    CHANNEL = "H"


@dataclass(frozen=True)
class FreqSymbol:
    bins: np.ndarray
    role: Role = Role.TRANSMIT
    excluded: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        b = np.asarray(self.bins, dtype=complex)
        if b.ndim != 1 or not np.all(np.isfinite(b)):
            raise WaveformError("FreqSymbol bins must be a finite 1-D complex vector")
        b.setflags(write=False)
        object.__setattr__(self, "bins", b)

    def __len__(self):
        return self.bins.size


def carrier_frequencies(cfg: OfdmConfig) -> np.ndarray:
    """Signed baseband frequency of each bin, in [-f_s/2, f_s/2)."""
    return np.fft.fftfreq(cfg.n_carriers, d=1.0 / cfg.sample_rate)


def newman_phases(k: int) -> np.ndarray:
    j = np.arange(k)
    return np.pi * j**2 / k


def newman_symbol(cfg: OfdmConfig) -> FreqSymbol:
    """Unit-magnitude multitone with Newman phases on the energized bins."""
    x = np.zeros(cfg.n_carriers, dtype=complex)
    x[cfg.energized_set] = np.exp(1j * newman_phases(cfg.n_energized))
    return FreqSymbol(x, Role.TRANSMIT)


def time_domain(sym, oversample: int = 4) -> np.ndarray:
    """Inverse DFT with zero-padding in the spectral gap (baseband-centred)."""
    b = np.asarray(getattr(sym, "bins", sym), dtype=complex)
    n = b.size
    l = n * oversample
    padded = np.zeros(l, dtype=complex)
    half = (n + 1) // 2
    padded[:half] = b[:half]
    padded[l - (n - half):] = b[half:]
    return np.fft.ifft(padded)


def crest_factor_db(sym, oversample: int = 8) -> float:
    """Peak-to-average power ratio of the time-domain symbol in dB."""
    if oversample < 4:
        raise WaveformError("crest factor needs at least 4x oversampling")
    s = time_domain(sym, oversample)
    p = np.abs(s) ** 2
    mean = p.mean()
    if mean == 0:
        raise WaveformError("crest factor of an all-zero symbol is undefined")
    return float(10 * np.log10(p.max() / mean))


def check_doppler_ambiguity(cfg: OfdmConfig, max_doppler: float) -> bool:
    """Warn if a predicted Doppler extent exceeds the unambiguous +-1/(2T)."""
    limit = cfg.doppler_span / 2
    if max_doppler > limit:
        warnings.warn(f"predicted max Doppler {max_doppler:.1f} Hz exceeds unambiguous "
                      f"{limit:.1f} Hz; blade returns will alias", RuntimeWarning, stacklevel=2)
        return False
    return True
