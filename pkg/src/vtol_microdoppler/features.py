"""
Micro-Doppler features: predicted Doppler spread of a rotating blade, comb
spacing, slow-time period, rotation rate, and spectral components.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.ndimage import binary_closing, uniform_filter1d
from scipy.signal import find_peaks

from .receiver import DopplerSpectrum, Spectrogram, doppler_spectrum, to_db


class FeatureError(ValueError):
    pass


class NoCombError(FeatureError):
    """No periodic line structure found in the spectrum."""


class AperiodicError(FeatureError):
    """Slow-time autocorrelation has no qualifying maximum."""


def predict_doppler_spread(f_rot: float, blade_length: float, beta: float, theta: float,
                           wavelength: float) -> float:
    """Full Doppler extent 4*omega*L*cos(beta/2)*sin(theta)/lambda of a blade tip."""
    if not wavelength > 0:
        raise FeatureError("wavelength must be > 0")
    if not blade_length > 0:
        raise FeatureError("blade length must be > 0")
    vals = (f_rot, blade_length, beta, theta, wavelength)
    if not all(math.isfinite(v) for v in vals):
        raise FeatureError("inputs must be finite")
    omega = 2 * math.pi * f_rot
    return 4 * omega * blade_length * math.cos(beta / 2) * math.sin(theta) / wavelength


def estimate_rotation_rate(spacing_hz: float, n_blades: int) -> float:
    if n_blades < 1:
        raise FeatureError("n_blades must be >= 1")
    if not spacing_hz > 0:
        raise FeatureError("spacing must be > 0")
    return spacing_hz / n_blades


# ---------------------------------------------------------------------------
# spectral helpers

def _smoothed_db(spec: DopplerSpectrum, smooth_bins: int) -> np.ndarray:
    p = spec.power()
    if smooth_bins > 1:
        p = uniform_filter1d(p, smooth_bins, mode="wrap")
    return to_db(p)


def noise_floor_db(spec: DopplerSpectrum, smooth_bins: int = 1) -> float:
    """Median spectral level; most Doppler bins hold only noise."""
    return float(np.median(_smoothed_db(spec, smooth_bins)))


def _local_maxima(x: np.ndarray) -> np.ndarray:
    if x.size < 3:
        return np.array([int(np.argmax(x))])
    inner = np.flatnonzero((x[1:-1] >= x[:-2]) & (x[1:-1] >= x[2:])) + 1
    ends = [i for i in (0, x.size - 1)
            if x[i] >= x[min(i + 1, x.size - 1)] and x[i] >= x[max(i - 1, 0)]]
    return np.union1d(inner, ends).astype(int)


@dataclass(frozen=True)
class Component:
    spread_hz: float
    center_hz: float
    peak_db: float
    nested: bool = False


def _refine_edges(sm: np.ndarray, lo: int, hi: int, drop_db: float,
                  skip: np.ndarray) -> tuple[int, int]:
    """Outermost bins of [lo, hi] within `drop_db` of the run's median level.

    A floor-referenced edge lands in the Bessel tail beyond the tip return,
    and how far out depends on dynamic range; the median level of the run
    tracks the body of the spread instead.
    """
    idx = np.arange(lo, hi + 1)
    idx = idx[~skip[idx]]
    ref = float(np.median(sm[idx]))
    ok = idx[sm[idx] >= ref - drop_db]
    return int(ok.min()), int(ok.max())


def estimate_doppler_spread(spec: DopplerSpectrum, floor_margin_db: float = 10.0,
                            exclusion_bins: int = 2, smooth_bins: int = 5,
                            max_gap_bins: int | None = None, edge_drop_db: float = 10.0,
                            nested_contrast_db: float | None = 10.5,
                            min_nested_ratio: float = 0.5) -> list[Component]:
    """Doppler-spread components of a spectrum.

    Support is the set of (lightly smoothed) bins more than `floor_margin_db`
    above the median floor, ignoring +-`exclusion_bins` around 0 Hz; gaps up
    to `max_gap_bins` (default: the smoothing length) are bridged, so comb
    lines and the two halves of a zero-centred spread form one component.
    Edges are then pulled in to the outermost bins within `edge_drop_db` of
    the run's median level, and smoothing broadening is subtracted.

    A zero-centred component may contain a nested one: a central band whose
    edge drops by at least `nested_contrast_db` below its own level and which
    spans less than `min_nested_ratio` of the support.
    Nested components are reported after their parent.
    """
    n = spec.power_db.size
    s = max(1, int(smooth_bins))
    gap = s if max_gap_bins is None else int(max_gap_bins)
    sm = _smoothed_db(spec, s)
    floor = float(np.median(sm))
    z = spec.zero_index
    k = np.arange(n) - z
    excl = np.abs(k) <= exclusion_bins
    above = (sm > floor + floor_margin_db) & ~excl
    if not above.any():
        return []
    mask = above | excl
    if gap > 0:
        mask = binary_closing(mask, np.ones(gap + 1, dtype=bool)) | mask
    df = spec.bin_width
    raw = spec.power_db
    comps = []
    d = np.diff(np.concatenate([[0], mask.astype(np.int8), [0]]))
    for lo, hi in zip(np.flatnonzero(d == 1), np.flatnonzero(d == -1) - 1):
        if not above[lo:hi + 1].any():
            continue  # exclusion zone alone
        lo_r, hi_r = _refine_edges(sm, lo, hi, edge_drop_db, excl)
        width = max(1, hi_r - lo_r + 1 - (s - 1))
        in_run = np.arange(lo, hi + 1)
        in_run = in_run[~excl[in_run]]
        comp = Component(width * df, float(0.5 * (spec.freq_hz[lo_r] + spec.freq_hz[hi_r])),
                         float(raw[in_run].max()))
        comps.append(comp)
        if nested_contrast_db is not None and lo < z < hi:
            inner = _nested_component(spec, sm, z, lo_r, hi_r, exclusion_bins, s,
                                      nested_contrast_db, min_nested_ratio)
            if inner is not None:
                comps.append(inner)
    return comps


def _nested_component(spec, sm, z, lo, hi, exclusion_bins, s, contrast_db, ratio, guard=6):
    """Central band inside a zero-centred support whose edge drops sharply.

    For each candidate edge c (offset from 0 Hz, folded over +-f) the drop
    is sm[c] minus the maximum of everything beyond c + `guard`. A lone
    rotor also falls off towards its edges, but gradually; a nested
    component shows up as a step exceeding `contrast_db`.
    """
    half = min(z - lo, hi - z)
    if half < 4 * (exclusion_bins + 1):
        return None
    p = 10 ** (sm / 10)
    offs = np.arange(half + 1)
    folded = 10 * np.log10(0.5 * (p[z + offs] + p[z - offs]))
    best, best_c = -np.inf, None
    for c in range(exclusion_bins + 1, int(ratio * half) + 1):
        if c + 2 * guard > half + 1:
            break  # need at least `guard` bins of outer support to compare against
        drop = folded[c] - folded[c + guard:].max()
        if drop > best:
            best, best_c = drop, c
    if best_c is None or best < contrast_db:
        return None
    width = max(1, 2 * best_c + 1 - (s - 1))
    sel = np.abs(np.arange(sm.size) - z)
    sel = (sel > exclusion_bins) & (sel <= best_c)
    return Component(width * spec.bin_width, 0.0, float(spec.power_db[sel].max()), nested=True)


# ---------------------------------------------------------------------------
# comb spacing and period

def _comb_profile(spec: DopplerSpectrum, exclusion_bins: int) -> tuple[np.ndarray, float]:
    floor = noise_floor_db(spec)
    x = np.clip(spec.power_db - floor, 0.0, None)
    x[np.abs(np.arange(x.size) - spec.zero_index) <= exclusion_bins] = 0.0
    return x, floor


def _support_mask(spec: DopplerSpectrum, margin_db: float, smooth_bins: int,
                  exclusion_bins: int) -> np.ndarray:
    sm = _smoothed_db(spec, smooth_bins)
    zone = np.abs(np.arange(sm.size) - spec.zero_index) <= exclusion_bins
    return (sm > np.median(sm) + margin_db) & ~zone


def estimate_spike_spacing(spec: DopplerSpectrum, margin_db: float = 6.0,
                           exclusion_bins: int = 2, min_lag_bins: float = 2.0,
                           support_margin_db: float = 10.0, smooth_bins: int = 5,
                           min_corr: float = 0.25, relative_height: float = 0.5,
                           n_multiples: int = 8) -> float:
    """Comb line spacing from the spectral autocorrelation.

    The spectrum in dB above floor is restricted to the micro-Doppler support
    (smoothed level more than `support_margin_db` above the floor, outside the
    zero-Doppler zone) and autocorrelated. The first local maximum beyond
    `min_lag_bins` that reaches both `min_corr` and `relative_height` of the
    strongest maximum gives a coarse spacing. It is refined first against the
    autocorrelation maxima at its multiples, then by a straight-line fit of
    interpolated line positions against harmonic order.
    """
    x, floor = _comb_profile(spec, exclusion_bins)
    peaks, _ = find_peaks(x, height=margin_db)
    if peaks.size < 2:
        raise NoCombError("fewer than two spectral peaks above floor + margin")
    support = _support_mask(spec, support_margin_db, smooth_bins, exclusion_bins)
    if support.sum() < 3 * max(min_lag_bins, 1):
        raise NoCombError("micro-Doppler support too narrow for a comb")
    xc = np.where(support, x - x[support].mean(), 0.0)
    n = x.size
    ac = np.fft.irfft(np.abs(np.fft.rfft(xc, 2 * n)) ** 2)[:n]
    if ac[0] <= 0:
        raise NoCombError("flat spectrum")
    ac = ac / ac[0]
    cand = _local_maxima(ac[:n // 2])
    cand = cand[cand > min_lag_bins]
    if cand.size == 0:
        raise NoCombError("no autocorrelation peak beyond the minimum lag")
    top = ac[cand].max()
    good = cand[(ac[cand] >= min_corr) & (ac[cand] >= relative_height * top)]
    if good.size == 0:
        raise NoCombError("no significant autocorrelation peak")
    coarse = _fit_multiples(ac, cand[cand >= good[0]], n_multiples)
    fine = _fit_harmonics(spec.power_db, spec.zero_index, coarse, support, exclusion_bins)
    return float(fine * spec.bin_width)


def _fit_multiples(ac: np.ndarray, maxima: np.ndarray, n_multiples: int) -> float:
    """Spacing fitted through the origin to autocorrelation maxima near k * s.

    The first maximum sits on the flank of the lag-0 lobe and is biased low;
    later multiples pull the estimate back.
    """
    pos = np.array([_parabolic(ac, int(i)) for i in maxima])
    s = pos[0]
    ks, ps = [1.0], [pos[0]]
    for k in range(2, n_multiples + 1):
        d = np.abs(pos - k * s)
        j = int(np.argmin(d))
        if d[j] >= s / 2:
            break
        ks.append(float(k))
        ps.append(pos[j])
        s = float(np.dot(ks, ps) / np.dot(ks, ks))
    return s


def _fit_harmonics(p: np.ndarray, zero: int, spacing_bins: float, support: np.ndarray,
                   exclusion_bins: int, stages=(4, 8, 16, 32, 64, None)) -> float:
    """Least-squares line spacing (bins) from interpolated harmonic positions.

    Harmonic orders are admitted in growing stages so the spacing is accurate
    enough to associate each line before the next stage extends outward.
    """
    n = p.size
    s = spacing_bins
    for h_stage in stages:
        half = max(1, int(s / 2))
        h_max = int((n // 2 - half - 1) / s)
        if h_stage is not None:
            h_max = min(h_max, h_stage)
        orders, positions = [], []
        for h in range(-h_max, h_max + 1):
            i0 = int(round(zero + h * s))
            lo, hi = max(1, i0 - half), min(n - 2, i0 + half)
            if hi <= lo:
                continue
            i = lo + int(np.argmax(p[lo:hi + 1]))
            if abs(i - zero) <= exclusion_bins or not support[i]:
                continue
            if not (p[i] >= p[i - 1] and p[i] >= p[i + 1]):
                continue
            orders.append(h)
            positions.append(_parabolic(p, i))
        if len(orders) >= 2:
            s = float(np.polyfit(np.asarray(orders, float), np.asarray(positions), 1)[0])
    return s


def estimate_spike_spacing_peaks(spec: DopplerSpectrum, margin_db: float = 6.0,
                                 exclusion_bins: int = 2, support_margin_db: float = 10.0,
                                 smooth_bins: int = 5) -> float:
    """Peak-picking alternative: median gap between adjacent lines.

    Lines are local maxima with at least `margin_db` prominence inside the
    smoothed support, so isolated noise peaks do not count.
    """
    x, _ = _comb_profile(spec, exclusion_bins)
    support = _support_mask(spec, support_margin_db, smooth_bins, exclusion_bins)
    peaks, _ = find_peaks(x, prominence=margin_db)
    peaks = peaks[support[peaks]]
    if peaks.size < 3:
        raise NoCombError("fewer than three spectral lines inside the support")
    gaps = np.diff(peaks)
    # lines on either side of the excluded zone are not neighbours
    gaps = gaps[gaps < 2 * exclusion_bins + 2 + np.median(gaps)]
    return float(np.median(gaps) * spec.bin_width)


def _parabolic(y: np.ndarray, i: int) -> float:
    if i <= 0 or i >= y.size - 1:
        return float(i)
    a, b, c = y[i - 1], y[i], y[i + 1]
    den = a - 2 * b + c
    return float(i) if den == 0 else i + 0.5 * (a - c) / den


def autocorrelation(x: np.ndarray) -> np.ndarray:
    """Lag-wise correlation coefficient of a real sequence, lag 0 = 1.

    r[k] is the Pearson correlation between x[:n-k] and x[k:], so an exactly
    periodic sequence gives r = 1 at its period whatever the record length.
    (The plain mean-removed estimate picks up a partial-period term that
    shifts its maxima when the record is not a whole number of periods.)
    For 2-D input the columns are independent tracks; covariances and
    variances are pooled over columns.
    """
    x = np.asarray(x, dtype=float)
    x2 = x.reshape(x.shape[0], -1)
    x2 = x2 - x2.mean(axis=0)
    n = x2.shape[0]
    f = np.fft.rfft(x2, 2 * n, axis=0)
    sxy = np.fft.irfft(np.abs(f) ** 2, 2 * n, axis=0)[:n]
    c1 = np.vstack([np.zeros(x2.shape[1]), np.cumsum(x2, axis=0)])
    c2 = np.vstack([np.zeros(x2.shape[1]), np.cumsum(x2 ** 2, axis=0)])
    k = np.arange(n)
    cnt = (n - k)[:, None]
    sa, sb = c1[n - k], c1[n] - c1[k]
    qa, qb = c2[n - k], c2[n] - c2[k]
    cov = (sxy - sa * sb / cnt).sum(axis=1)
    va = (qa - sa ** 2 / cnt).sum(axis=1)
    vb = (qb - sb ** 2 / cnt).sum(axis=1)
    den = np.sqrt(np.clip(va * vb, 0.0, None))
    ok = den > 1e-12 * max(float(den[0]), 1e-300)
    r = np.zeros(n)
    r[ok] = cov[ok] / den[ok]
    return r


def first_period_lag(ac: np.ndarray, threshold: float = 0.5, relative: float = 0.9,
                     max_frac: float = 0.75) -> int:
    """Lag of the first significant local maximum after the lag-0 lobe.

    Significant means >= `threshold` and >= `relative` times the strongest
    maximum in the search range; the second condition skips partial
    repetitions (blade-flash pairs inside one period) that can exceed 0.5.
    """
    n = int(ac.size * max_frac)
    below = np.flatnonzero(ac[:n] < threshold)
    if below.size == 0:
        raise AperiodicError("autocorrelation never decays below threshold")
    start = int(below[0])
    seg = ac[start:n]
    if seg.size < 3:
        raise AperiodicError("search range too short")
    peaks = _local_maxima(seg)
    peaks = peaks[(peaks > 0) & (peaks < seg.size - 1)]
    peaks = peaks[seg[peaks] >= threshold]
    if peaks.size == 0:
        raise AperiodicError("no autocorrelation maximum above threshold")
    top = seg[peaks].max()
    return int(start + peaks[seg[peaks] >= relative * top][0])


def estimate_period(v, symbol_period: float, threshold: float = 0.5) -> float:
    """Slow-time repetition period from the autocorrelation of |v|."""
    mag = np.abs(np.asarray(v))
    if mag.size < 8 or np.ptp(mag) == 0:
        raise AperiodicError("constant or too short slow-time magnitude")
    return first_period_lag(autocorrelation(mag), threshold) * symbol_period


def spectrogram_period(sg: Spectrogram, threshold: float = 0.5) -> float:
    """Repetition period of the spectrogram pattern, from frame correlation.

    Each Doppler bin's dB track over time is one column of a pooled lag-wise
    correlation, searched like the slow-time autocorrelation.
    """
    x = sg.power_db.copy()
    if x.shape[0] < 8:
        raise AperiodicError("too few spectrogram frames")
    x = np.maximum(x, x.max() - 80.0)
    ac = autocorrelation(x)
    if ac[0] <= 0:
        raise AperiodicError("static spectrogram")
    return first_period_lag(ac, threshold) * sg.frame_step


# ---------------------------------------------------------------------------
# aggregate

@dataclass
class MicroDopplerFeatures:
    components: list[Component] = field(default_factory=list)
    spike_spacing_hz: float | None = None
    slow_time_period_s: float | None = None
    spectrogram_period_s: float | None = None
    rotation_rate_hz: float | None = None
    zero_doppler_ratio_db: float | None = None
    floor_db: float | None = None
    peak_db: float | None = None  # maximum of the analysed spectrum
    doppler_bin_hz: float | None = None
    consistency: dict = field(default_factory=dict)
    missing: list[str] = field(default_factory=list)

    @property
    def doppler_spread_hz(self) -> float:
        return max((c.spread_hz for c in self.components), default=0.0)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["doppler_spread_hz"] = self.doppler_spread_hz
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "MicroDopplerFeatures":
        d = dict(d)
        d.pop("doppler_spread_hz", None)
        d["components"] = [Component(**c) for c in d.get("components", [])]
        return cls(**d)


def zero_doppler_ratio_db(spec: DopplerSpectrum, exclusion_bins: int = 2) -> float:
    """Power in the +-exclusion zone around 0 Hz over total power, in dB."""
    p = spec.power()
    zone = np.abs(np.arange(p.size) - spec.zero_index) <= exclusion_bins
    return float(to_db(np.array(p[zone].sum() / p.sum())))


def extract_features(spectrum: DopplerSpectrum, spectrogram: Spectrogram | None, slow_time,
                     n_blades: int = 2, floor_margin_db: float = 10.0,
                     comb_margin_db: float = 6.0, window: str = "hann",
                     exclusion_bins: int = 2) -> MicroDopplerFeatures:
    """Collect all features for one observation window.

    `spectrum` is the plain Doppler spectrum (used for the zero-Doppler ratio);
    spreads and comb spacing are measured on the spectrum of the slow-time
    vector with its mean removed so the static return's window leakage does
    not masquerade as a narrow component.
    """
    v = np.asarray(slow_time)
    feats = MicroDopplerFeatures(doppler_bin_hz=spectrum.bin_width)
    feats.zero_doppler_ratio_db = zero_doppler_ratio_db(spectrum, exclusion_bins)
    dyn = doppler_spectrum(v, 1.0 / (spectrum.bin_width * v.size), window, remove_static=True)
    feats.floor_db = noise_floor_db(dyn)
    k = np.arange(dyn.power_db.size) - dyn.zero_index
    feats.peak_db = float(dyn.power_db[np.abs(k) > exclusion_bins].max())
    feats.components = estimate_doppler_spread(dyn, floor_margin_db, exclusion_bins)
    try:
        feats.spike_spacing_hz = estimate_spike_spacing(dyn, comb_margin_db, exclusion_bins)
        feats.rotation_rate_hz = estimate_rotation_rate(feats.spike_spacing_hz, n_blades)
    except NoCombError:
        feats.missing.append("spike_spacing_hz")
        feats.missing.append("rotation_rate_hz")
    symbol_period = 1.0 / (spectrum.bin_width * v.size)
    try:
        feats.slow_time_period_s = estimate_period(v, symbol_period)
    except AperiodicError:
        feats.missing.append("slow_time_period_s")
    if spectrogram is not None:
        try:
            feats.spectrogram_period_s = spectrogram_period(spectrogram)
        except AperiodicError:
            feats.missing.append("spectrogram_period_s")
    if feats.spike_spacing_hz and feats.slow_time_period_s:
        delta = feats.slow_time_period_s - 1.0 / feats.spike_spacing_hz
        feats.consistency = {"period_minus_inverse_spacing_s": delta,
                             "within_one_lag": bool(abs(delta) <= symbol_period)}
    return feats
