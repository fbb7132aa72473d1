import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scenes import L, LAMBDA, observed, single_prop_scene, vtol_scene
from vtol_microdoppler.airframe import BodyScatterer, FlightMode, VtolAirframe
from vtol_microdoppler.features import (AperiodicError, NoCombError, autocorrelation,
                                        estimate_doppler_spread, estimate_period,
                                        estimate_rotation_rate, estimate_spike_spacing,
                                        estimate_spike_spacing_peaks, extract_features,
                                        first_period_lag, predict_doppler_spread)
from vtol_microdoppler.geometry import place_bistatic
from vtol_microdoppler.pipeline import analyse
from vtol_microdoppler.receiver import DopplerSpectrum, doppler_spectrum
from vtol_microdoppler.synth import Scene
from vtol_microdoppler.waveform import OfdmConfig

T = OfdmConfig().symbol_period


def spectrum_of(v):
    return doppler_spectrum(v, T, remove_static=True)


def comb_spectrum(spacing, n=16384, lines=30, noise_db=-60, seed=0):
    m = np.arange(n)
    rng = np.random.default_rng(seed)
    v = sum(np.exp(2j * np.pi * k * spacing * m * T) for k in range(-lines, lines + 1) if k)
    v = v + 10 ** (noise_db / 20) * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
    return spectrum_of(v)


# spread model

def test_spread_model_values():
    assert predict_doppler_spread(100, L, np.radians(60), np.radians(90), LAMBDA) == \
        pytest.approx(1.433e4, rel=1e-3)
    assert predict_doppler_spread(100, L, np.radians(60), 0.0, LAMBDA) == 0.0
    assert predict_doppler_spread(100, L, np.pi, np.radians(90), LAMBDA) == \
        pytest.approx(0.0, abs=1e-9)


@settings(max_examples=50, deadline=None)
@given(f=st.floats(1, 300), beta=st.floats(0, np.pi), theta=st.floats(0, np.pi / 2),
       k=st.floats(0.1, 10))
def test_spread_model_scaling(f, beta, theta, k):
    b = predict_doppler_spread(f, L, beta, theta, LAMBDA)
    assert b >= 0
    assert predict_doppler_spread(k * f, L, beta, theta, LAMBDA) == pytest.approx(k * b, rel=1e-9,
                                                                                  abs=1e-9)
    assert predict_doppler_spread(f, k * L, beta, theta, LAMBDA) == pytest.approx(k * b, rel=1e-9,
                                                                                  abs=1e-9)


# comb spacing

def test_synthetic_comb_spacing():
    spec = comb_spectrum(200.0)
    assert abs(estimate_spike_spacing(spec) - 200.0) <= spec.bin_width
    assert abs(estimate_spike_spacing_peaks(spec) - 200.0) <= spec.bin_width


def test_single_zero_peak_is_not_a_comb():
    rng = np.random.default_rng(1)
    v = 1 + 1e-3 * (rng.standard_normal(4096) + 1j * rng.standard_normal(4096))
    with pytest.raises(NoCombError):
        estimate_spike_spacing(doppler_spectrum(v, T))


def test_rotation_rate_definition():
    assert estimate_rotation_rate(200.0, 2) == 100.0
    assert estimate_rotation_rate(200.0, 1) == 200.0
    with pytest.raises(ValueError):
        estimate_rotation_rate(200.0, 0)


def test_simulated_three_blade_rate():
    scene = single_prop_scene(60, 90, 60.0, n_symbols=16384, snr_db=20.0, blade_count=3)
    spec = spectrum_of(observed(scene).stm.gate_sum())
    spacing = estimate_spike_spacing(spec)
    assert abs(spacing - 180.0) <= spec.bin_width
    assert estimate_rotation_rate(spacing, 3) == pytest.approx(60.0, abs=spec.bin_width / 3)


# spread measurement

def test_noise_only_has_no_components():
    rng = np.random.default_rng(2)
    v = rng.standard_normal(8192) + 1j * rng.standard_normal(8192)
    assert estimate_doppler_spread(spectrum_of(v)) == []


def tone_spectrum(snr_db, f0=1000.0, n=8192, seed=3):
    rng = np.random.default_rng(seed)
    sd = np.sqrt(10 ** (-snr_db / 10) / 2)
    m = np.arange(n)
    v = np.exp(2j * np.pi * f0 * m * T) + sd * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
    return spectrum_of(v)


def test_tone_is_narrow():
    spec = tone_spectrum(10.0)
    comps = estimate_doppler_spread(spec)
    assert len(comps) == 1
    assert comps[0].spread_hz <= 3 * spec.bin_width
    assert abs(comps[0].center_hz - 1000.0) <= spec.bin_width


def test_band_width_measured():
    # flat band of +-3 kHz built from many random-phase tones
    rng = np.random.default_rng(4)
    n = 16384
    m = np.arange(n)
    freqs = np.arange(-3000, 3001, 10.0)
    v = np.exp(2j * np.pi * np.outer(m * T, freqs)) @ np.exp(2j * np.pi * rng.random(freqs.size))
    comps = estimate_doppler_spread(spectrum_of(v + rng.standard_normal(n)))
    assert len(comps) == 1
    assert comps[0].spread_hz == pytest.approx(6000.0, rel=0.05)


def test_simulated_spread_matches_model():
    scene = single_prop_scene(60, 90, 100.0, n_symbols=16384, snr_db=20.0)
    spec = spectrum_of(observed(scene).stm.gate_sum())
    comps = estimate_doppler_spread(spec)
    pred = predict_doppler_spread(100, L, np.radians(60), np.radians(90), LAMBDA)
    assert max(c.spread_hz for c in comps) == pytest.approx(pred, rel=0.10)


def test_spread_invariant_to_power_offset():
    spec = comb_spectrum(300.0, lines=12, noise_db=-40)
    shifted = DopplerSpectrum(spec.freq_hz, spec.power_db - 17.0)
    a = estimate_doppler_spread(spec)
    b = estimate_doppler_spread(shifted)
    assert [c.spread_hz for c in a] == [c.spread_hz for c in b]


# periodicity

def test_constant_is_aperiodic():
    with pytest.raises(AperiodicError):
        estimate_period(np.ones(4096), T)


def test_constructed_modulation_period():
    m = np.arange(16384)
    v = 1 + np.cos(2 * np.pi * 200.0 * m * T)
    assert abs(estimate_period(v, T) - 5e-3) <= T


def test_first_period_lag_ignores_weak_early_maxima():
    ac = np.zeros(1000)
    ac[0] = 1.0
    ac[100] = 0.6  # below 0.9 of the strongest
    ac[300] = 0.95
    assert first_period_lag(ac) == 300


def test_autocorrelation_normalized():
    rng = np.random.default_rng(5)
    ac = autocorrelation(rng.standard_normal(512))
    assert ac[0] == pytest.approx(1.0)
    assert np.all(np.abs(ac) <= 1.0 + 1e-9)


def test_period_and_spacing_agree_on_simulated_propeller():
    # two routes to the same rotation: comb spacing in frequency, period in time
    scene = single_prop_scene(60, 90, 100.0, n_symbols=16384, snr_db=20.0)
    v = observed(scene).stm.gate_sum()
    feats = extract_features(doppler_spectrum(v, T), None, v)
    assert feats.consistency["within_one_lag"]
    assert abs(feats.slow_time_period_s - 5e-3) <= T
    assert feats.rotation_rate_hz == pytest.approx(100.0, abs=feats.doppler_bin_hz / 2)


# feature vector

def test_static_scene_features():
    af = VtolAirframe((), (), (BodyScatterer((0, 0, 0)),))
    scene = Scene(place_bistatic(1.0, 0.1), af, FlightMode.CRUISE, OfdmConfig(n_symbols=1024),
                  20.0, 0)
    feats = analyse(observed(scene).stm).features
    assert feats.components == []
    assert feats.zero_doppler_ratio_db == pytest.approx(0.0, abs=0.1)
    assert "spike_spacing_hz" in feats.missing


@pytest.mark.parametrize("beta,psi", [(40.0, 8.0), (95.0, 12.0)])
def test_cruise_single_narrow_component(beta, psi):
    scene = vtol_scene("Cruise", beta, psi, seed=11)
    feats = analyse(observed(scene).stm).features
    assert len(feats.components) == 1
    assert feats.components[0].spread_hz < 4000


@pytest.mark.parametrize("beta,psi", [(40.0, 8.0), (95.0, 12.0)])
def test_transition_two_distinct_components(beta, psi):
    scene = vtol_scene("Transition", beta, psi, seed=12)
    comps = analyse(observed(scene).stm).features.components
    assert len(comps) >= 2
    spreads = sorted(c.spread_hz for c in comps)
    assert spreads[-1] > 2 * spreads[0]


def test_features_dict_round_trip():
    scene = vtol_scene("Transition", 60.0, 10.0, seed=13, n_symbols=2048)
    feats = analyse(observed(scene).stm).features
    d = feats.to_dict()
    assert d["doppler_spread_hz"] == feats.doppler_spread_hz
    assert type(feats).from_dict(d) == feats
