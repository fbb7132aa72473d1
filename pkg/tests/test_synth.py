import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vtol_microdoppler.airframe import BodyScatterer, FlightMode, VtolAirframe, default_airframe
from vtol_microdoppler.geometry import SPEED_OF_LIGHT, place_bistatic
from vtol_microdoppler.synth import (Scene, channel_from_delays, map_chunks, noise_block,
                                     noise_variance, received_block, synthesize_channels)
from vtol_microdoppler.waveform import FreqSymbol, OfdmConfig, carrier_frequencies, newman_symbol

CFG = OfdmConfig(n_symbols=32)


def static_scene(points=((0.0, 0.0, 0.0),), snr_db=None, seed=0, cfg=CFG):
    af = VtolAirframe((), (), tuple(BodyScatterer(p) for p in points))
    return Scene(place_bistatic(np.radians(40), 0.2, 12.0), af, FlightMode.CRUISE, cfg,
                 snr_db, seed)


def direct_channel(tau, amp, cfg):
    f = cfg.center_freq + carrier_frequencies(cfg)
    return amp * np.exp(-2j * np.pi * f * tau)


@settings(max_examples=40, deadline=None)
@given(tau=st.floats(1e-9, 2e-7), re=st.floats(-2, 2), im=st.floats(-2, 2))
def test_fast_channel_matches_direct_sum(tau, re, im):
    cfg = OfdmConfig(n_carriers=257, n_energized=200)
    h = channel_from_delays(np.array([[tau]]), np.array([[complex(re, im)]]), cfg)[0]
    ref = direct_channel(tau, complex(re, im), cfg)
    assert np.allclose(h, ref, rtol=0, atol=1e-9 * max(1.0, abs(complex(re, im))))


def test_static_channel_time_invariant():
    h = synthesize_channels(static_scene(), np.arange(CFG.n_symbols))
    assert np.allclose(h, h[0], rtol=0, atol=1e-15)


def test_linear_phase_slope():
    scene = static_scene()
    h = synthesize_channels(scene, [0])[0]
    g = scene.geometry
    tau = (np.linalg.norm(g.tx_pos) + np.linalg.norm(g.rx_pos)) / SPEED_OF_LIGHT
    df = CFG.sample_rate / CFG.n_carriers
    dphi = np.angle(h[11] / h[10])
    assert dphi == pytest.approx(np.angle(np.exp(-2j * np.pi * tau * df)), abs=1e-9)
    assert np.allclose(np.abs(h), np.abs(h[0]))


def test_superposition_doubles():
    one = synthesize_channels(static_scene(), [0])
    two = synthesize_channels(static_scene(((0, 0, 0), (0, 0, 0))), [0])
    assert np.allclose(two, 2 * one, rtol=1e-12)


def test_noiseless_received_is_hx():
    scene = static_scene()
    x = newman_symbol(CFG)
    y = received_block(scene, [0, 5], x)
    assert np.array_equal(y, synthesize_channels(scene, [0, 5]) * x.bins)
    unit = np.zeros(CFG.n_carriers, complex)
    unit[CFG.energized_set] = 1
    y1 = received_block(scene, [0], FreqSymbol(unit))[0]
    h = synthesize_channels(scene, [0])[0]
    assert np.array_equal(y1[CFG.energized_set], h[CFG.energized_set])
    assert not np.any(np.delete(y1, CFG.energized_set))


def test_noise_variance_empirical():
    w = noise_block(3, np.arange(40), 2500, 0.25)  # 1e5 samples
    assert np.mean(np.abs(w) ** 2) == pytest.approx(0.25, rel=0.03)
    assert abs(np.mean(w)) < 0.01


def test_noise_keyed_by_symbol_index():
    a = noise_block(7, [4, 5, 6], 64, 1.0)
    b = noise_block(7, [6, 4], 64, 1.0)
    assert np.array_equal(a[2], b[0]) and np.array_equal(a[0], b[1])
    assert not np.array_equal(noise_block(8, [4], 64, 1.0)[0], a[0])


def test_snr_reference_and_zero_channel():
    scene = static_scene(snr_db=10.0)
    x = newman_symbol(CFG)
    h0 = synthesize_channels(scene, [0])[0]
    p = np.mean(np.abs(h0[CFG.energized_set]) ** 2)
    assert noise_variance(scene, x) == pytest.approx(p / 10)
    empty = Scene(scene.geometry, VtolAirframe((), (), ()), FlightMode.CRUISE, CFG, 10.0)
    assert noise_variance(empty, x) == 1.0
    assert noise_variance(static_scene(), x) == 0.0


def test_chunking_and_threads_do_not_change_output():
    scene = Scene(place_bistatic(1.0, 0.1), default_airframe(seed=1), FlightMode.TRANSITION,
                  OfdmConfig(n_symbols=48), 15.0, 2)
    run = lambda idx: received_block(scene, idx)
    a = np.concatenate(map_chunks(run, 48, 48))
    b = np.concatenate(map_chunks(run, 48, 7, workers=3))
    assert np.array_equal(a, b)


def test_symbol_index_bounds():
    with pytest.raises(IndexError):
        synthesize_channels(static_scene(), [CFG.n_symbols])
