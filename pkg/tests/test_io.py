import json
import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from vtol_microdoppler.airframe import FlightMode
from vtol_microdoppler.outputs import (GRAY_FLOOR_DB, db_to_gray, decode_pgm, dumps, encode_pgm,
                                       spectrum_csv, write_heatmap)
from vtol_microdoppler.profile_io import (ProfileFormatError, decode_profile, dump_profile,
                                          encode_profile, ingest_profile)
from vtol_microdoppler.receiver import DopplerSpectrum, SlowTimeMatrix
from vtol_microdoppler.scenario import (ScenarioError, parse_scenario, scene_from_dict,
                                        serialize_scene)

# scenario


def test_minimal_scenario_defaults():
    scene = scene_from_dict({"mode": "cruise"})
    assert scene.mode is FlightMode.CRUISE
    assert scene.cfg.n_carriers == 2500 and scene.cfg.sample_rate == 2.4e9
    assert len(scene.airframe.lifting_props) == 6 and len(scene.airframe.thrust_props) == 1
    assert scene.snr_db == 20.0


@pytest.mark.parametrize("doc", [
    {"mode": "Cruise", "airframe": {"blade_count": 0}},
    {"mode": "Cruise", "colour": "red"},
    {"mode": "Cruise", "schema_version": 2},
    {"mode": "Glide"},
    {"mode": "Cruise", "geometry": {"tx_pos": [1, 0, 0]}},
    {"mode": "Cruise", "ofdm": {"n_symbols": 0}},
    [1, 2],
])
def test_invalid_scenarios(doc):
    with pytest.raises(ScenarioError):
        scene_from_dict(doc)


def test_scenario_fixed_point(tmp_path):
    doc = {"mode": "Transition", "noise_seed": 4,
           "geometry": {"bistatic_angle_deg": 45, "bisector_azimuth_deg": 12},
           "airframe": {"rate_spread": 0.05, "seed": 3, "thrust_reflectivity": [2.0, 1.0]}}
    scene = scene_from_dict(doc)
    text = serialize_scene(scene)
    path = tmp_path / "s.json"
    path.write_text(text)
    again = parse_scenario(path)
    assert again == scene
    assert serialize_scene(again) == text
    assert again.airframe.thrust_props[0].blade_reflectivity == 2 + 1j


def test_bad_json(tmp_path):
    path = tmp_path / "s.json"
    path.write_text("{mode: Cruise")
    with pytest.raises(ScenarioError):
        parse_scenario(path)


# profile file

def small_stm(rows=3, m=16, seed=0):
    rng = np.random.default_rng(seed)
    data = (rng.standard_normal((rows, m)) + 1j * rng.standard_normal((rows, m)))
    data = data.astype(np.complex64).astype(complex)
    meta = {"n_carriers": 2500, "sample_rate": 2.4e9, "center_freq": 7e9}
    return SlowTimeMatrix(data, np.arange(5, 5 + rows), 1.0417e-6, meta)


def test_profile_round_trip(tmp_path):
    stm = small_stm()
    back = ingest_profile(dump_profile(stm, tmp_path / "p.vtmd"))
    assert back.data.dtype == complex
    assert np.array_equal(back.data, stm.data)
    assert np.array_equal(back.gate, stm.gate)
    assert back.symbol_period == stm.symbol_period and back.meta == stm.meta


finite32 = st.floats(width=32, allow_nan=False, allow_infinity=False)


@settings(max_examples=50, deadline=None)
@given(arrays(np.float32, st.tuples(st.integers(1, 4), st.integers(1, 32), st.just(2)),
              elements=finite32))
def test_profile_lossless_for_float32(raw):
    data = raw[..., 0].astype(complex) + 1j * raw[..., 1].astype(complex)
    stm = SlowTimeMatrix(data, np.arange(data.shape[0]), 1e-6, {})
    back = decode_profile(encode_profile(stm))
    assert np.array_equal(back.data, data)


def test_profile_rejects_damage():
    buf = encode_profile(small_stm())
    with pytest.raises(ProfileFormatError, match="magic"):
        decode_profile(b"XXXX" + buf[4:])
    with pytest.raises(ProfileFormatError, match="version"):
        decode_profile(buf[:4] + struct.pack("<H", 0) + buf[6:])
    with pytest.raises(ProfileFormatError, match="checksum"):
        decode_profile(buf[:10] + bytes([buf[10] ^ 1]) + buf[11:])
    with pytest.raises(ProfileFormatError, match="payload"):
        decode_profile(buf[:-1])
    with pytest.raises(ProfileFormatError):
        decode_profile(buf[:20])


# outputs

def test_spectrum_csv_format():
    spec = DopplerSpectrum(np.array([-1.5, 0.0, 1.5]), np.array([-3.0, 0.0, -1.25]))
    lines = spectrum_csv(spec).splitlines()
    assert lines[0] == "freq_hz,power_db"
    assert lines[1] == "-1.500000,-3.000000"
    assert len(lines) == 4


def test_gray_map():
    g = db_to_gray([0.0, 5.0, GRAY_FLOOR_DB, -200.0, -40.0, np.nan])
    assert list(g) == [255, 255, 0, 0, 128, 0]
    ramp = db_to_gray(np.linspace(-90, 10, 500))
    assert np.all(np.diff(ramp.astype(int)) >= 0)


def test_pgm_round_trip(tmp_path):
    power = -np.arange(12, dtype=float).reshape(3, 4) * 7
    axis = {"name": "x", "size": 4}
    paths = write_heatmap(power, tmp_path / "h.pgm", axis, axis)
    img = decode_pgm(paths[0].read_bytes())
    assert img.shape == (3, 4)
    assert np.array_equal(img, db_to_gray(power))
    side = json.loads(paths[1].read_text())
    assert side["gray_map"]["db_at_0"] == GRAY_FLOOR_DB
    assert encode_pgm(img).startswith(b"P5\n4 3\n255\n")
    with pytest.raises(ValueError):
        encode_pgm(np.zeros(3))


def test_json_nan_is_null():
    assert json.loads(dumps({"b": float("nan"), "a": np.float64(1.5)})) == {"a": 1.5, "b": None}


def test_png_copy_matches_pgm(tmp_path):
    Image = pytest.importorskip("PIL.Image")
    power = -np.arange(20, dtype=float).reshape(4, 5) * 3
    paths = write_heatmap(power, tmp_path / "h.pgm", {}, {}, png=True)
    assert paths[-1].suffix == ".png"
    assert np.array_equal(np.asarray(Image.open(paths[-1])), decode_pgm(paths[0].read_bytes()))
