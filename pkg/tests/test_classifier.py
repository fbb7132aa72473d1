import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from vtol_microdoppler.airframe import FlightMode, default_airframe
from vtol_microdoppler.classifier import SpreadContext, classify, spread_context
from vtol_microdoppler.features import Component, MicroDopplerFeatures
from vtol_microdoppler.geometry import place_bistatic

CTX = SpreadContext.from_predictions(lifting_hz=10000.0, thrust_hz=1000.0)  # split ~3162 Hz


def feats(*comps, peak_db=None):
    cs = [Component(s, 0.0, p, nested) for s, p, nested in comps]
    return MicroDopplerFeatures(components=cs, peak_db=peak_db, doppler_bin_hz=117.0)


def test_split_is_geometric_mean():
    assert CTX.wide_threshold_hz == pytest.approx(np.sqrt(1e7))
    assert CTX.narrow_threshold_hz == CTX.wide_threshold_hz
    assert CTX.separable


def test_min_spread_floors_thrust():
    ctx = SpreadContext.from_predictions(10000.0, 0.0, min_spread_hz=400.0)
    assert ctx.wide_threshold_hz == pytest.approx(2000.0)
    with pytest.raises(ValueError):
        SpreadContext.from_predictions(10000.0, 0.0)


def test_bad_thresholds_rejected():
    with pytest.raises(ValueError):
        SpreadContext(1.0, 1.0, 100.0, 200.0)
    with pytest.raises(ValueError):
        SpreadContext(1.0, 1.0, 0.0, 0.0)


@pytest.mark.parametrize("comps, mode", [
    ([(9000, 0, False)], FlightMode.VERTICAL_FLIGHT),
    ([(9000, 0, False), (1200, -1, True)], FlightMode.TRANSITION),
    ([(1500, 0, False)], FlightMode.CRUISE),
])
def test_rules(comps, mode):
    d = classify(feats(*comps, peak_db=0.0), CTX)
    assert d.mode is mode
    assert d.label == mode.value
    assert 0.0 < d.confidence <= 1.0
    assert set(d.rules) <= set(d.margins)


def test_weak_narrow_only_is_unknown():
    # strongest narrow line far below the global maximum
    d = classify(feats((1500, -20, False), peak_db=0.0), CTX)
    assert d.mode is None and d.label == "unknown" and d.confidence == 0.0


def test_empty_is_unknown():
    assert classify(feats(), CTX).label == "unknown"
    assert classify(None, CTX).confidence == 0.0


def test_between_thresholds_is_unknown():
    ctx = SpreadContext(10000.0, 1000.0, wide_threshold_hz=5000.0, narrow_threshold_hz=2000.0)
    assert classify(feats((3000, 0, False), peak_db=0.0), ctx).label == "unknown"


def test_to_dict():
    d = classify(feats((9000, 0, False), peak_db=0.0), CTX).to_dict()
    assert d["mode"] == "VerticalFlight"
    assert set(d) == {"mode", "confidence", "rules", "margins"}


spreads = st.lists(st.floats(100, 20000), min_size=1, max_size=4)


@given(spreads, st.floats(-60, 60))
def test_decision_invariant_to_db_offset(values, offset):
    comps = [(s, -float(i), False) for i, s in enumerate(values)]
    a = classify(feats(*comps, peak_db=0.0), CTX)
    shifted = [(s, p + offset, n) for s, p, n in comps]
    b = classify(feats(*shifted, peak_db=offset), CTX)
    assert a.mode is b.mode
    assert a.confidence == pytest.approx(b.confidence, abs=1e-9)
    assert 0.0 <= a.confidence <= 1.0


def test_spread_context_from_geometry():
    # lifting axes vertical, thrust axis along the fuselage: near-horizontal
    # bisector gives a wide lifting spread and a narrow thrust spread
    ctx = spread_context(place_bistatic(np.radians(60), np.radians(10)), default_airframe())
    assert ctx.lifting_spread_hz > 4 * ctx.thrust_spread_hz
    assert ctx.thrust_spread_hz < ctx.wide_threshold_hz < ctx.lifting_spread_hz
