"""
Rule-based flight-mode decision from Doppler-spread components.

Thresholds come from the spread model evaluated at the scene geometry: the
lifting rotors (axes vertical) and the thrust propeller (axis along the
fuselage) see very different elevation angles, so their predicted spreads
bracket the split between "wide" and "narrow" components.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .airframe import FlightMode, VtolAirframe
from .features import MicroDopplerFeatures, predict_doppler_spread
from .geometry import BistaticGeometry, bistatic_angle, elevation_angle

UNKNOWN = "unknown"


@dataclass(frozen=True)
class SpreadContext:
    """Expected spread scale at a configured geometry (Hz)."""

    lifting_spread_hz: float
    thrust_spread_hz: float
    wide_threshold_hz: float
    narrow_threshold_hz: float
    peak_window_db: float = 6.0

    def __post_init__(self):
        if not (self.wide_threshold_hz > 0 and self.narrow_threshold_hz > 0):
            raise ValueError("thresholds must be > 0")
        if self.narrow_threshold_hz > self.wide_threshold_hz:
            raise ValueError("narrow threshold must not exceed wide threshold")

    @classmethod
    def from_predictions(cls, lifting_hz: float, thrust_hz: float, min_spread_hz: float = 0.0,
                         peak_window_db: float = 6.0) -> "SpreadContext":
        """Split at the geometric mean of the two predicted spreads.

        `min_spread_hz` floors the thrust prediction so a near-null thrust
        geometry does not drive the split to zero.
        """
        lo = max(thrust_hz, min_spread_hz)
        hi = max(lifting_hz, min_spread_hz)
        if lo <= 0 or hi <= 0:
            raise ValueError("predicted spreads must be > 0 (set min_spread_hz)")
        split = math.sqrt(lo * hi)
        return cls(lifting_hz, thrust_hz, split, split, peak_window_db)

    @property
    def separable(self) -> bool:
        return self.lifting_spread_hz > self.thrust_spread_hz


def spread_context(geometry: BistaticGeometry, airframe: VtolAirframe,
                   min_spread_hz: float = 0.0, peak_window_db: float = 6.0) -> SpreadContext:
    """Predicted lifting / thrust spreads at the airframe's reference point.

    The lifting prediction uses the fastest lifting rotor (the aggregate
    support is set by it), the thrust prediction the fastest thrust propeller.
    """
    lam = geometry.wavelength
    point = airframe.position

    def predict(props):
        best = 0.0
        for p in props:
            axis = airframe.to_world_vector(np.asarray(p.spin_axis))
            beta = bistatic_angle(geometry, point)
            theta = elevation_angle(axis, geometry, point)
            best = max(best, predict_doppler_spread(p.rotation_rate, p.blade_length, beta,
                                                    theta, lam))
        return best

    return SpreadContext.from_predictions(predict(airframe.lifting_props),
                                          predict(airframe.thrust_props),
                                          min_spread_hz, peak_window_db)


@dataclass
class FlightModeDecision:
    mode: FlightMode | None  # None means unknown
    confidence: float
    evidence: MicroDopplerFeatures | None
    rules: tuple[str, ...] = ()
    margins: dict = field(default_factory=dict)

    @property
    def label(self) -> str:
        return self.mode.value if self.mode is not None else UNKNOWN

    def to_dict(self) -> dict:
        return {"mode": self.label, "confidence": self.confidence, "rules": list(self.rules),
                "margins": dict(self.margins)}


def _unknown(features, margins=None) -> FlightModeDecision:
    return FlightModeDecision(None, 0.0, features, (), margins or {})


def classify(features: MicroDopplerFeatures | None, context: SpreadContext) -> FlightModeDecision:
    """VerticalFlight / Transition / Cruise from wide and narrow components.

    - wide present, no narrow -> VerticalFlight
    - wide and narrow present -> Transition
    - narrow only, strongest narrow peak within the peak window of the
      global maximum -> Cruise
    - anything else -> unknown (confidence 0)

    Every fired rule carries a margin relative to its threshold; the
    confidence is the smallest of these, clamped to [0, 1].
    """
    if features is None or not features.components:
        return _unknown(features)
    wide_t, narrow_t = context.wide_threshold_hz, context.narrow_threshold_hz
    comps = features.components
    wide = [c for c in comps if c.spread_hz >= wide_t]
    narrow = [c for c in comps if c.spread_hz < narrow_t]
    margins = {}
    if wide:
        margins["wide_present"] = (max(c.spread_hz for c in wide) - wide_t) / wide_t
    if narrow:
        margins["narrow_present"] = (narrow_t - min(c.spread_hz for c in narrow)) / narrow_t
    if wide and not narrow:
        margins["narrow_absent"] = min((c.spread_hz - narrow_t) / narrow_t for c in comps)
        rules = ("wide_present", "narrow_absent")
        mode = FlightMode.VERTICAL_FLIGHT
    elif wide and narrow:
        rules = ("wide_present", "narrow_present")
        mode = FlightMode.TRANSITION
    elif narrow:
        top = features.peak_db if features.peak_db is not None else max(c.peak_db for c in comps)
        gap = top - max(c.peak_db for c in narrow)
        margins["narrow_peak"] = (context.peak_window_db - gap) / context.peak_window_db
        if gap > context.peak_window_db:
            return _unknown(features, margins)
        margins["wide_absent"] = min((wide_t - c.spread_hz) / wide_t for c in comps)
        rules = ("narrow_present", "wide_absent", "narrow_peak")
        mode = FlightMode.CRUISE
    else:
        # components between the two thresholds only
        return _unknown(features, margins)
    conf = min(margins[r] for r in rules)
    return FlightModeDecision(mode, float(min(1.0, max(0.0, conf))), features, rules, margins)
