"""Bistatic OFDM micro-Doppler simulation and VTOL flight-mode classification."""

from .airframe import FlightMode, VtolAirframe, default_airframe, single_propeller_airframe
from .classifier import FlightModeDecision, SpreadContext, classify, spread_context
from .features import MicroDopplerFeatures, extract_features, predict_doppler_spread
from .geometry import BistaticGeometry, place_bistatic
from .observe import observe
from .pipeline import run_pipeline
from .scenario import parse_scenario, serialize_scene
from .synth import ProcessingParams, Scene
from .waveform import OfdmConfig, newman_symbol

__version__ = "0.1.0"

__all__ = [
    "BistaticGeometry", "FlightMode", "FlightModeDecision", "MicroDopplerFeatures", "OfdmConfig",
    "ProcessingParams", "Scene", "SpreadContext", "VtolAirframe", "classify", "default_airframe",
    "extract_features", "newman_symbol", "observe", "parse_scenario", "place_bistatic",
    "predict_doppler_spread", "run_pipeline", "serialize_scene", "single_propeller_airframe",
    "spread_context",
]
