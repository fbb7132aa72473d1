"""
Scenario files: a JSON document describing geometry, waveform, airframe,
flight mode, noise and processing knobs.

Geometry may be given either as explicit antenna positions or as a
placement (bistatic angle, bisector azimuth/elevation, distance) in degrees
and meters. The airframe may list propellers explicitly or be generated from
the canonical VTOL layout. `serialize_scene` always writes the resolved,
explicit form, so parse -> serialize -> parse is a fixed point.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .airframe import (PROPELLER_RADIUS, BodyScatterer, FlightMode, Propeller, VtolAirframe,
                       default_airframe, yaw_pitch_roll)
from .geometry import BistaticGeometry, place_bistatic
from .synth import ProcessingParams, Scene
from .waveform import OfdmConfig

SCHEMA_VERSION = 1

Vec3 = tuple[float, float, float]
Complexish = Union[float, tuple[float, float]]


class ScenarioError(ValueError):
    pass


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class GeometryBlock(_Strict):
    tx_pos: Optional[Vec3] = None
    rx_pos: Optional[Vec3] = None
    target_ref: Vec3 = (0.0, 0.0, 0.0)
    carrier_freq_hz: float = Field(7e9, gt=0)
    bistatic_angle_deg: float = Field(60.0, ge=0, le=180)
    bisector_azimuth_deg: float = 10.0
    bisector_elevation_deg: float = Field(0.0, ge=-90, le=90)
    distance_m: float = Field(10.0, gt=0)

    @model_validator(mode="after")
    def _both_or_neither(self):
        if (self.tx_pos is None) != (self.rx_pos is None):
            raise ValueError("tx_pos and rx_pos must be given together")
        return self


class OfdmBlock(_Strict):
    n_carriers: int = Field(2500, ge=1)
    n_energized: int = Field(2048, ge=1)
    pilots: list[int] = []
    sample_rate_hz: float = Field(2.4e9, gt=0)
    n_symbols: int = Field(4096, ge=1)
    bandwidth_hz: float = Field(2.4e9, gt=0)


class PropellerBlock(_Strict):
    mount: Vec3
    spin_axis: Vec3
    blade_count: int = Field(2, ge=1)
    blade_length_m: float = Field(PROPELLER_RADIUS, gt=0)
    rotation_rate_hz: float = Field(..., ge=0)
    initial_phase_rad: float = 0.0
    spin_sense: Literal[-1, 1] = 1
    scatterers_per_blade: int = Field(8, ge=1)
    reflectivity: Complexish = 1.0


class BodyBlock(_Strict):
    pos: Vec3
    reflectivity: Complexish = 1.0


class AirframeBlock(_Strict):
    # generator knobs, used when propeller lists are absent
    lift_rate_hz: float = Field(80.0, ge=0)
    thrust_rate_hz: float = Field(100.0, ge=0)
    rate_spread: float = Field(0.0, ge=0, lt=1)
    seed: int = 0
    blade_count: int = Field(2, ge=1)
    blade_length_m: float = Field(PROPELLER_RADIUS, gt=0)
    scatterers_per_blade: int = Field(8, ge=1)
    lift_reflectivity: Complexish = 1.0
    thrust_reflectivity: Complexish = 10.0
    body_reflectivity: Complexish = 1.0
    # explicit form
    lifting: Optional[list[PropellerBlock]] = None
    thrust: Optional[list[PropellerBlock]] = None
    body: Optional[list[BodyBlock]] = None
    orientation: Optional[tuple[Vec3, Vec3, Vec3]] = None
    yaw_pitch_roll_deg: Optional[Vec3] = None

    @model_validator(mode="after")
    def _one_orientation(self):
        if self.orientation is not None and self.yaw_pitch_roll_deg is not None:
            raise ValueError("give orientation or yaw_pitch_roll_deg, not both")
        return self


class ProcessingBlock(_Strict):
    window: str = "hann"
    range_window: str = "hann"
    stft_window_len: int = Field(128, ge=2)
    stft_hop: Optional[int] = Field(None, ge=1)
    detect_threshold_db: float = 12.0
    floor_margin_db: float = Field(10.0, ge=0)
    comb_margin_db: float = Field(6.0, ge=0)
    use_gate_sum: bool = True
    remove_direct_delay: bool = False


class ScenarioModel(_Strict):
    schema_version: Literal[1] = SCHEMA_VERSION
    mode: str
    snr_db: Optional[float] = 20.0
    noise_seed: int = Field(0, ge=0)
    include_direct_path: bool = False
    direct_path_gain: float = 1.0
    geometry: GeometryBlock = GeometryBlock()
    ofdm: OfdmBlock = OfdmBlock()
    airframe: AirframeBlock = AirframeBlock()
    processing: ProcessingBlock = ProcessingBlock()


# ---------------------------------------------------------------------------
# model -> domain

def _cplx(v) -> complex:
    if isinstance(v, (tuple, list)):
        return complex(v[0], v[1])
    return complex(v)


def _json_cplx(z: complex):
    z = complex(z)
    return z.real if z.imag == 0 else [z.real, z.imag]


def _propeller(b: PropellerBlock) -> Propeller:
    return Propeller(mount=b.mount, spin_axis=b.spin_axis, blade_count=b.blade_count,
                     blade_length=b.blade_length_m, rotation_rate=b.rotation_rate_hz,
                     initial_phase=b.initial_phase_rad, spin_sense=b.spin_sense,
                     scatterers_per_blade=b.scatterers_per_blade,
                     blade_reflectivity=_cplx(b.reflectivity))


def _airframe(a: AirframeBlock) -> VtolAirframe:
    base = default_airframe(
        lift_rate=a.lift_rate_hz, thrust_rate=a.thrust_rate_hz, rate_spread=a.rate_spread,
        seed=a.seed, blade_count=a.blade_count, blade_length=a.blade_length_m,
        scatterers_per_blade=a.scatterers_per_blade,
        lift_reflectivity=_cplx(a.lift_reflectivity),
        thrust_reflectivity=_cplx(a.thrust_reflectivity),
        body_reflectivity=_cplx(a.body_reflectivity))
    lifting = base.lifting_props if a.lifting is None else [_propeller(p) for p in a.lifting]
    thrust = base.thrust_props if a.thrust is None else [_propeller(p) for p in a.thrust]
    body = (base.body_scatterers if a.body is None
            else [BodyScatterer(b.pos, _cplx(b.reflectivity)) for b in a.body])
    if a.orientation is not None:
        orient = a.orientation
    elif a.yaw_pitch_roll_deg is not None:
        orient = yaw_pitch_roll(*(math.radians(x) for x in a.yaw_pitch_roll_deg))
    else:
        orient = base.orientation
    return VtolAirframe(tuple(lifting), tuple(thrust), tuple(body), (0.0, 0.0, 0.0), orient)


def _geometry(g: GeometryBlock) -> BistaticGeometry:
    if g.tx_pos is not None:
        return BistaticGeometry(g.tx_pos, g.rx_pos, g.target_ref, g.carrier_freq_hz)
    return place_bistatic(math.radians(g.bistatic_angle_deg),
                          math.radians(g.bisector_azimuth_deg), g.distance_m, g.target_ref,
                          math.radians(g.bisector_elevation_deg), g.carrier_freq_hz)


def _error(exc: ValidationError) -> ScenarioError:
    parts = []
    for e in exc.errors():
        loc = ".".join(str(x) for x in e["loc"]) or "<root>"
        parts.append(f"{loc}: {e['msg']}")
    return ScenarioError("invalid scenario: " + "; ".join(parts))


def scene_from_dict(doc: dict) -> Scene:
    if not isinstance(doc, dict):
        raise ScenarioError("scenario must be a JSON object")
    version = doc.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ScenarioError(f"unsupported schema_version {version!r} (expected {SCHEMA_VERSION})")
    try:
        model = ScenarioModel.model_validate(doc)
    except ValidationError as exc:
        raise _error(exc) from None
    try:
        mode = FlightMode.parse(model.mode)
        o = model.ofdm
        cfg = OfdmConfig(n_carriers=o.n_carriers, n_energized=o.n_energized,
                         pilots=tuple(o.pilots), sample_rate=o.sample_rate_hz,
                         n_symbols=o.n_symbols, center_freq=model.geometry.carrier_freq_hz,
                         bandwidth=o.bandwidth_hz)
        p = model.processing
        proc = ProcessingParams(window=p.window, range_window=p.range_window,
                                stft_window_len=p.stft_window_len, stft_hop=p.stft_hop,
                                detect_threshold_db=p.detect_threshold_db,
                                floor_margin_db=p.floor_margin_db,
                                comb_margin_db=p.comb_margin_db, use_gate_sum=p.use_gate_sum,
                                remove_direct_delay=p.remove_direct_delay)
        return Scene(_geometry(model.geometry), _airframe(model.airframe), mode, cfg,
                     model.snr_db, model.noise_seed, model.include_direct_path,
                     model.direct_path_gain, proc)
    except ScenarioError:
        raise
    except ValueError as exc:
        raise ScenarioError(f"invalid scenario: {exc}") from None


def parse_scenario(path) -> Scene:
    text = Path(path).read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: not valid JSON ({exc})") from None
    return scene_from_dict(doc)


# ---------------------------------------------------------------------------
# domain -> normalized document

def _prop_dict(p: Propeller) -> dict:
    return {"mount": list(p.mount), "spin_axis": list(p.spin_axis),
            "blade_count": p.blade_count, "blade_length_m": p.blade_length,
            "rotation_rate_hz": p.rotation_rate, "initial_phase_rad": p.initial_phase,
            "spin_sense": p.spin_sense, "scatterers_per_blade": p.scatterers_per_blade,
            "reflectivity": _json_cplx(p.blade_reflectivity)}


def scene_to_dict(scene: Scene) -> dict:
    g, cfg, af, p = scene.geometry, scene.cfg, scene.airframe, scene.processing
    return {
        "schema_version": SCHEMA_VERSION,
        "mode": scene.mode.value,
        "snr_db": scene.snr_db,
        "noise_seed": scene.noise_seed,
        "include_direct_path": scene.include_direct_path,
        "direct_path_gain": scene.direct_path_gain,
        "geometry": {"tx_pos": list(g.tx_pos), "rx_pos": list(g.rx_pos),
                     "target_ref": list(g.target_ref), "carrier_freq_hz": g.carrier_freq},
        "ofdm": {"n_carriers": cfg.n_carriers, "n_energized": cfg.n_energized,
                 "pilots": list(cfg.pilots), "sample_rate_hz": cfg.sample_rate,
                 "n_symbols": cfg.n_symbols, "bandwidth_hz": cfg.bandwidth},
        "airframe": {
            "lifting": [_prop_dict(x) for x in af.lifting_props],
            "thrust": [_prop_dict(x) for x in af.thrust_props],
            "body": [{"pos": list(b.pos), "reflectivity": _json_cplx(b.reflectivity)}
                     for b in af.body_scatterers],
            "orientation": [list(r) for r in af.orientation],
        },
        "processing": {"window": p.window, "range_window": p.range_window,
                       "stft_window_len": p.stft_window_len, "stft_hop": p.stft_hop,
                       "detect_threshold_db": p.detect_threshold_db,
                       "floor_margin_db": p.floor_margin_db, "comb_margin_db": p.comb_margin_db,
                       "use_gate_sum": p.use_gate_sum,
                       "remove_direct_delay": p.remove_direct_delay},
    }


def serialize_scene(scene: Scene) -> str:
    return json.dumps(scene_to_dict(scene), indent=2, sort_keys=True) + "\n"


def write_scenario(scene: Scene, path) -> Path:
    path = Path(path)
    path.write_text(serialize_scene(scene), encoding="utf-8")
    return path
