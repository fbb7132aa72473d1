"""
VTOL airframe: six lifting rotors, one forward-thrust propeller, static body
returns, and rigid-rotation kinematics of discrete blade scatterers.

Body frame convention: x forward (thrust axis), y left, z up.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .geometry import ScattererState, Vec3, _as_tuple, _orthogonal_unit

PROPELLER_RADIUS = 0.2819  # m, used as blade length
DEFAULT_LIFT_RATE = 80.0  # Hz, arbitrary scenario default
DEFAULT_THRUST_RATE = 100.0  # Hz, arbitrary scenario default


class AirframeError(ValueError):
    pass


class FlightMode(enum.Enum):
    VERTICAL_FLIGHT = "VerticalFlight"  # take-off, landing, hover
    TRANSITION = "Transition"
    CRUISE = "Cruise"

    @classmethod
    def parse(cls, value) -> "FlightMode":
        if isinstance(value, cls):
            return value
        for mode in cls:
            if value in (mode.value, mode.name) or (
                    isinstance(value, str) and value.lower() == mode.value.lower()):
                return mode
        aliases = {"hover": cls.VERTICAL_FLIGHT, "takeoff": cls.VERTICAL_FLIGHT,
                   "take-off": cls.VERTICAL_FLIGHT, "landing": cls.VERTICAL_FLIGHT}
        if isinstance(value, str) and value.lower() in aliases:
            return aliases[value.lower()]
        raise AirframeError(f"unknown flight mode {value!r}")


@dataclass(frozen=True)
class Propeller:
    """Rotor with `blade_count` rigid blades sampled by point scatterers.

    Scatterer i (1-based) of each blade sits at radius i/scatterers_per_blade * L.
    """

    mount: Vec3
    spin_axis: Vec3
    blade_count: int = 2
    blade_length: float = PROPELLER_RADIUS
    rotation_rate: float = DEFAULT_LIFT_RATE
    initial_phase: float = 0.0
    spin_sense: int = 1
    scatterers_per_blade: int = 8
    blade_reflectivity: complex = 1.0

    def __post_init__(self):
        object.__setattr__(self, "mount", _as_tuple(self.mount))
        axis = np.asarray(_as_tuple(self.spin_axis))
        if abs(np.linalg.norm(axis) - 1.0) > 1e-9:
            raise AirframeError("spin_axis must be a unit vector (|a| = 1 within 1e-9)")
        object.__setattr__(self, "spin_axis", _as_tuple(axis))
        if int(self.blade_count) != self.blade_count or self.blade_count < 1:
            raise AirframeError("blade_count must be an integer >= 1")
        if not self.blade_length > 0:
            raise AirframeError("blade_length must be > 0")
        if not (np.isfinite(self.rotation_rate) and self.rotation_rate >= 0):
            raise AirframeError("rotation_rate must be >= 0")
        if int(self.scatterers_per_blade) != self.scatterers_per_blade or self.scatterers_per_blade < 1:
            raise AirframeError("scatterers_per_blade must be an integer >= 1")
        if self.spin_sense not in (1, -1):
            raise AirframeError("spin_sense must be +1 or -1")
        object.__setattr__(self, "blade_count", int(self.blade_count))
        object.__setattr__(self, "scatterers_per_blade", int(self.scatterers_per_blade))
        object.__setattr__(self, "blade_reflectivity", complex(self.blade_reflectivity))

    @property
    def angular_rate(self) -> float:
        return 2 * np.pi * self.rotation_rate

    @property
    def n_scatterers(self) -> int:
        return self.blade_count * self.scatterers_per_blade

    def reference_direction(self) -> np.ndarray:
        """Blade-0 direction at zero rotation angle (unit, orthogonal to the axis)."""
        return _orthogonal_unit(np.asarray(self.spin_axis))

    def radii(self) -> np.ndarray:
        n = self.scatterers_per_blade
        return np.arange(1, n + 1) / n * self.blade_length

    def blade_kinematics(self, times, frozen: bool = False):
        """Body-frame positions and velocities of all blade scatterers.

        Returns arrays of shape (len(times), blade_count * scatterers_per_blade, 3),
        ordered blade-major.
        """
        t = np.atleast_1d(np.asarray(times, dtype=float))
        a = np.asarray(self.spin_axis)
        u = self.reference_direction()
        w = np.cross(a, u)
        # rotation angle reduced per turn so that t and t + k/f_rot agree
        turns = 0.0 if frozen else np.mod(self.rotation_rate * t, 1.0)
        rot = 2 * np.pi * turns * self.spin_sense + self.initial_phase
        blade_off = 2 * np.pi * np.arange(self.blade_count) / self.blade_count
        ang = np.broadcast_to(rot, t.shape)[:, None] + blade_off[None, :]
        d = (np.cos(ang)[..., None] * u + np.sin(ang)[..., None] * w)  # (T, B, 3)
        tangent = np.cross(a, d)
        r = self.radii()
        mount = np.asarray(self.mount)
        pos = mount + d[:, :, None, :] * r[None, None, :, None]
        if frozen:
            vel = np.zeros_like(pos)
        else:
            speed = self.angular_rate * self.spin_sense
            vel = speed * tangent[:, :, None, :] * r[None, None, :, None]
        shape = (t.size, self.n_scatterers, 3)
        return pos.reshape(shape), vel.reshape(shape)


def _rotation_matrix(orientation) -> np.ndarray:
    r = np.asarray(orientation, dtype=float)
    if r.shape != (3, 3) or not np.allclose(r @ r.T, np.eye(3), atol=1e-9):
        raise AirframeError("orientation must be a 3x3 rotation matrix")
    return r


def yaw_pitch_roll(yaw: float = 0.0, pitch: float = 0.0, roll: float = 0.0) -> tuple:
    """Body-to-world rotation (z-y-x intrinsic), angles in radians."""
    cy, sy = np.cos(yaw), np.sin(yaw)
    cp, sp = np.cos(pitch), np.sin(pitch)
    cr, sr = np.cos(roll), np.sin(roll)
    rz = np.array([[cy, -sy, 0], [sy, cy, 0], [0, 0, 1]])
    ry = np.array([[cp, 0, sp], [0, 1, 0], [-sp, 0, cp]])
    rx = np.array([[1, 0, 0], [0, cr, -sr], [0, sr, cr]])
    m = rz @ ry @ rx
    return tuple(tuple(float(x) for x in row) for row in m)


IDENTITY = ((1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 1.0))


@dataclass(frozen=True)
class BodyScatterer:
    """Static fuselage return in body coordinates."""

    pos: Vec3
    reflectivity: complex = 1.0

    def __post_init__(self):
        object.__setattr__(self, "pos", _as_tuple(self.pos))
        object.__setattr__(self, "reflectivity", complex(self.reflectivity))


@dataclass(frozen=True)
class VtolAirframe:
    lifting_props: tuple[Propeller, ...]
    thrust_props: tuple[Propeller, ...]
    body_scatterers: tuple[BodyScatterer, ...] = ()
    position: Vec3 = (0.0, 0.0, 0.0)
    orientation: tuple = IDENTITY

    def __post_init__(self):
        object.__setattr__(self, "lifting_props", tuple(self.lifting_props))
        object.__setattr__(self, "thrust_props", tuple(self.thrust_props))
        object.__setattr__(self, "body_scatterers", tuple(self.body_scatterers))
        object.__setattr__(self, "position", _as_tuple(self.position))
        rot = _rotation_matrix(self.orientation)
        object.__setattr__(self, "orientation", tuple(tuple(float(x) for x in row) for row in rot))
        axes = [np.asarray(p.spin_axis) for p in self.lifting_props]
        for ax in axes[1:]:
            if np.linalg.norm(np.cross(ax, axes[0])) > 1e-9:
                raise AirframeError("lifting spin axes must be mutually parallel")
        if axes:
            for p in self.thrust_props:
                if abs(float(np.dot(p.spin_axis, axes[0]))) > 1e-9:
                    raise AirframeError("thrust spin axis must be orthogonal to lifting axes")

    @property
    def propellers(self) -> tuple[Propeller, ...]:
        return self.lifting_props + self.thrust_props

    def placed_at(self, position) -> "VtolAirframe":
        return VtolAirframe(self.lifting_props, self.thrust_props, self.body_scatterers,
                            position, self.orientation)

    def to_world(self, body_points: np.ndarray) -> np.ndarray:
        return np.asarray(self.position) + body_points @ np.asarray(self.orientation).T

    def to_world_vector(self, body_vectors: np.ndarray) -> np.ndarray:
        return body_vectors @ np.asarray(self.orientation).T

    def world_axis(self, prop: Propeller) -> np.ndarray:
        return self.to_world_vector(np.asarray(prop.spin_axis))


def active_propellers(airframe: VtolAirframe, mode: FlightMode) -> list[Propeller]:
    mode = FlightMode.parse(mode)
    if mode is FlightMode.VERTICAL_FLIGHT:
        return list(airframe.lifting_props)
    if mode is FlightMode.TRANSITION:
        return list(airframe.lifting_props) + list(airframe.thrust_props)
    return list(airframe.thrust_props)


@dataclass
class ScattererArrays:
    """World-frame scatterer positions/velocities over a batch of time instants.

    pos, vel: (n_times, n_scatterers, 3); reflectivity: (n_scatterers,).
    `moving` flags blade scatterers of active propellers.
    """

    pos: np.ndarray
    vel: np.ndarray
    reflectivity: np.ndarray
    moving: np.ndarray = field(default=None)


def scatterer_arrays(airframe: VtolAirframe, mode: FlightMode, times) -> ScattererArrays:
    t = np.atleast_1d(np.asarray(times, dtype=float))
    mode = FlightMode.parse(mode)
    lift_on = mode in (FlightMode.VERTICAL_FLIGHT, FlightMode.TRANSITION)
    thrust_on = mode in (FlightMode.TRANSITION, FlightMode.CRUISE)
    groups = [(p, lift_on) for p in airframe.lifting_props]
    groups += [(p, thrust_on) for p in airframe.thrust_props]
    pos_parts, vel_parts, refl, moving = [], [], [], []
    if airframe.body_scatterers:
        bp = np.array([b.pos for b in airframe.body_scatterers])
        pos_parts.append(np.broadcast_to(bp, (t.size,) + bp.shape))
        vel_parts.append(np.zeros((t.size,) + bp.shape))
        refl.extend(b.reflectivity for b in airframe.body_scatterers)
        moving.extend([False] * len(bp))
    for prop, is_active in groups:
        p, v = prop.blade_kinematics(t, frozen=not is_active)
        pos_parts.append(p)
        vel_parts.append(v)
        refl.extend([prop.blade_reflectivity] * prop.n_scatterers)
        moving.extend([is_active] * prop.n_scatterers)
    if not pos_parts:
        empty = np.zeros((t.size, 0, 3))
        return ScattererArrays(empty, empty.copy(), np.zeros(0, complex), np.zeros(0, bool))
    pos = airframe.to_world(np.concatenate(pos_parts, axis=1))
    vel = airframe.to_world_vector(np.concatenate(vel_parts, axis=1))
    return ScattererArrays(pos, vel, np.asarray(refl, dtype=complex), np.asarray(moving))


def scatterer_states(airframe: VtolAirframe, mode: FlightMode, t: float) -> list[ScattererState]:
    """Body returns followed by blade scatterers of every propeller at time t.

    Active propellers rotate rigidly; inactive ones sit at their initial
    phase with zero velocity.
    """
    arr = scatterer_arrays(airframe, mode, [t])
    return [ScattererState(tuple(arr.pos[0, k]), tuple(arr.vel[0, k]), arr.reflectivity[k])
            for k in range(arr.reflectivity.size)]


def default_airframe(
    lift_rate: float = DEFAULT_LIFT_RATE,
    thrust_rate: float = DEFAULT_THRUST_RATE,
    rate_spread: float = 0.0,
    seed: int | None = 0,
    blade_count: int = 2,
    blade_length: float = PROPELLER_RADIUS,
    scatterers_per_blade: int = 8,
    lift_reflectivity: complex = 1.0,
    thrust_reflectivity: complex = 10.0,
    body_reflectivity: complex = 1.0,
) -> VtolAirframe:
    """Canonical seven-propeller VTOL.

    Lifting rotors sit on two longitudinal booms (three per side) with vertical
    axes and alternating spin sense; the tractor propeller is on the nose with
    its axis along +x. Initial phases are drawn from `seed`; per-rotor rate
    offsets are uniform in +-rate_spread (fraction of lift_rate).
    The thrust propeller's larger default reflectivity stands in for its disc
    being seen nearly face-on and for the receive antenna pointing at it.
    """
    rng = np.random.default_rng(seed)
    phases = rng.uniform(0, 2 * np.pi, size=7) if seed is not None else np.zeros(7)
    offsets = rng.uniform(-rate_spread, rate_spread, size=6) if rate_spread else np.zeros(6)
    lifting = []
    k = 0
    for y in (0.65, -0.65):
        for x in (0.75, 0.0, -0.75):
            lifting.append(Propeller(
                mount=(x, y, 0.1), spin_axis=(0.0, 0.0, 1.0), blade_count=blade_count,
                blade_length=blade_length, rotation_rate=lift_rate * (1 + offsets[k]),
                initial_phase=float(phases[k]), spin_sense=1 if k % 2 == 0 else -1,
                scatterers_per_blade=scatterers_per_blade, blade_reflectivity=lift_reflectivity))
            k += 1
    thrust = Propeller(
        mount=(1.05, 0.0, 0.0), spin_axis=(1.0, 0.0, 0.0), blade_count=blade_count,
        blade_length=blade_length, rotation_rate=thrust_rate, initial_phase=float(phases[6]),
        spin_sense=1, scatterers_per_blade=scatterers_per_blade,
        blade_reflectivity=thrust_reflectivity)
    body = (BodyScatterer((0.0, 0.0, 0.0), body_reflectivity),
            BodyScatterer((0.6, 0.0, 0.0), body_reflectivity),
            BodyScatterer((-0.9, 0.0, 0.0), body_reflectivity))
    return VtolAirframe(tuple(lifting), (thrust,), body)


def single_propeller_airframe(
    spin_axis=(0.0, 0.0, 1.0),
    rotation_rate: float = 100.0,
    blade_count: int = 2,
    blade_length: float = PROPELLER_RADIUS,
    scatterers_per_blade: int = 8,
    initial_phase: float = 0.0,
    body_reflectivity: complex = 1.0,
) -> VtolAirframe:
    """One propeller at the body origin plus one static body return.

    Modelled as the thrust slot so that it is active in Cruise mode.
    """
    prop = Propeller(mount=(0.0, 0.0, 0.0), spin_axis=spin_axis, blade_count=blade_count,
                     blade_length=blade_length, rotation_rate=rotation_rate,
                     initial_phase=initial_phase, scatterers_per_blade=scatterers_per_blade)
    body = (BodyScatterer((0.0, 0.0, -0.05), body_reflectivity),) if body_reflectivity else ()
    return VtolAirframe((), (prop,), body)
