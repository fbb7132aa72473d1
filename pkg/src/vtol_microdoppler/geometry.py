"""
Bistatic scene geometry: bistatic angle, propeller elevation angle, path delay
and Doppler projection for point scatterers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SPEED_OF_LIGHT = 299_792_458.0  # m/s

Vec3 = tuple[float, float, float]


class GeometryError(ValueError):
    """Raised for degenerate geometric configurations."""


def _vec(v) -> np.ndarray:
    a = np.asarray(v, dtype=float)
    if a.shape[-1] != 3:
        raise GeometryError(f"expected 3-vector, got shape {a.shape}")
    return a


def _as_tuple(v) -> Vec3:
    a = _vec(v)
    if a.shape != (3,) or not np.all(np.isfinite(a)):
        raise GeometryError(f"expected finite 3-vector, got {v!r}")
    return (float(a[0]), float(a[1]), float(a[2]))


@dataclass(frozen=True)
class BistaticGeometry:
    """Transmitter / receiver / target placement and carrier frequency.

    Positions are in meters in a common world frame.
    """

    tx_pos: Vec3
    rx_pos: Vec3
    target_ref: Vec3
    carrier_freq: float = 7e9

    def __post_init__(self):
        object.__setattr__(self, "tx_pos", _as_tuple(self.tx_pos))
        object.__setattr__(self, "rx_pos", _as_tuple(self.rx_pos))
        object.__setattr__(self, "target_ref", _as_tuple(self.target_ref))
        if not (np.isfinite(self.carrier_freq) and self.carrier_freq > 0):
            raise GeometryError("carrier_freq must be > 0")
        if self.tx_pos == self.target_ref or self.rx_pos == self.target_ref:
            raise GeometryError("tx_pos and rx_pos must differ from target_ref")

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.carrier_freq

    @property
    def baseline(self) -> float:
        return float(np.linalg.norm(_vec(self.tx_pos) - _vec(self.rx_pos)))


@dataclass(frozen=True)
class ScattererState:
    """Position, velocity and complex reflectivity of one point scatterer."""

    pos: Vec3
    vel: Vec3 = (0.0, 0.0, 0.0)
    reflectivity: complex = 1.0

    def __post_init__(self):
        object.__setattr__(self, "pos", _as_tuple(self.pos))
        object.__setattr__(self, "vel", _as_tuple(self.vel))
        refl = complex(self.reflectivity)
        if not np.isfinite(refl):
            raise GeometryError("reflectivity must be finite")
        object.__setattr__(self, "reflectivity", refl)


def _unit_towards(src: np.ndarray, dst: np.ndarray) -> np.ndarray:
    d = dst - src
    n = np.linalg.norm(d, axis=-1, keepdims=True)
    if np.any(n == 0):
        raise GeometryError("point coincides with an antenna")
    return d / n


def bistatic_angle(geom: BistaticGeometry, point=None) -> float:
    """Angle at `point` between the lines of sight to transmitter and receiver.

    Returns radians in [0, pi]. `point` defaults to the target reference.
    """
    p = _vec(geom.target_ref if point is None else point)
    u_tx = _unit_towards(p, _vec(geom.tx_pos))
    u_rx = _unit_towards(p, _vec(geom.rx_pos))
    # atan2 form stays accurate near 0 and pi where acos loses precision
    cross = np.linalg.norm(np.cross(u_tx, u_rx))
    dot = float(np.dot(u_tx, u_rx))
    return float(np.arctan2(cross, dot))


def bisector(geom: BistaticGeometry, point=None) -> np.ndarray:
    """Unit bisector of the two lines of sight (points away from the target).

    For forward scatter (beta = pi) the bisector is undefined; any unit vector
    orthogonal to the baseline is returned.
    """
    p = _vec(geom.target_ref if point is None else point)
    s = _unit_towards(p, _vec(geom.tx_pos)) + _unit_towards(p, _vec(geom.rx_pos))
    n = np.linalg.norm(s)
    if n < 1e-12:
        base = _unit_towards(p, _vec(geom.tx_pos))
        return _orthogonal_unit(base)
    return s / n


def _orthogonal_unit(a: np.ndarray) -> np.ndarray:
    e = np.zeros(3)
    e[int(np.argmin(np.abs(a)))] = 1.0
    o = np.cross(a, e)
    return o / np.linalg.norm(o)


def elevation_angle(spin_axis, geom: BistaticGeometry, point=None) -> float:
    """Angle between the bistatic bisector and the propeller spin axis.

    pi/2 when the bisector lies in the rotation plane (full radial blade
    motion), 0 when it is parallel to the spin axis. Folded into [0, pi/2].
    """
    a = _vec(spin_axis)
    n = np.linalg.norm(a)
    if n == 0 or not np.isfinite(n):
        raise GeometryError("spin axis must be a nonzero finite vector")
    a = a / n
    b = bisector(geom, point)
    c = min(abs(float(np.dot(a, b))), 1.0)
    return float(np.arccos(c))


def bistatic_range(geom: BistaticGeometry, points) -> np.ndarray:
    """Sum of Tx-point and point-Rx distances, vectorized over leading axes."""
    p = _vec(points)
    return (np.linalg.norm(p - _vec(geom.tx_pos), axis=-1)
            + np.linalg.norm(p - _vec(geom.rx_pos), axis=-1))


def bistatic_delay(geom: BistaticGeometry, point) -> float | np.ndarray:
    """Propagation delay Tx -> point -> Rx in seconds."""
    r = bistatic_range(geom, point) / SPEED_OF_LIGHT
    return float(r) if np.ndim(r) == 0 else r


def bistatic_doppler(geom: BistaticGeometry, state: ScattererState) -> float:
    """Doppler shift of a moving scatterer; positive when closing on both antennas."""
    return float(doppler_shift(geom, state.pos, state.vel))


def doppler_shift(geom: BistaticGeometry, pos, vel) -> np.ndarray:
    """Vectorized bistatic Doppler: (1/lambda) * v . (u_tx + u_rx)."""
    p = _vec(pos)
    v = _vec(vel)
    u_sum = _unit_towards(p, _vec(geom.tx_pos)) + _unit_towards(p, _vec(geom.rx_pos))
    return np.sum(v * u_sum, axis=-1) / geom.wavelength


def place_bistatic(beta: float, bisector_azimuth: float = 0.0, distance: float = 10.0,
                   target_ref=(0.0, 0.0, 0.0), bisector_elevation: float = 0.0,
                   carrier_freq: float = 7e9, rx_distance: float | None = None) -> BistaticGeometry:
    """Antennas at `distance` from the target, symmetric about a chosen bisector.

    The bisector has the given azimuth (from +x, about +z) and elevation; the
    two antennas sit at +-beta/2 from it in the plane spanned by the bisector
    and the horizontal normal to it.
    """
    t = np.asarray(_as_tuple(target_ref))
    ce, se = np.cos(bisector_elevation), np.sin(bisector_elevation)
    ca, sa = np.cos(bisector_azimuth), np.sin(bisector_azimuth)
    b = np.array([ce * ca, ce * sa, se])
    side = np.array([-sa, ca, 0.0])
    half = beta / 2
    d_tx = np.cos(half) * b + np.sin(half) * side
    d_rx = np.cos(half) * b - np.sin(half) * side
    rx_d = distance if rx_distance is None else rx_distance
    return BistaticGeometry(tuple(t + distance * d_tx), tuple(t + rx_d * d_rx),
                            tuple(t), carrier_freq)
