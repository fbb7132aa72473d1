"""Scene builders and cached observations shared by the tests."""

from functools import lru_cache

import numpy as np

from vtol_microdoppler.airframe import FlightMode, default_airframe, single_propeller_airframe
from vtol_microdoppler.geometry import place_bistatic
from vtol_microdoppler.observe import observe
from vtol_microdoppler.synth import Scene
from vtol_microdoppler.waveform import OfdmConfig

LAMBDA = 299_792_458.0 / 7e9
L = 0.2819


def tilted_axis(theta_deg):
    """Spin axis at theta from the +x bisector used by place_bistatic(beta, 0)."""
    t = np.radians(theta_deg)
    return (float(np.cos(t)), 0.0, float(np.sin(t)))


def single_prop_scene(beta_deg=60.0, theta_deg=90.0, f_rot=100.0, n_symbols=16384, snr_db=10.0,
                      distance=10.0, blade_count=2, seed=0):
    g = place_bistatic(np.radians(beta_deg), 0.0, distance)
    af = single_propeller_airframe(spin_axis=tilted_axis(theta_deg), rotation_rate=f_rot,
                                   blade_count=blade_count, initial_phase=0.3)
    return Scene(g, af, FlightMode.CRUISE, OfdmConfig(n_symbols=n_symbols), snr_db, seed)


def vtol_scene(mode, beta_deg, psi_deg, seed, n_symbols=8192, snr_db=10.0):
    g = place_bistatic(np.radians(beta_deg), np.radians(psi_deg))
    af = default_airframe(rate_spread=0.05, seed=seed)
    return Scene(g, af, FlightMode.parse(mode), OfdmConfig(n_symbols=n_symbols), snr_db, seed)


@lru_cache(maxsize=None)
def observed(scene):
    return observe(scene, workers=4)
