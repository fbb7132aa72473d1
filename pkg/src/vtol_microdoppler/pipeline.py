"""
End-to-end orchestration: scene -> slow-time matrix -> spectra -> features ->
decision, writing the requested artifacts into one output directory.

Exit codes: 0 success, 2 no target detected, 1 any other error.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from pathlib import Path

from . import outputs
from .classifier import FlightModeDecision, classify, spread_context
from .features import MicroDopplerFeatures, extract_features
from .observe import observe
from .profile_io import dump_profile
from .receiver import (DopplerSpectrum, ReceiverError, SlowTimeMatrix, Spectrogram,
                       doppler_spectrum, range_doppler, stft_spectrogram)
from .scenario import write_scenario
from .synth import ProcessingParams, Scene

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_NO_TARGET = 2

ALL_OUTPUTS = frozenset({"scenario", "profile", "spectrum", "spectrogram", "range_doppler",
                         "features", "decision"})

# file names inside the output directory
NAMES = {
    "scenario": "scenario.json",
    "profile": "profile.vtmd",
    "spectrum": "spectrum.csv",
    "spectrogram": "spectrogram.pgm",
    "range_doppler": "range_doppler.pgm",
    "features": "features.json",
    "decision": "decision.json",
}


class NoTargetDetected(RuntimeError):
    pass


@dataclass
class Analysis:
    """Everything derived from one slow-time matrix."""

    stm: SlowTimeMatrix
    spectrum: DopplerSpectrum
    spectrogram: Spectrogram | None
    features: MicroDopplerFeatures


@dataclass
class PipelineResult:
    exit_code: int
    written: dict[str, list[Path]] = field(default_factory=dict)
    analysis: Analysis | None = None
    decision: FlightModeDecision | None = None
    message: str = ""


def simulate(scene: Scene, workers: int = 1) -> SlowTimeMatrix:
    obs = observe(scene, workers=workers)
    if not obs.found:
        raise NoTargetDetected("no target detected above the range-profile threshold")
    return obs.stm


def analyse(stm: SlowTimeMatrix, processing: ProcessingParams | None = None,
            n_blades: int = 2) -> Analysis:
    p = processing or ProcessingParams()
    v = stm.vector(p.use_gate_sum)
    spec = doppler_spectrum(v, stm.symbol_period, p.window)
    try:
        sg = stft_spectrogram(v, stm.symbol_period, p.stft_window_len, p.hop, p.window)
    except ReceiverError as exc:
        log.warning("spectrogram skipped: %s", exc)
        sg = None
    feats = extract_features(spec, sg, v, n_blades, p.floor_margin_db, p.comb_margin_db,
                             p.window)
    return Analysis(stm, spec, sg, feats)


def decide(features: MicroDopplerFeatures, scene: Scene) -> FlightModeDecision:
    # floor the thrust prediction at a few Doppler bins: resolution limit
    min_spread = 5 * (features.doppler_bin_hz or 0.0)
    ctx = spread_context(scene.geometry, scene.airframe, min_spread_hz=min_spread)
    return classify(features, ctx)


def blade_count(scene: Scene | None) -> int:
    if scene is None or not scene.airframe.propellers:
        return 2
    return scene.airframe.propellers[0].blade_count


def decision_record(decision: FlightModeDecision, scene: Scene | None) -> dict:
    rec = decision.to_dict()
    if scene is not None:
        rec["configured_mode"] = scene.mode.value
    return rec


def write_analysis(analysis: Analysis, out_dir: Path, wanted, png: bool = False) -> dict:
    written = {}
    if "profile" in wanted:
        written["profile"] = [dump_profile(analysis.stm, out_dir / NAMES["profile"])]
    if "spectrum" in wanted:
        written["spectrum"] = [outputs.write_spectrum_csv(analysis.spectrum,
                                                          out_dir / NAMES["spectrum"])]
    if "spectrogram" in wanted and analysis.spectrogram is not None:
        written["spectrogram"] = outputs.write_spectrogram(
            analysis.spectrogram, out_dir / NAMES["spectrogram"], png)
    if "range_doppler" in wanted:
        fs = (analysis.stm.meta or {}).get("sample_rate") or 0.0
        rd = range_doppler(analysis.stm, delay_step=1.0 / fs if fs else 1.0, remove_static=True)
        written["range_doppler"] = outputs.write_range_doppler(
            rd, out_dir / NAMES["range_doppler"], png)
    if "features" in wanted:
        written["features"] = [outputs.write_json(analysis.features.to_dict(),
                                                  out_dir / NAMES["features"])]
    return written


def run_pipeline(scene: Scene, out_dir, wanted=ALL_OUTPUTS, png: bool = False,
                 workers: int = 1) -> PipelineResult:
    """Run the whole chain for `scene` and write the artifacts named in `wanted`."""
    wanted = frozenset(wanted)
    unknown = wanted - ALL_OUTPUTS
    if unknown:
        return PipelineResult(EXIT_ERROR, message=f"unknown outputs: {sorted(unknown)}")
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        written = {}
        if "scenario" in wanted:
            written["scenario"] = [write_scenario(scene, out_dir / NAMES["scenario"])]
        try:
            stm = simulate(scene, workers)
        except NoTargetDetected as exc:
            return PipelineResult(EXIT_NO_TARGET, written, message=str(exc))
        analysis = analyse(stm, scene.processing, blade_count(scene))
        written.update(write_analysis(analysis, out_dir, wanted, png))
        decision = decide(analysis.features, scene)
        if "decision" in wanted:
            written["decision"] = [outputs.write_json(decision_record(decision, scene),
                                                      out_dir / NAMES["decision"])]
        return PipelineResult(EXIT_OK, written, analysis, decision, "ok")
    except OSError as exc:
        return PipelineResult(EXIT_ERROR, message=f"cannot write outputs: {exc}")


def with_overrides(scene: Scene, seed: int | None = None, **processing) -> Scene:
    """Scene with `noise_seed` and any non-None processing fields replaced."""
    changes = {k: v for k, v in processing.items() if v is not None}
    if changes:
        scene = replace(scene, processing=replace(scene.processing, **changes))
    if seed is not None:
        scene = replace(scene, noise_seed=int(seed))
    return scene

