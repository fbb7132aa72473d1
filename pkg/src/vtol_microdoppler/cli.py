"""
Command line interface.

    vtolmd simulate SCENARIO          -> profile.vtmd, scenario.json
    vtolmd process INPUT              -> spectrum.csv
    vtolmd features INPUT             -> features.json
    vtolmd classify INPUT [--scenario S] -> decision.json
    vtolmd plot INPUT [--png]         -> spectrogram.pgm, range_doppler.pgm (+ .json)
    vtolmd all SCENARIO               -> everything above

INPUT is either a scenario JSON file (simulated on the fly) or a profile
file written by `simulate`. Outputs go to --output-dir, else $VTOLMD_OUTPUT_DIR,
else the current directory.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

from . import outputs, pipeline
from .profile_io import MAGIC, ProfileFormatError, ingest_profile
from .scenario import ScenarioError, parse_scenario, write_scenario
from .synth import ProcessingParams

OUTPUT_ENV = "VTOLMD_OUTPUT_DIR"

log = logging.getLogger("vtolmd")


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-o", "--output-dir", help=f"output directory (default ${OUTPUT_ENV} or .)")
    common.add_argument("--seed", type=int, help="override the scenario noise_seed")
    common.add_argument("--threshold-db", type=float, help="detection threshold above floor")
    common.add_argument("--window-len", type=int, help="STFT window length (symbols)")
    common.add_argument("--hop", type=int, help="STFT hop (symbols)")
    common.add_argument("--floor-margin-db", type=float, help="spread support margin")
    common.add_argument("--comb-margin-db", type=float, help="comb support margin")
    common.add_argument("--workers", type=int, default=1, help="synthesis threads")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="vtolmd", description="Bistatic OFDM micro-Doppler "
                                "simulator and VTOL flight-mode classifier.")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common], help="scenario -> slow-time profile file"
                   ).add_argument("input")
    sub.add_parser("process", parents=[common], help="Doppler spectrum CSV").add_argument("input")
    sub.add_parser("features", parents=[common], help="feature record").add_argument("input")
    c = sub.add_parser("classify", parents=[common], help="flight-mode decision record")
    c.add_argument("input")
    c.add_argument("--scenario", help="scenario giving geometry/airframe for a profile input")
    pl = sub.add_parser("plot", parents=[common], help="spectrogram and range-Doppler heatmaps")
    pl.add_argument("input")
    pl.add_argument("--png", action="store_true", help="also write PNG copies")
    a = sub.add_parser("all", parents=[common], help="run everything for a scenario")
    a.add_argument("input")
    a.add_argument("--png", action="store_true")
    return p


def _output_dir(args) -> Path:
    d = args.output_dir or os.environ.get(OUTPUT_ENV) or "."
    path = Path(d)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _processing_overrides(args) -> dict:
    return {"detect_threshold_db": args.threshold_db, "stft_window_len": args.window_len,
            "stft_hop": args.hop, "floor_margin_db": args.floor_margin_db,
            "comb_margin_db": args.comb_margin_db}


def _is_profile(path: Path) -> bool:
    with open(path, "rb") as fh:
        return fh.read(len(MAGIC)) == MAGIC


def _load_scene(path, args):
    scene = parse_scenario(path)
    return pipeline.with_overrides(scene, args.seed, **_processing_overrides(args))


def _load_input(args):
    """(slow-time matrix, scene or None, processing params)."""
    path = Path(args.input)
    if _is_profile(path):
        stm = ingest_profile(path)
        scene_path = getattr(args, "scenario", None)
        scene = _load_scene(scene_path, args) if scene_path else None
        base = scene.processing if scene else ProcessingParams()
        over = {k: v for k, v in _processing_overrides(args).items() if v is not None}
        return stm, scene, replace(base, **over)
    scene = _load_scene(path, args)
    return pipeline.simulate(scene, args.workers), scene, scene.processing


def _report(written: dict) -> None:
    for key in sorted(written):
        for p in written[key]:
            print(p)


def _run(args) -> int:
    out = _output_dir(args)
    if args.command == "all":
        scene = _load_scene(args.input, args)
        res = pipeline.run_pipeline(scene, out, png=args.png, workers=args.workers)
        _report(res.written)
        if res.exit_code != pipeline.EXIT_OK:
            print(f"vtolmd: {res.message}", file=sys.stderr)
        elif res.decision is not None:
            print(f"mode: {res.decision.label} (confidence {res.decision.confidence:.2f})")
        return res.exit_code

    if args.command == "simulate":
        scene = _load_scene(args.input, args)
        written = {"scenario": [write_scenario(scene, out / pipeline.NAMES["scenario"])]}
        stm = pipeline.simulate(scene, args.workers)
        analysis = pipeline.Analysis(stm, None, None, None)
        written.update(pipeline.write_analysis(analysis, out, {"profile"}))
        _report(written)
        return pipeline.EXIT_OK

    stm, scene, proc = _load_input(args)
    if args.command == "classify" and scene is None:
        raise ScenarioError("classify needs the scene geometry: pass --scenario for profiles")
    analysis = pipeline.analyse(stm, proc, pipeline.blade_count(scene))
    wanted = {"process": {"spectrum"}, "features": {"features"},
              "plot": {"spectrogram", "range_doppler"}, "classify": set()}[args.command]
    written = pipeline.write_analysis(analysis, out, wanted, getattr(args, "png", False))
    if args.command == "classify":
        decision = pipeline.decide(analysis.features, scene)
        written["decision"] = [outputs.write_json(pipeline.decision_record(decision, scene),
                                                  out / pipeline.NAMES["decision"])]
        print(f"mode: {decision.label} (confidence {decision.confidence:.2f})")
    _report(written)
    return pipeline.EXIT_OK


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _run(args)
    except pipeline.NoTargetDetected as exc:
        print(f"vtolmd: {exc}", file=sys.stderr)
        return pipeline.EXIT_NO_TARGET
    except (ScenarioError, ProfileFormatError, ValueError, OSError) as exc:
        print(f"vtolmd: error: {exc}", file=sys.stderr)
        return pipeline.EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
