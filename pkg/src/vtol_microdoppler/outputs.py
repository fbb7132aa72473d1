"""
Artifact writers: spectrum CSV, 8-bit grayscale heatmaps (PGM, optional PNG)
with sidecar axis metadata, and JSON records.

All writers are deterministic: fixed number formatting, sorted JSON keys,
no timestamps.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .receiver import DopplerSpectrum, RangeDopplerMap, Spectrogram

GRAY_FLOOR_DB = -80.0


def spectrum_csv(spec: DopplerSpectrum) -> str:
    lines = ["freq_hz,power_db"]
    lines += [f"{f:.6f},{p:.6f}" for f, p in zip(spec.freq_hz, spec.power_db)]
    return "\n".join(lines) + "\n"


def write_spectrum_csv(spec: DopplerSpectrum, path) -> Path:
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(spectrum_csv(spec))
    return path


def db_to_gray(power_db) -> np.ndarray:
    """0 dB -> 255, <= GRAY_FLOOR_DB -> 0, linear in between (rounded)."""
    x = np.asarray(power_db, dtype=float)
    x = np.nan_to_num(x, nan=GRAY_FLOOR_DB, posinf=0.0, neginf=GRAY_FLOOR_DB)
    g = (np.clip(x, GRAY_FLOOR_DB, 0.0) - GRAY_FLOOR_DB) * (255.0 / -GRAY_FLOOR_DB)
    return np.rint(g).astype(np.uint8)


def encode_pgm(gray: np.ndarray) -> bytes:
    """Binary (P5) PGM, maxval 255. Row 0 is written first."""
    g = np.asarray(gray, dtype=np.uint8)
    if g.ndim != 2:
        raise ValueError("PGM image must be 2-D")
    h, w = g.shape
    return f"P5\n{w} {h}\n255\n".encode("ascii") + np.ascontiguousarray(g).tobytes()


def decode_pgm(buf: bytes) -> np.ndarray:
    parts = buf.split(b"\n", 3)
    if len(parts) < 4 or parts[0] != b"P5":
        raise ValueError("not a binary PGM")
    w, h = (int(v) for v in parts[1].split())
    if int(parts[2]) != 255:
        raise ValueError("only maxval 255 supported")
    return np.frombuffer(parts[3], dtype=np.uint8, count=w * h).reshape(h, w)


def _axis_meta(values: np.ndarray, name: str, unit: str) -> dict:
    v = np.asarray(values, dtype=float)
    step = float(v[1] - v[0]) if v.size > 1 else 0.0
    return {"name": name, "unit": unit, "size": int(v.size), "start": float(v[0]),
            "step": step}


def write_heatmap(power_db: np.ndarray, path, rows_axis: dict, cols_axis: dict,
                  png: bool = False, extra: dict | None = None) -> list[Path]:
    """PGM image plus `<stem>.json` sidecar; optional PNG (needs Pillow)."""
    path = Path(path)
    gray = db_to_gray(power_db)
    path.write_bytes(encode_pgm(gray))
    meta = {"rows": rows_axis, "cols": cols_axis,
            "gray_map": {"db_at_255": 0.0, "db_at_0": GRAY_FLOOR_DB, "monotone": "linear"}}
    if extra:
        meta.update(extra)
    side = path.with_suffix(".json")
    write_json(meta, side)
    written = [path, side]
    if png:
        from PIL import Image  # optional dependency

        png_path = path.with_suffix(".png")
        Image.fromarray(gray, mode="L").save(png_path, optimize=False)
        written.append(png_path)
    return written


def write_spectrogram(sg: Spectrogram, path, png: bool = False) -> list[Path]:
    # rows = time frames, columns = Doppler
    return write_heatmap(sg.power_db, path, _axis_meta(sg.time_s, "time", "s"),
                         _axis_meta(sg.freq_hz, "doppler", "Hz"), png,
                         {"window_len": sg.window_len, "hop": sg.hop})


def write_range_doppler(rd: RangeDopplerMap, path, png: bool = False) -> list[Path]:
    rows = {"name": "range_bin", "unit": "bin", "size": int(rd.range_bins.size),
            "indices": [int(i) for i in rd.range_bins], "delay_step_s": rd.delay_step}
    return write_heatmap(rd.power_db, path, rows, _axis_meta(rd.freq_hz, "doppler", "Hz"), png)


def _clean(obj):
    # JSON cannot carry NaN/inf; store them as null
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.generic):
        return _clean(obj.item())
    return obj


def dumps(obj) -> str:
    return json.dumps(_clean(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_json(obj, path) -> Path:
    path = Path(path)
    path.write_text(dumps(obj), encoding="utf-8")
    return path
