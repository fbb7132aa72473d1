"""
Binary slow-time profile file.

Layout (all little-endian):

    offset  size  field
    0       4     magic b"VTMD"
    4       2     version (u16, currently 1)
    6       2     reserved (u16, zero)
    8       4     N carriers (u32)
    12      4     M symbols (u32)
    16      4     gate length G (u32)
    20      8     sample rate f_s, Hz (f64)
    28      8     symbol period T, s (f64)
    36      8     carrier frequency f_c, Hz (f64)
    44      8*G   gate indices (i64)
    ..      4     CRC-32 of all preceding header bytes (u32)
    ..      8*G*M payload: rows = gate bins, each row M complex samples stored
                  as interleaved float32 (re, im)
"""

from __future__ import annotations

import struct
import zlib
from pathlib import Path

import numpy as np

from .receiver import SlowTimeMatrix

MAGIC = b"VTMD"
VERSION = 1
_FIXED = struct.Struct("<4sHHIIIddd")


class ProfileFormatError(ValueError):
    pass


def encode_profile(stm: SlowTimeMatrix) -> bytes:
    meta = stm.meta or {}
    rows, m = stm.data.shape
    header = _FIXED.pack(MAGIC, VERSION, 0, int(meta.get("n_carriers", 0)), m, rows,
                         float(meta.get("sample_rate", 0.0)), float(stm.symbol_period),
                         float(meta.get("center_freq", 0.0)))
    header += np.asarray(stm.gate, dtype="<i8").tobytes()
    header += struct.pack("<I", zlib.crc32(header))
    payload = np.empty((rows, m, 2), dtype="<f4")
    payload[..., 0] = stm.data.real
    payload[..., 1] = stm.data.imag
    return header + payload.tobytes()


def decode_profile(buf: bytes) -> SlowTimeMatrix:
    if len(buf) < _FIXED.size:
        raise ProfileFormatError("file shorter than the fixed header")
    magic, version, _, n, m, rows, fs, period, fc = _FIXED.unpack_from(buf, 0)
    if magic != MAGIC:
        raise ProfileFormatError(f"bad magic {magic!r}")
    if version != VERSION:
        raise ProfileFormatError(f"unsupported profile version {version}")
    gate_end = _FIXED.size + 8 * rows
    if len(buf) < gate_end + 4:
        raise ProfileFormatError("truncated header")
    (crc,) = struct.unpack_from("<I", buf, gate_end)
    if zlib.crc32(buf[:gate_end]) != crc:
        raise ProfileFormatError("header checksum mismatch")
    gate = np.frombuffer(buf, dtype="<i8", count=rows, offset=_FIXED.size).astype(np.int64)
    expected = 2 * 4 * rows * m
    payload = buf[gate_end + 4:]
    if len(payload) != expected:
        raise ProfileFormatError(f"payload length {len(payload)} != expected {expected}")
    raw = np.frombuffer(payload, dtype="<f4").reshape(rows, m, 2)
    # widen to complex128 exactly as the in-memory chain does, so a profile
    # processed from disk gives bit-identical results
    data = np.empty((rows, m), dtype=complex)
    data.real = raw[..., 0]
    data.imag = raw[..., 1]
    meta = {"n_carriers": n, "sample_rate": fs, "center_freq": fc}
    return SlowTimeMatrix(data, gate, period, meta)


def dump_profile(stm: SlowTimeMatrix, path) -> Path:
    path = Path(path)
    path.write_bytes(encode_profile(stm))
    return path


def ingest_profile(path) -> SlowTimeMatrix:
    return decode_profile(Path(path).read_bytes())
