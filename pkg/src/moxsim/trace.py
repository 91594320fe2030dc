"""Binary IQ trace files.

Layout: a 16-byte little-endian header (magic ``MOXT``, u32 version, u32
sample rate in Hz, u32 sample count) followed by interleaved float32 I/Q
pairs.
"""
from __future__ import annotations

import struct

import numpy as np

MAGIC = b"MOXT"
VERSION = 1
_HEADER = struct.Struct("<4sIII")


def write_trace(path, samples: np.ndarray, sample_rate_hz: float) -> None:
    samples = np.asarray(samples, dtype=complex)
    iq = np.empty(2 * samples.size, dtype="<f4")
    iq[0::2] = samples.real
    iq[1::2] = samples.imag
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, int(round(sample_rate_hz)), samples.size))
        fh.write(iq.tobytes())


def read_trace(path) -> tuple:
    """Returns ``(samples, sample_rate_hz)``."""
    with open(path, "rb") as fh:
        header = fh.read(_HEADER.size)
        if len(header) != _HEADER.size:
            raise ValueError(f"{path}: truncated header")
        magic, version, rate, count = _HEADER.unpack(header)
        if magic != MAGIC:
            raise ValueError(f"{path}: bad magic {magic!r}")
        if version != VERSION:
            raise ValueError(f"{path}: unsupported version {version}")
        iq = np.frombuffer(fh.read(8 * count), dtype="<f4")
    if iq.size != 2 * count:
        raise ValueError(f"{path}: truncated sample data")
    return iq[0::2].astype(float) + 1j * iq[1::2].astype(float), float(rate)
