"""TSR1 raster file format.

Layout: one ASCII magic line ``TSR1 <kind> <H> <W> <C>\\n`` followed by the
little-endian float32 payload, row-major with the channel axis innermost.
Kinds and channel counts: ``frame``/``diff`` have C=3 (R,G,B), ``grad`` has
C=2 (gx, gy), ``depth`` has C=1.

Also houses the 8-bit quantize/dequantize pair used (optionally) at the
dataset file boundary; everything in memory stays unit-interval float.
"""

from __future__ import annotations

import os
import tempfile

import numpy as np

from .core import DepthMap, DifferentialFrame, GradientField, TactileFrame
from .errors import InvalidFieldError

_CHANNELS = {"frame": 3, "diff": 3, "grad": 2, "depth": 1}


def quantize_u8(values: np.ndarray, lo: float = 0.0, hi: float = 1.0) -> np.ndarray:
    """Quantize reals in [lo, hi] to uint8 levels 0..255."""
    scaled = (np.clip(values, lo, hi) - lo) / (hi - lo)
    return np.round(scaled * 255.0).astype(np.uint8)


def dequantize_u8(levels: np.ndarray, lo: float = 0.0, hi: float = 1.0) -> np.ndarray:
    """Inverse of :func:`quantize_u8` up to half-level rounding error."""
    return lo + levels.astype(np.float64) / 255.0 * (hi - lo)


def write_raster(path, kind: str, data: np.ndarray) -> None:
    """Write an (H, W, C) or (H, W) array as a TSR1 file (atomic replace)."""
    if kind not in _CHANNELS:
        raise InvalidFieldError(f"unknown raster kind {kind!r}")
    arr = np.asarray(data, dtype=np.float64)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    if arr.ndim != 3 or arr.shape[2] != _CHANNELS[kind]:
        raise InvalidFieldError(
            f"kind {kind!r} needs {_CHANNELS[kind]} channels, got shape {arr.shape}"
        )
    h, w, c = arr.shape
    header = f"TSR1 {kind} {h} {w} {c}\n".encode("ascii")
    payload = arr.astype("<f4").tobytes()
    atomic_write_bytes(path, header + payload)


def read_raster(path):
    """Read a TSR1 file; returns ``(kind, array)`` with array (H, W, C) float64."""
    with open(path, "rb") as fh:
        magic = fh.readline()
        parts = magic.decode("ascii", errors="replace").split()
        if len(parts) != 5 or parts[0] != "TSR1":
            raise InvalidFieldError(f"{path}: not a TSR1 file")
        kind, h, w, c = parts[1], int(parts[2]), int(parts[3]), int(parts[4])
        if kind not in _CHANNELS or c != _CHANNELS[kind]:
            raise InvalidFieldError(f"{path}: bad kind/channel combination {kind}/{c}")
        payload = fh.read()
    expect = h * w * c * 4
    if len(payload) != expect:
        raise InvalidFieldError(f"{path}: payload is {len(payload)} bytes, expected {expect}")
    arr = np.frombuffer(payload, dtype="<f4").astype(np.float64).reshape(h, w, c)
    return kind, arr


def atomic_write_bytes(path, blob: bytes) -> None:
    """Write bytes via temp file + rename so readers never see partial files."""
    path = os.fspath(path)
    dirname = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=dirname, prefix=".tsr-tmp-")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(blob)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_frame(path, frame) -> None:
    kind = "diff" if isinstance(frame, DifferentialFrame) else "frame"
    write_raster(path, kind, frame.pixels)


def write_gradients(path, g: GradientField) -> None:
    write_raster(path, "grad", np.stack([g.gx, g.gy], axis=-1))


def write_depth(path, d: DepthMap) -> None:
    write_raster(path, "depth", d.z)


def read_frame(path, sensor_id=0, round_id=0, capture_time_us=0):
    """Load a frame/diff raster; capture stamps come from the caller (manifest)."""
    kind, arr = read_raster(path)
    cls = {"frame": TactileFrame, "diff": DifferentialFrame}.get(kind)
    if cls is None:
        raise InvalidFieldError(f"{path}: expected frame or diff raster, got {kind}")
    return cls(sensor_id=sensor_id, round_id=round_id,
               capture_time_us=capture_time_us, pixels=arr)


def read_gradients(path) -> GradientField:
    kind, arr = read_raster(path)
    if kind != "grad":
        raise InvalidFieldError(f"{path}: expected grad raster, got {kind}")
    return GradientField(gx=arr[:, :, 0], gy=arr[:, :, 1])


def read_depth(path) -> DepthMap:
    kind, arr = read_raster(path)
    if kind != "depth":
        raise InvalidFieldError(f"{path}: expected depth raster, got {kind}")
    return DepthMap(z=arr[:, :, 0])
