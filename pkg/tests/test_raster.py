import numpy as np
import pytest

from tacsync.core import DepthMap, DifferentialFrame, GradientField, TactileFrame
from tacsync.errors import InvalidFieldError
from tacsync.raster import (
    dequantize_u8,
    quantize_u8,
    read_depth,
    read_frame,
    read_gradients,
    read_raster,
    write_depth,
    write_frame,
    write_gradients,
    write_raster,
)
from tacsync.rng import Rng


def test_frame_roundtrip(tmp_path):
    px = Rng(1).uniforms((6, 7, 3))
    frame = TactileFrame(sensor_id=2, round_id=3, capture_time_us=99, pixels=px)
    path = tmp_path / "f.tsr"
    write_frame(path, frame)
    back = read_frame(path, sensor_id=2, round_id=3, capture_time_us=99)
    assert isinstance(back, TactileFrame)
    assert np.allclose(back.pixels, px, atol=1e-7)  # float32 storage


def test_diff_roundtrip_keeps_kind(tmp_path):
    px = Rng(2).uniforms((4, 4, 3)) - 0.5
    d = DifferentialFrame(sensor_id=0, round_id=0, capture_time_us=0, pixels=px)
    path = tmp_path / "d.tsr"
    write_frame(path, d)
    kind, _ = read_raster(path)
    assert kind == "diff"
    assert isinstance(read_frame(path), DifferentialFrame)


def test_grad_and_depth_roundtrip(tmp_path):
    g = GradientField(gx=Rng(3).uniforms((5, 5)), gy=Rng(4).uniforms((5, 5)))
    write_gradients(tmp_path / "g.tsr", g)
    back = read_gradients(tmp_path / "g.tsr")
    assert np.allclose(back.gx, g.gx, atol=1e-7)
    assert np.allclose(back.gy, g.gy, atol=1e-7)

    z = DepthMap(z=Rng(5).uniforms((5, 6)))
    write_depth(tmp_path / "z.tsr", z)
    assert np.allclose(read_depth(tmp_path / "z.tsr").z, z.z, atol=1e-7)


def test_magic_line_format(tmp_path):
    write_raster(tmp_path / "x.tsr", "depth", np.zeros((3, 4)))
    blob = (tmp_path / "x.tsr").read_bytes()
    assert blob.startswith(b"TSR1 depth 3 4 1\n")
    assert len(blob) == len(b"TSR1 depth 3 4 1\n") + 3 * 4 * 4


def test_bad_kind_and_truncated_payload(tmp_path):
    with pytest.raises(InvalidFieldError):
        write_raster(tmp_path / "x.tsr", "nope", np.zeros((3, 4)))
    (tmp_path / "bad.tsr").write_bytes(b"TSR1 depth 3 4 1\n\x00\x00")
    with pytest.raises(InvalidFieldError):
        read_raster(tmp_path / "bad.tsr")
    (tmp_path / "notmagic.tsr").write_bytes(b"WHAT 1 2 3\n")
    with pytest.raises(InvalidFieldError):
        read_raster(tmp_path / "notmagic.tsr")


def test_kind_mismatch_on_typed_readers(tmp_path):
    write_raster(tmp_path / "x.tsr", "depth", np.zeros((3, 4)))
    with pytest.raises(InvalidFieldError):
        read_gradients(tmp_path / "x.tsr")
    with pytest.raises(InvalidFieldError):
        read_frame(tmp_path / "x.tsr")


def test_quantize_roundtrip_error_bounded():
    vals = Rng(6).uniforms(10000)
    back = dequantize_u8(quantize_u8(vals))
    assert np.abs(back - vals).max() <= 0.5 / 255.0 + 1e-12


def test_quantize_signed_range():
    vals = Rng(7).uniforms(1000) * 2.0 - 1.0
    back = dequantize_u8(quantize_u8(vals, -1.0, 1.0), -1.0, 1.0)
    assert np.abs(back - vals).max() <= 1.0 / 255.0 + 1e-12
