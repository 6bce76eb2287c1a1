import time

import numpy as np
import pytest

from tacsync.core import DepthMap, GradientField
from tacsync.errors import DimensionMismatchError, InvalidConfigError
from tacsync.gelsim import Indenter, default_sensor_config, depth_to_gradients, \
    generate_dataset, make_indenter
from tacsync.poisson import (
    BoundaryCondition,
    discrete_laplacian,
    divergence,
    integrate_gradients,
)
from tacsync.rng import Rng


def dome_depth(n=64, pitch=0.1, peak=1.0):
    """z = peak * (1 - r^2/R^2), clamped at 0; zero before the border."""
    coords = (np.arange(n) - (n - 1) / 2) * pitch
    xg, yg = np.meshgrid(coords, coords)
    radius = (n - 1) / 2 * pitch * 0.9
    z = peak * (1.0 - (xg**2 + yg**2) / radius**2)
    return DepthMap(z=np.maximum(z, 0.0))


def test_zero_field_zero_divergence_and_depth():
    g = GradientField(gx=np.zeros((8, 8)), gy=np.zeros((8, 8)))
    assert np.all(divergence(g, 0.1) == 0.0)
    assert np.all(integrate_gradients(g, pixel_pitch_mm=0.1).z == 0.0)


def test_linear_field_constant_divergence():
    pitch = 0.5
    n = 16
    coords = np.arange(n) * pitch
    xg, yg = np.meshgrid(coords, coords)
    g = GradientField(gx=2.0 * xg, gy=2.0 * yg)
    div = divergence(g, pitch)
    assert np.allclose(div[1:-1, 1:-1], 4.0)


def test_divergence_matches_naive_oracle():
    pitch = 0.3
    g = GradientField(gx=Rng(1).uniforms((6, 8)), gy=Rng(2).uniforms((6, 8)))
    div = divergence(g, pitch)
    h, w = 6, 8
    for i in range(h):
        for j in range(w):
            if 0 < j < w - 1:
                ddx = (g.gx[i, j + 1] - g.gx[i, j - 1]) / (2 * pitch)
            elif j == 0:
                ddx = (g.gx[i, 1] - g.gx[i, 0]) / pitch
            else:
                ddx = (g.gx[i, -1] - g.gx[i, -2]) / pitch
            if 0 < i < h - 1:
                ddy = (g.gy[i + 1, j] - g.gy[i - 1, j]) / (2 * pitch)
            elif i == 0:
                ddy = (g.gy[1, j] - g.gy[0, j]) / pitch
            else:
                ddy = (g.gy[-1, j] - g.gy[-2, j]) / pitch
            assert div[i, j] == pytest.approx(ddx + ddy, abs=1e-12)


def test_degenerate_input_rejected():
    g = GradientField(gx=np.zeros((2, 5)), gy=np.zeros((2, 5)))
    with pytest.raises(DimensionMismatchError):
        divergence(g, 0.1)
    with pytest.raises(DimensionMismatchError):
        integrate_gradients(g, pixel_pitch_mm=0.1)


def test_boundary_condition_kind_gate():
    with pytest.raises(InvalidConfigError):
        BoundaryCondition(kind="neumann")


def test_solution_border_is_zero():
    g = GradientField(gx=Rng(5).uniforms((16, 16)), gy=Rng(6).uniforms((16, 16)))
    z = integrate_gradients(g, pixel_pitch_mm=0.1).z
    assert np.all(z[0] == 0) and np.all(z[-1] == 0)
    assert np.all(z[:, 0] == 0) and np.all(z[:, -1] == 0)


def test_dome_roundtrip_relative_rmse():
    pitch = 0.1
    d = dome_depth(64, pitch)
    g = depth_to_gradients(d, pitch)
    z = integrate_gradients(g, pixel_pitch_mm=pitch).z
    rel = np.linalg.norm(z - d.z) / np.linalg.norm(d.z)
    assert rel < 1e-2


def test_rendered_ground_truth_roundtrip():
    cfg = default_sensor_config(noise_sigma=0.0)
    ds = generate_dataset(cfg, 6, seed=31, mode="diff")
    for e in ds.entries:
        z = integrate_gradients(e.gradients, pixel_pitch_mm=cfg.pixel_pitch_mm).z
        rel = np.linalg.norm(z - e.depth.z) / np.linalg.norm(e.depth.z)
        assert rel < 2e-2, (e.indenter.shape, rel)


def test_linearity():
    g1 = GradientField(gx=Rng(7).uniforms((20, 24)), gy=Rng(8).uniforms((20, 24)))
    g2 = GradientField(gx=Rng(9).uniforms((20, 24)), gy=Rng(10).uniforms((20, 24)))
    a, b = 2.5, -1.25
    combo = GradientField(gx=a * g1.gx + b * g2.gx, gy=a * g1.gy + b * g2.gy)
    lhs = integrate_gradients(combo, pixel_pitch_mm=0.1).z
    rhs = (a * integrate_gradients(g1, pixel_pitch_mm=0.1).z
           + b * integrate_gradients(g2, pixel_pitch_mm=0.1).z)
    assert np.abs(lhs - rhs).max() < 1e-9


def test_interior_residual_at_roundoff():
    pitch = 0.1
    g = GradientField(gx=Rng(11).uniforms((32, 32)) - 0.5,
                      gy=Rng(12).uniforms((32, 32)) - 0.5)
    z = integrate_gradients(g, pixel_pitch_mm=pitch).z
    lap = discrete_laplacian(z, pitch)
    rhs = divergence(g, pitch)[1:-1, 1:-1]
    assert np.abs(lap - rhs).max() < 1e-6


def test_256_solve_under_one_second():
    g = GradientField(gx=Rng(13).uniforms((256, 256)),
                      gy=Rng(14).uniforms((256, 256)))
    start = time.perf_counter()
    integrate_gradients(g, pixel_pitch_mm=0.1)
    assert time.perf_counter() - start < 1.0


def test_sphere_imprint_depth_recovered():
    pitch = 0.1
    d = make_indenter(Indenter("sphere", max_depth_mm=0.8, radius_mm=3.0), 64, 64, pitch)
    g = depth_to_gradients(d, pitch)
    z = integrate_gradients(g, pixel_pitch_mm=pitch).z
    assert abs(z.max() - 0.8) < 0.05
