"""Shared domain types for frames, gradients, depths, and sensor configs.

Conventions used everywhere downstream: row-major arrays with the origin at
the top-left, +x rightward along the width axis, +y downward along the
height axis. Depth is in millimeters (>= 0 means indentation into the gel),
surface gradients are dimensionless rise/run, and ``pixel_pitch_mm``
converts between pixel and metric axes. Intensities are unit-interval
reals; 8-bit quantization exists only at the dataset file boundary.

All types validate their buffers at construction and freeze them
(read-only numpy arrays), so instances are safe to share between workers.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatchError, InvalidConfigError, InvalidFieldError


def _frozen(a: np.ndarray, dtype=np.float64) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=dtype)
    a.flags.writeable = False
    return a


def _require_finite(a: np.ndarray, name: str) -> None:
    if not np.isfinite(a).all():
        raise InvalidFieldError(f"{name} contains non-finite values")


@dataclass(frozen=True)
class TactileFrame:
    """One sensor image: H x W x 3 intensities in [0, 1] plus capture stamps."""

    sensor_id: int
    round_id: int
    capture_time_us: int
    pixels: np.ndarray  # (H, W, 3), channels R,G,B

    def __post_init__(self):
        px = _frozen(self.pixels)
        if px.ndim != 3 or px.shape[2] != 3:
            raise DimensionMismatchError(f"expected (H, W, 3) pixels, got {px.shape}")
        _require_finite(px, "pixels")
        if px.min() < 0.0 or px.max() > 1.0:
            raise InvalidFieldError("intensities must lie in [0, 1]")
        if self.round_id < 0:
            raise InvalidFieldError("round_id must be non-negative")
        object.__setattr__(self, "pixels", px)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]


@dataclass(frozen=True)
class DifferentialFrame:
    """Current frame minus reference frame; values in [-1, 1]."""

    sensor_id: int
    round_id: int
    capture_time_us: int
    pixels: np.ndarray  # (H, W, 3)

    def __post_init__(self):
        px = _frozen(self.pixels)
        if px.ndim != 3 or px.shape[2] != 3:
            raise DimensionMismatchError(f"expected (H, W, 3) pixels, got {px.shape}")
        _require_finite(px, "pixels")
        if px.min() < -1.0 or px.max() > 1.0:
            raise InvalidFieldError("differential values must lie in [-1, 1]")
        object.__setattr__(self, "pixels", px)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]


@dataclass(frozen=True)
class GradientField:
    """Per-pixel surface slopes gx, gy (dimensionless), each (H, W)."""

    gx: np.ndarray
    gy: np.ndarray

    def __post_init__(self):
        gx, gy = _frozen(self.gx), _frozen(self.gy)
        if gx.ndim != 2 or gx.shape != gy.shape:
            raise DimensionMismatchError(
                f"gx/gy must be matching 2-d arrays, got {gx.shape} vs {gy.shape}"
            )
        _require_finite(gx, "gx")
        _require_finite(gy, "gy")
        object.__setattr__(self, "gx", gx)
        object.__setattr__(self, "gy", gy)

    @property
    def height(self) -> int:
        return self.gx.shape[0]

    @property
    def width(self) -> int:
        return self.gx.shape[1]


@dataclass(frozen=True)
class DepthMap:
    """Heights z in millimeters, (H, W); positive z is indentation into the gel."""

    z: np.ndarray

    def __post_init__(self):
        z = _frozen(self.z)
        if z.ndim != 2:
            raise DimensionMismatchError(f"expected 2-d depth, got shape {z.shape}")
        _require_finite(z, "z")
        object.__setattr__(self, "z", z)

    @property
    def height(self) -> int:
        return self.z.shape[0]

    @property
    def width(self) -> int:
        return self.z.shape[1]


@dataclass(frozen=True)
class Light:
    """One directional light: unit vector toward the source, channel intensity."""

    direction: np.ndarray  # unit 3-vector
    intensity: float

    def __post_init__(self):
        d = _frozen(self.direction)
        if d.shape != (3,):
            raise InvalidConfigError("light direction must be a 3-vector")
        if abs(float(np.linalg.norm(d)) - 1.0) > 1e-9:
            raise InvalidConfigError("light direction must have unit norm (tol 1e-9)")
        if not (0.0 < self.intensity <= 1.0):
            raise InvalidConfigError("light intensity must lie in (0, 1]")
        object.__setattr__(self, "direction", d)


@dataclass(frozen=True)
class SensorConfig:
    """Geometry, illumination, and perturbation parameters of one sensor.

    ``channel_offset`` / ``channel_gain`` model per-unit fabrication
    variation in brightness. Two optional spatial illumination terms extend
    the ideal shading model (both default to 0 = ideal): ``vignette_amp``
    scales the Lambertian term by a smooth falloff field shared by every
    unit of the same optical design (keyed by ``vignette_seed``), while
    ``static_pattern_amp`` adds a smooth per-unit brightness field (keyed
    by ``rng_seed``) modeling this unit's LED/assembly nonuniformity.
    """

    sensor_id: int
    height: int
    width: int
    pixel_pitch_mm: float
    lights: tuple  # exactly 3 Light entries, one per color channel
    albedo: float = 1.0
    channel_offset: tuple = (0.0, 0.0, 0.0)
    channel_gain: tuple = (1.0, 1.0, 1.0)
    noise_sigma: float = 0.0
    rng_seed: int = 0
    static_pattern_amp: float = 0.0
    vignette_amp: float = 0.0
    vignette_seed: int = 0

    def __post_init__(self):
        if self.height < 1 or self.width < 1:
            raise InvalidConfigError("frame dimensions must be positive")
        if self.pixel_pitch_mm <= 0:
            raise InvalidConfigError("pixel_pitch_mm must be positive")
        if len(self.lights) != 3:
            raise InvalidConfigError("exactly 3 lights required (one per channel)")
        lights = tuple(
            l if isinstance(l, Light) else Light(np.asarray(l[0], float), float(l[1]))
            for l in self.lights
        )
        if not (0.0 < self.albedo <= 1.0):
            raise InvalidConfigError("albedo must lie in (0, 1]")
        if len(self.channel_offset) != 3 or len(self.channel_gain) != 3:
            raise InvalidConfigError("channel_offset and channel_gain need 3 entries")
        if self.noise_sigma < 0:
            raise InvalidConfigError("noise_sigma must be >= 0")
        if self.static_pattern_amp < 0:
            raise InvalidConfigError("static_pattern_amp must be >= 0")
        if not (0.0 <= self.vignette_amp < 1.0):
            raise InvalidConfigError("vignette_amp must lie in [0, 1)")
        object.__setattr__(self, "lights", lights)
        object.__setattr__(self, "channel_offset", tuple(float(v) for v in self.channel_offset))
        object.__setattr__(self, "channel_gain", tuple(float(v) for v in self.channel_gain))


def differential(frame: TactileFrame, reference: TactileFrame) -> DifferentialFrame:
    """Element-wise frame minus reference for two same-shape, same-sensor frames."""
    if frame.pixels.shape != reference.pixels.shape:
        raise DimensionMismatchError(
            f"frame shape {frame.pixels.shape} != reference shape {reference.pixels.shape}"
        )
    if frame.sensor_id != reference.sensor_id:
        raise DimensionMismatchError(
            f"sensor mismatch: {frame.sensor_id} vs {reference.sensor_id}"
        )
    return DifferentialFrame(
        sensor_id=frame.sensor_id,
        round_id=frame.round_id,
        capture_time_us=frame.capture_time_us,
        pixels=frame.pixels - reference.pixels,
    )
