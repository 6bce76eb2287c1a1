"""Synthetic GelSight-style renderer and dataset generator.

Acts as the ground-truth oracle replacing physical sensors: analytic
indenters produce depth maps, a per-channel Lambertian model with
directional lights turns depth into tactile frames, and every capture is
paired with its exact gradient field.

Shading model per pixel and channel c:

    n = normalize(-gx, -gy, 1)
    value = clamp01( gain_c * (albedo * intensity_c * v_c(x,y) * max(0, n . l_c))
                     + offset_c + pattern_c(x, y) + noise )

``l_c`` is the channel's unit vector toward its light. Two optional static
illumination fields extend the ideal model and default to zero amplitude:
``v_c`` is a multiplicative falloff shared across units of one optical
design (vignetting), ``pattern_c`` an additive per-unit nonuniformity.
Noise is Gaussian, drawn deterministically from the provided seed.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import asdict, dataclass

import numpy as np
from scipy.ndimage import gaussian_filter

from . import raster
from .core import (
    DepthMap,
    DifferentialFrame,
    GradientField,
    Light,
    SensorConfig,
    TactileFrame,
    differential,
)
from .errors import DimensionMismatchError, InvalidConfigError, InvalidFieldError
from .rng import Rng, derive_seed

SHAPES = ("flat", "sphere", "cone", "ridge")

# randomized-capture sampling ranges (mm / degrees)
DEPTH_RANGE_MM = (0.2, 1.0)
SPHERE_RADIUS_RANGE_MM = (1.5, 4.0)
CONE_APEX_RANGE_DEG = (100.0, 140.0)
RIDGE_WIDTH_RANGE_MM = (2.0, 3.0)
CENTER_BAND = (0.2, 0.8)  # middle 60% of the field
BORDER_MARGIN_PX = 2
RIDGE_HALF_LEN_FRAC = 0.3  # taper half-length as a fraction of the field
CONE_TIP_RADIUS_MM = 0.15  # finite tip; a sharp apex breaks the C1 surface
                           # assumption behind the gradient/Poisson roundtrip

# the gel membrane smooths contact geometry; this is also what keeps every
# sampled imprint resolvable by the finite-difference / spectral roundtrip
GEL_SMOOTH_SIGMA_MM = 0.15
GEL_SMOOTH_TRUNCATE = 3.0
FOOTPRINT_RANGE_MM = (1.2, 2.3)  # resolvable yet border-clear imprint reach
SPHERE_MAX_DEPTH_RATIO = 0.45  # d <= 0.45 R bounds the rim slope


@dataclass(frozen=True)
class Indenter:
    """Analytic press shape; center is normalized to [0,1]^2 (x, y)."""

    shape: str
    max_depth_mm: float = 0.0
    center: tuple = (0.5, 0.5)
    radius_mm: float = 0.0
    apex_angle_deg: float = 0.0
    ridge_width_mm: float = 0.0
    ridge_axis: int = 0  # 0: band runs along x, 1: along y

    def __post_init__(self):
        if self.shape not in SHAPES:
            raise InvalidConfigError(f"unknown indenter shape {self.shape!r}")
        if self.max_depth_mm < 0:
            raise InvalidConfigError("max_depth_mm must be >= 0")
        if self.shape == "sphere" and self.radius_mm <= 0:
            raise InvalidConfigError("sphere needs positive radius_mm")
        if self.shape == "cone" and not (0 < self.apex_angle_deg < 180):
            raise InvalidConfigError("cone needs apex angle in (0, 180) degrees")
        if self.shape == "ridge" and self.ridge_width_mm <= 0:
            raise InvalidConfigError("ridge needs positive ridge_width_mm")
        object.__setattr__(self, "center", (float(self.center[0]), float(self.center[1])))

    def footprint_radius_mm(self) -> float:
        """In-plane reach of the imprint from its center (max over axes)."""
        d = self.max_depth_mm
        if self.shape == "flat" or d == 0:
            return 0.0
        if self.shape == "sphere":
            return math.sqrt(max(0.0, 2.0 * self.radius_mm * d - d * d))
        if self.shape == "cone":
            t = math.tan(math.radians(self.apex_angle_deg) / 2.0)
            return math.sqrt(d * t * (d * t + 2.0 * CONE_TIP_RADIUS_MM))
        return self.ridge_width_mm / 2.0


def make_indenter(ind: Indenter, height: int, width: int, pixel_pitch_mm: float) -> DepthMap:
    """Rasterize the analytic depth field; the center snaps to the pixel lattice."""
    if height < 2 or width < 2:
        raise DimensionMismatchError("depth field needs at least 2 pixels per axis")
    x = np.arange(width, dtype=np.float64) * pixel_pitch_mm
    y = np.arange(height, dtype=np.float64) * pixel_pitch_mm
    cx = round(ind.center[0] * (width - 1)) * pixel_pitch_mm
    cy = round(ind.center[1] * (height - 1)) * pixel_pitch_mm
    dx = x[None, :] - cx
    dy = y[:, None] - cy
    d = ind.max_depth_mm

    if ind.shape == "flat" or d == 0.0:
        z = np.zeros((height, width))
    elif ind.shape == "sphere":
        r = ind.radius_mm
        rho2 = dx * dx + dy * dy
        z = np.sqrt(np.maximum(0.0, r * r - rho2)) - (r - d)
    elif ind.shape == "cone":
        # rounded tip: hyperbolic blend with asymptotic slope cot(apex/2)
        eps = CONE_TIP_RADIUS_MM
        cot = 1.0 / math.tan(math.radians(ind.apex_angle_deg) / 2.0)
        rho = np.sqrt(dx * dx + dy * dy + eps * eps)
        z = d - (rho - eps) * cot
    else:  # ridge: rounded cos^2 crest across, smooth taper along its length
        across = dy if ind.ridge_axis == 0 else dx
        along = dx if ind.ridge_axis == 0 else dy
        half_w = ind.ridge_width_mm / 2.0
        axis_px = width if ind.ridge_axis == 0 else height
        half_len = RIDGE_HALF_LEN_FRAC * axis_px * pixel_pitch_mm
        profile = np.cos(np.pi / 2.0 * np.clip(across / half_w, -1.0, 1.0)) ** 2
        taper = np.cos(np.pi / 2.0 * np.clip(along / half_len, -1.0, 1.0)) ** 2
        z = d * profile * taper * (np.abs(across) < half_w) * (np.abs(along) < half_len)
    return DepthMap(z=np.maximum(z, 0.0))


def depth_to_gradients(d: DepthMap, pixel_pitch_mm: float) -> GradientField:
    """Central differences interior, one-sided at borders; slopes in mm/mm."""
    if d.height < 2 or d.width < 2:
        raise DimensionMismatchError("gradients need at least 2 pixels per axis")
    gy, gx = np.gradient(d.z, pixel_pitch_mm)
    return GradientField(gx=gx, gy=gy)


def gel_smooth(d: DepthMap, pixel_pitch_mm: float,
               sigma_mm: float = GEL_SMOOTH_SIGMA_MM) -> DepthMap:
    """Elastomer membrane response: Gaussian smoothing of the contact depth."""
    if sigma_mm <= 0.0:
        return d
    z = gaussian_filter(d.z, sigma_mm / pixel_pitch_mm, mode="constant",
                        truncate=GEL_SMOOTH_TRUNCATE)
    return DepthMap(z=z)


def _smooth_field(seed: int, height: int, width: int) -> np.ndarray:
    """Smooth unit-amplitude field: a few low-frequency sinusoids, max-abs 1."""
    xs = np.linspace(0.0, 1.0, width)
    ys = np.linspace(0.0, 1.0, height)
    xg, yg = np.meshgrid(xs, ys)
    rng = Rng(seed)
    freqs = 0.5 + 2.0 * rng.uniforms((4, 2))
    phases = 2.0 * np.pi * rng.uniforms(4)
    amps = 0.5 + rng.uniforms(4)
    f = np.zeros_like(xg)
    for (u, v), ph, a in zip(freqs, phases, amps):
        f += a * np.sin(2.0 * np.pi * (u * xg + v * yg) + ph)
    return f / np.abs(f).max()


def static_pattern(cfg: SensorConfig) -> np.ndarray:
    """Additive per-unit illumination nonuniformity, (H, W, 3).

    Keyed to the unit's rng_seed; each channel's max-abs equals
    ``static_pattern_amp``.
    """
    if cfg.static_pattern_amp == 0.0:
        return np.zeros((cfg.height, cfg.width, 3))
    return np.stack([
        cfg.static_pattern_amp
        * _smooth_field(derive_seed(cfg.rng_seed, "pattern", c), cfg.height, cfg.width)
        for c in range(3)
    ], axis=-1)


def vignette_field(cfg: SensorConfig) -> np.ndarray:
    """Multiplicative illumination falloff 1 + amp * f(x, y), (H, W, 3).

    Keyed to the optical design (``vignette_seed``), not the unit, so every
    sensor of one design shares the same falloff in normalized coordinates.
    """
    if cfg.vignette_amp == 0.0:
        return np.ones((cfg.height, cfg.width, 3))
    return np.stack([
        1.0 + cfg.vignette_amp
        * _smooth_field(derive_seed(cfg.vignette_seed, "vignette", c),
                        cfg.height, cfg.width)
        for c in range(3)
    ], axis=-1)


def render(d: DepthMap, cfg: SensorConfig, noise_seed=None,
           round_id: int = 0, capture_time_us: int = 0) -> TactileFrame:
    """Shade a depth map into a tactile frame under the sensor's lights."""
    if (d.height, d.width) != (cfg.height, cfg.width):
        raise DimensionMismatchError(
            f"depth {d.z.shape} does not match sensor {(cfg.height, cfg.width)}"
        )
    g = depth_to_gradients(d, cfg.pixel_pitch_mm)
    norm = np.sqrt(g.gx**2 + g.gy**2 + 1.0)
    pattern = static_pattern(cfg)
    vignette = vignette_field(cfg)
    seed = cfg.rng_seed if noise_seed is None else noise_seed
    noise = (
        Rng(seed).normals((cfg.height, cfg.width, 3), cfg.noise_sigma)
        if cfg.noise_sigma > 0
        else 0.0
    )
    px = np.empty((cfg.height, cfg.width, 3))
    for c, light in enumerate(cfg.lights):
        lx, ly, lz = light.direction
        ndotl = (-g.gx * lx - g.gy * ly + lz) / norm
        shade = cfg.albedo * light.intensity * vignette[:, :, c] * np.maximum(0.0, ndotl)
        px[:, :, c] = cfg.channel_gain[c] * shade + cfg.channel_offset[c] + pattern[:, :, c]
    px = np.clip(px + noise, 0.0, 1.0)
    return TactileFrame(sensor_id=cfg.sensor_id, round_id=round_id,
                        capture_time_us=capture_time_us, pixels=px)


def reference_frame(cfg: SensorConfig, noise_seed=None) -> TactileFrame:
    """No-contact render: the flat (all-zero) depth field."""
    flat = make_indenter(Indenter("flat"), cfg.height, cfg.width, cfg.pixel_pitch_mm)
    return render(flat, cfg, noise_seed=noise_seed)


def light_from_angles(azimuth_deg: float, elevation_deg: float, intensity: float) -> Light:
    az, el = math.radians(azimuth_deg), math.radians(elevation_deg)
    direction = np.array([math.cos(az) * math.cos(el),
                          math.sin(az) * math.cos(el),
                          math.sin(el)])
    return Light(direction=direction, intensity=intensity)


def default_sensor_config(sensor_id: int = 0, rng_seed: int = 0, **overrides) -> SensorConfig:
    """Desk-scale default: 64x64 at 0.1 mm pitch, grazing RGB lights at
    azimuths 0/120/240 deg, elevation 20 deg, intensity 0.7."""
    base = dict(
        sensor_id=sensor_id,
        height=64,
        width=64,
        pixel_pitch_mm=0.1,
        lights=tuple(light_from_angles(az, 20.0, 0.7) for az in (0.0, 120.0, 240.0)),
        albedo=1.0,
        noise_sigma=0.005,
        rng_seed=rng_seed,
    )
    base.update(overrides)
    return SensorConfig(**base)


@dataclass(frozen=True)
class DatasetEntry:
    frame: object  # TactileFrame (raw mode) or DifferentialFrame (diff mode)
    gradients: GradientField
    depth: DepthMap
    indenter: Indenter


@dataclass(frozen=True)
class Dataset:
    """Rendered captures paired with ground-truth gradient fields."""

    entries: tuple
    sensor_config: SensorConfig
    mode: str  # "raw" | "diff"
    seed: int
    reference: TactileFrame

    def __post_init__(self):
        if self.mode not in ("raw", "diff"):
            raise InvalidConfigError(f"dataset mode must be raw or diff, got {self.mode!r}")
        if not self.entries:
            raise InvalidConfigError("dataset needs at least one entry")
        for e in self.entries:
            if (e.frame.height, e.frame.width) != (e.gradients.height, e.gradients.width):
                raise DimensionMismatchError("entry frame and gradients disagree in shape")


def _cone_min_apex_deg(depth_mm: float) -> float:
    # apex wide enough that the footprint reaches FOOTPRINT_RANGE_MM[0]
    eps = CONE_TIP_RADIUS_MM
    fp = FOOTPRINT_RANGE_MM[0]
    t_min = (math.sqrt(eps * eps + fp * fp) - eps) / depth_mm
    return 2.0 * math.degrees(math.atan(t_min))


def sample_indenter(rng: Rng, height: int, width: int, pixel_pitch_mm: float) -> Indenter:
    """Draw one randomized indenter from the documented ranges.

    Depth is uniform over DEPTH_RANGE_MM; the remaining shape parameter is
    drawn jointly so the imprint footprint lands in FOOTPRINT_RANGE_MM
    (large enough that the finite-difference/Poisson roundtrip resolves it,
    small enough to clear the borders). Cones are only offered at depths
    where an apex angle in CONE_APEX_RANGE_DEG can reach that footprint.
    The center is uniform over the middle 60% of the field, narrowed when
    necessary so footprint plus gel-smoothing reach stays clear of the
    border (the Poisson boundary condition assumes zero contact there).
    """
    depth = DEPTH_RANGE_MM[0] + (DEPTH_RANGE_MM[1] - DEPTH_RANGE_MM[0]) * float(rng.uniforms(()))
    fp_lo, fp_hi = FOOTPRINT_RANGE_MM

    shapes = ["sphere", "ridge"]
    cone_apex_lo = max(CONE_APEX_RANGE_DEG[0], _cone_min_apex_deg(depth))
    if cone_apex_lo <= CONE_APEX_RANGE_DEG[1] - 2.0:
        shapes.insert(1, "cone")
    shape = shapes[int(rng.integers(0, len(shapes), ()))]

    kw = {}
    if shape == "sphere":
        r_lo = max(SPHERE_RADIUS_RANGE_MM[0],
                   (fp_lo**2 + depth**2) / (2.0 * depth),
                   depth / SPHERE_MAX_DEPTH_RATIO)
        r_hi = min(SPHERE_RADIUS_RANGE_MM[1], (fp_hi**2 + depth**2) / (2.0 * depth))
        r_hi = max(r_hi, r_lo)
        kw["radius_mm"] = r_lo + (r_hi - r_lo) * float(rng.uniforms(()))
    elif shape == "cone":
        a_lo, a_hi = cone_apex_lo, CONE_APEX_RANGE_DEG[1]
        kw["apex_angle_deg"] = a_lo + (a_hi - a_lo) * float(rng.uniforms(()))
    else:
        lo, hi = RIDGE_WIDTH_RANGE_MM
        kw["ridge_width_mm"] = lo + (hi - lo) * float(rng.uniforms(()))
        kw["ridge_axis"] = int(rng.integers(0, 2, ()))
    probe = Indenter(shape=shape, max_depth_mm=depth, **kw)

    fx = fy = probe.footprint_radius_mm()
    if shape == "ridge":
        half_len = RIDGE_HALF_LEN_FRAC * (width if kw["ridge_axis"] == 0 else height) * pixel_pitch_mm
        half_w = kw["ridge_width_mm"] / 2.0
        fx, fy = (half_len, half_w) if kw["ridge_axis"] == 0 else (half_w, half_len)

    u, v = (float(t) for t in rng.uniforms(2))
    center = (
        _safe_center(u, fx, width, pixel_pitch_mm),
        _safe_center(v, fy, height, pixel_pitch_mm),
    )
    return Indenter(shape=shape, max_depth_mm=depth, center=center, **kw)


def _safe_center(u: float, footprint_mm: float, n_px: int, pitch: float) -> float:
    span_mm = (n_px - 1) * pitch
    reach = footprint_mm + GEL_SMOOTH_TRUNCATE * GEL_SMOOTH_SIGMA_MM
    clear = (reach + BORDER_MARGIN_PX * pitch) / span_mm
    lo = max(CENTER_BAND[0], clear)
    hi = min(CENTER_BAND[1], 1.0 - clear)
    if lo >= hi:
        return 0.5
    return lo + (hi - lo) * u


def generate_dataset(cfg: SensorConfig, n_captures: int, seed: int, mode: str = "diff") -> Dataset:
    """Render ``n_captures`` randomized indenters with ground-truth gradients.

    Per-capture noise streams derive from (seed, capture index), so captures
    may be rendered concurrently without changing the output. In diff mode
    every frame is differenced against the dataset's no-contact reference.
    """
    if n_captures < 1:
        raise InvalidConfigError("n_captures must be >= 1")
    reference = reference_frame(cfg, noise_seed=derive_seed(seed, "reference"))
    entries = []
    for i in range(n_captures):
        ind = sample_indenter(Rng(derive_seed(seed, "indenter", i)),
                              cfg.height, cfg.width, cfg.pixel_pitch_mm)
        depth = gel_smooth(make_indenter(ind, cfg.height, cfg.width, cfg.pixel_pitch_mm),
                           cfg.pixel_pitch_mm)
        frame = render(depth, cfg, noise_seed=derive_seed(seed, "noise", i), round_id=i)
        if mode == "diff":
            frame = differential(frame, reference)
        grads = depth_to_gradients(depth, cfg.pixel_pitch_mm)
        entries.append(DatasetEntry(frame=frame, gradients=grads, depth=depth, indenter=ind))
    return Dataset(entries=tuple(entries), sensor_config=cfg, mode=mode,
                   seed=seed, reference=reference)


# -- sensor-config and dataset persistence ---------------------------------

def sensor_config_to_dict(cfg: SensorConfig) -> dict:
    return {
        "sensor_id": cfg.sensor_id,
        "height": cfg.height,
        "width": cfg.width,
        "pixel_pitch_mm": cfg.pixel_pitch_mm,
        "lights": [
            {"direction": [float(v) for v in l.direction], "intensity": l.intensity}
            for l in cfg.lights
        ],
        "albedo": cfg.albedo,
        "channel_offset": list(cfg.channel_offset),
        "channel_gain": list(cfg.channel_gain),
        "noise_sigma": cfg.noise_sigma,
        "rng_seed": cfg.rng_seed,
        "static_pattern_amp": cfg.static_pattern_amp,
        "vignette_amp": cfg.vignette_amp,
        "vignette_seed": cfg.vignette_seed,
    }


def sensor_config_from_dict(d: dict) -> SensorConfig:
    lights = tuple(
        Light(direction=np.asarray(l["direction"], float), intensity=float(l["intensity"]))
        for l in d["lights"]
    )
    return SensorConfig(
        sensor_id=int(d["sensor_id"]), height=int(d["height"]), width=int(d["width"]),
        pixel_pitch_mm=float(d["pixel_pitch_mm"]), lights=lights,
        albedo=float(d.get("albedo", 1.0)),
        channel_offset=tuple(d.get("channel_offset", (0.0, 0.0, 0.0))),
        channel_gain=tuple(d.get("channel_gain", (1.0, 1.0, 1.0))),
        noise_sigma=float(d.get("noise_sigma", 0.0)),
        rng_seed=int(d.get("rng_seed", 0)),
        static_pattern_amp=float(d.get("static_pattern_amp", 0.0)),
        vignette_amp=float(d.get("vignette_amp", 0.0)),
        vignette_seed=int(d.get("vignette_seed", 0)),
    )


def save_dataset(ds: Dataset, out_dir, quantize8: bool = False) -> None:
    """Write manifest.json plus one TSR1 raster per entry component.

    ``quantize8`` passes frames through the 8-bit quantize/dequantize pair
    before writing, simulating a camera's byte-valued output.
    """
    os.makedirs(out_dir, exist_ok=True)
    lo, hi = (-1.0, 1.0) if ds.mode == "diff" else (0.0, 1.0)

    def maybe_q(px):
        if not quantize8:
            return px
        return raster.dequantize_u8(raster.quantize_u8(px, lo, hi), lo, hi)

    entries_meta = []
    for i, e in enumerate(ds.entries):
        names = {
            "frame": f"entry_{i:04d}.tsr",
            "grad": f"entry_{i:04d}_grad.tsr",
            "depth": f"entry_{i:04d}_depth.tsr",
        }
        kind = "diff" if ds.mode == "diff" else "frame"
        raster.write_raster(os.path.join(out_dir, names["frame"]), kind, maybe_q(e.frame.pixels))
        raster.write_gradients(os.path.join(out_dir, names["grad"]), e.gradients)
        raster.write_depth(os.path.join(out_dir, names["depth"]), e.depth)
        entries_meta.append({**names, "indenter": asdict(e.indenter),
                             "round_id": e.frame.round_id})
    raster.write_frame(os.path.join(out_dir, "reference.tsr"), ds.reference)
    manifest = {
        "format": "TSDS1",
        "mode": ds.mode,
        "seed": ds.seed,
        "n_captures": len(ds.entries),
        "quantize8": quantize8,
        "sensor_config": sensor_config_to_dict(ds.sensor_config),
        "reference": "reference.tsr",
        "entries": entries_meta,
    }
    blob = json.dumps(manifest, indent=2, sort_keys=True).encode("ascii")
    raster.atomic_write_bytes(os.path.join(out_dir, "manifest.json"), blob)


def load_dataset(in_dir) -> Dataset:
    """Inverse of :func:`save_dataset`."""
    with open(os.path.join(in_dir, "manifest.json"), "rb") as fh:
        manifest = json.load(fh)
    if manifest.get("format") != "TSDS1":
        raise InvalidFieldError(f"{in_dir}: not a dataset directory")
    cfg = sensor_config_from_dict(manifest["sensor_config"])
    mode = manifest["mode"]
    reference = raster.read_frame(os.path.join(in_dir, manifest["reference"]),
                                  sensor_id=cfg.sensor_id)
    entries = []
    for meta in manifest["entries"]:
        frame = raster.read_frame(os.path.join(in_dir, meta["frame"]),
                                  sensor_id=cfg.sensor_id,
                                  round_id=meta.get("round_id", 0))
        grads = raster.read_gradients(os.path.join(in_dir, meta["grad"]))
        depth = raster.read_depth(os.path.join(in_dir, meta["depth"]))
        ind = Indenter(**{**meta["indenter"], "center": tuple(meta["indenter"]["center"])})
        entries.append(DatasetEntry(frame=frame, gradients=grads, depth=depth, indenter=ind))
    return Dataset(entries=tuple(entries), sensor_config=cfg, mode=mode,
                   seed=int(manifest["seed"]), reference=reference)
