"""Pixel-wise calibration: color(+position) -> surface gradients.

Two regressor families are provided. The lookup table quantizes the color
triple into B^3 cells holding mean gradients (classic GelSight-style,
position-blind). The MLP consumes (r, g, b, x_norm, y_norm) per pixel and
is the model that supports zero-shot transfer between sensors: a single
shared-stimulus capture pair yields per-channel additive offsets that are
applied to the color inputs of the already-fitted model, so a new sensor
costs one capture instead of a full training set.

Model files use the "TCM1" format: magic line, one JSON header line
(architecture, normalization, hyperparameters, offsets), then a
little-endian float32 weight blob.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace

import numpy as np

from .core import DifferentialFrame, GradientField, TactileFrame
from .errors import DimensionMismatchError, InvalidConfigError, InvalidFieldError
from .gelsim import Dataset
from .mlp import MlpHyperparameters, MlpRegressor, fit_mlp_regressor
from .raster import atomic_write_bytes

DEFAULT_LUT_BINS = 32


@dataclass(frozen=True)
class TransferOffsets:
    """Additive per-channel color offsets aligning a target sensor to a reference."""

    dr: float
    dg: float
    db: float

    def __post_init__(self):
        if not all(np.isfinite(v) for v in (self.dr, self.dg, self.db)):
            raise InvalidFieldError("offsets must be finite")

    def as_array(self) -> np.ndarray:
        return np.array([self.dr, self.dg, self.db], dtype=np.float64)

    @classmethod
    def zero(cls) -> "TransferOffsets":
        return cls(0.0, 0.0, 0.0)


def frame_features(frame) -> np.ndarray:
    """Per-pixel feature rows (r, g, b, x_norm, y_norm), positions in [0, 1]."""
    h, w = frame.height, frame.width
    xs = np.arange(w, dtype=np.float64) / max(w - 1, 1)
    ys = np.arange(h, dtype=np.float64) / max(h - 1, 1)
    xg, yg = np.meshgrid(xs, ys)
    return np.column_stack([
        frame.pixels.reshape(-1, 3),
        xg.reshape(-1),
        yg.reshape(-1),
    ])


def dataset_arrays(ds: Dataset) -> tuple:
    """Stack every pixel of every capture into (X, Y) training arrays."""
    xs = [frame_features(e.frame) for e in ds.entries]
    ys = [np.column_stack([e.gradients.gx.reshape(-1), e.gradients.gy.reshape(-1)])
          for e in ds.entries]
    return np.vstack(xs), np.vstack(ys)


def _expected_frame_type(mode: str):
    return DifferentialFrame if mode == "diff" else TactileFrame


@dataclass(frozen=True)
class MlpModel:
    """Fitted MLP regressor plus input mode and transfer offsets."""

    regressor: MlpRegressor
    mode: str  # "raw" | "diff"
    offsets: TransferOffsets

    def predict_gradients(self, frame) -> GradientField:
        if not isinstance(frame, _expected_frame_type(self.mode)):
            raise DimensionMismatchError(
                f"model expects {self.mode} input, got {type(frame).__name__}"
            )
        x = frame_features(frame)
        x[:, :3] += self.offsets.as_array()
        out = self.regressor.predict(x)
        h, w = frame.height, frame.width
        return GradientField(gx=out[:, 0].reshape(h, w).astype(np.float64),
                             gy=out[:, 1].reshape(h, w).astype(np.float64))


@dataclass(frozen=True)
class LookupTable:
    """Color-only calibration: B^3 quantized cells holding mean gradients.

    Empty cells were filled at fit time from the nearest occupied cell in
    Chebyshev bin distance (ties broken by lowest linear cell index).
    """

    bins: int
    lo: np.ndarray  # (3,) per-channel quantization range
    hi: np.ndarray
    table: np.ndarray  # (B**3, 2) mean (gx, gy) per cell
    counts: np.ndarray  # (B**3,) samples seen per cell before filling
    global_mean: np.ndarray  # (2,)
    mode: str
    offsets: TransferOffsets

    def cell_index(self, colors: np.ndarray) -> np.ndarray:
        span = np.maximum(self.hi - self.lo, 1e-12)
        q = np.clip(((colors - self.lo) / span * self.bins).astype(np.int64),
                    0, self.bins - 1)
        return (q[:, 0] * self.bins + q[:, 1]) * self.bins + q[:, 2]

    def predict_gradients(self, frame) -> GradientField:
        if not isinstance(frame, _expected_frame_type(self.mode)):
            raise DimensionMismatchError(
                f"table expects {self.mode} input, got {type(frame).__name__}"
            )
        colors = frame.pixels.reshape(-1, 3) + self.offsets.as_array()
        out = self.table[self.cell_index(colors)]
        h, w = frame.height, frame.width
        return GradientField(gx=out[:, 0].reshape(h, w).astype(np.float64),
                             gy=out[:, 1].reshape(h, w).astype(np.float64))


def fit_lookup_table(train: Dataset, bins: int = DEFAULT_LUT_BINS) -> LookupTable:
    """Accumulate per-cell mean gradients over every pixel of every capture."""
    if bins < 1:
        raise InvalidConfigError("bins must be >= 1")
    x, y = dataset_arrays(train)
    colors = x[:, :3]
    lo = colors.min(axis=0)
    hi = colors.max(axis=0)
    proto = LookupTable(bins=bins, lo=lo, hi=hi,
                        table=np.zeros((bins**3, 2)), counts=np.zeros(bins**3, np.int64),
                        global_mean=y.mean(axis=0), mode=train.mode,
                        offsets=TransferOffsets.zero())
    idx = proto.cell_index(colors)
    counts = np.bincount(idx, minlength=bins**3)
    sums = np.zeros((bins**3, 2))
    np.add.at(sums, idx, y)
    occupied = counts > 0
    table = np.zeros((bins**3, 2))
    table[occupied] = sums[occupied] / counts[occupied, None]
    _fill_empty_cells(table, occupied, bins)
    return replace(proto, table=table, counts=counts)


def _fill_empty_cells(table: np.ndarray, occupied: np.ndarray, bins: int) -> None:
    """Copy into each empty cell its nearest occupied cell's value.

    Distance is Chebyshev over bin coordinates; ties go to the lowest
    linear index (occupied indices are scanned in ascending order and
    argmin returns the first minimum).
    """
    occ_idx = np.flatnonzero(occupied)
    empty_idx = np.flatnonzero(~occupied)
    if len(empty_idx) == 0 or len(occ_idx) == 0:
        return
    occ_coords = np.stack(np.unravel_index(occ_idx, (bins, bins, bins)), axis=1)
    occ_coords = occ_coords.astype(np.int16)
    for lo in range(0, len(empty_idx), 1024):
        chunk = empty_idx[lo : lo + 1024]
        ec = np.stack(np.unravel_index(chunk, (bins, bins, bins)), axis=1).astype(np.int16)
        dist = np.zeros((len(chunk), len(occ_idx)), dtype=np.int16)
        for axis in range(3):
            np.maximum(dist, np.abs(ec[:, axis, None] - occ_coords[None, :, axis]), out=dist)
        nearest = dist.argmin(axis=1)
        table[chunk] = table[occ_idx[nearest]]


def fit_mlp(train: Dataset, hp: MlpHyperparameters = MlpHyperparameters(),
            seed: int = 0) -> MlpModel:
    """Train the per-pixel MLP on a dataset; deterministic given seed."""
    x, y = dataset_arrays(train)
    reg = fit_mlp_regressor(x, y, hp=hp, seed=seed)
    return MlpModel(regressor=reg, mode=train.mode, offsets=TransferOffsets.zero())


def predict_gradients(model, frame) -> GradientField:
    return model.predict_gradients(frame)


def estimate_channel_offsets(reference_capture: DifferentialFrame,
                             target_capture: DifferentialFrame) -> TransferOffsets:
    """Per-channel mean of (reference - target) over one shared-stimulus pair."""
    if reference_capture.pixels.shape != target_capture.pixels.shape:
        raise DimensionMismatchError(
            f"capture shapes disagree: {reference_capture.pixels.shape} vs "
            f"{target_capture.pixels.shape}"
        )
    delta = (reference_capture.pixels - target_capture.pixels).reshape(-1, 3).mean(axis=0)
    return TransferOffsets(float(delta[0]), float(delta[1]), float(delta[2]))


def estimate_channel_gains(reference_capture: DifferentialFrame,
                           target_capture: DifferentialFrame) -> tuple:
    """Least-squares per-channel scale aligning target to reference.

    Extension beyond the offset-only alignment; nothing in the standard
    pipeline uses it unless explicitly requested.
    """
    ref = reference_capture.pixels.reshape(-1, 3)
    tgt = target_capture.pixels.reshape(-1, 3)
    denom = np.maximum((tgt * tgt).sum(axis=0), 1e-12)
    return tuple(float(v) for v in (ref * tgt).sum(axis=0) / denom)


def transfer_model(model, offsets: TransferOffsets):
    """Zero-shot transfer: add offsets to the color inputs; weights untouched."""
    combined = TransferOffsets(model.offsets.dr + offsets.dr,
                               model.offsets.dg + offsets.dg,
                               model.offsets.db + offsets.db)
    return replace(model, offsets=combined)


def evaluate_mae(model, test: Dataset) -> tuple:
    """Mean absolute error per gradient component over all test pixels."""
    if not test.entries:
        raise InvalidConfigError("test dataset is empty")
    err_x, err_y, count = 0.0, 0.0, 0
    for e in test.entries:
        pred = model.predict_gradients(e.frame)
        err_x += float(np.abs(pred.gx - e.gradients.gx).sum())
        err_y += float(np.abs(pred.gy - e.gradients.gy).sum())
        count += e.gradients.gx.size
    return err_x / count, err_y / count


# -- TCM1 model persistence -------------------------------------------------

def save_model(model, path) -> None:
    """Serialize an MlpModel or LookupTable to a TCM1 file."""
    if isinstance(model, MlpModel):
        reg = model.regressor
        blobs = []
        shapes = []
        for w, b in zip(reg.weights, reg.biases):
            blobs += [w.astype("<f4").tobytes(), b.astype("<f4").tobytes()]
            shapes.append(list(w.shape))
        blobs += [reg.norm_mean.astype("<f4").tobytes(),
                  reg.norm_std.astype("<f4").tobytes()]
        header = {
            "kind": "mlp",
            "mode": model.mode,
            "architecture": reg.layer_sizes,
            "shapes": shapes,
            "offsets": [model.offsets.dr, model.offsets.dg, model.offsets.db],
            "hyperparameters": reg.hyperparameters.to_dict(),
            "seed": reg.seed,
            "final_train_loss": reg.final_train_loss,
        }
    elif isinstance(model, LookupTable):
        header = {
            "kind": "lookup",
            "mode": model.mode,
            "bins": model.bins,
            "lo": [float(v) for v in model.lo],
            "hi": [float(v) for v in model.hi],
            "offsets": [model.offsets.dr, model.offsets.dg, model.offsets.db],
            "global_mean": [float(v) for v in model.global_mean],
        }
        blobs = [model.table.astype("<f4").tobytes(),
                 model.counts.astype("<i8").tobytes()]
    else:
        raise InvalidConfigError(f"cannot serialize {type(model).__name__}")
    blob = b"".join(blobs)
    header["blob_len"] = len(blob)
    head = json.dumps(header, sort_keys=True).encode("ascii")
    atomic_write_bytes(path, b"TCM1\n" + head + b"\n" + blob)


def load_model(path):
    """Inverse of :func:`save_model`."""
    with open(path, "rb") as fh:
        magic = fh.readline()
        if magic != b"TCM1\n":
            raise InvalidFieldError(f"{path}: not a TCM1 model file")
        header = json.loads(fh.readline())
        blob = fh.read()
    if len(blob) != header["blob_len"]:
        raise InvalidFieldError(f"{path}: blob length mismatch")
    offsets = TransferOffsets(*header["offsets"])
    if header["kind"] == "mlp":
        hp = MlpHyperparameters.from_dict(header["hyperparameters"])
        weights, biases = [], []
        pos = 0
        for d_in, d_out in header["shapes"]:
            w = np.frombuffer(blob, "<f4", d_in * d_out, pos).reshape(d_in, d_out)
            pos += 4 * d_in * d_out
            b = np.frombuffer(blob, "<f4", d_out, pos)
            pos += 4 * d_out
            weights.append(w.copy())
            biases.append(b.copy())
        d_in = header["shapes"][0][0]
        mean = np.frombuffer(blob, "<f4", d_in, pos).copy()
        pos += 4 * d_in
        std = np.frombuffer(blob, "<f4", d_in, pos).copy()
        reg = MlpRegressor(weights=weights, biases=biases, norm_mean=mean,
                           norm_std=std, hyperparameters=hp,
                           seed=int(header["seed"]),
                           final_train_loss=float(header["final_train_loss"]))
        return MlpModel(regressor=reg, mode=header["mode"], offsets=offsets)
    if header["kind"] == "lookup":
        bins = int(header["bins"])
        n = bins**3
        table = np.frombuffer(blob, "<f4", n * 2, 0).reshape(n, 2).astype(np.float64)
        counts = np.frombuffer(blob, "<i8", n, n * 8).copy()
        return LookupTable(bins=bins, lo=np.asarray(header["lo"]),
                           hi=np.asarray(header["hi"]), table=table, counts=counts,
                           global_mean=np.asarray(header["global_mean"]),
                           mode=header["mode"], offsets=offsets)
    raise InvalidFieldError(f"{path}: unknown model kind {header['kind']!r}")
