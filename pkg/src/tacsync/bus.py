"""Discrete-event simulation of the hub + cascaded sensor boards.

One acquisition round: the coordinator issues per-sensor trigger commands
back to back on the control bus (each taking ``i2c_cmd_time_us``; the
capture instant is the command completion), every sensor buffers its image
for ``t_buf_us``, and the coordinator then drains the shared high-speed bus
sequentially in sensor order, forwarding each image to the host over USB.
Round k+1's triggers are issued immediately after round k's last transfer
completes, so the steady-state period is N*t_spi + t_buf.

All event times are integer microseconds; the simulation is exactly
reproducible (no floating-point event arithmetic).
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

from .core import TactileFrame
from .errors import InvalidConfigError, ProtocolViolationError

DEFAULT_SPI_BITRATE = 40_000_000
DEFAULT_USB_BITRATE = 40_000_000


@dataclass(frozen=True)
class BusConfig:
    n_sensors: int
    frame_size_bytes: int
    spi_bitrate_bps: int = DEFAULT_SPI_BITRATE
    i2c_cmd_time_us: int = 30
    t_buf_us: int = 1000
    usb_bitrate_bps: int = DEFAULT_USB_BITRATE
    per_sensor_extra_delay_us: tuple = ()

    def __post_init__(self):
        if self.n_sensors < 1:
            raise InvalidConfigError("n_sensors must be >= 1")
        if self.frame_size_bytes <= 0:
            raise InvalidConfigError("frame_size_bytes must be positive")
        for name in ("spi_bitrate_bps", "i2c_cmd_time_us", "t_buf_us", "usb_bitrate_bps"):
            if getattr(self, name) <= 0:
                raise InvalidConfigError(f"{name} must be positive")
        extra = tuple(int(v) for v in self.per_sensor_extra_delay_us) or (0,) * self.n_sensors
        if len(extra) != self.n_sensors:
            raise InvalidConfigError("per_sensor_extra_delay_us needs one entry per sensor")
        if any(v < 0 for v in extra):
            raise InvalidConfigError("per_sensor_extra_delay_us entries must be >= 0")
        object.__setattr__(self, "per_sensor_extra_delay_us", extra)

    @property
    def t_spi_us(self) -> int:
        return predicted_transfer_time(self.frame_size_bytes, self.spi_bitrate_bps)

    @property
    def t_usb_us(self) -> int:
        return predicted_transfer_time(self.frame_size_bytes, self.usb_bitrate_bps)


def predicted_transfer_time(frame_size_bytes: int, bitrate_bps: int) -> int:
    """Per-image transfer duration 8*S/bitrate, rounded to the nearest us."""
    if frame_size_bytes <= 0 or bitrate_bps <= 0:
        raise InvalidConfigError("frame size and bitrate must be positive")
    num = 8 * frame_size_bytes * 1_000_000
    return (num + bitrate_bps // 2) // bitrate_bps


def predicted_frame_rate(config: BusConfig) -> float:
    """Closed-form steady-state frame rate 1/(N*t_spi + t_buf), in Hz."""
    return 1e6 / (config.n_sensors * config.t_spi_us + config.t_buf_us)


def predicted_latency(config: BusConfig) -> int:
    """Closed-form worst-case capture-to-host latency N*t_spi + t_buf + t_usb, us."""
    return config.n_sensors * config.t_spi_us + config.t_buf_us + config.t_usb_us


def predicted_sync_error(config: BusConfig) -> int:
    """Upper bound on the within-round capture-instant spread: t_cmd * N, us."""
    return config.i2c_cmd_time_us * config.n_sensors


@dataclass(frozen=True)
class AcquisitionTrace:
    """Event log of a simulated acquisition run; arrays are (n_rounds, N)."""

    n_sensors: int
    trigger_time_us: np.ndarray
    capture_done_us: np.ndarray
    spi_start_us: np.ndarray
    spi_end_us: np.ndarray
    usb_delivered_us: np.ndarray
    frame_period_us: np.ndarray  # (n_rounds,)
    max_latency_us: np.ndarray
    sync_error_us: np.ndarray

    def __post_init__(self):
        trig, s0, s1 = self.trigger_time_us, self.spi_start_us, self.spi_end_us
        if np.any(np.diff(trig, axis=1) < 0):
            raise ProtocolViolationError("trigger times must be non-decreasing per round")
        # shared-bus exclusivity: transfers are sequential, so sorting by
        # start within each round must leave no overlapping interval
        if np.any(s0[:, 1:] < s1[:, :-1]):
            raise ProtocolViolationError("overlapping SPI transfers in trace")

    @property
    def n_rounds(self) -> int:
        return self.trigger_time_us.shape[0]

    def round_start_us(self, round_id: int) -> int:
        return int(self.trigger_time_us[round_id, 0])

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("round_id,sensor_id,trigger_time_us,capture_done_us,"
                  "spi_start_us,spi_end_us,usb_delivered_us\n")
        for r in range(self.n_rounds):
            for s in range(self.n_sensors):
                buf.write(f"{r},{s},{self.trigger_time_us[r, s]},"
                          f"{self.capture_done_us[r, s]},{self.spi_start_us[r, s]},"
                          f"{self.spi_end_us[r, s]},{self.usb_delivered_us[r, s]}\n")
        return buf.getvalue()


def simulate_rounds(config: BusConfig, n_rounds: int) -> AcquisitionTrace:
    """Run the event timeline for ``n_rounds`` acquisition rounds."""
    if n_rounds < 1:
        raise InvalidConfigError("n_rounds must be >= 1")
    n = config.n_sensors
    t_cmd, t_buf = config.i2c_cmd_time_us, config.t_buf_us
    t_spi, t_usb = config.t_spi_us, config.t_usb_us
    extra = config.per_sensor_extra_delay_us

    trig = np.zeros((n_rounds, n), dtype=np.int64)
    done = np.zeros_like(trig)
    spi0 = np.zeros_like(trig)
    spi1 = np.zeros_like(trig)
    usb = np.zeros_like(trig)

    round_start = 0
    starts = np.zeros(n_rounds + 1, dtype=np.int64)
    for r in range(n_rounds):
        starts[r] = round_start
        bus_free = round_start
        for i in range(n):
            trig[r, i] = round_start + i * t_cmd
            done[r, i] = trig[r, i] + t_buf
            ready = done[r, i] + extra[i]
            spi0[r, i] = max(bus_free, ready)
            spi1[r, i] = spi0[r, i] + t_spi
            usb[r, i] = spi1[r, i] + t_usb
            bus_free = spi1[r, i]
        round_start = int(spi1[r, -1])
    starts[n_rounds] = round_start

    period = np.diff(starts)
    latency = (usb - trig).max(axis=1)
    spread = trig[:, -1] - trig[:, 0]
    return AcquisitionTrace(
        n_sensors=n,
        trigger_time_us=trig, capture_done_us=done,
        spi_start_us=spi0, spi_end_us=spi1, usb_delivered_us=usb,
        frame_period_us=period, max_latency_us=latency, sync_error_us=spread,
    )


def trace_summary(config: BusConfig, trace: AcquisitionTrace) -> dict:
    """Predicted-vs-simulated report used by the CLI and the acceptance suite."""
    mean_period = float(trace.frame_period_us.mean())
    return {
        "n_sensors": config.n_sensors,
        "n_rounds": trace.n_rounds,
        "predicted": {
            "t_spi_us": config.t_spi_us,
            "t_usb_us": config.t_usb_us,
            "frame_rate_hz": predicted_frame_rate(config),
            "latency_us": predicted_latency(config),
            "sync_error_us": predicted_sync_error(config),
        },
        "simulated": {
            "mean_frame_period_us": mean_period,
            "frame_rate_hz": 1e6 / mean_period,
            "max_latency_us": int(trace.max_latency_us.max()),
            "max_sync_spread_us": int(trace.sync_error_us.max()),
        },
    }


@dataclass(frozen=True)
class FrameSet:
    """The N frames of one synchronized round, indexed by sensor id."""

    round_id: int
    frames: tuple  # N TactileFrames, sensor ids exactly 0..N-1

    def __post_init__(self):
        ids = [f.sensor_id for f in self.frames]
        if ids != list(range(len(self.frames))):
            raise ProtocolViolationError(f"sensor ids must be 0..N-1 in order, got {ids}")
        if any(f.round_id != self.round_id for f in self.frames):
            raise ProtocolViolationError("all frames of a set must share round_id")


@dataclass(frozen=True)
class IncompleteRound:
    round_id: int
    missing_sensor_ids: tuple


def assemble_frame_sets(trace: AcquisitionTrace, frames) -> tuple:
    """Group frames by round; returns (complete FrameSets, incomplete reports).

    A FrameSet is emitted only when all N sensors contributed; rounds with
    missing members are reported, never silently dropped.
    """
    n = trace.n_sensors
    by_round: dict = {}
    for f in frames:
        if not (0 <= f.round_id < trace.n_rounds):
            raise ProtocolViolationError(f"frame round_id {f.round_id} not in trace")
        if not (0 <= f.sensor_id < n):
            raise ProtocolViolationError(f"frame sensor_id {f.sensor_id} out of range")
        slot = by_round.setdefault(f.round_id, {})
        if f.sensor_id in slot:
            raise ProtocolViolationError(
                f"duplicate frame for sensor {f.sensor_id} in round {f.round_id}"
            )
        slot[f.sensor_id] = f
    complete, incomplete = [], []
    for round_id in sorted(by_round):
        slot = by_round[round_id]
        missing = tuple(i for i in range(n) if i not in slot)
        if missing:
            incomplete.append(IncompleteRound(round_id, missing))
        else:
            complete.append(FrameSet(round_id, tuple(slot[i] for i in range(n))))
    return complete, incomplete
