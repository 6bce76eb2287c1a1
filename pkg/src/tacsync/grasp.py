"""Closed-loop grasp scenario: synchronization staleness vs gripping overshoot.

A simulated gripper closes on a soft object watched by N tactile sensors.
Per control tick (= one bus acquisition round) each sensor's indentation is
a linear function of the closure command past its contact onset, the
sensor renders a differential frame, and the controller halts closure when
any *delivered* deformation signal crosses the threshold. A sensor with an
injected delay of d rounds delivers the frame it captured d rounds
earlier, so the controller reacts to stale data and the true deformation
overshoots the threshold - the effect the synchronized acquisition system
exists to remove.

The object model is kinematic on purpose: it isolates measurement
staleness from contact dynamics, which is the claim under test.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, replace

import numpy as np

from .bus import BusConfig, simulate_rounds
from .core import DifferentialFrame, SensorConfig, differential
from .errors import GraspTimeoutError, InvalidConfigError
from .gelsim import Indenter, default_sensor_config, make_indenter, reference_frame, render
from .rng import derive_seed

POST_STOP_TICKS = 5  # plateau recorded after the controller halts


def deformation_signal(diff: DifferentialFrame) -> float:
    """Mean absolute differential intensity over all pixels and channels."""
    return float(np.abs(diff.pixels).mean())


@dataclass(frozen=True)
class GraspScenario:
    n_sensors: int = 7
    threshold: float = 0.02
    closure_step_mm: float = 0.05
    contact_onset_mm: tuple = ()  # per sensor; defaults spread the onsets
    stiffness: tuple = ()  # indentation mm per closure mm past onset
    indenter_radius_mm: float = 2.5
    max_depth_mm: float = 1.2  # gel saturation cap
    max_ticks: int = 300
    injected_delay: tuple = ()  # () or (sensor_id, delay_rounds)
    bus: BusConfig = BusConfig(n_sensors=7, frame_size_bytes=20480)
    sensor_template: SensorConfig = default_sensor_config()

    def __post_init__(self):
        if self.threshold <= 0 or self.closure_step_mm <= 0:
            raise InvalidConfigError("threshold and closure step must be positive")
        if self.bus.n_sensors != self.n_sensors:
            raise InvalidConfigError("bus config and scenario disagree on sensor count")
        onsets = self.contact_onset_mm or tuple(
            0.5 if i == 0 else 0.9 + 0.08 * i for i in range(self.n_sensors)
        )
        stiff = self.stiffness or tuple(
            0.9 if i == 0 else 0.5 for i in range(self.n_sensors)
        )
        if len(onsets) != self.n_sensors or len(stiff) != self.n_sensors:
            raise InvalidConfigError("onsets and stiffness need one entry per sensor")
        if self.injected_delay:
            sid, d = self.injected_delay
            if not (0 <= sid < self.n_sensors) or d < 0:
                raise InvalidConfigError("injected_delay must be (sensor_id, rounds>=0)")
        object.__setattr__(self, "contact_onset_mm", tuple(float(v) for v in onsets))
        object.__setattr__(self, "stiffness", tuple(float(v) for v in stiff))

    def indentation_mm(self, sensor_id: int, closure_mm: float) -> float:
        depth = self.stiffness[sensor_id] * (closure_mm - self.contact_onset_mm[sensor_id])
        return float(np.clip(depth, 0.0, self.max_depth_mm))


@dataclass(frozen=True)
class GraspTrace:
    signals: np.ndarray  # (ticks, N) true deformation signals
    delivered: np.ndarray  # (ticks, N) what the controller saw
    closure_mm: np.ndarray  # (ticks,)
    tick_time_us: np.ndarray  # (ticks,) bus round starts
    stop_tick: int
    tripped_sensor: int
    threshold: float
    overshoot: float  # peak true signal after stop, minus threshold

    def __post_init__(self):
        after = self.closure_mm[self.stop_tick :]
        if after.size and not np.all(after == after[0]):
            raise InvalidConfigError("closure must be constant after the stop tick")

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("tick,sensor_id,signal,closure_mm,delivered_signal\n")
        for t in range(self.signals.shape[0]):
            for s in range(self.signals.shape[1]):
                buf.write(f"{t},{s},{self.signals[t, s]:.9f},"
                          f"{self.closure_mm[t]:.6f},{self.delivered[t, s]:.9f}\n")
        return buf.getvalue()


class SensorBank:
    """Per-sensor configs, references, and the depth -> signal render path."""

    def __init__(self, template: SensorConfig, n_sensors: int,
                 indenter_radius_mm: float, seed: int):
        self.seed = seed
        self.radius = indenter_radius_mm
        self.configs = [
            replace(template, sensor_id=i, rng_seed=derive_seed(seed, "sensor", i))
            for i in range(n_sensors)
        ]
        self.references = [
            reference_frame(cfg, noise_seed=derive_seed(seed, "reference", i))
            for i, cfg in enumerate(self.configs)
        ]

    def diff_frame(self, sensor_id: int, depth_mm: float, tick: int) -> DifferentialFrame:
        cfg = self.configs[sensor_id]
        ind = Indenter("sphere", max_depth_mm=depth_mm, radius_mm=self.radius) \
            if depth_mm > 0 else Indenter("flat")
        depth = make_indenter(ind, cfg.height, cfg.width, cfg.pixel_pitch_mm)
        frame = render(depth, cfg, noise_seed=derive_seed(self.seed, "tick", tick, sensor_id),
                       round_id=tick)
        return differential(frame, self.references[sensor_id])

    def signal(self, sensor_id: int, depth_mm: float, tick: int) -> float:
        return deformation_signal(self.diff_frame(sensor_id, depth_mm, tick))


def run_grasp(scenario: GraspScenario, seed: int = 0) -> GraspTrace:
    """Advance the control loop until threshold crossing plus a short plateau."""
    n = scenario.n_sensors
    bank = SensorBank(scenario.sensor_template, n, scenario.indenter_radius_mm, seed)
    delay_map = {scenario.injected_delay[0]: scenario.injected_delay[1]} \
        if scenario.injected_delay else {}

    signals, delivered, closures = [], [], []
    stop_tick = None
    tripped = -1
    for t in range(scenario.max_ticks):
        closure = scenario.closure_step_mm * (t if stop_tick is None else stop_tick)
        closures.append(closure)
        row = np.array([bank.signal(i, scenario.indentation_mm(i, closure), t)
                        for i in range(n)])
        signals.append(row)
        seen = row.copy()
        for sid, d in delay_map.items():
            past = t - d
            seen[sid] = signals[past][sid] if past >= 0 else 0.0
        delivered.append(seen)
        if stop_tick is None and np.any(seen >= scenario.threshold):
            stop_tick = t
            tripped = int(np.argmax(seen >= scenario.threshold))
        if stop_tick is not None and t >= stop_tick + POST_STOP_TICKS:
            break
    if stop_tick is None:
        raise GraspTimeoutError(
            f"no delivered signal reached {scenario.threshold} within "
            f"{scenario.max_ticks} ticks"
        )

    signals = np.asarray(signals)
    delivered = np.asarray(delivered)
    bus_trace = simulate_rounds(scenario.bus, signals.shape[0])
    overshoot = float(signals[stop_tick:].max() - scenario.threshold)
    return GraspTrace(
        signals=signals, delivered=delivered,
        closure_mm=np.asarray(closures),
        tick_time_us=bus_trace.trigger_time_us[:, 0].copy(),
        stop_tick=stop_tick, tripped_sensor=tripped,
        threshold=scenario.threshold, overshoot=overshoot,
    )


def compare_sync(scenario: GraspScenario, delay_rounds: int, seed: int = 0) -> tuple:
    """Overshoot without delay vs with the first-tripping sensor delayed."""
    if delay_rounds < 1:
        raise InvalidConfigError("delay_rounds must be >= 1")
    base = replace(scenario, injected_delay=())
    sync_trace = run_grasp(base, seed=seed)
    delayed = replace(scenario,
                      injected_delay=(sync_trace.tripped_sensor, delay_rounds))
    delayed_trace = run_grasp(delayed, seed=seed)
    return sync_trace.overshoot, delayed_trace.overshoot


# -- five-stage manipulation demo (rest/grip/press/hold/release) ------------

STAGES = ("rest", "grip", "press", "hold", "release")


def run_five_stage_demo(n_sensors: int = 7, seed: int = 0,
                        sensor_template: SensorConfig = None,
                        press_sensor: int = 0) -> list:
    """Scripted tool-manipulation episode; returns long-format rows.

    Closure ramps in during "grip", the designated fingertip sensor gets an
    extra indentation ramp during "press", everything holds in "hold", and
    closure ramps out in "release". Rows are dicts with tick, sensor_id,
    signal, closure_mm, delivered_signal, stage.
    """
    template = sensor_template or default_sensor_config()
    bank = SensorBank(template, n_sensors, indenter_radius_mm=2.5, seed=seed)
    onsets = [0.4 + 0.05 * i for i in range(n_sensors)]
    plan = [("rest", 6), ("grip", 14), ("press", 10), ("hold", 12), ("release", 14)]

    rows = []
    tick = 0
    closure = 0.0
    press = 0.0
    for stage, ticks in plan:
        for _ in range(ticks):
            if stage == "grip":
                closure = min(closure + 0.06, 1.0)
            elif stage == "press":
                press = min(press + 0.05, 0.5)
            elif stage == "release":
                press = max(press - 0.08, 0.0)
                closure = max(closure - 0.12, 0.0)
            for i in range(n_sensors):
                depth = max(0.0, 0.8 * (closure - onsets[i]))
                if i == press_sensor:
                    depth += press
                depth = min(depth, 1.2)
                sig = bank.signal(i, depth, tick)
                rows.append({
                    "tick": tick, "sensor_id": i, "signal": sig,
                    "closure_mm": closure, "delivered_signal": sig,
                    "stage": stage,
                })
            tick += 1
    return rows


def demo_rows_to_csv(rows) -> str:
    buf = io.StringIO()
    buf.write("tick,sensor_id,signal,closure_mm,delivered_signal,stage\n")
    for r in rows:
        buf.write(f"{r['tick']},{r['sensor_id']},{r['signal']:.9f},"
                  f"{r['closure_mm']:.6f},{r['delivered_signal']:.9f},{r['stage']}\n")
    return buf.getvalue()
