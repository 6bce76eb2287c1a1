import numpy as np
import pytest

from tacsync.bus import predicted_frame_rate
from tacsync.core import DifferentialFrame
from tacsync.errors import GraspTimeoutError, InvalidConfigError
from tacsync.gelsim import Indenter, default_sensor_config, make_indenter, \
    reference_frame, render
from tacsync.core import differential
from tacsync.grasp import (
    GraspScenario,
    SensorBank,
    compare_sync,
    deformation_signal,
    demo_rows_to_csv,
    run_five_stage_demo,
    run_grasp,
)


def test_signal_zero_and_constant():
    zero = DifferentialFrame(sensor_id=0, round_id=0, capture_time_us=0,
                             pixels=np.zeros((4, 4, 3)))
    assert deformation_signal(zero) == 0.0
    const = DifferentialFrame(sensor_id=0, round_id=0, capture_time_us=0,
                              pixels=np.full((4, 4, 3), 0.1))
    assert deformation_signal(const) == pytest.approx(0.1)


def test_signal_monotone_in_indentation():
    cfg = default_sensor_config(noise_sigma=0.0)
    ref = reference_frame(cfg)
    values = []
    for depth in (0.2, 0.4, 0.6, 0.8):
        d = make_indenter(Indenter("sphere", max_depth_mm=depth, radius_mm=2.5),
                          cfg.height, cfg.width, cfg.pixel_pitch_mm)
        values.append(deformation_signal(differential(render(d, cfg), ref)))
    assert all(a < b for a, b in zip(values, values[1:]))


def test_run_grasp_deterministic():
    s = GraspScenario()
    a = run_grasp(s, seed=3)
    b = run_grasp(s, seed=3)
    assert np.array_equal(a.signals, b.signals)
    assert a.stop_tick == b.stop_tick and a.overshoot == b.overshoot


def test_closure_frozen_after_stop():
    trace = run_grasp(GraspScenario(), seed=0)
    after = trace.closure_mm[trace.stop_tick:]
    assert np.all(after == after[0])


def replay_loop(s, seed, delay_map):
    """Independent reimplementation of the control-loop semantics."""
    from tacsync.grasp import POST_STOP_TICKS

    bank = SensorBank(s.sensor_template, s.n_sensors, s.indenter_radius_mm, seed)
    signals, stop = [], None
    for t in range(s.max_ticks):
        closure = s.closure_step_mm * (t if stop is None else stop)
        row = [bank.signal(i, s.indentation_mm(i, closure), t)
               for i in range(s.n_sensors)]
        signals.append(row)
        seen = list(row)
        for sid, d in delay_map.items():
            seen[sid] = signals[t - d][sid] if t - d >= 0 else 0.0
        if stop is None and max(seen) >= s.threshold:
            stop = t
        if stop is not None and t >= stop + POST_STOP_TICKS:
            break
    sig = np.asarray(signals)
    return sig, stop, float(sig[stop:].max() - s.threshold)


def test_sync_overshoot_matches_replay_oracle():
    s = GraspScenario()
    trace = run_grasp(s, seed=0)
    sig, stop, overshoot = replay_loop(s, 0, {})
    assert trace.stop_tick == stop
    assert np.array_equal(trace.signals, sig)
    assert trace.overshoot == pytest.approx(overshoot, abs=1e-15)
    # synchronized overshoot is only the one-tick quantization residue
    assert trace.overshoot < 0.002


def test_delayed_overshoot_matches_hand_analysis():
    """With delay d on the tripping sensor, the controller reacts to the
    signal from d rounds earlier, so the stop slides d ticks later and the
    true deformation keeps growing in between."""
    s = GraspScenario()
    sync = run_grasp(s, seed=0)
    trip = sync.tripped_sensor
    for d in (1, 2, 3):
        scenario = GraspScenario(injected_delay=(trip, d))
        delayed = run_grasp(scenario, seed=0)
        sig, stop, overshoot = replay_loop(scenario, 0, {trip: d})
        assert delayed.stop_tick == stop == sync.stop_tick + d
        assert delayed.overshoot == pytest.approx(overshoot, abs=1e-15)
        assert delayed.overshoot > sync.overshoot


def test_compare_sync_ordering_and_monotonicity():
    s = GraspScenario()
    overshoots = []
    for d in (1, 2, 3, 4):
        o_sync, o_delayed = compare_sync(s, d, seed=0)
        assert o_delayed > o_sync
        overshoots.append(o_delayed)
    assert all(a <= b for a, b in zip(overshoots, overshoots[1:]))


def test_compare_sync_rejects_zero_delay():
    with pytest.raises(InvalidConfigError):
        compare_sync(GraspScenario(), 0, seed=0)


def test_low_threshold_stops_at_first_contact():
    quiet = default_sensor_config(noise_sigma=0.0)
    s = GraspScenario(threshold=0.0005, sensor_template=quiet)
    trace = run_grasp(s, seed=0)
    # the earliest-onset sensor contacts once closure passes its onset
    first_contact = next(
        t for t in range(s.max_ticks)
        if any(s.indentation_mm(i, s.closure_step_mm * t) > 0
               for i in range(s.n_sensors))
    )
    assert trace.stop_tick == first_contact


def test_timeout_reported():
    with pytest.raises(GraspTimeoutError):
        run_grasp(GraspScenario(threshold=5.0, max_ticks=30), seed=0)


def test_control_period_matches_bus_rate():
    s = GraspScenario()
    trace = run_grasp(s, seed=0)
    periods = np.diff(trace.tick_time_us)
    predicted = 1e6 / predicted_frame_rate(s.bus)
    assert abs(periods.mean() - predicted) / predicted < 0.01


def test_trace_csv_layout():
    trace = run_grasp(GraspScenario(), seed=1)
    lines = trace.to_csv().strip().split("\n")
    assert lines[0] == "tick,sensor_id,signal,closure_mm,delivered_signal"
    assert len(lines) == 1 + trace.signals.size


def test_five_stage_demo_qualitative_shape():
    rows = run_five_stage_demo(n_sensors=4, seed=2)
    by_stage = {}
    for r in rows:
        if r["sensor_id"] == 0:  # the pressing fingertip
            by_stage.setdefault(r["stage"], []).append(r["signal"])
    assert np.mean(by_stage["rest"]) < 0.01
    # rises while pressing, plateaus while holding, drops on release
    assert by_stage["press"][-1] > by_stage["grip"][-1] + 0.005
    hold = by_stage["hold"]
    assert abs(hold[-1] - hold[0]) < 0.1 * np.mean(hold)
    assert by_stage["release"][-1] < 0.5 * np.mean(hold)
    stages = [r["stage"] for r in rows]
    assert [s for s in dict.fromkeys(stages)] == ["rest", "grip", "press", "hold", "release"]


def test_demo_csv_has_stage_column():
    rows = run_five_stage_demo(n_sensors=2, seed=0)
    csv = demo_rows_to_csv(rows)
    head = csv.split("\n", 1)[0]
    assert head == "tick,sensor_id,signal,closure_mm,delivered_signal,stage"
