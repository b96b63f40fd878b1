import pytest

from griprack.kinematics.collision import (
    detect_collision,
    first_sustained_exceedance,
    synth_current_trace,
)


def test_below_threshold_no_event():
    assert detect_collision([0.3] * 100, 0.8) is None


def test_stall_event_at_debounce_completion():
    # third consecutive over-threshold sample completes the run at index 3
    assert first_sustained_exceedance([0.3, 1.0, 1.0, 1.0], 0.8, debounce=3) == 3
    ev = detect_collision([0.3, 1.0, 1.0, 1.0], 0.8, debounce=3, sample_hz=1000.0)
    assert ev is not None
    assert ev.timestamp == pytest.approx(0.003)
    assert ev.current_peak == 1.0


def test_single_spike_rejected():
    assert detect_collision([0.3, 1.0, 0.3, 0.3], 0.8, debounce=3) is None


def test_interrupted_runs_reset():
    trace = [1.0, 1.0, 0.3, 1.0, 1.0, 0.3, 1.0, 1.0, 1.0]
    assert first_sustained_exceedance(trace, 0.8, debounce=3) == 8


def test_threshold_must_be_positive():
    with pytest.raises(ValueError):
        detect_collision([0.1], 0.0)


def test_synth_trace_levels():
    trace = synth_current_trace(free_s=0.05, stall_s=0.01)
    free = trace[:50]
    assert max(free) <= 0.4
    assert trace[-1] == 1.0
    # free-running segment alone never trips the detector
    assert detect_collision(free, 0.8) is None
    assert detect_collision(trace, 0.8) is not None
