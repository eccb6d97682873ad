import numpy as np
import pytest

from utils.errors import BlowUp, GridMismatch, LevelNotCrossed, MultipleCrossings, StabilityViolation
from utils.pde_sim import (
    PdeConfig,
    PdeResult,
    StepIC,
    TableIC,
    TerraceIC,
    arrival_time,
    default_track_levels,
    front_positions,
    measure_front_speed,
    residual_vs_terrace,
    simulate,
    track_frame,
)
from utils.profile import make_terrace_function

SMALL = dict(x_min=-5.0, x_max=5.0, dx=0.05, t_final=1.0)


@pytest.fixture(scope="module")
def step_a(spec_a):
    return simulate(spec_a, PdeConfig(**SMALL))


def synthetic(times, rows, x=None):
    x = np.linspace(0.0, 4.0, 5) if x is None else x
    return PdeResult(config=PdeConfig(), x=x, times=np.asarray(times, dtype=float), snapshots=np.asarray(rows, dtype=float))


def test_explicit_step_limit_is_enforced(spec_a):
    with pytest.raises(StabilityViolation):
        simulate(spec_a, PdeConfig(dx=0.1, dt=0.01))


def test_default_time_step(spec_a):
    config = PdeConfig(**SMALL)
    assert config.time_step == pytest.approx(0.4 * 0.05**2 / 2)
    assert config.n_steps * config.effective_dt == pytest.approx(1.0)


def test_default_track_levels(spec_a, spec_b):
    assert default_track_levels(spec_a) == (0.5,)
    assert default_track_levels(spec_b) == (0.75, 0.25)


def test_step_run(step_a):
    assert step_a.times[0] == 0.0
    assert step_a.times[-1] == pytest.approx(1.0)
    assert step_a.snapshots.shape == (len(step_a.times), step_a.x.size)
    assert step_a.snapshots[-1, 0] == 1.0 and step_a.snapshots[-1, -1] == 0.0
    assert step_a.overshoot() <= 10 * 0.05

    track = track_frame(step_a, 0.5)
    assert list(track.columns) == ["t", "x_level"]
    assert len(track) == len(step_a.times)


def test_balanced_step_does_not_move(step_a):
    speed, _ = measure_front_speed(step_a, 0.5, (0.5, 1.0))
    assert abs(speed) < 0.05


def test_simulation_is_deterministic(spec_a, step_a):
    again = simulate(spec_a, PdeConfig(**SMALL))
    assert np.array_equal(again.snapshots, step_a.snapshots)


def test_ordered_data_stay_ordered(spec_a, step_a):
    ahead = simulate(spec_a, PdeConfig(**SMALL, ic=StepIC(location=1.0)))
    assert np.all(step_a.snapshots <= ahead.snapshots + 10 * 0.05)


def test_platform_is_reached_in_finite_time(spec_a):
    result = simulate(spec_a, PdeConfig(**SMALL, ic=StepIC(upper=0.9)))
    arrival = arrival_time(result, (-4.0, -3.0))
    assert arrival is not None
    assert arrival <= 0.2
    assert arrival_time(result, (3.0, 4.0)) is None


def test_table_initial_condition_blow_up(spec_a):
    table = TableIC(x=np.array([-5.0, -1.0, 1.0, 5.0]), u=np.array([1.0, 20.0, 20.0, 0.0]))
    with pytest.raises(BlowUp):
        simulate(spec_a, PdeConfig(**SMALL, ic=table))


def test_front_positions():
    x = np.array([0.0, 1.0, 2.0])
    u = np.array([1.0, 0.5, 0.0])
    assert front_positions(x, u, 0.75) == [0.5]
    assert front_positions(x, u, 0.5) == [1.0]
    assert front_positions(x, u, 2.0) == []


def test_measure_front_speed_on_a_moving_ramp():
    x = np.linspace(0.0, 20.0, 21)
    times = [0.0, 1.0, 2.0, 3.0]
    rows = [1.0 - (x - 0.5 * t) / 10.0 for t in times]
    speed, r2 = measure_front_speed(synthetic(times, rows, x), 0.5, (0.0, 3.0))
    assert speed == pytest.approx(0.5)
    assert r2 == pytest.approx(1.0)


def test_measure_front_speed_errors():
    result = synthetic([0.0, 1.0], [[1, 0, 1, 0, 0], [1, 0, 1, 0, 0]])
    with pytest.raises(MultipleCrossings):
        measure_front_speed(result, 0.5, (0.0, 1.0))
    with pytest.raises(LevelNotCrossed):
        measure_front_speed(result, 2.0, (0.0, 1.0))
    with pytest.raises(LevelNotCrossed):
        measure_front_speed(result, 0.5, (5.0, 6.0))


def test_residual_needs_the_matching_terrace(terrace_a, step_a):
    tf = make_terrace_function(terrace_a, n_samples=11)
    with pytest.raises(GridMismatch):
        residual_vs_terrace(step_a, tf)


@pytest.mark.slow
@pytest.mark.parametrize("which", ["a", "b"])
def test_standing_terraces_are_solutions(spec_a, spec_b, terrace_a, terrace_b, which):
    spec, terrace = {"a": (spec_a, terrace_a), "b": (spec_b, terrace_b)}[which]
    tf = make_terrace_function(terrace, gap=1.0)

    result = simulate(spec, PdeConfig(x_min=-3.0, x_max=6.0, dx=0.01, t_final=1.0, ic=TerraceIC(tf)))
    assert residual_vs_terrace(result, tf) <= 1e-2


@pytest.mark.slow
def test_terrace_residual_shrinks_with_the_grid(spec_b, terrace_b):
    tf = make_terrace_function(terrace_b, gap=1.0)

    residuals = []
    for dx in (0.04, 0.02):
        result = simulate(spec_b, PdeConfig(x_min=-5.0, x_max=5.0, dx=dx, t_final=0.5, ic=TerraceIC(tf)))
        residuals.append(residual_vs_terrace(result, tf))

    assert residuals[0] >= 1.5 * residuals[1]


@pytest.mark.slow
def test_moving_terrace_is_a_solution(spec_c, terrace_c):
    tf = make_terrace_function(terrace_c, gap=1.0)

    result = simulate(spec_c, PdeConfig(x_min=-6.0, x_max=10.0, dx=0.02, t_final=1.0, ic=TerraceIC(tf)))
    assert residual_vs_terrace(result, tf) <= 2e-2


@pytest.mark.slow
def test_unbalanced_front_speeds_match_the_phase_plane(spec_c, terrace_c):
    result = simulate(spec_c, PdeConfig(x_min=-15.0, x_max=15.0, dx=0.025, t_final=20.0, ic=StepIC()))

    for front in terrace_c.fronts:
        level = 0.5 * (front.upper + front.lower)
        measured, r2 = measure_front_speed(result, level, (10.0, 20.0))
        assert np.sign(measured) == np.sign(front.speed)
        assert measured == pytest.approx(front.speed, abs=max(0.01 * abs(front.speed), 5e-3))
        assert r2 > 0.99
