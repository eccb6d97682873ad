import pytest

from utils.errors import SnapFailure, SpeedError
from utils.phase_plane import Termination, solve_trajectory
from utils.speed_solver import (
    SpeedBracket,
    crosses_q_axis,
    default_tol_snap,
    find_bracket,
    find_cstar,
    lower_bracket,
    monostable_slope,
    sign_law,
    snap_platform,
    sweep,
    upper_bracket,
)


def test_monostable_slope(spec_a, spec_b, spec_c):
    assert monostable_slope(spec_a, 1.0) == pytest.approx(4.0)
    assert monostable_slope(spec_b, 1.0) == pytest.approx(16.0)
    assert monostable_slope(spec_b, 0.5) == pytest.approx(16.0)
    assert monostable_slope(spec_c, 1.0) == pytest.approx(2.0)


def test_upper_bracket_closed_forms(spec_a, spec_b):
    assert upper_bracket(spec_a, 1.0) == pytest.approx(4.0)
    assert upper_bracket(spec_b, 1.0) == pytest.approx(8.0)
    assert upper_bracket(spec_b, 0.5) == pytest.approx(8.0)


@pytest.mark.parametrize("which", ["a", "b", "c"])
def test_bracket_certificates(spec_a, spec_b, spec_c, which):
    spec = {"a": spec_a, "b": spec_b, "c": spec_c}[which]
    bracket = find_bracket(spec, 1.0)

    assert bracket.c_lo < bracket.c_hi
    assert solve_trajectory(spec, 1.0, bracket.c_lo).termination is Termination.HIT_Q_AXIS
    assert solve_trajectory(spec, 1.0, bracket.c_hi).termination is not Termination.HIT_Q_AXIS


def test_lower_bracket_tries_zero_then_negative_doublings(spec_a, spec_c):
    # c = 0 only touches down for the balanced reaction
    assert lower_bracket(spec_a, 1.0) == -1.0
    c_lo = lower_bracket(spec_c, 1.0)
    assert c_lo < 0.0
    assert crosses_q_axis(spec_c, 1.0, c_lo)


def test_balanced_bistable_speed(spec_a, tols):
    critical = find_cstar(spec_a, 1.0, tols.tol_c, tols.tol_ode)
    assert abs(critical.c_star) <= 1e-8
    assert critical.p_star == 0.0
    assert critical.error_bar <= tols.tol_c
    assert critical.bracket.c_hi == critical.c_star


def test_upper_half_of_tristable_stops_on_middle_platform(spec_b, tols):
    critical = find_cstar(spec_b, 1.0, tols.tol_c, tols.tol_ode)
    assert abs(critical.c_star) <= 1e-8
    assert critical.p_star == 0.5


def test_unbalanced_speed_sign(spec_c, tols):
    upper = find_cstar(spec_c, 1.0, tols.tol_c, tols.tol_ode)
    lower = find_cstar(spec_c, 0.5, tols.tol_c, tols.tol_ode)

    assert upper.p_star == 0.5
    assert lower.p_star == 0.0
    assert upper.c_star < -1e-4
    assert lower.c_star > 1e-4
    # The reaction is point-symmetric about (1/2, 0)
    assert upper.c_star == pytest.approx(-lower.c_star, abs=1e-6)


def test_bracket_must_straddle(spec_a):
    with pytest.raises(SpeedError):
        find_cstar(spec_a, 1.0, bracket=SpeedBracket(5.0, 8.0, 1.0))


def test_snap_platform(spec_b):
    assert snap_platform(spec_b, 0.5 + 1e-9, 1e-6) == 0.5
    assert snap_platform(spec_b, 1e-12, 1e-6) == 0.0
    with pytest.raises(SnapFailure):
        snap_platform(spec_b, 0.6, 1e-6)


def test_default_tol_snap():
    assert default_tol_snap(1e-10) == pytest.approx(1e-7)
    assert default_tol_snap(1e-14) == 1e-8


def test_sign_law(spec_a, spec_c):
    assert sign_law(spec_c, 1.0, 0.5) == -1
    assert sign_law(spec_c, 0.5, 0.0) == 1
    assert sign_law(spec_a, 1.0, 0.0) == 0


def test_sweep_table(spec_a):
    frame = sweep(spec_a, 1.0, [-1.0, -0.5, 0.5, 1.0])
    assert list(frame.columns) == ["c", "p_l", "q_at_pl", "termination"]
    assert list(frame["termination"]) == ["HitQAxis", "HitQAxis", "HitPAxis", "HitPAxis"]
    assert frame["p_l"].is_monotonic_increasing
