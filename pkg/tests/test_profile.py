import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import IntegrationWarning

from utils.errors import ProfileError
from utils.profile import (
    TerraceFunction,
    default_shifts,
    front_width,
    make_terrace_function,
    profile_frame,
    profile_residual,
    reconstruct_profile,
    snapshot_frame,
    terrace_eval,
    z_of_p,
)
from utils.run_config import Tolerances

WIDTH_TOL = 1e-6


@pytest.fixture(scope="module")
def profile_a(terrace_a):
    return reconstruct_profile(terrace_a.fronts[0])


@pytest.fixture(scope="module")
def tf_b(terrace_b):
    return make_terrace_function(terrace_b, gap=1.0, n_samples=101)


def test_bistable_width(terrace_a, profile_a):
    assert front_width(terrace_a.fronts[0]) == pytest.approx(math.pi / 2, abs=WIDTH_TOL)
    assert profile_a.width == pytest.approx(math.pi / 2, abs=WIDTH_TOL)


def test_bistable_profile_closed_form(profile_a):
    z = np.linspace(0.0, math.pi / 2, 25)
    assert np.allclose(profile_a(z), 0.5 + 0.5 * np.cos(2.0 * z), atol=1e-3)


def test_profile_is_monotone_and_anchored(profile_a):
    assert profile_a.phi[0] == 1.0 and profile_a.phi[-1] == 0.0
    assert profile_a.z[0] == 0.0
    assert np.all(np.diff(profile_a.z) > 0.0)
    assert np.all(np.diff(profile_a.phi) < 0.0)

    assert profile_a(-1.0) == 1.0
    assert profile_a(profile_a.width + 1.0) == 0.0
    assert isinstance(profile_a(0.3), float)


@pytest.mark.parametrize("which", ["a", "b", "c"])
def test_profiles_solve_the_wave_equation(request, which):
    spec = request.getfixturevalue(f"spec_{which}")
    terrace = request.getfixturevalue(f"terrace_{which}")
    for front in terrace.fronts:
        profile = reconstruct_profile(front)
        assert profile_residual(spec, profile) <= Tolerances().tol_profile


def test_residual_at_kink_of_reaction(spec_c, terrace_c):
    # f jumps in slope at 3/4; a node sits exactly there
    profile = reconstruct_profile(terrace_c.fronts[0])
    assert np.any(profile.phi == 0.75)
    assert profile_residual(spec_c, profile, margin=0.4) <= Tolerances().tol_profile


def test_z_of_p(terrace_a):
    front = terrace_a.fronts[0]
    assert z_of_p(front, 1.0) == 0.0
    assert z_of_p(front, 0.5) == pytest.approx(math.pi / 4, abs=WIDTH_TOL)
    with pytest.raises(ProfileError):
        z_of_p(front, 1.5)


def test_tristable_widths(tf_b):
    for profile in tf_b.profiles:
        assert profile.width == pytest.approx(math.pi / 4, abs=WIDTH_TOL)


def test_mirrored_fronts_have_equal_widths(terrace_c):
    # f(1 - p) = -f(p): the lower front is the upper one reflected
    upper, lower = terrace_c.fronts
    assert upper.speed == pytest.approx(-lower.speed, abs=1e-7)
    assert front_width(upper) == pytest.approx(front_width(lower), abs=WIDTH_TOL)


def test_coarse_profiles_integrate_cleanly(terrace_c):
    with warnings.catch_warnings():
        warnings.simplefilter("error", IntegrationWarning)
        tf = make_terrace_function(terrace_c, gap=1.0, n_samples=11)

    for front, profile in zip(terrace_c.fronts, tf.profiles):
        assert profile.width == pytest.approx(front_width(front), abs=WIDTH_TOL)


def test_profile_table(profile_a):
    frame = profile_frame(profile_a)
    assert list(frame.columns) == ["z", "phi"]
    assert len(frame) == 401


def test_sample_count_is_checked(terrace_a):
    with pytest.raises(ProfileError):
        reconstruct_profile(terrace_a.fronts[0], n_samples=1)


def test_default_shifts(terrace_b):
    assert default_shifts(terrace_b, 1.0, widths=[2.0, 3.0]) == [0.0, 3.0]
    with pytest.raises(ProfileError):
        default_shifts(terrace_b, 0.0, widths=[2.0, 3.0])


def test_shift_count_is_checked(terrace_b):
    with pytest.raises(ProfileError):
        make_terrace_function(terrace_b, shifts=[0.0], n_samples=11)


def test_terrace_function_platforms(tf_b):
    assert terrace_eval(tf_b, 0.0, -50.0) == 1.0
    assert terrace_eval(tf_b, 0.0, 50.0) == 0.0

    (a0, a1), (b0, b1) = tf_b.supports(0.0)
    assert a1 + 1.0 == pytest.approx(b0)
    middle = 0.5 * (a1 + b0)
    assert terrace_eval(tf_b, 0.0, middle) == 0.5


def test_snapshot_table(tf_b):
    x = np.linspace(-2.0, 4.0, 61)
    frame = snapshot_frame(tf_b, 0.0, x)
    assert list(frame.columns) == ["x", "u"]
    assert frame["u"].is_monotonic_decreasing


@pytest.fixture(scope="module")
def tf_c(terrace_c):
    return make_terrace_function(terrace_c, gap=1.0, shifts=[0.0, 2.5], n_samples=11)


@given(t=st.floats(0.0, 2.0), dt=st.floats(0.0, 2.0), x=st.floats(-3.0, 5.0))
def test_terrace_function_translates_each_front(terrace_c, tf_c, t, dt, x):
    tf = tf_c
    moved = TerraceFunction(
        terrace=tf.terrace,
        shifts=tuple(xi + front.speed * dt for xi, front in zip(tf.shifts, terrace_c.fronts)),
        profiles=tf.profiles,
    )
    assert terrace_eval(tf, t + dt, x) == pytest.approx(terrace_eval(moved, t, x), abs=1e-9)
