"""
Phase-plane trajectories q(p) of the traveling-wave equation.

A wave phi(x - ct) with p = phi, q = phi' satisfies dq/dp = -c - f(p)/q. The solver
integrates the regular equation for w = q^2,

    dw/dp = 2c sqrt(w) - 2 f(p),    q = -sqrt(w),

downward from the stable state p_u (where q = 0), restarting at every breakpoint
of f and stopping when w reaches 0 (the trajectory touches the p-axis) or when
p reaches 0 (it crosses the q-axis).
"""

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Optional, Tuple

import numpy as np
import pandas as pd
from numpy.polynomial import polynomial as P
from scipy.integrate import solve_ivp

from .errors import EpsilonTooLarge, EventLocalizationFailure, NotStable
from .logging_config import get_logger
from .reaction import ReactionSpec, Segment, SteadyState

logger = get_logger(__name__)

DEFAULT_TOL_ODE = 1e-10
DEFAULT_EPSILON = 1e-6
# The integrator runs this much tighter than tol_ode so that the global error
# stays within the sample and energy-identity bounds
INTEGRATOR_SAFETY = 0.1

INITIAL_SAMPLES = 257
MAX_SAMPLES = 1_000_000
MAX_REFINE_ROUNDS = 200
# Linear interpolation between samples must stay within INTERPOLATION_FACTOR * tol_ode;
# refinement aims at half of it since it only checks midpoints
INTERPOLATION_FACTOR = 10.0
GAUSS_NODES, GAUSS_WEIGHTS = np.polynomial.legendre.leggauss(8)

# w counts as zero when below tol_ode^2, floored at the round-off of w itself
ROUNDOFF_FACTOR = 1024.0
# A zero of w found where f > 0 is accepted only this close (times sqrt(tol_ode))
# above an unstable state
UNSTABLE_WINDOW_FACTOR = 10.0


class Termination(str, Enum):
    HIT_P_AXIS = "HitPAxis"
    HIT_Q_AXIS = "HitQAxis"
    DEGENERATE = "Degenerate"


@dataclass(frozen=True)
class _Seed:
    """Asymptotic expansion of w near the singular start (p_u, 0)."""

    p_u: float
    c: float
    f_minus: float
    segment: Segment

    def w(self, p):
        s = self.p_u - np.asarray(p, dtype=float)
        quadrature = 2.0 * (self.segment.antiderivative(self.p_u) - self.segment.antiderivative(p))
        return (
            quadrature
            - (4.0 / 3.0) * self.c * math.sqrt(2.0 * self.f_minus) * s**1.5
            + (2.0 / 3.0) * self.c**2 * s**2
        )


@dataclass(frozen=True)
class _Piece:
    p_top: float
    p_bottom: float
    solution: Any  # scipy OdeSolution for w(p)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """
    Solution q(p) on (p_l, p_u) with its termination kind.

    `p` and `q` are dense samples with p strictly decreasing from p_u to p_l;
    `q_at` evaluates the underlying continuous solution anywhere in [p_l, p_u].
    """

    p_u: float
    c: float
    p_l: float
    q_at_pl: float
    termination: Termination
    tol_ode: float
    f_start: float  # f(p_u-)
    f_end: float  # f just above p_l
    p: np.ndarray = field(repr=False)
    q: np.ndarray = field(repr=False)
    _seed: _Seed = field(repr=False)
    _pieces: Tuple[_Piece, ...] = field(repr=False)

    @property
    def samples(self):
        return list(zip(self.p.tolist(), self.q.tolist()))

    def w_at(self, p):
        """w = q^2 at p (scalar or array); NaN outside [p_l, p_u]."""
        p_in = np.asarray(p, dtype=float)
        p = np.atleast_1d(p_in)
        w = np.full(p.shape, np.nan)

        mask = (p >= self._pieces[0].p_top) & (p <= self.p_u)
        w[mask] = self._seed.w(p[mask])
        for piece in self._pieces:
            mask = np.isnan(w) & (p < piece.p_top) & (p >= piece.p_bottom)
            if mask.any():
                w[mask] = piece.solution(p[mask])[0]

        # Gap between a zero of w located just above an unstable state and
        # the state itself
        mask = np.isnan(w) & (p >= self.p_l) & (p < self._pieces[-1].p_bottom)
        w[mask] = 0.0

        if p_in.ndim == 0:
            return float(w[0])
        return w.reshape(p_in.shape)

    def q_at(self, p):
        """q(p) for p in [p_l, p_u]; NaN outside."""
        w = self.w_at(p)
        if np.ndim(w) == 0:
            return -math.sqrt(w) if w > 0.0 else (0.0 if w == w else float("nan"))
        return -np.sqrt(np.maximum(w, 0.0))

    def root_integral(self, a, b) -> np.ndarray:
        """
        int_a^b sqrt(w) = int_a^b |q| over each interval [a_k, b_k].

        Gauss-Legendre on the dense solution; an interval touching p_u or p_l is
        integrated in sigma = sqrt(|s - end|), where the integrand is smooth.
        """
        a = np.atleast_1d(np.asarray(a, dtype=float))
        b = np.atleast_1d(np.asarray(b, dtype=float))
        result = np.empty(a.shape)

        at_top = b >= self.p_u
        at_bottom = ~at_top & (a <= self.p_l)
        plain = ~(at_top | at_bottom)

        if plain.any():
            mid, half = 0.5 * (a[plain] + b[plain]), 0.5 * (b[plain] - a[plain])
            s = mid[:, None] + half[:, None] * GAUSS_NODES
            result[plain] = half * (np.sqrt(np.maximum(self.w_at(s), 0.0)) @ GAUSS_WEIGHTS)

        for mask, end, direction, span in (
            (at_top, self.p_u, -1.0, self.p_u - a),
            (at_bottom, self.p_l, 1.0, b - self.p_l),
        ):
            if mask.any():
                half = 0.5 * np.sqrt(np.maximum(span[mask], 0.0))
                sigma = half[:, None] * (GAUSS_NODES + 1.0)
                w = self.w_at(end + direction * sigma**2)
                result[mask] = half * ((2.0 * sigma * np.sqrt(np.maximum(w, 0.0))) @ GAUSS_WEIGHTS)
        return result


def _require_stable(spec: ReactionSpec, p_u: float) -> SteadyState:
    state = spec.find_state(p_u)
    if state is None or not state.is_stable:
        raise NotStable(p_u)
    if state.value == 0.0:
        raise NotStable(p_u, "no platform below 0")
    return state


def seed_asymptotic(spec: ReactionSpec, p_u: float, c: float, epsilon: float) -> Tuple[float, float]:
    """
    First integration node (p_u - epsilon, q_epsilon) off the singular start.

    Uses w(s) = 2 F(s) - (4/3) c sqrt(2 f_-) s^(3/2) + (2/3) c^2 s^2 with
    s = p_u - p and F the exact integral of f over [p, p_u]; the remainder is
    O(s^(5/2)), and the expansion is exact for c = 0.

    Args:
        spec: Validated reaction
        p_u: Stable steady state the trajectory starts from
        c: Wave speed
        epsilon: Offset below p_u; 0 returns (p_u, 0)

    Raises:
        NotStable: If p_u is not a stable state above 0
        EpsilonTooLarge: If a breakpoint lies in (p_u - epsilon, p_u) or q^2 <= 0
    """
    state = _require_stable(spec, p_u)
    if epsilon == 0:
        return state.value, 0.0
    if epsilon < 0:
        raise EpsilonTooLarge(f"epsilon must be >= 0, got {epsilon}")

    gap = state.value - spec.breakpoints_below(state.value)[0]
    if epsilon >= gap:
        raise EpsilonTooLarge(
            f"epsilon={epsilon:.3g} reaches the next breakpoint {gap:.3g} below p_u={p_u:.17g}"
        )

    seed = _Seed(state.value, c, state.f_left, spec.segment_below(state.value))
    w = float(seed.w(state.value - epsilon))
    if w <= 0.0:
        raise EpsilonTooLarge(f"seed expansion gives q^2 = {w:.3g} <= 0 at epsilon={epsilon:.3g}")
    return state.value - epsilon, -math.sqrt(w)


def _integrate_piece(segment: Segment, c: float, p_top: float, p_bottom: float, w0: float, tol_ode: float):
    coefficients = np.asarray(segment.poly)

    def rhs(p, y):
        return [2.0 * c * math.sqrt(max(y[0], 0.0)) - 2.0 * P.polyval(p, coefficients)]

    def touches_p_axis(p, y):
        return y[0]

    touches_p_axis.terminal = True
    touches_p_axis.direction = -1

    solution = solve_ivp(
        rhs,
        (p_top, p_bottom),
        [w0],
        method="DOP853",
        rtol=INTEGRATOR_SAFETY * tol_ode,
        atol=INTEGRATOR_SAFETY * tol_ode,
        events=touches_p_axis,
        dense_output=True,
    )
    if solution.status < 0:
        raise EventLocalizationFailure((p_bottom, p_top), solution.message)
    return solution


def _classify_event(
    spec: ReactionSpec, segment: Segment, p_event: float, p_before: float, tol_ode: float
) -> Tuple[Termination, float]:
    if p_event <= tol_ode:
        return Termination.DEGENERATE, 0.0

    if float(segment(p_event)) <= 0.0:
        return Termination.HIT_P_AXIS, p_event

    # A trajectory cannot touch the p-axis where f > 0; this is the tangential
    # approach to an unstable state located a little early.
    window = UNSTABLE_WINDOW_FACTOR * math.sqrt(tol_ode)
    for theta in spec.unstable_values:
        if theta <= p_event <= theta + window:
            logger.debug(f"Zero of q^2 at {p_event:.17g} attributed to unstable state {theta}")
            return Termination.HIT_P_AXIS, theta

    raise EventLocalizationFailure(
        (p_event, p_before), f"q^2 vanishes where f = {float(segment(p_event)):.3g} > 0"
    )


def solve_trajectory(
    spec: ReactionSpec,
    p_u: float,
    c: float,
    tol_ode: float = DEFAULT_TOL_ODE,
    with_samples: bool = True,
    epsilon: Optional[float] = None,
) -> Trajectory:
    """
    Solve dq/dp = -c - f(p)/q downward from (p_u, 0).

    Args:
        spec: Validated reaction
        p_u: Stable steady state the wave leaves from
        c: Wave speed
        tol_ode: Local error tolerance of the integrator
        with_samples: Fill `p`/`q` with dense samples (off for bisection)
        epsilon: Offset of the asymptotic seed; defaults to min(1e-6, half the gap below p_u)

    Returns:
        Trajectory with termination HitPAxis, HitQAxis or Degenerate

    Raises:
        NotStable: If p_u is not a stable state above 0
        EventLocalizationFailure: If a zero of q^2 lands where it cannot be
    """
    state = _require_stable(spec, p_u)
    p_u = state.value
    if epsilon is None:
        epsilon = min(DEFAULT_EPSILON, 0.5 * (p_u - spec.breakpoints_below(p_u)[0]))

    p, q0 = seed_asymptotic(spec, p_u, c, epsilon)
    seed = _Seed(p_u, c, state.f_left, spec.segment_below(p_u))
    w = w_peak = q0**2

    pieces = []
    termination = None
    for bottom in spec.breakpoints_below(p_u):
        segment = spec.segment_below(p)
        solution = _integrate_piece(segment, c, p, bottom, w, tol_ode)
        pieces.append(_Piece(p, float(solution.t[-1]), solution.sol))
        w_peak = max(w_peak, float(np.max(solution.y[0])))

        if solution.status == 1:
            p_event = float(solution.t_events[0][0])
            p_before = float(solution.t[-2]) if len(solution.t) > 1 else p
            termination, p_l = _classify_event(spec, segment, p_event, p_before, tol_ode)
            q_at_pl = 0.0
            f_end = float(spec.segment_above(p_l)(p_l))
            break

        w = max(float(solution.y[0, -1]), 0.0)
        p = bottom

        # Touching down on an intermediate stable state
        if bottom > 0.0 and w <= zero_level(tol_ode, w_peak) and spec.find_state(bottom).is_stable:
            termination, p_l, q_at_pl = Termination.HIT_P_AXIS, bottom, -math.sqrt(w)
            f_end = float(spec.segment_above(p_l)(p_l))
            break
        logger.debug(f"c={c:.17g}: crossed breakpoint {bottom} with q^2={w:.3e}")

    if termination is None:
        p_l = 0.0
        f_end = float(spec.segment_above(0.0)(0.0))
        termination = Termination.DEGENERATE if w <= zero_level(tol_ode, w_peak) else Termination.HIT_Q_AXIS
        q_at_pl = -math.sqrt(w)

    trajectory = Trajectory(
        p_u=p_u,
        c=c,
        p_l=p_l,
        q_at_pl=q_at_pl,
        termination=termination,
        tol_ode=tol_ode,
        f_start=state.f_left,
        f_end=f_end,
        p=np.empty(0),
        q=np.empty(0),
        _seed=seed,
        _pieces=tuple(pieces),
    )

    if with_samples:
        grid, values = _sample(trajectory, 0.5 * INTERPOLATION_FACTOR * tol_ode)
        object.__setattr__(trajectory, "p", grid)
        object.__setattr__(trajectory, "q", values)

    logger.debug(
        f"Trajectory p_u={p_u} c={c:.17g}: {termination.value} at p_l={p_l:.17g}, q={q_at_pl:.3e}"
    )
    return trajectory


def zero_level(tol_ode: float, w_peak: float = 1.0) -> float:
    """Largest w treated as q = 0: tol_ode^2, or the round-off of w when that is coarser."""
    return max(tol_ode**2, ROUNDOFF_FACTOR * np.finfo(float).eps * max(w_peak, 1.0))


def _sample(trajectory: Trajectory, target: float) -> Tuple[np.ndarray, np.ndarray]:
    """
    Samples on [p_l, p_u], refined until the linear interpolant is within `target`
    of q at every interval midpoint (or the interval cannot be split in floating
    point).
    """
    p = np.linspace(trajectory.p_u, trajectory.p_l, INITIAL_SAMPLES)
    q = trajectory.q_at(p)
    q[0], q[-1] = 0.0, trajectory.q_at_pl

    pending = np.ones(p.size - 1, dtype=bool)
    for _ in range(MAX_REFINE_ROUNDS):
        index = np.nonzero(pending)[0]
        mid = 0.5 * (p[index] + p[index + 1])
        q_mid = trajectory.q_at(mid)
        error = np.abs(q_mid - 0.5 * (q[index] + q[index + 1]))
        split = (error > target) & (mid < p[index]) & (mid > p[index + 1])
        if not split.any():
            break

        if p.size + np.count_nonzero(split) > MAX_SAMPLES:
            logger.warning(
                f"Trajectory p_u={trajectory.p_u} c={trajectory.c:.17g}: sample cap {MAX_SAMPLES} "
                f"reached, interpolation error up to {float(np.max(error)):.3e}"
            )
            break

        at = index[split]
        p = np.insert(p, at + 1, mid[split])
        q = np.insert(q, at + 1, q_mid[split])
        pending = np.zeros(p.size - 1, dtype=bool)
        left = at + np.arange(at.size)
        pending[left] = pending[left + 1] = True

    return p, q


def p_l_of_c(
    spec: ReactionSpec, p_u: float, c: float, tol_ode: float = DEFAULT_TOL_ODE
) -> Tuple[float, float, Termination]:
    """Endpoint data (p_l, q(p_l), termination) of the trajectory at speed c."""
    trajectory = solve_trajectory(spec, p_u, c, tol_ode, with_samples=False)
    return trajectory.p_l, trajectory.q_at_pl, trajectory.termination


def _f_integral(spec: ReactionSpec, p: np.ndarray, top: float) -> np.ndarray:
    """int_p^top f for every p in [0, top]."""
    total = np.zeros_like(p)
    for segment in spec.segments:
        hi = min(top, segment.hi)
        if hi <= segment.lo:
            continue
        lo = np.clip(p, segment.lo, hi)
        total += segment.antiderivative(hi) - segment.antiderivative(lo)
    return total


def energy_residual(spec: ReactionSpec, trajectory: Trajectory) -> float:
    """
    Max over samples of |q^2/2 - c int_p^{p_u} q - int_p^{p_u} f|.

    The q integral uses the dense solution between samples, the f integral is exact.
    """
    p, q = trajectory.p, trajectory.q
    q_integral = -np.concatenate(([0.0], np.cumsum(trajectory.root_integral(p[1:], p[:-1]))))
    residual = 0.5 * q**2 - trajectory.c * q_integral - _f_integral(spec, p, trajectory.p_u)
    return float(np.max(np.abs(residual)))


def trajectory_frame(trajectory: Trajectory) -> pd.DataFrame:
    """Samples as a table with header p,q (decreasing p)."""
    return pd.DataFrame({"p": trajectory.p, "q": trajectory.q})
