"""
Critical wave speed c* for a given upper platform.

c* = sup{c : the trajectory from p_u crosses the q-axis strictly below the origin}.
The crossing predicate is monotone in c (trajectories are ordered in c), so c* is
found by bisection between a lower bracket (doubling towards -inf) and an upper
bracket from the linear majorant f(p) <= K (p - theta) of the monostable piece
below p_u, for which c = 2 sqrt(K) is known to stop above the unstable state.
"""

import math
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np
import pandas as pd
from numpy.polynomial import polynomial as P

from .errors import BracketSearchExceeded, SnapFailure, SpeedError
from .logging_config import get_logger
from .phase_plane import DEFAULT_TOL_ODE, Termination, Trajectory, _require_stable, solve_trajectory
from .reaction import ReactionSpec, integral, next_unstable_below

logger = get_logger(__name__)

DEFAULT_TOL_C = 1e-8
MAX_BRACKET_ITER = 60


@dataclass(frozen=True)
class SpeedBracket:
    c_lo: float  # trajectory exits through the q-axis
    c_hi: float  # trajectory touches the p-axis
    p_u: float


@dataclass(frozen=True, eq=False)
class CriticalSpeed:
    c_star: float
    p_star: float
    trajectory: Trajectory
    tol_c: float
    bracket: SpeedBracket

    @property
    def error_bar(self) -> float:
        return self.bracket.c_hi - self.bracket.c_lo


def default_tol_snap(tol_ode: float) -> float:
    return max(1e3 * tol_ode, 1e-8)


def crosses_q_axis(spec: ReactionSpec, p_u: float, c: float, tol_ode: float = DEFAULT_TOL_ODE) -> bool:
    """The bisection predicate: HitQAxis. A degenerate touch at the origin counts as False."""
    trajectory = solve_trajectory(spec, p_u, c, tol_ode, with_samples=False)
    return trajectory.termination is Termination.HIT_Q_AXIS


def lower_bracket(spec: ReactionSpec, p_u: float, tol_ode: float = DEFAULT_TOL_ODE, max_iter: int = MAX_BRACKET_ITER) -> float:
    """
    Some c whose trajectory crosses the q-axis below the origin, trying
    c = 0, -1, -2, -4, ...

    Raises:
        BracketSearchExceeded: After max_iter candidates
    """
    c = 0.0
    for _ in range(max_iter):
        if crosses_q_axis(spec, p_u, c, tol_ode):
            logger.debug(f"Lower bracket from p_u={p_u}: c_lo={c}")
            return c
        c = -1.0 if c == 0.0 else 2.0 * c
    raise BracketSearchExceeded(p_u, max_iter, c)


def monostable_slope(spec: ReactionSpec, p_u: float) -> float:
    """
    K = sup over (theta, p_u) of f(p) / (p - theta), theta the unstable state
    right below p_u. f vanishes at theta, so the ratio is the polynomial
    quotient and its sup comes from endpoints and critical points.
    """
    _require_stable(spec, p_u)
    theta = next_unstable_below(spec, p_u)
    segment = spec.segment_below(p_u)

    quotient, _ = P.polydiv(np.asarray(segment.poly), np.array([-theta, 1.0]))
    candidates = [theta, p_u] + segment.real_roots(theta, p_u, P.polyder(quotient))
    return float(np.max(P.polyval(np.asarray(candidates), quotient)))


def upper_bracket(spec: ReactionSpec, p_u: float, tol_ode: float = DEFAULT_TOL_ODE, max_iter: int = MAX_BRACKET_ITER) -> float:
    """
    c_hi = 2 sqrt(K), checked to touch the p-axis; doubled while the check fails.

    Raises:
        BracketSearchExceeded: After max_iter doublings
    """
    slope = monostable_slope(spec, p_u)
    c = 2.0 * math.sqrt(slope)
    for _ in range(max_iter):
        if not crosses_q_axis(spec, p_u, c, tol_ode):
            logger.debug(f"Upper bracket from p_u={p_u}: K={slope:.17g}, c_hi={c:.17g}")
            return c
        logger.warning(f"c={c:.17g} = 2 sqrt(K) still crosses the q-axis from p_u={p_u}; doubling")
        c = 2.0 * c if c > 0 else 1.0
    raise BracketSearchExceeded(p_u, max_iter, c)


def snap_platform(spec: ReactionSpec, p_l: float, tol_snap: float) -> float:
    """
    Nearest stable steady state to p_l.

    Raises:
        SnapFailure: If it is farther than tol_snap
    """
    nearest = min(spec.stable_values, key=lambda theta: abs(theta - p_l))
    if abs(nearest - p_l) > tol_snap:
        raise SnapFailure(p_l, nearest, tol_snap)
    return nearest


def find_bracket(
    spec: ReactionSpec, p_u: float, tol_ode: float = DEFAULT_TOL_ODE, padding: float = 0.0
) -> SpeedBracket:
    """Lower and upper brackets, optionally widened by `padding` on each side."""
    c_lo = lower_bracket(spec, p_u, tol_ode) - padding
    c_hi = upper_bracket(spec, p_u, tol_ode) + padding
    return SpeedBracket(c_lo, c_hi, p_u)


def find_cstar(
    spec: ReactionSpec,
    p_u: float,
    tol_c: float = DEFAULT_TOL_C,
    tol_ode: float = DEFAULT_TOL_ODE,
    tol_snap: Optional[float] = None,
    bracket: Optional[SpeedBracket] = None,
) -> CriticalSpeed:
    """
    Bisect the crossing predicate down to a bracket narrower than tol_c.

    Args:
        spec: Validated reaction
        p_u: Upper platform (stable)
        tol_c: Final bracket width
        tol_ode: Integrator tolerance
        tol_snap: Snap window for the lower platform; default max(1e3 tol_ode, 1e-8)
        bracket: Starting bracket; computed when omitted

    Returns:
        CriticalSpeed with c_star the upper end of the final bracket and the
        trajectory solved there

    Raises:
        SpeedError: If a given bracket does not straddle c*
        SnapFailure: If the trajectory at c_star does not end on a stable state
    """
    tol_snap = tol_snap if tol_snap is not None else default_tol_snap(tol_ode)
    bracket = bracket or find_bracket(spec, p_u, tol_ode)
    c_lo, c_hi = bracket.c_lo, bracket.c_hi

    if not crosses_q_axis(spec, p_u, c_lo, tol_ode) or crosses_q_axis(spec, p_u, c_hi, tol_ode):
        raise SpeedError(f"bracket [{c_lo:.17g}, {c_hi:.17g}] does not straddle c* from p_u={p_u}")

    iterations = 0
    while c_hi - c_lo > tol_c:
        c_mid = 0.5 * (c_lo + c_hi)
        if crosses_q_axis(spec, p_u, c_mid, tol_ode):
            c_lo = c_mid
        else:
            c_hi = c_mid
        iterations += 1
        logger.debug(f"p_u={p_u} bisection {iterations}: [{c_lo:.17g}, {c_hi:.17g}]")

    trajectory = solve_trajectory(spec, p_u, c_hi, tol_ode)
    p_star = snap_platform(spec, trajectory.p_l, tol_snap)
    if p_star >= p_u:
        raise SnapFailure(trajectory.p_l, p_star, tol_snap)

    logger.info(
        f"c* from p_u={p_u}: {c_hi:.17g} (+0/-{c_hi - c_lo:.1e}) after {iterations} bisections, "
        f"platform {p_star}"
    )
    return CriticalSpeed(
        c_star=c_hi,
        p_star=p_star,
        trajectory=trajectory,
        tol_c=tol_c,
        bracket=SpeedBracket(c_lo, c_hi, p_u),
    )


def sign_law(spec: ReactionSpec, upper: float, lower: float) -> int:
    """Predicted sign of a single front's speed: sign of the integral of f over [lower, upper]."""
    return int(np.sign(integral(spec, lower, upper)))


def sweep(
    spec: ReactionSpec, p_u: float, speeds: Iterable[float], tol_ode: float = DEFAULT_TOL_ODE
) -> pd.DataFrame:
    """Endpoint data of the trajectories from p_u for each speed, one row per speed."""
    rows = []
    for c in speeds:
        trajectory = solve_trajectory(spec, p_u, float(c), tol_ode, with_samples=False)
        rows.append(
            {
                "c": float(c),
                "p_l": trajectory.p_l,
                "q_at_pl": trajectory.q_at_pl,
                "termination": trajectory.termination.value,
            }
        )
    logger.info(f"Swept {len(rows)} speeds from p_u={p_u}")
    return pd.DataFrame(rows, columns=["c", "p_l", "q_at_pl", "termination"])
