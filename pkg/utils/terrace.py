"""
Propagating terrace assembly.

Starting from the platform 1, each round selects the critical speed c* of the
uppermost remaining platform and then chains as many fronts as possible at that
same speed: while the trajectory from the current platform touches the p-axis
on a stable state, that state becomes the next platform. The round ends when the
chain reaches 0, or when a trajectory crosses the q-axis, in which case the next
round searches a strictly faster c* from the last platform.
"""

from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Tuple

from .errors import SnapFailure, SpeedOrderViolation
from .logging_config import get_logger
from .phase_plane import Termination, Trajectory, solve_trajectory
from .reaction import ReactionSpec
from .run_config import Tolerances
from .speed_solver import find_bracket, find_cstar, snap_platform

logger = get_logger(__name__)


@dataclass(frozen=True, eq=False)
class Front:
    """One traveling wave of the terrace, from `upper` down to `lower`."""

    upper: float
    lower: float
    speed: float
    trajectory: Trajectory


@dataclass(frozen=True, eq=False)
class Terrace:
    fronts: Tuple[Front, ...]
    platforms: Tuple[float, ...]

    @property
    def speeds(self) -> Tuple[float, ...]:
        return tuple(front.speed for front in self.fronts)

    def __len__(self) -> int:
        return len(self.fronts)


class ChainEnd(str, Enum):
    REACHED_ZERO = "ReachedZero"
    NEXT_SEARCH = "NextSearchFrom"


@dataclass(frozen=True)
class ChainResult:
    fronts: Tuple[Front, ...]
    rest: ChainEnd
    next_platform: Optional[float] = None


def _platform_reached(spec: ReactionSpec, trajectory: Trajectory, tols: Tolerances) -> Optional[float]:
    if trajectory.termination is Termination.HIT_Q_AXIS:
        return None
    return snap_platform(spec, trajectory.p_l, tols.tol_snap)


def chain_at_speed(
    spec: ReactionSpec,
    p_start: float,
    c: float,
    tols: Tolerances,
    first_trajectory: Optional[Trajectory] = None,
) -> ChainResult:
    """
    Fronts with the common speed c, descending from p_start.

    A trajectory crossing the q-axis is retried once at c + 2 tol_c (the upper
    edge of the speed's error bar) before the chain is declared finished; a
    platform found that way is still recorded with speed c.

    Args:
        spec: Validated reaction
        p_start: Stable platform to start from
        c: Common speed
        tols: Solver tolerances
        first_trajectory: Trajectory from p_start at c, when already solved

    Returns:
        ChainResult with the fronts and either ReachedZero or NextSearchFrom(platform)

    Raises:
        SnapFailure: If a trajectory touches the p-axis away from every stable state
    """
    fronts: List[Front] = []
    platform = p_start
    trajectory = first_trajectory or solve_trajectory(spec, platform, c, tols.tol_ode)

    while True:
        lower = _platform_reached(spec, trajectory, tols)
        if lower is None:
            retry = solve_trajectory(spec, platform, c + 2.0 * tols.tol_c, tols.tol_ode)
            try:
                lower = _platform_reached(spec, retry, tols)
            except SnapFailure:
                lower = None
            if lower is not None:
                logger.debug(f"Platform {lower} reached from {platform} within the speed error bar")
                trajectory = retry

        if lower is None:
            if not fronts:
                raise SnapFailure(trajectory.p_l, platform, tols.tol_snap)
            logger.debug(f"Chain at c={c:.17g} stops at {platform}: trajectory crosses the q-axis")
            return ChainResult(tuple(fronts), ChainEnd.NEXT_SEARCH, platform)

        fronts.append(Front(upper=platform, lower=lower, speed=c, trajectory=trajectory))
        logger.debug(f"Front {platform} -> {lower} at c={c:.17g}")

        if lower == 0.0:
            return ChainResult(tuple(fronts), ChainEnd.REACHED_ZERO)

        platform = lower
        trajectory = solve_trajectory(spec, platform, c, tols.tol_ode)


def build_terrace(spec: ReactionSpec, tols: Optional[Tolerances] = None, bracket_padding: float = 0.0) -> Terrace:
    """
    Assemble the propagating terrace connecting 1 to 0.

    Args:
        spec: Validated reaction
        tols: Solver tolerances
        bracket_padding: Widen every speed bracket by this much on both sides

    Returns:
        Terrace with strictly decreasing platforms and nondecreasing speeds

    Raises:
        SpeedOrderViolation: If a new round is not strictly faster, or the
            number of rounds exceeds the number of stable states
        SnapFailure: Propagated from the speed solver or the chain
    """
    tols = tols or Tolerances()
    fronts: List[Front] = []
    round_speeds: List[float] = []
    platform = 1.0

    for _ in range(len(spec.stable_values)):
        bracket = find_bracket(spec, platform, tols.tol_ode, bracket_padding)
        critical = find_cstar(spec, platform, tols.tol_c, tols.tol_ode, tols.tol_snap, bracket)

        if round_speeds and critical.c_star <= round_speeds[-1] + tols.tol_c:
            raise SpeedOrderViolation(
                f"c*={critical.c_star:.17g} from {platform} is not faster than the previous "
                f"round's {round_speeds[-1]:.17g}"
            )
        round_speeds.append(critical.c_star)

        chain = chain_at_speed(spec, platform, critical.c_star, tols, critical.trajectory)
        fronts.extend(chain.fronts)

        if chain.rest is ChainEnd.REACHED_ZERO:
            terrace = Terrace(
                fronts=tuple(fronts),
                platforms=(1.0,) + tuple(front.lower for front in fronts),
            )
            _check_terrace(terrace)
            logger.info(
                f"Terrace built: J={len(terrace)}, platforms={list(terrace.platforms)}, "
                f"speeds={[f'{c:.6g}' for c in terrace.speeds]}"
            )
            return terrace

        if chain.next_platform == platform:
            raise SpeedOrderViolation(f"round from {platform} produced no front")
        platform = chain.next_platform

    raise SpeedOrderViolation(f"no terrace after {len(spec.stable_values)} rounds")


def _check_terrace(terrace: Terrace) -> None:
    platforms = terrace.platforms
    if platforms[0] != 1.0 or platforms[-1] != 0.0:
        raise SpeedOrderViolation(f"platforms must run from 1 to 0: {list(platforms)}")
    if any(a <= b for a, b in zip(platforms, platforms[1:])):
        raise SpeedOrderViolation(f"platforms must strictly decrease: {list(platforms)}")
    for upper, lower in zip(terrace.fronts, terrace.fronts[1:]):
        if upper.lower != lower.upper:
            raise SpeedOrderViolation(f"fronts {upper.upper}->{upper.lower} and {lower.upper}->{lower.lower} do not share a platform")
        if lower.speed < upper.speed:
            raise SpeedOrderViolation(f"speeds must be nondecreasing: {list(terrace.speeds)}")
