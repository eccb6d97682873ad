"""
Finite-difference simulator for u_t = u_xx + f(u) on a bounded interval.

Explicit Euler in time, centered second differences in space, Dirichlet ends.
f is taken as 0 at grid values equal to a stable state. A node whose update
would jump across a stable state theta is held at theta when the discrete
Laplacian L satisfies -f(theta-) <= L <= -f(theta+), i.e. when neither side's
reaction can pull it away; this keeps platforms exact instead of chattering
around them.

The simulator is an independent check on the phase-plane speeds and profiles.
"""

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy.stats import linregress

from .errors import (
    BlowUp,
    GridMismatch,
    LevelNotCrossed,
    MultipleCrossings,
    SimulationError,
    StabilityViolation,
)
from .logging_config import get_logger
from .profile import TerraceFunction, terrace_eval
from .reaction import ReactionSpec, eval_array

logger = get_logger(__name__)

BLOW_UP_BOUND = 10.0
DEFAULT_CFL_SAFETY = 0.4
BOUNDARY_MARGIN = 0.1


@dataclass(frozen=True)
class StepIC:
    location: float = 0.0
    upper: float = 1.0
    lower: float = 0.0


@dataclass(frozen=True, eq=False)
class TerraceIC:
    tf: TerraceFunction


@dataclass(frozen=True, eq=False)
class TableIC:
    x: np.ndarray
    u: np.ndarray

    @classmethod
    def from_frame(cls, frame: pd.DataFrame) -> "TableIC":
        frame = frame.sort_values("x")
        return cls(frame["x"].to_numpy(dtype=float), frame["u"].to_numpy(dtype=float))


InitialCondition = Union[StepIC, TerraceIC, TableIC]


@dataclass(frozen=True)
class Dirichlet:
    left_value: float = 1.0
    right_value: float = 0.0


@dataclass(frozen=True, eq=False)
class PdeConfig:
    x_min: float = -20.0
    x_max: float = 20.0
    dx: float = 0.02
    dt: Optional[float] = None
    t_final: float = 2.0
    cfl_safety: float = DEFAULT_CFL_SAFETY
    ic: InitialCondition = field(default_factory=StepIC)
    boundary: Dirichlet = field(default_factory=Dirichlet)
    snapshot_interval: float = 0.1
    track_levels: Optional[Tuple[float, ...]] = None

    @property
    def grid(self) -> np.ndarray:
        n = int(round((self.x_max - self.x_min) / self.dx)) + 1
        return self.x_min + self.dx * np.arange(n)

    @property
    def stable_dt(self) -> float:
        return self.cfl_safety * self.dx**2 / 2.0

    @property
    def time_step(self) -> float:
        return self.dt if self.dt is not None else self.stable_dt

    @property
    def n_steps(self) -> int:
        return max(1, math.ceil(self.t_final / self.time_step - 1e-9))

    @property
    def effective_dt(self) -> float:
        """time_step shrunk so that a whole number of steps lands on t_final."""
        return self.t_final / self.n_steps


@dataclass(frozen=True, eq=False)
class PdeResult:
    config: PdeConfig
    x: np.ndarray = field(repr=False)
    times: np.ndarray = field(repr=False)
    snapshots: np.ndarray = field(repr=False)  # shape (len(times), len(x))
    front_tracks: Dict[float, pd.DataFrame] = field(repr=False, default_factory=dict)

    def snapshot_frame(self, k: int) -> pd.DataFrame:
        """Snapshot k as a table with header x,u."""
        return pd.DataFrame({"x": self.x, "u": self.snapshots[k]})

    def overshoot(self) -> float:
        """Largest excursion of u outside [0, 1]."""
        return float(max(0.0, -self.snapshots.min(), self.snapshots.max() - 1.0))


def validate_pde_config(config: PdeConfig) -> None:
    """
    Raises:
        SimulationError: For an empty domain or nonpositive steps
        StabilityViolation: If dt exceeds cfl_safety * dx^2 / 2
    """
    if not config.x_max > config.x_min:
        raise SimulationError(f"empty domain [{config.x_min}, {config.x_max}]")
    if not config.dx > 0 or not config.t_final > 0:
        raise SimulationError(f"dx and t_final must be > 0 (dx={config.dx}, t_final={config.t_final})")
    if not 0 < config.cfl_safety <= 1:
        raise SimulationError(f"cfl_safety must be in (0, 1], got {config.cfl_safety}")
    if config.dt is not None and not 0 < config.dt <= config.stable_dt:
        raise StabilityViolation(
            f"dt={config.dt:.3g} exceeds cfl_safety * dx^2 / 2 = {config.stable_dt:.3g}"
        )


def default_track_levels(spec: ReactionSpec) -> Tuple[float, ...]:
    """Midpoints between consecutive stable states."""
    stable = spec.stable_values
    return tuple(0.5 * (a + b) for a, b in zip(stable, stable[1:]))


def initial_values(config: PdeConfig, x: np.ndarray) -> np.ndarray:
    ic = config.ic
    if isinstance(ic, StepIC):
        return np.where(x < ic.location, ic.upper, ic.lower).astype(float)
    if isinstance(ic, TerraceIC):
        return np.asarray(terrace_eval(ic.tf, 0.0, x), dtype=float)
    if isinstance(ic, TableIC):
        return np.interp(x, ic.x, ic.u)
    raise SimulationError(f"Unsupported initial condition: {type(ic).__name__}")


def front_positions(x: np.ndarray, u: np.ndarray, level: float) -> List[float]:
    """Level crossings of u, linearly interpolated between grid nodes."""
    above = u > level
    idx = np.nonzero(above[:-1] != above[1:])[0]
    return [float(x[i] + (u[i] - level) / (u[i] - u[i + 1]) * (x[i + 1] - x[i])) for i in idx]


def _tracks(x: np.ndarray, times: np.ndarray, snapshots: np.ndarray, levels: Sequence[float]) -> Dict[float, pd.DataFrame]:
    tracks = {}
    for level in levels:
        rows = []
        for t, u in zip(times, snapshots):
            crossings = front_positions(x, u, level)
            rows.append({"t": float(t), "x_level": crossings[0] if len(crossings) == 1 else math.nan})
        tracks[level] = pd.DataFrame(rows, columns=["t", "x_level"])
    return tracks


def simulate(spec: ReactionSpec, config: PdeConfig) -> PdeResult:
    """
    Run the explicit scheme from config.ic up to config.t_final.

    Args:
        spec: Validated reaction
        config: Grid, time stepping, initial and boundary data

    Returns:
        PdeResult with snapshots every snapshot_interval and level tracks

    Raises:
        StabilityViolation: If dt is above the explicit stability limit
        BlowUp: If |u| exceeds BLOW_UP_BOUND or turns non-finite
    """
    validate_pde_config(config)

    x = config.grid
    dx = config.dx
    n_steps = config.n_steps
    dt = config.effective_dt
    every = max(1, int(round(config.snapshot_interval / dt)))

    u = initial_values(config, x)
    u[0], u[-1] = config.boundary.left_value, config.boundary.right_value

    jumps = [(s.value, s.f_left, s.f_right) for s in spec.steady_states if s.is_stable]

    logger.info(
        f"Simulating on [{config.x_min}, {config.x_max}] with {x.size} nodes, dt={dt:.3g}, "
        f"{n_steps} steps to t={config.t_final}"
    )

    times = [0.0]
    snapshots = [u.copy()]
    for n in range(1, n_steps + 1):
        inner = u[1:-1]
        laplacian = (u[:-2] - 2.0 * inner + u[2:]) / dx**2
        updated = inner + dt * (laplacian + eval_array(spec, inner))

        for theta, f_left, f_right in jumps:
            crossed = (inner - theta) * (updated - theta) <= 0.0
            if crossed.any():
                held = crossed & (laplacian >= -f_left) & (laplacian <= -f_right)
                updated[held] = theta

        u[1:-1] = updated

        if n % every == 0 or n == n_steps:
            peak = np.max(np.abs(u))
            if not np.isfinite(peak) or peak > BLOW_UP_BOUND:
                raise BlowUp(f"|u| = {peak} at t = {n * dt:.6g}")
            times.append(n * dt)
            snapshots.append(u.copy())

    times_array = np.asarray(times)
    snapshot_array = np.vstack(snapshots)
    levels = config.track_levels if config.track_levels is not None else default_track_levels(spec)
    result = PdeResult(
        config=config,
        x=x,
        times=times_array,
        snapshots=snapshot_array,
        front_tracks=_tracks(x, times_array, snapshot_array, levels),
    )

    _warn_on_sanity(result)
    logger.info(f"Simulation finished: {len(times)} snapshots, overshoot {result.overshoot():.2e}")
    return result


def _warn_on_sanity(result: PdeResult) -> None:
    config = result.config
    if result.overshoot() > 10.0 * config.dx:
        logger.warning(f"u leaves [0, 1] by {result.overshoot():.3g} > 10 dx")

    margin = BOUNDARY_MARGIN * (config.x_max - config.x_min)
    for level, track in result.front_tracks.items():
        positions = track["x_level"].dropna()
        if positions.empty:
            continue
        if positions.min() < config.x_min + margin or positions.max() > config.x_max - margin:
            logger.warning(f"Level {level} front comes within 10% of the domain boundary")


def measure_front_speed(result: PdeResult, level: float, t_window: Tuple[float, float]) -> Tuple[float, float]:
    """
    Least-squares slope of the level crossing position over t_window.

    Returns:
        (speed, r^2)

    Raises:
        LevelNotCrossed: If a snapshot in the window has no crossing
        MultipleCrossings: If a snapshot in the window has several
    """
    t0, t1 = t_window
    selected = np.nonzero((result.times >= t0) & (result.times <= t1))[0]
    if selected.size < 2:
        raise LevelNotCrossed(f"fewer than two snapshots in window [{t0}, {t1}]")

    positions = []
    for k in selected:
        crossings = front_positions(result.x, result.snapshots[k], level)
        if not crossings:
            raise LevelNotCrossed(f"level {level} not crossed at t = {result.times[k]:.6g}")
        if len(crossings) > 1:
            raise MultipleCrossings(f"level {level} crossed {len(crossings)} times at t = {result.times[k]:.6g}")
        positions.append(crossings[0])

    fit = linregress(result.times[selected], positions)
    logger.debug(f"Level {level}: speed {fit.slope:.6g} over {selected.size} snapshots (r={fit.rvalue:.6f})")
    return float(fit.slope), float(fit.rvalue**2)


def residual_vs_terrace(result: PdeResult, tf: TerraceFunction) -> float:
    """
    max over snapshots of sup_x |u(t, x) - Phi(t, x; xi)|.

    Raises:
        GridMismatch: If the run did not start from this terrace function
    """
    ic = result.config.ic
    if not isinstance(ic, TerraceIC) or ic.tf is not tf:
        raise GridMismatch("the simulation did not start from this terrace function")
    if result.snapshots.shape[1] != result.x.size:
        raise GridMismatch(f"snapshots have {result.snapshots.shape[1]} nodes, grid has {result.x.size}")

    residual = 0.0
    for t, u in zip(result.times, result.snapshots):
        residual = max(residual, float(np.max(np.abs(u - terrace_eval(tf, t, result.x)))))
    return residual


def arrival_time(
    result: PdeResult, x_range: Tuple[float, float], platform: float = 1.0, tol: float = 1e-6
) -> Optional[float]:
    """First snapshot time at which |u - platform| <= tol on all of x_range, or None."""
    mask = (result.x >= x_range[0]) & (result.x <= x_range[1])
    for t, u in zip(result.times, result.snapshots):
        if np.all(np.abs(u[mask] - platform) <= tol):
            return float(t)
    return None


def track_frame(result: PdeResult, level: float) -> pd.DataFrame:
    """Front track for a level, header t,x_level."""
    if level in result.front_tracks:
        return result.front_tracks[level]
    return _tracks(result.x, result.times, result.snapshots, [level])[level]
