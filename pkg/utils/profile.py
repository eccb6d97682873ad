"""
Compact wave profiles and terrace functions.

A front's profile phi(z) is recovered from its trajectory through
z(p) = int_p^upper ds / (-q(s)). Near both platforms q behaves like
-sqrt(2 |f| |s - theta|), so the integrand has an integrable 1/sqrt singularity;
the end zones are integrated after the substitution s = theta -/+ sigma^2, which
leaves a bounded integrand and a finite support width.
"""

import math
import warnings
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.integrate import IntegrationWarning, quad
from scipy.interpolate import PchipInterpolator

from .errors import ProfileError, QuadratureFailure
from .logging_config import get_logger
from .reaction import ReactionSpec, evaluate
from .terrace import Front, Terrace

logger = get_logger(__name__)

DEFAULT_GAP = 1.0
DEFAULT_SAMPLES = 401
END_ZONE = 0.25  # fraction of [p_l, upper] handled by substitution at each end
QUAD_EPSABS = 1e-12
QUAD_EPSREL = 1e-11
QUAD_LIMIT = 1000


@dataclass(frozen=True, eq=False)
class Profile:
    """
    Monotone table of a front profile: phi(0) = upper, phi(width) = lower.
    `dphi` holds q(phi) at the nodes.
    """

    front: Front
    z: np.ndarray = field(repr=False)
    phi: np.ndarray = field(repr=False)
    dphi: np.ndarray = field(repr=False)
    width: float
    _interpolant: Optional[PchipInterpolator] = field(init=False, repr=False, default=None)

    def __post_init__(self):
        if self.z.size > 2:
            object.__setattr__(self, "_interpolant", PchipInterpolator(self.z, self.phi, extrapolate=False))

    @property
    def samples(self) -> List[Tuple[float, float]]:
        return list(zip(self.z.tolist(), self.phi.tolist()))

    def __call__(self, z):
        """phi(z), constant upper left of the support and lower right of it."""
        z = np.asarray(z, dtype=float)
        clipped = np.clip(z, 0.0, self.width)
        if self._interpolant is not None:
            values = self._interpolant(clipped)
        else:
            values = np.interp(clipped, self.z, self.phi)
        values = np.where(z <= 0.0, self.front.upper, values)
        values = np.where(z >= self.width, self.front.lower, values)
        if values.ndim == 0:
            return float(values)
        return values


def _interior_breakpoints(spec_breaks: Sequence[float], a: float, b: float) -> List[float]:
    return [x for x in spec_breaks if a < x < b]


def _end_integrand(trajectory, theta: float, direction: float, limit: float):
    """sigma -> 2 sigma / (-q(theta + direction sigma^2)), bounded as sigma -> 0."""

    def integrand(sigma: float) -> float:
        q = trajectory.q_at(theta + direction * sigma**2)
        if q < 0.0:
            return 2.0 * sigma / -q
        return limit

    return integrand


def _inverse_speed(trajectory, s: float) -> float:
    q = trajectory.q_at(s)
    if not q < 0.0:
        raise QuadratureFailure(f"q({s:.17g}) = {q} inside the support")
    return 1.0 / -q


def _quad(func, a: float, b: float, points=None) -> float:
    if b <= a:
        return 0.0
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", IntegrationWarning)
        value, error = quad(func, a, b, points=points or None, epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL, limit=QUAD_LIMIT)
    if not math.isfinite(value) or error > 1e-6 * max(1.0, abs(value)):
        raise QuadratureFailure(f"int over [{a:.17g}, {b:.17g}] = {value} +/- {error}")
    for warning in caught:
        logger.debug(f"quad over [{a:.17g}, {b:.17g}] accepted at error {error:.3e}: {warning.message}")
    return value


def _mapped_breaks(breaks: Sequence[float], theta: float, lo: float, hi: float) -> List[float]:
    """Breakpoints in (lo, hi) in the end-zone variable sigma = sqrt|s - theta|."""
    return sorted(math.sqrt(abs(s - theta)) for s in _interior_breakpoints(breaks, lo, hi))


def _z_between(front: Front, a: float, b: float, breaks: Sequence[float] = ()) -> float:
    """int_a^b ds / (-q(s)) for p_l <= a <= b <= upper."""
    trajectory = front.trajectory
    top, bottom = trajectory.p_u, trajectory.p_l
    zone = END_ZONE * (top - bottom)

    # Limits of the substituted integrands: q ~ -sqrt(2 |f| sigma^2) at both ends
    top_limit = 2.0 / math.sqrt(2.0 * abs(trajectory.f_start))
    bottom_limit = 2.0 / math.sqrt(2.0 * abs(trajectory.f_end)) if trajectory.f_end != 0.0 else 0.0

    total = 0.0

    lo, hi = max(a, top - zone), b
    if lo < hi:
        total += _quad(
            _end_integrand(trajectory, top, -1.0, top_limit),
            math.sqrt(top - hi),
            math.sqrt(top - lo),
            _mapped_breaks(breaks, top, lo, hi),
        )

    lo, hi = a, min(b, bottom + zone)
    if lo < hi:
        points = _mapped_breaks(breaks, bottom, lo, hi)
        # q(p_l) < 0 left by a Degenerate landing bends the integrand at sigma^2 ~ q^2 / 2|f|
        if trajectory.q_at_pl < 0.0 and trajectory.f_end != 0.0:
            knee = abs(trajectory.q_at_pl) / math.sqrt(2.0 * abs(trajectory.f_end))
            if math.sqrt(lo - bottom) < knee < math.sqrt(hi - bottom):
                points = sorted(points + [knee])
        total += _quad(
            _end_integrand(trajectory, bottom, 1.0, bottom_limit),
            math.sqrt(lo - bottom),
            math.sqrt(hi - bottom),
            points,
        )

    lo, hi = max(a, bottom + zone), min(b, top - zone)
    if lo < hi:
        total += _quad(lambda s: _inverse_speed(trajectory, s), lo, hi, _interior_breakpoints(breaks, lo, hi))
    return total


def _front_breaks(front: Front) -> List[float]:
    pieces = front.trajectory._pieces
    return [piece.p_bottom for piece in pieces[:-1]]


def z_of_p(front: Front, p: float) -> float:
    """
    Position z at which the profile takes the value p, with z(upper) = 0.

    Raises:
        ProfileError: If p is outside [lower, upper]
        QuadratureFailure: If the integral does not converge
    """
    trajectory = front.trajectory
    if not front.lower <= p <= front.upper:
        raise ProfileError(f"p={p} outside [{front.lower}, {front.upper}]")
    p = max(p, trajectory.p_l)
    return _z_between(front, p, trajectory.p_u, _front_breaks(front))


def front_width(front: Front) -> float:
    """Support width Z of the front's profile."""
    return z_of_p(front, front.lower)


def reconstruct_profile(front: Front, n_samples: int = DEFAULT_SAMPLES) -> Profile:
    """
    Tabulate phi on nodes uniform in p, from (0, upper) to (width, lower).

    Raises:
        ProfileError: If n_samples < 2
        QuadratureFailure: If an increment does not converge
    """
    if n_samples < 2:
        raise ProfileError(f"n_samples must be >= 2, got {n_samples}")

    trajectory = front.trajectory
    nodes = np.linspace(trajectory.p_u, trajectory.p_l, n_samples)
    breaks = _front_breaks(front)

    increments = [_z_between(front, lo, hi, breaks) for hi, lo in zip(nodes[:-1], nodes[1:])]
    z = np.concatenate(([0.0], np.cumsum(increments)))

    phi = nodes.copy()
    phi[0], phi[-1] = front.upper, front.lower
    dphi = trajectory.q_at(nodes)
    dphi[0], dphi[-1] = 0.0, 0.0

    logger.debug(f"Profile {front.upper} -> {front.lower}: width {z[-1]:.17g} on {n_samples} nodes")
    return Profile(front=front, z=z, phi=phi, dphi=dphi, width=float(z[-1]))


def _second_derivative(profile: Profile, breaks: Sequence[float]) -> np.ndarray:
    """
    d(phi')/dz by second-order differences taken separately on each side of
    every breakpoint of f; a node sitting on a breakpoint gets the derivative
    from the side it is approached from first (larger phi).
    """
    second = np.full(profile.z.shape, np.nan)
    edges = [profile.front.upper] + sorted(breaks, reverse=True) + [profile.front.lower]
    for high, low in zip(edges[:-1], edges[1:]):
        group = np.flatnonzero((profile.phi <= high) & (profile.phi >= low))
        if group.size < 2:
            continue
        edge_order = 2 if group.size > 2 else 1
        values = np.gradient(profile.dphi[group], profile.z[group], edge_order=edge_order)
        unset = np.isnan(second[group])
        second[group[unset]] = values[unset]
    return second


def profile_residual(spec: ReactionSpec, profile: Profile, margin: float = 0.1) -> float:
    """
    Max of |phi'' + c phi' + f(phi)| at interior nodes whose value is at least
    `margin` (relative to the platform gap) away from both platforms; phi'' is
    the finite-difference derivative of the tabulated phi' = q(phi), never
    taken across a kink of f.
    """
    front = profile.front
    breaks = _interior_breakpoints(spec.breakpoints, front.lower, front.upper)
    second = _second_derivative(profile, breaks)
    span = front.upper - front.lower
    keep = (profile.phi < front.upper - margin * span) & (profile.phi > front.lower + margin * span) & ~np.isnan(second)
    if not keep.any():
        return 0.0
    phi = profile.phi[keep]
    reaction = np.array([evaluate(spec, p) for p in phi])
    residual = second[keep] + front.speed * profile.dphi[keep] + reaction
    return float(np.max(np.abs(residual)))


def profile_frame(profile: Profile) -> pd.DataFrame:
    """Profile table with header z,phi (increasing z)."""
    return pd.DataFrame({"z": profile.z, "phi": profile.phi})


@dataclass(frozen=True, eq=False)
class TerraceFunction:
    """Terrace with shifts xi; evaluates Phi(t, x; xi)."""

    terrace: Terrace
    shifts: Tuple[float, ...]
    profiles: Tuple[Profile, ...] = field(repr=False)

    def __call__(self, t: float, x):
        return terrace_eval(self, t, x)

    def supports(self, t: float) -> List[Tuple[float, float]]:
        return [
            (xi + front.speed * t, xi + front.speed * t + profile.width)
            for xi, front, profile in zip(self.shifts, self.terrace.fronts, self.profiles)
        ]


def default_shifts(terrace: Terrace, gap: float = DEFAULT_GAP, widths: Optional[Sequence[float]] = None) -> List[float]:
    """
    xi_1 = 0 and xi_{j+1} = xi_j + Z_j + gap: supports are disjoint at t = 0 and,
    the speeds being nondecreasing, stay disjoint for t >= 0.

    Raises:
        ProfileError: If gap <= 0
    """
    if gap <= 0:
        raise ProfileError(f"gap must be > 0, got {gap}")
    widths = list(widths) if widths is not None else [front_width(front) for front in terrace.fronts]

    shifts = [0.0]
    for width in widths[:-1]:
        shifts.append(shifts[-1] + width + gap)
    return shifts


def make_terrace_function(
    terrace: Terrace,
    gap: float = DEFAULT_GAP,
    shifts: Optional[Sequence[float]] = None,
    n_samples: int = DEFAULT_SAMPLES,
) -> TerraceFunction:
    """Reconstruct every profile and attach shifts (default_shifts unless given)."""
    profiles = tuple(reconstruct_profile(front, n_samples) for front in terrace.fronts)
    if shifts is None:
        shifts = default_shifts(terrace, gap, [profile.width for profile in profiles])
    if len(shifts) != len(terrace.fronts):
        raise ProfileError(f"need {len(terrace.fronts)} shifts, got {len(shifts)}")
    return TerraceFunction(terrace=terrace, shifts=tuple(float(xi) for xi in shifts), profiles=profiles)


def terrace_eval(tf: TerraceFunction, t: float, x):
    """Phi(t, x; xi) = sum_j (phi_j(x - xi_j - c_j t) - lower_j)."""
    x = np.asarray(x, dtype=float)
    total = np.zeros_like(x)
    for xi, front, profile in zip(tf.shifts, tf.terrace.fronts, tf.profiles):
        total = total + profile(x - xi - front.speed * t) - front.lower
    if total.ndim == 0:
        return float(total)
    return total


def snapshot_frame(tf: TerraceFunction, t: float, x: np.ndarray) -> pd.DataFrame:
    """Phi(t, .) on a caller-given grid, header x,u."""
    return pd.DataFrame({"x": np.asarray(x, dtype=float), "u": terrace_eval(tf, t, x)})
