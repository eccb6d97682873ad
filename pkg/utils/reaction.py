"""
Multistable reaction functions f(u) that jump at their stable steady states.

A reaction is given by its steady states 1 = theta_0 > theta_1 > ... > theta_2I = 0,
alternating stable/unstable, and one polynomial per interval between consecutive
states, plus polynomial extensions below 0 and above 1. Validation certifies the
sign pattern, the jumps at stable states and continuity at unstable ones by
polynomial root isolation rather than by sampling alone.
"""

import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from numpy.polynomial import polynomial as P

from .errors import (
    BadOrdering,
    EvalAtStableState,
    MissingJump,
    NonAlternatingStability,
    NonzeroAtUnstable,
    NotABreakpoint,
    SignViolation,
    TerraceError,
    ValidationError,
)
from .logging_config import get_logger

logger = get_logger(__name__)

# Width of the bounded part of the extended domain on each side of [0, 1]
EXTENSION_MARGIN = 0.5

ZERO_TOL = 1e-12
ROOT_IMAG_TOL = 1e-9
SIGN_SAMPLES = 65


class Stability(str, Enum):
    STABLE = "stable"
    UNSTABLE = "unstable"

    @classmethod
    def parse(cls, raw: Any) -> "Stability":
        key = str(raw).strip().lower()
        if key in ("s", "stable"):
            return cls.STABLE
        if key in ("u", "unstable"):
            return cls.UNSTABLE
        raise BadOrdering(f"Unknown stability '{raw}', expected 'stable' or 'unstable'")


@dataclass(frozen=True)
class Segment:
    """Polynomial piece of f on [lo, hi]; coefficients in ascending powers."""

    lo: float
    hi: float
    poly: Tuple[float, ...]

    def __call__(self, p):
        return P.polyval(p, self.poly)

    def antiderivative(self, p):
        return P.polyval(p, P.polyint(self.poly))

    def real_roots(self, lo: float, hi: float, coefficients: Optional[Sequence[float]] = None) -> List[float]:
        """Real roots of the polynomial (or of `coefficients`) strictly inside (lo, hi)."""
        coefficients = np.trim_zeros(np.asarray(coefficients if coefficients is not None else self.poly, dtype=float), "b")
        if coefficients.size <= 1:
            return []
        roots = P.polyroots(coefficients)
        real = roots[np.abs(roots.imag) <= ROOT_IMAG_TOL * np.maximum(1.0, np.abs(roots.real))].real
        margin = 1e-9 * (hi - lo)
        return sorted(float(r) for r in real if lo + margin < r < hi - margin)

    def sup_abs(self, lo: float, hi: float, coefficients: Optional[Sequence[float]] = None) -> float:
        """Max of |poly| on [lo, hi] via endpoints and critical points."""
        coefficients = np.asarray(coefficients if coefficients is not None else self.poly, dtype=float)
        candidates = [lo, hi] + self.real_roots(lo, hi, P.polyder(coefficients))
        return float(np.max(np.abs(P.polyval(np.asarray(candidates), coefficients))))


@dataclass(frozen=True)
class SteadyState:
    value: float
    stability: Stability
    f_left: float
    f_right: float

    @property
    def is_stable(self) -> bool:
        return self.stability is Stability.STABLE


@dataclass(frozen=True)
class ReactionCandidate:
    """Parsed but unvalidated reaction."""

    steady_states: Tuple[Tuple[float, Stability], ...]
    segments: Tuple[Segment, ...]
    extension_below: Tuple[float, ...]
    extension_above: Tuple[float, ...]


@dataclass(frozen=True)
class ReactionSpec:
    """
    Validated reaction. Immutable; safe to share between workers.

    `steady_states` and `segments` are both ordered by descending value, so
    segments[k] lives on [steady_states[k+1].value, steady_states[k].value].
    """

    steady_states: Tuple[SteadyState, ...]
    segments: Tuple[Segment, ...]
    extension_below: Segment
    extension_above: Segment
    sup_norm: float
    lipschitz: float

    @property
    def n_pairs(self) -> int:
        """I in 1 = theta_0 > ... > theta_2I = 0."""
        return (len(self.steady_states) - 1) // 2

    @property
    def breakpoints(self) -> Tuple[float, ...]:
        return tuple(s.value for s in self.steady_states)

    @property
    def stable_values(self) -> Tuple[float, ...]:
        return tuple(s.value for s in self.steady_states if s.is_stable)

    @property
    def unstable_values(self) -> Tuple[float, ...]:
        return tuple(s.value for s in self.steady_states if not s.is_stable)

    def find_state(self, value: float, tol: float = ZERO_TOL) -> Optional[SteadyState]:
        for state in self.steady_states:
            if abs(state.value - value) <= tol:
                return state
        return None

    def segment_below(self, p: float) -> Segment:
        """Piece of f on the interval just below p."""
        if p <= 0.0:
            return self.extension_below
        for segment in self.segments:
            if segment.lo < p <= segment.hi:
                return segment
        return self.extension_above

    def segment_above(self, p: float) -> Segment:
        """Piece of f on the interval just above p."""
        if p >= 1.0:
            return self.extension_above
        for segment in self.segments:
            if segment.lo <= p < segment.hi:
                return segment
        return self.extension_below

    def breakpoints_below(self, p: float) -> List[float]:
        """Steady-state values strictly below p, descending (always ends with 0)."""
        return [b for b in self.breakpoints if b < p]


def _as_poly(raw: Any, name: str) -> Tuple[float, ...]:
    if isinstance(raw, (int, float)):
        raw = [raw]
    try:
        poly = tuple(float(a) for a in raw)
    except (TypeError, ValueError):
        raise ValidationError([BadOrdering(f"{name} must be a list of numbers, got {raw!r}")])
    if not poly:
        raise ValidationError([BadOrdering(f"{name} must not be empty")])
    return poly


def parse(document: Mapping[str, Any]) -> ReactionCandidate:
    """
    Parse a reaction document (the JSON object of a reaction file).

    Raises:
        ValidationError: With a BadOrdering violation if keys are missing or malformed
    """
    missing = [
        key
        for key in ("steady_states", "segments", "extension_below", "extension_above")
        if key not in document
    ]
    if missing:
        raise ValidationError([BadOrdering(f"missing keys {missing}")])

    try:
        states = tuple(
            (float(entry["value"]), Stability.parse(entry["stability"]))
            for entry in document["steady_states"]
        )
        segments = []
        for k, entry in enumerate(document["segments"]):
            a, b = float(entry["from"]), float(entry["to"])
            segments.append(Segment(min(a, b), max(a, b), _as_poly(entry["poly"], f"segments[{k}].poly")))
    except (KeyError, TypeError, ValueError) as e:
        if isinstance(e, TerraceError):
            raise ValidationError([e])
        raise ValidationError([BadOrdering(f"malformed entry: {e}")])

    return ReactionCandidate(
        steady_states=states,
        segments=tuple(sorted(segments, key=lambda s: -s.hi)),
        extension_below=_as_poly(document["extension_below"], "extension_below"),
        extension_above=_as_poly(document["extension_above"], "extension_above"),
    )


def _check_structure(candidate: ReactionCandidate) -> None:
    values = [value for value, _ in candidate.steady_states]

    if len(values) < 3 or len(values) % 2 == 0:
        raise ValidationError([BadOrdering(f"need an odd number >= 3 of steady states, got {len(values)}")])
    if values[0] != 1.0 or values[-1] != 0.0:
        raise ValidationError([BadOrdering(f"steady states must run from 1 down to 0, got {values[0]} .. {values[-1]}")])
    if any(a <= b for a, b in zip(values, values[1:])):
        raise ValidationError([BadOrdering(f"steady states must be strictly decreasing: {values}")])

    expected = list(zip(values[1:], values[:-1]))
    actual = [(s.lo, s.hi) for s in candidate.segments]
    if actual != expected:
        raise ValidationError(
            [BadOrdering(f"segment endpoints must be consecutive steady states {expected}, got {actual}")]
        )


def _scale(poly: Sequence[float]) -> float:
    return ZERO_TOL * max(1.0, float(np.max(np.abs(poly))))


def _check_sign(segment: Segment, lo: float, hi: float, sign: int) -> Optional[SignViolation]:
    roots = segment.real_roots(lo, hi)
    if roots:
        return SignViolation((lo, hi), f"f vanishes inside at {roots[0]:.17g}")

    nodes = lo + (hi - lo) * 0.5 * (1.0 - np.cos(np.pi * (np.arange(SIGN_SAMPLES) + 0.5) / SIGN_SAMPLES))
    values = segment(nodes)
    if np.any(np.sign(values) != sign):
        bad = float(nodes[np.argmax(np.sign(values) != sign)])
        return SignViolation((lo, hi), f"expected sign {sign:+d}, f({bad:.6g}) = {float(segment(bad)):.6g}")
    return None


def validate(candidate: ReactionCandidate) -> ReactionSpec:
    """
    Certify a parsed reaction.

    Checks alternation of stabilities, the jump f(theta-) > 0 > f(theta+) at every
    stable state, f = 0 from both sides at every unstable state, and the strict
    sign pattern on every open interval (including the extensions on the bounded
    margins of width EXTENSION_MARGIN).

    Args:
        candidate: Output of `parse`

    Returns:
        ReactionSpec with sup_norm and lipschitz bounds computed

    Raises:
        ValidationError: With every violation found
    """
    _check_structure(candidate)

    below = Segment(-np.inf, 0.0, candidate.extension_below)
    above = Segment(1.0, np.inf, candidate.extension_above)
    segments = candidate.segments
    violations: List[TerraceError] = []

    for k, (value, stability) in enumerate(candidate.steady_states):
        expected = Stability.STABLE if k % 2 == 0 else Stability.UNSTABLE
        if stability is not expected:
            violations.append(
                NonAlternatingStability(f"theta_{k}={value:.17g} should be {expected.value}, got {stability.value}")
            )

    states = []
    for k, (value, stability) in enumerate(candidate.steady_states):
        lower_piece = segments[k] if k < len(segments) else below
        upper_piece = segments[k - 1] if k > 0 else above
        left, right = float(lower_piece(value)), float(upper_piece(value))
        states.append(SteadyState(value, stability, left, right))

        if stability is Stability.STABLE:
            if not left > 0.0 > right:
                violations.append(MissingJump(value, left, right))
        else:
            tol = max(_scale(lower_piece.poly), _scale(upper_piece.poly))
            if abs(left) > tol or abs(right) > tol:
                violations.append(NonzeroAtUnstable(value, left, right))
            else:
                left = right = 0.0
                states[-1] = SteadyState(value, stability, 0.0, 0.0)

    for k, segment in enumerate(segments):
        # f > 0 when the upper end is stable, f < 0 when it is unstable
        sign = 1 if k % 2 == 0 else -1
        violation = _check_sign(segment, segment.lo, segment.hi, sign)
        if violation:
            violations.append(violation)

    for piece, lo, hi, sign in ((below, -EXTENSION_MARGIN, 0.0, 1), (above, 1.0, 1.0 + EXTENSION_MARGIN, -1)):
        violation = _check_sign(piece, lo, hi, sign)
        if violation:
            violations.append(violation)

    if violations:
        logger.warning(f"Reaction rejected with {len(violations)} violation(s)")
        raise ValidationError(violations)

    bounded = [(s, s.lo, s.hi) for s in segments]
    bounded += [(below, -EXTENSION_MARGIN, 0.0), (above, 1.0, 1.0 + EXTENSION_MARGIN)]
    sup_norm = max(piece.sup_abs(lo, hi) for piece, lo, hi in bounded)
    lipschitz = max(piece.sup_abs(lo, hi, P.polyder(piece.poly)) if len(piece.poly) > 1 else 0.0 for piece, lo, hi in bounded)

    spec = ReactionSpec(
        steady_states=tuple(states),
        segments=segments,
        extension_below=below,
        extension_above=above,
        sup_norm=sup_norm,
        lipschitz=lipschitz,
    )
    logger.info(
        f"Reaction validated: I={spec.n_pairs}, stable={list(spec.stable_values)}, "
        f"sup_norm={sup_norm:.6g}, lipschitz={lipschitz:.6g}"
    )
    return spec


def evaluate(spec: ReactionSpec, p: float) -> float:
    """
    Evaluate f at p.

    Raises:
        EvalAtStableState: f is undefined at stable states; use one_sided_limits
    """
    p = float(p)
    for theta in spec.stable_values:
        if p == theta:
            raise EvalAtStableState(theta)
    return float(spec.segment_above(p)(p))


def one_sided_limits(spec: ReactionSpec, theta: float) -> Tuple[float, float]:
    """Left and right limits of f at a breakpoint."""
    state = spec.find_state(theta)
    if state is None:
        raise NotABreakpoint(f"{theta:.17g} is not a steady state of the reaction")
    return state.f_left, state.f_right


def classify_states(spec: ReactionSpec) -> Tuple[List[float], List[float]]:
    """Stable and unstable steady-state values, both descending."""
    return list(spec.stable_values), list(spec.unstable_values)


def integral(spec: ReactionSpec, a: float, b: float) -> float:
    """Exact integral of f over [a, b] (oriented)."""
    if a > b:
        return -integral(spec, b, a)

    pieces = [spec.extension_below, *reversed(spec.segments), spec.extension_above]
    total = 0.0
    for piece in pieces:
        lo, hi = max(a, piece.lo), min(b, piece.hi)
        if lo < hi:
            total += float(piece.antiderivative(hi) - piece.antiderivative(lo))
    return total


def eval_array(spec: ReactionSpec, u: np.ndarray) -> np.ndarray:
    """
    Vectorized f for the PDE simulator, with f := 0 exactly at every steady state
    (keeps constant platforms stationary).
    """
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)

    mask = u < 0.0
    if mask.any():
        out[mask] = spec.extension_below(u[mask])
    mask = u > 1.0
    if mask.any():
        out[mask] = spec.extension_above(u[mask])

    for segment in spec.segments:
        mask = (u > segment.lo) & (u < segment.hi)
        if mask.any():
            out[mask] = segment(u[mask])
    return out


def next_unstable_below(spec: ReactionSpec, p_u: float) -> float:
    """Largest unstable steady state below p_u."""
    candidates = [theta for theta in spec.unstable_values if theta < p_u]
    if not candidates:
        raise NotABreakpoint(f"no unstable state below {p_u:.17g}")
    return max(candidates)


def serialize(spec: ReactionSpec) -> Dict[str, Any]:
    """Canonical document form of a validated reaction."""
    return {
        "steady_states": [
            {"value": s.value, "stability": s.stability.value} for s in spec.steady_states
        ],
        "segments": [
            {"from": s.lo, "to": s.hi, "poly": list(s.poly)} for s in spec.segments
        ],
        "extension_below": list(spec.extension_below.poly),
        "extension_above": list(spec.extension_above.poly),
    }


def load_reaction(source: Union[str, Path, Mapping[str, Any]]) -> ReactionSpec:
    """
    Parse and validate a reaction from a file path or an inline document.

    Raises:
        ValidationError: If the document is malformed or violates an invariant
    """
    if isinstance(source, Mapping):
        document = source
    else:
        path = Path(source)
        logger.debug(f"Loading reaction from {path}")
        try:
            document = json.loads(path.read_text())
        except json.JSONDecodeError as e:
            raise ValidationError([BadOrdering(f"{path} is not valid JSON: {e}")])

    return validate(parse(document))
