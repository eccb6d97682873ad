"""
Domain errors raised by the terrace solver.

Every error derives from TerraceError, itself a ValueError, so callers that only
care about "bad input or unusable result" can catch ValueError as before.
The class name is the error code reported by the CLI.
"""

from typing import List, Optional, Tuple


class TerraceError(ValueError):
    """Root of all domain errors."""

    @property
    def code(self) -> str:
        return type(self).__name__


# Reaction validation


class ValidationError(TerraceError):
    """One or more reaction invariants failed; see `violations`."""

    def __init__(self, violations: List[TerraceError]):
        self.violations = list(violations)
        names = ", ".join(f"{v.code}({v})" for v in self.violations)
        super().__init__(f"Reaction validation failed: {names}")

    @property
    def code(self) -> str:
        # Report the first concrete violation, which is what a user acts on
        if self.violations:
            return self.violations[0].code
        return super().code


class BadOrdering(TerraceError):
    pass


class NonAlternatingStability(TerraceError):
    pass


class SignViolation(TerraceError):
    def __init__(self, interval: Tuple[float, float], detail: str = ""):
        self.interval = interval
        message = f"[{interval[0]:.17g}, {interval[1]:.17g}]"
        if detail:
            message = f"{message}: {detail}"
        super().__init__(message)


class MissingJump(TerraceError):
    def __init__(self, theta: float, left: float, right: float):
        self.theta = theta
        super().__init__(
            f"theta={theta:.17g} needs f(theta-) > 0 > f(theta+), "
            f"got ({left:.6g}, {right:.6g})"
        )


class NonzeroAtUnstable(TerraceError):
    def __init__(self, theta: float, left: float, right: float):
        self.theta = theta
        super().__init__(
            f"theta={theta:.17g} must have f = 0 from both sides, "
            f"got ({left:.6g}, {right:.6g})"
        )


class EvalAtStableState(TerraceError):
    def __init__(self, theta: float):
        self.theta = theta
        super().__init__(
            f"f is not defined at the stable state {theta:.17g}; "
            "use one_sided_limits instead"
        )


class NotABreakpoint(TerraceError):
    pass


# Phase plane


class TrajectoryError(TerraceError):
    pass


class NotStable(TrajectoryError):
    def __init__(self, p_u: float, detail: str = "not a stable steady state"):
        self.p_u = p_u
        super().__init__(f"p_u={p_u:.17g}: {detail}")


class EpsilonTooLarge(TrajectoryError):
    pass


class EventLocalizationFailure(TrajectoryError):
    def __init__(self, bracket: Tuple[float, float], detail: str = ""):
        self.bracket = bracket
        message = f"zero of q^2 could not be localized in [{bracket[0]:.17g}, {bracket[1]:.17g}]"
        if detail:
            message = f"{message}: {detail}"
        super().__init__(message)


# Speed selection and terrace assembly


class SpeedError(TerraceError):
    pass


class BracketSearchExceeded(SpeedError):
    def __init__(self, p_u: float, max_iter: int, last_c: Optional[float] = None):
        self.max_iter = max_iter
        super().__init__(
            f"no bracket found from p_u={p_u:.17g} after {max_iter} candidates "
            f"(last c={last_c})"
        )


class SnapFailure(SpeedError):
    def __init__(self, p_l: float, nearest: float, tol_snap: float):
        self.p_l = p_l
        self.nearest = nearest
        super().__init__(
            f"p_l={p_l:.17g} is {abs(p_l - nearest):.3g} away from the nearest "
            f"stable state {nearest:.17g} (tol_snap={tol_snap:.3g})"
        )


class SpeedOrderViolation(SpeedError):
    pass


# Profiles


class ProfileError(TerraceError):
    pass


class QuadratureFailure(ProfileError):
    pass


# PDE simulation


class SimulationError(TerraceError):
    pass


class StabilityViolation(SimulationError):
    pass


class BlowUp(SimulationError):
    pass


class LevelNotCrossed(SimulationError):
    pass


class MultipleCrossings(SimulationError):
    pass


class GridMismatch(SimulationError):
    pass


# Configuration


class ConfigError(TerraceError):
    pass
