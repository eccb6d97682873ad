"""
Run configuration for the CLI commands.
Merges defaults, environment, experiment bundle and flags into one RunConfig.
"""

from dataclasses import asdict, dataclass, field, replace
from typing import Any, Dict, List, Optional

from .config import get_tolerance_defaults, validate_config
from .errors import ConfigError

COMMANDS = ["validate", "trajectory", "speed", "terrace", "profile", "simulate", "verify", "sweep"]

# Commands that need an upper platform
P_U_COMMANDS = {"trajectory", "speed", "sweep"}


@dataclass(frozen=True)
class Tolerances:
    """Numerical tolerances shared by every solver stage."""

    tol_ode: float = 1e-10
    tol_c: float = 1e-8
    tol_snap: float = 1e-6
    tol_profile: float = 1e-4

    def tightened(self, factor: float = 10.0) -> "Tolerances":
        """Same tolerances divided by `factor`; the snap window stays put."""
        return replace(self, tol_ode=self.tol_ode / factor, tol_c=self.tol_c / factor)


@dataclass
class RunConfig:
    """Configuration for a single CLI invocation."""

    command: str
    reaction: Any  # path or inline reaction document
    tolerances: Tolerances = field(default_factory=Tolerances)
    out_dir: Optional[str] = None

    # Command-specific
    p_u: Optional[float] = None
    c: Optional[float] = None
    c_range: Optional[List[float]] = None
    gap: float = 1.0
    n_samples: int = 401
    pde: Dict[str, Any] = field(default_factory=dict)


def get_tolerances(*layers: Optional[Dict[str, Any]]) -> Tolerances:
    """
    Build tolerances from defaults overridden by the environment and then by
    each given layer in order (None entries in a layer are ignored).

    Raises:
        ConfigError: If a layer names an unknown tolerance
    """
    values = asdict(Tolerances())
    for layer in (get_tolerance_defaults(), *layers):
        for name, value in (layer or {}).items():
            if name not in values:
                raise ConfigError(
                    f"Unknown tolerance '{name}'. Supported tolerances: {sorted(values)}"
                )
            if value is not None:
                values[name] = float(value)
    return Tolerances(**values)


def build_run_config(
    command: str,
    flags: Dict[str, Any],
    file_config: Optional[Dict[str, Any]] = None,
) -> RunConfig:
    """
    Merge a bundle and command-line flags into a RunConfig; flags win.

    Args:
        command: One of COMMANDS
        flags: Parsed flag values (None when not given)
        file_config: Blocks loaded from a JSON bundle

    Returns:
        Validated RunConfig

    Raises:
        ConfigError: If the combination is unusable
    """
    if command not in COMMANDS:
        raise ConfigError(f"Unsupported command: {command}. Supported commands: {COMMANDS}")

    file_config = file_config or {}

    reaction = flags.get("reaction") or file_config.get("reaction")
    if reaction is None:
        raise ConfigError("A reaction is required: pass --reaction or a config bundle with one")

    tolerances = get_tolerances(
        file_config.get("tolerances"),
        {name: flags.get(name) for name in ("tol_ode", "tol_c")},
    )

    pde = dict(file_config.get("pde", {}))
    for name in ("dx", "dt", "t_final", "domain", "ic"):
        if flags.get(name) is not None:
            pde[name] = flags[name]

    output = file_config.get("output", {})
    out_dir = flags.get("out") or output.get("dir")

    config = RunConfig(
        command=command,
        reaction=reaction,
        tolerances=tolerances,
        out_dir=out_dir,
        p_u=flags.get("p_u"),
        c=flags.get("c"),
        c_range=flags.get("c_range"),
        gap=flags.get("gap") if flags.get("gap") is not None else output.get("gap", 1.0),
        n_samples=flags.get("n_samples") or output.get("n_samples", 401),
        pde=pde,
    )

    validate_run_config(config)
    return config


def validate_run_config(config: RunConfig) -> None:
    """
    Validate command-specific requirements of a run.

    Raises:
        ConfigError: If a required field is missing or out of range
    """
    read_paths = [config.reaction] if isinstance(config.reaction, str) else []
    validate_config({"tolerances": asdict(config.tolerances)}, read_paths)

    if config.command in P_U_COMMANDS and config.p_u is None:
        raise ConfigError(f"Command '{config.command}' requires --p-u")

    if config.command == "trajectory" and config.c is None:
        raise ConfigError("Command 'trajectory' requires --c")

    if config.command == "sweep" and not config.c_range:
        raise ConfigError("Command 'sweep' requires --c-range CMIN CMAX N")

    if config.gap <= 0:
        raise ConfigError(f"gap must be > 0 (got {config.gap})")

    if config.n_samples < 2:
        raise ConfigError(f"n_samples must be >= 2 (got {config.n_samples})")
