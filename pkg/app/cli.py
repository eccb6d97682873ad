"""
Command-line entry point for the terrace solver.

Each subcommand loads a reaction, runs one stage of the pipeline, writes a JSON
descriptor plus CSV tables under --out (when given) and prints a one-line
summary on stdout. Logs go to stderr.

Exit codes: 0 success, 1 domain error, 2 usage or configuration error.
"""

import argparse
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from utils.config import load_config_file
from utils.errors import ConfigError, LevelNotCrossed, MultipleCrossings, TerraceError
from utils.logging_config import configure_logging, get_logger
from utils.pde_sim import (
    PdeConfig,
    StepIC,
    TableIC,
    TerraceIC,
    arrival_time,
    measure_front_speed,
    residual_vs_terrace,
    simulate,
    track_frame,
)
from utils.phase_plane import energy_residual, solve_trajectory, trajectory_frame
from utils.profile import (
    TerraceFunction,
    make_terrace_function,
    profile_frame,
    profile_residual,
    snapshot_frame,
)
from utils.reaction import ReactionSpec, load_reaction, serialize
from utils.run_config import COMMANDS, RunConfig, build_run_config
from utils.serialization import read_table, write_csv, write_json
from utils.speed_solver import find_cstar, sign_law, sweep
from utils.terrace import Terrace, build_terrace

logger = get_logger(__name__)

EXIT_OK = 0
EXIT_DOMAIN = 1
EXIT_USAGE = 2

SNAPSHOT_DX = 0.01


class _Parser(argparse.ArgumentParser):
    """ArgumentParser that raises instead of exiting, so run() owns the exit code."""

    def error(self, message: str):
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--reaction", help="Reaction JSON file")
    common.add_argument("--config", help="Experiment bundle (JSON) with reaction/tolerances/pde/output blocks")
    common.add_argument("--out", help="Output directory")
    common.add_argument("--p-u", dest="p_u", type=float, help="Upper platform")
    common.add_argument("--c", type=float, help="Wave speed")
    common.add_argument("--tol-ode", dest="tol_ode", type=float)
    common.add_argument("--tol-c", dest="tol_c", type=float)
    common.add_argument("--dx", type=float)
    common.add_argument("--dt", type=float)
    common.add_argument("--t-final", dest="t_final", type=float)
    common.add_argument("--domain", nargs=2, type=float, metavar=("XMIN", "XMAX"))
    common.add_argument("--ic", help="step | terrace | table:PATH")
    common.add_argument("--gap", type=float, help="Gap between consecutive front supports")
    common.add_argument("--c-range", dest="c_range", nargs=3, type=float, metavar=("CMIN", "CMAX", "N"))
    common.add_argument("--n-samples", dest="n_samples", type=int, help="Nodes per tabulated profile")

    parser = _Parser(prog="terrace", description="Propagating terraces for discontinuous multistable reactions")
    commands = parser.add_subparsers(dest="command", parser_class=_Parser)
    commands.required = True
    for command in COMMANDS:
        commands.add_parser(command, parents=[common])
    return parser


def _out(config: RunConfig, name: str) -> Optional[Path]:
    if config.out_dir is None:
        return None
    return Path(config.out_dir) / name


def _emit_json(config: RunConfig, name: str, document: Dict[str, Any]) -> None:
    path = _out(config, name)
    if path is not None:
        write_json(document, path)


def _emit_csv(config: RunConfig, name: str, frame) -> Optional[str]:
    path = _out(config, name)
    if path is not None:
        write_csv(frame, path)
    return name


# Commands


def cmd_validate(spec: ReactionSpec, config: RunConfig) -> str:
    _emit_json(config, "reaction.json", serialize(spec))
    return (
        f"valid: I={spec.n_pairs}, stable={list(spec.stable_values)}, "
        f"unstable={list(spec.unstable_values)}"
    )


def cmd_trajectory(spec: ReactionSpec, config: RunConfig) -> str:
    tols = config.tolerances
    trajectory = solve_trajectory(spec, config.p_u, config.c, tols.tol_ode)
    _emit_json(
        config,
        "trajectory.json",
        {
            "p_u": trajectory.p_u,
            "c": trajectory.c,
            "p_l": trajectory.p_l,
            "q_at_pl": trajectory.q_at_pl,
            "termination": trajectory.termination.value,
            "energy_residual": energy_residual(spec, trajectory),
            "samples_csv": "trajectory.csv",
        },
    )
    _emit_csv(config, "trajectory.csv", trajectory_frame(trajectory))
    return (
        f"trajectory p_u={trajectory.p_u} c={trajectory.c:.17g}: {trajectory.termination.value} "
        f"at p_l={trajectory.p_l:.17g}, q={trajectory.q_at_pl:.17g}"
    )


def cmd_speed(spec: ReactionSpec, config: RunConfig) -> str:
    tols = config.tolerances
    critical = find_cstar(spec, config.p_u, tols.tol_c, tols.tol_ode, tols.tol_snap)
    _emit_json(
        config,
        "speed.json",
        {
            "p_u": config.p_u,
            "c_star": critical.c_star,
            "c_lo": critical.bracket.c_lo,
            "c_hi": critical.bracket.c_hi,
            "tol_c": critical.tol_c,
            "platform": critical.p_star,
            "sign_law": sign_law(spec, config.p_u, critical.p_star),
        },
    )
    _emit_csv(config, "trajectory.csv", trajectory_frame(critical.trajectory))
    return f"c* = {critical.c_star:.17g} (+0/-{critical.error_bar:.1e}), platform {critical.p_star}"


def _terrace_document(terrace: Terrace, tf: TerraceFunction, config: RunConfig) -> Dict[str, Any]:
    fronts = []
    for j, (front, profile, xi) in enumerate(zip(terrace.fronts, tf.profiles, tf.shifts), start=1):
        name = _emit_csv(config, f"profile_{j}.csv", profile_frame(profile))
        fronts.append(
            {
                "upper": front.upper,
                "lower": front.lower,
                "speed": front.speed,
                "support_width": profile.width,
                "shift": xi,
                "profile_csv": name,
            }
        )
    return {
        "platforms": list(terrace.platforms),
        "fronts": fronts,
        "gap": config.gap,
        "tolerances": {
            "tol_ode": config.tolerances.tol_ode,
            "tol_c": config.tolerances.tol_c,
            "tol_snap": config.tolerances.tol_snap,
            "tol_profile": config.tolerances.tol_profile,
        },
    }


def _terrace_function(spec: ReactionSpec, config: RunConfig):
    terrace = build_terrace(spec, config.tolerances)
    tf = make_terrace_function(terrace, gap=config.gap, n_samples=config.n_samples)
    return terrace, tf


def cmd_terrace(spec: ReactionSpec, config: RunConfig) -> str:
    terrace, tf = _terrace_function(spec, config)
    _emit_json(config, "terrace.json", _terrace_document(terrace, tf, config))
    speeds = ", ".join(f"{c:.17g}" for c in terrace.speeds)
    return f"terrace J={len(terrace)}: platforms {list(terrace.platforms)}, speeds [{speeds}]"


def cmd_profile(spec: ReactionSpec, config: RunConfig) -> str:
    terrace, tf = _terrace_function(spec, config)
    document = _terrace_document(terrace, tf, config)
    tol_profile = config.tolerances.tol_profile
    residuals = [profile_residual(spec, profile) for profile in tf.profiles]
    for index, (entry, residual) in enumerate(zip(document["fronts"], residuals)):
        entry["ode_residual"] = residual
        entry["within_tol_profile"] = residual <= tol_profile
        if residual > tol_profile:
            logger.warning(f"Front {index}: ODE residual {residual:.3e} exceeds tol_profile {tol_profile:.3e}")
    document["tol_profile"] = tol_profile
    document["snapshot_csv"] = "snapshot_t0.csv"
    _emit_json(config, "terrace.json", document)

    x_min, x_max = _snapshot_range(tf, config)
    grid = np.arange(x_min, x_max + 0.5 * SNAPSHOT_DX, SNAPSHOT_DX)
    _emit_csv(config, "snapshot_t0.csv", snapshot_frame(tf, 0.0, grid))

    widths = ", ".join(f"{profile.width:.17g}" for profile in tf.profiles)
    status = "ok" if max(residuals) <= tol_profile else "ABOVE tol_profile"
    return f"profiles J={len(terrace)}: widths [{widths}], max ODE residual {max(residuals):.3e} ({status})"


def _snapshot_range(tf: TerraceFunction, config: RunConfig):
    domain = config.pde.get("domain")
    if domain is not None:
        return float(domain[0]), float(domain[1])
    supports = tf.supports(0.0)
    return supports[0][0] - 2.0 * config.gap, supports[-1][1] + 2.0 * config.gap


def _initial_condition(spec: ReactionSpec, config: RunConfig, tf: Optional[TerraceFunction] = None):
    raw = str(config.pde.get("ic", "step"))
    if raw == "step":
        return StepIC()
    if raw == "terrace":
        if tf is None:
            _, tf = _terrace_function(spec, config)
        return TerraceIC(tf)
    if raw.startswith("table:"):
        path = raw[len("table:"):]
        if not Path(path).is_file():
            raise ConfigError(f"initial condition table not found: {path}")
        try:
            return TableIC.from_frame(read_table(path, ("x", "u")))
        except ValueError as e:
            if isinstance(e, TerraceError):
                raise
            raise ConfigError(str(e))
    raise ConfigError(f"Unsupported initial condition '{raw}'. Use step, terrace or table:PATH")


def _pde_config(config: RunConfig, ic) -> PdeConfig:
    block = config.pde
    values: Dict[str, Any] = {"ic": ic}
    if block.get("domain") is not None:
        values["x_min"], values["x_max"] = (float(v) for v in block["domain"])
    for name in ("dx", "dt", "t_final", "cfl_safety", "snapshot_interval"):
        if block.get(name) is not None:
            values[name] = float(block[name])
    if block.get("track_levels") is not None:
        values["track_levels"] = tuple(float(v) for v in block["track_levels"])
    return PdeConfig(**values)


def _measure(result, level: float) -> Optional[float]:
    t_final = result.config.t_final
    try:
        speed, _ = measure_front_speed(result, level, (0.5 * t_final, t_final))
    except (LevelNotCrossed, MultipleCrossings) as e:
        logger.warning(f"No speed for level {level}: {e.code}: {e}")
        return None
    return speed


def cmd_simulate(spec: ReactionSpec, config: RunConfig) -> str:
    pde = _pde_config(config, _initial_condition(spec, config))
    result = simulate(spec, pde)

    levels = []
    for j, (level, track) in enumerate(result.front_tracks.items(), start=1):
        name = _emit_csv(config, f"track_{j}.csv", track_frame(result, level))
        levels.append({"level": level, "speed": _measure(result, level), "track_csv": name})

    _emit_csv(config, "snapshot_final.csv", result.snapshot_frame(len(result.times) - 1))
    _emit_json(
        config,
        "simulate.json",
        {
            "domain": [pde.x_min, pde.x_max],
            "dx": pde.dx,
            "dt": pde.effective_dt,
            "t_final": pde.t_final,
            "snapshots": len(result.times),
            "overshoot": result.overshoot(),
            "arrival_time_left": arrival_time(result, (pde.x_min, pde.x_min + 0.25 * (pde.x_max - pde.x_min))),
            "levels": levels,
            "snapshot_csv": "snapshot_final.csv",
        },
    )
    speeds = ", ".join("n/a" if entry["speed"] is None else f"{entry['speed']:.6g}" for entry in levels)
    return f"simulated to t={pde.t_final} on {result.x.size} nodes: level speeds [{speeds}]"


def cmd_verify(spec: ReactionSpec, config: RunConfig) -> str:
    terrace, tf = _terrace_function(spec, config)
    pde = _pde_config(config, TerraceIC(tf))
    result = simulate(spec, pde)
    residual = residual_vs_terrace(result, tf)

    fronts = []
    for front in terrace.fronts:
        level = 0.5 * (front.upper + front.lower)
        measured = _measure(result, level)
        fronts.append(
            {
                "upper": front.upper,
                "lower": front.lower,
                "speed": front.speed,
                "level": level,
                "measured_speed": measured,
                "speed_delta": None if measured is None else measured - front.speed,
            }
        )

    _emit_json(
        config,
        "verify.json",
        {
            "platforms": list(terrace.platforms),
            "dx": pde.dx,
            "t_final": pde.t_final,
            "residual": residual,
            "fronts": fronts,
        },
    )
    deltas = ", ".join("n/a" if f["speed_delta"] is None else f"{f['speed_delta']:.3e}" for f in fronts)
    return f"verify J={len(terrace)}: residual {residual:.3e}, speed deltas [{deltas}]"


def cmd_sweep(spec: ReactionSpec, config: RunConfig) -> str:
    c_min, c_max, n = config.c_range
    speeds = np.linspace(c_min, c_max, int(n))
    frame = sweep(spec, config.p_u, speeds, config.tolerances.tol_ode)
    _emit_csv(config, "sweep.csv", frame)
    counts = frame["termination"].value_counts().to_dict()
    return f"swept {len(frame)} speeds from p_u={config.p_u}: " + ", ".join(
        f"{kind}={counts[kind]}" for kind in sorted(counts)
    )


HANDLERS = {
    "validate": cmd_validate,
    "trajectory": cmd_trajectory,
    "speed": cmd_speed,
    "terrace": cmd_terrace,
    "profile": cmd_profile,
    "simulate": cmd_simulate,
    "verify": cmd_verify,
    "sweep": cmd_sweep,
}


def _flags(args: argparse.Namespace) -> Dict[str, Any]:
    flags = vars(args).copy()
    if flags.get("domain") is not None:
        flags["domain"] = list(flags["domain"])
    if flags.get("c_range") is not None:
        c_min, c_max, n = flags["c_range"]
        if n < 1 or n != int(n):
            raise ConfigError(f"--c-range N must be a positive integer, got {n}")
        flags["c_range"] = [c_min, c_max, int(n)]
    return flags


def run(argv: Optional[Sequence[str]] = None) -> int:
    """
    Parse argv, run the command and report.

    Returns:
        0 on success, 1 on domain errors, 2 on usage or configuration errors
    """
    argv: List[str] = list(sys.argv[1:] if argv is None else argv)
    configure_logging()

    try:
        args = build_parser().parse_args(argv)
        flags = _flags(args)
        file_config = load_config_file(args.config) if args.config else None
        config = build_run_config(args.command, flags, file_config)
    except ConfigError as e:
        print(f"{e.code}: {e}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as e:
        # --help
        return e.code if isinstance(e.code, int) else EXIT_USAGE

    logger.info(f"Running '{config.command}' with reaction {config.reaction}")

    try:
        spec = load_reaction(config.reaction)
        summary = HANDLERS[config.command](spec, config)
    except ConfigError as e:
        print(f"{e.code}: {e}", file=sys.stderr)
        return EXIT_USAGE
    except TerraceError as e:
        logger.warning(f"Command '{config.command}' failed: {e.code}: {e}")
        print(f"{e.code}: {e}", file=sys.stderr)
        return EXIT_DOMAIN
    except Exception as e:
        logger.error(f"Unexpected error in '{config.command}': {str(e)}")
        print(f"InternalError: {e}", file=sys.stderr)
        return EXIT_DOMAIN

    print(summary)
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
