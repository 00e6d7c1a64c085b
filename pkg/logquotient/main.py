"""CLI interface: subcommands over the dynamics, reconstruction and scenario modules."""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path
from typing import Any, Callable, NamedTuple, Optional

import numpy as np
from rich.console import Console
from rich.logging import RichHandler
from rich.panel import Panel
from rich.table import Table
from rich.theme import Theme

from . import __version__, numerics
from .config import Config
from .dynamics import (
    ControlInput,
    LogLinearSystem,
    control_from_dict,
    default_dt_max,
    eigenmodes,
    gibbs_deviation,
    oscillation_parameters,
    simulate,
    spectral_abscissa,
    steady_state,
)
from .errors import ConfigError, LogQuotientError, NumericalError, ValidationError
from .network import (
    check_quotient_achievable,
    conservation_basis,
    cycle_basis,
    load_network,
    wegscheider_check,
)
from .presets import SCENARIO_PRESETS, load_config_file, scenario_names
from .reconstruct import ReconstructionProblem, SolverSettings, reconstruct_concentrations
from .runs import (
    RunManifest,
    RunTimer,
    Series,
    compare_summaries,
    jsonable,
    load_summary,
    make_sparkline,
    save_manifest,
    save_summary,
    trajectory_series,
    write_series,
)
from .scenarios import build_scenario, run_scenario, time_grid

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

# ─── Rich theme ──────────────────────────────────────────────
THEME = Theme({
    "info": "dim cyan",
    "warning": "bold yellow",
    "error": "bold red",
    "success": "bold green",
    "accent": "bold magenta",
})

console = Console(theme=THEME)


class RunInputs(NamedTuple):
    """A system ready to integrate, from a system config or a scenario."""

    system: LogLinearSystem
    control: ControlInput
    x0: np.ndarray
    times: np.ndarray
    config: dict


# ─── Argument helpers ────────────────────────────────────────

def _floats(text: str) -> list[float]:
    """Comma-separated numbers, e.g. ``0.5,1,2``."""
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None
    if not values:
        raise argparse.ArgumentTypeError("expected at least one number")
    return values


def _parse_set(items: list[str]) -> dict[str, dict[str, Any]]:
    """``KEY=VALUE`` overrides; values are JSON when they parse, strings otherwise.

    Keys default to the ``parameters`` section; ``time.t_end`` style keys pick a section.
    """
    sections: dict[str, dict[str, Any]] = {"parameters": {}, "time": {}}
    for item in items:
        key, sep, raw = item.partition("=")
        if not sep or not key:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        section, dot, name = key.partition(".")
        if not dot:
            section, name = "parameters", key
        if section not in sections:
            raise ConfigError(f"--set section must be 'parameters' or 'time', got {section!r}")
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        sections[section][name] = value
    return sections


def _scenario_config(args: argparse.Namespace, name: Optional[str]) -> dict:
    """Scenario config from a file or a preset name, with CLI overrides applied."""
    if args.config:
        data = load_config_file(args.config)
        if "scenario" not in data:
            raise ConfigError(f"{args.config} is not a scenario config (no 'scenario' key)")
        if name and data["scenario"] != name:
            raise ConfigError(f"{args.config} configures {data['scenario']}, not {name}")
    elif name:
        data = {"scenario": name}
    else:
        raise ConfigError("give a scenario name or --config")

    data.setdefault("parameters", {})
    data.setdefault("time", {})
    overrides = _parse_set(getattr(args, "set", None) or [])
    data["parameters"].update(overrides["parameters"])
    data["time"].update(overrides["time"])

    shorthands = {
        "ratio": "ratio", "alpha": "alpha", "drive": "u", "u0": "u0", "c_total": "C_total",
    }
    for attr, key in shorthands.items():
        value = getattr(args, attr, None)
        if value is not None:
            data["parameters"][key] = value
    if getattr(args, "undriven", False):
        data["parameters"]["driven"] = False
    _apply_time_flags(args, data)
    return data


def _apply_time_flags(args: argparse.Namespace, data: dict) -> None:
    if args.t_end is not None:
        data.setdefault("time", {})["t_end"] = args.t_end
    if args.samples is not None:
        data.setdefault("time", {})["samples"] = args.samples


def _system_inputs(data: dict) -> RunInputs:
    """Parse ``{system: {K, K_eq}, x0 | Q0, control, time}``."""
    system_data = data.get("system")
    if not isinstance(system_data, dict):
        raise ConfigError("system config needs a 'system' object with K and K_eq")
    try:
        system = LogLinearSystem(system_data["K"], system_data["K_eq"])
    except KeyError as e:
        raise ConfigError(f"system.{e.args[0]} is required") from None
    except ValidationError as e:
        raise ConfigError(f"system: {e}") from e

    if "x0" in data:
        x0 = numerics.as_vector(data["x0"], "x0", system.r)
    elif "Q0" in data:
        x0 = system.log_deviation(data["Q0"])
    else:
        x0 = np.zeros(system.r)

    control = control_from_dict(data.get("control"), system.r)
    time_section = data.get("time", {})
    try:
        t_end = float(time_section.get("t_end", 10.0))
        samples = int(time_section.get("samples", 500))
    except (TypeError, ValueError, AttributeError):
        raise ConfigError("time must be an object with numeric t_end and samples") from None
    return RunInputs(system, control, x0, time_grid(t_end, samples), data)


def _run_inputs(args: argparse.Namespace, cfg: Config) -> RunInputs:
    """Resolve --scenario / --config into a system to integrate."""
    scenario_name = getattr(args, "scenario", None)
    if scenario_name or (args.config and "scenario" in load_config_file(args.config)):
        data = _scenario_config(args, scenario_name)
        scenario = build_scenario(data)
        return RunInputs(scenario.system, scenario.control, scenario.x0, scenario.times, scenario.config)
    if not args.config:
        raise ConfigError("give --config FILE or --scenario NAME")
    data = load_config_file(args.config)
    data.setdefault("time", {}).setdefault("samples", cfg.samples)
    _apply_time_flags(args, data)
    return _system_inputs(data)


def _settings(cfg: Config) -> SolverSettings:
    return SolverSettings(cfg.newton_tol, cfg.newton_max_iter, cfg.divergence_factor)


# ─── Output ──────────────────────────────────────────────────

def _finish(
    args: argparse.Namespace,
    cfg: Config,
    timer: RunTimer,
    resolved: dict,
    summary: dict,
    tables: dict[str, Series],
) -> int:
    """Write tables, summary and manifest; with --validate compare against the stored summary."""
    out_dir = Path(args.out) if args.out else cfg.out_dir
    summary = jsonable(summary)

    if args.validate:
        mismatches = compare_summaries(load_summary(out_dir), summary)
        if mismatches:
            table = Table(title="Validation mismatches", header_style="bold red")
            table.add_column("Key", style="bold")
            table.add_column("Stored", justify="right")
            table.add_column("Recomputed", justify="right")
            for m in mismatches:
                table.add_row(m.path, str(m.expected), str(m.actual))
            console.print(table)
            return EXIT_NUMERICAL
        console.print(f"[success]✅ {out_dir / 'summary.json'} reproduced within tolerance[/success]")
        return EXIT_OK

    out_dir.mkdir(parents=True, exist_ok=True)
    files = [p.name for p in write_series(out_dir, tables)]
    files.append(save_summary(out_dir, summary).name)
    manifest = timer.finish(RunManifest(
        command=args.command,
        config=jsonable(resolved),
        out_dir=str(out_dir),
        files=files,
        arguments=list(getattr(args, "argv", [])),
    ))
    save_manifest(out_dir, manifest)
    console.print(f"[success]💾 {len(files)} file(s) written to {out_dir}[/success]")
    return EXIT_OK


def _vector_text(values) -> str:
    return ", ".join(f"{v:.6g}" for v in np.asarray(values).ravel())


def _trajectory_panel(title: str, inputs: RunInputs, x: np.ndarray, Q: np.ndarray) -> None:
    stable = "[green]stable[/green]" if inputs.system.is_stable else "[yellow]unstable[/yellow]"
    console.print(
        Panel(
            f"[bold]Reactions:[/bold] {inputs.system.r} | [bold]Samples:[/bold] {inputs.times.size} "
            f"| [bold]t_end:[/bold] {inputs.times[-1]:g} s | {stable}\n"
            f"[bold]Final x:[/bold] {_vector_text(x[-1])}\n"
            f"[bold]Final Q:[/bold] {_vector_text(Q[-1])}\n"
            f"[bold]x_1:[/bold] {make_sparkline(x[:, 0])}",
            title=f"[bold magenta]{title}[/bold magenta]",
            border_style="magenta",
        )
    )


# ─── Commands ────────────────────────────────────────────────

def cmd_simulate(args: argparse.Namespace, cfg: Config) -> int:
    timer = RunTimer()
    inputs = _run_inputs(args, cfg)
    dt_max = default_dt_max(inputs.times, cfg.dt_max)
    trajectory = simulate(inputs.system, inputs.x0, inputs.control, inputs.times, dt_max=dt_max)

    summary = {
        "command": "simulate",
        "r": inputs.system.r,
        "samples": int(inputs.times.size),
        "t_end": float(inputs.times[-1]),
        "dt_max": dt_max,
        "stable": inputs.system.is_stable,
        "spectral_abscissa": spectral_abscissa(inputs.system),
        "final_x": trajectory.final_x,
        "final_Q": trajectory.final_Q,
        "final_delta_G": gibbs_deviation(trajectory.final_x, T=cfg.temperature),
    }
    _trajectory_panel("📈 Simulation", inputs, trajectory.x, trajectory.Q)
    return _finish(args, cfg, timer, inputs.config, summary,
                   {"trajectory": trajectory_series(trajectory)})


def cmd_steady_state(args: argparse.Namespace, cfg: Config) -> int:
    timer = RunTimer()
    inputs = _run_inputs(args, cfg)
    if args.u is not None:
        u = np.asarray(args.u, dtype=float)
    elif inputs.control.constant_value is not None:
        u = inputs.control.constant_value
    else:
        raise ConfigError("steady state needs a constant drive: pass --u or a constant control")
    result = steady_state(inputs.system, u)
    delta_g = gibbs_deviation(result.x, T=cfg.temperature)

    table = Table(title="⚖️ Steady state", header_style="bold cyan")
    table.add_column("Reaction", justify="center")
    table.add_column("u (1/s)", justify="right")
    table.add_column("x_ss", justify="right")
    table.add_column("Q_ss", justify="right")
    table.add_column("ΔG_ss (J/mol)", justify="right")
    for i in range(inputs.system.r):
        table.add_row(str(i + 1), f"{u[i]:.6g}", f"{result.x[i]:.6g}", f"{result.Q[i]:.6g}", f"{delta_g[i]:.6g}")
    console.print(table)

    summary = {"command": "steady-state", "u": u, "x_ss": result.x, "Q_ss": result.Q, "delta_G_ss": delta_g}
    return _finish(args, cfg, timer, inputs.config, summary, {})


def cmd_eigen(args: argparse.Namespace, cfg: Config) -> int:
    timer = RunTimer()
    inputs = _run_inputs(args, cfg)
    decomposition = eigenmodes(inputs.system)
    oscillations = oscillation_parameters(inputs.system)

    table = Table(title="🔬 Eigenmodes of K", header_style="bold cyan")
    table.add_column("Mode", justify="center")
    table.add_column("λ", justify="right")
    table.add_column("Timescale (s)", justify="right")
    table.add_column("Vector", justify="left")
    for i, lam in enumerate(decomposition.eigenvalues):
        table.add_row(
            str(i + 1),
            f"{lam.real:.6g}" + (f" {lam.imag:+.6g}i" if lam.imag else ""),
            f"{decomposition.timescales[i]:.6g}",
            _vector_text(np.real_if_close(decomposition.modes[:, i])),
        )
    console.print(table)
    for osc in oscillations:
        console.print(
            f"  [accent]Oscillation[/accent] damping {osc.damping:.6g} 1/s, "
            f"ω {osc.frequency:.6g} rad/s, period {osc.period:.6g} s"
        )

    summary = {
        "command": "eigen",
        "symmetric": decomposition.symmetric,
        "stable": inputs.system.is_stable,
        "eigenvalues": decomposition.eigenvalues,
        "timescales": decomposition.timescales,
        "modes": decomposition.modes,
        "oscillations": [osc._asdict() for osc in oscillations],
    }
    return _finish(args, cfg, timer, inputs.config, summary, {})


def cmd_reconstruct(args: argparse.Namespace, cfg: Config) -> int:
    timer = RunTimer()
    net = load_network(args.network)
    basis = conservation_basis(net)
    y_star = args.y_star if args.y_star is not None else []
    problem = ReconstructionProblem(net, args.x_star, y_star)
    result = reconstruct_concentrations(problem, c0=args.c0, settings=_settings(cfg))

    table = Table(title="🧪 Reconstructed concentrations", header_style="bold cyan")
    table.add_column("Species", style="bold")
    table.add_column("c*", justify="right")
    for name, c in zip(net.species, result.c_star):
        table.add_row(name, f"{c:.10g}")
    console.print(table)
    console.print(
        f"  [info]{result.iterations} Newton iteration(s); residuals: totals "
        f"{result.residual_totals:.3e}, quotients {result.residual_quotients:.3e}[/info]"
    )

    summary = {
        "command": "reconstruct",
        "species": list(net.species),
        "conservation_laws": basis.m,
        **result.to_dict(),
    }
    table_rows = np.array(list(zip(net.species, result.c_star)), dtype=object)
    resolved = {"network": net.to_dict(), "x_star": problem.x_star, "y_star": problem.y_star}
    return _finish(args, cfg, timer, resolved, summary,
                   {"concentrations": Series(["species", "concentration"], table_rows)})


def cmd_scenario(args: argparse.Namespace, cfg: Config) -> int:
    if args.list:
        table = Table(title="📚 Scenario presets", header_style="bold cyan")
        table.add_column("Name", style="bold")
        table.add_column("Network")
        table.add_column("Outputs")
        for name in scenario_names():
            preset = SCENARIO_PRESETS[name]
            table.add_row(name, str(preset["network"]), ", ".join(preset["outputs"]))
        console.print(table)
        return EXIT_OK

    timer = RunTimer()
    data = _scenario_config(args, args.name)
    scenario = build_scenario(data)
    result = run_scenario(
        scenario,
        settings=_settings(cfg),
        dt_max=default_dt_max(scenario.times, cfg.dt_max),
    )

    inputs = RunInputs(scenario.system, scenario.control, scenario.x0, scenario.times, scenario.config)
    _trajectory_panel(f"🧫 Scenario: {scenario.name}", inputs, result.trajectory.x, result.trajectory.Q)
    _print_highlights(result.summary)

    tables = {"trajectory": trajectory_series(result.trajectory), **result.series}
    return _finish(args, cfg, timer, scenario.config, result.summary, tables)


def cmd_check(args: argparse.Namespace, cfg: Config) -> int:
    timer = RunTimer()
    net = load_network(args.network)
    basis = conservation_basis(net)
    cycles = cycle_basis(net)

    console.print(Panel(net.summary(), title="[bold magenta]🔗 Network[/bold magenta]", border_style="magenta"))
    summary: dict[str, Any] = {
        "command": "check",
        "species": list(net.species),
        "reactions": list(net.reactions),
        "rank": net.rank,
        "conservation_laws": [dict(zip(net.species, col)) for col in basis.L.T],
        "cycles": [dict(zip(net.reactions, col)) for col in cycles.T],
    }

    if args.k_eq is not None:
        report = wegscheider_check(net, args.k_eq)
        status = "consistent" if report.consistent else "inconsistent"
        style = "success" if report.consistent else "error"
        console.print(
            f"[{style}]Wegscheider: {status}[/{style}] "
            f"(max cycle violation {report.max_violation:.6g})"
        )
        summary.update({
            "wegscheider": status,
            "consistent": report.consistent,
            "max_violation": report.max_violation,
            "violations": report.violations,
        })
    if args.x is not None:
        achievable = check_quotient_achievable(net, args.x)
        label = "achievable" if achievable.achievable else "not achievable"
        style = "success" if achievable.achievable else "warning"
        console.print(f"[{style}]ln Q: {label}[/{style}] (residual {achievable.residual:.3e})")
        summary.update({"achievable": achievable.achievable, "achievability_residual": achievable.residual})

    console.print(
        f"  [info]rank {net.rank}, {basis.m} conservation law(s), {cycles.shape[1]} cycle(s)[/info]"
    )
    resolved = {"network": net.to_dict(), "K_eq": args.k_eq, "x": args.x}
    return _finish(args, cfg, timer, resolved, summary, {})


COMMANDS: dict[str, Callable[[argparse.Namespace, Config], int]] = {
    "simulate": cmd_simulate,
    "steady-state": cmd_steady_state,
    "eigen": cmd_eigen,
    "reconstruct": cmd_reconstruct,
    "scenario": cmd_scenario,
    "check": cmd_check,
}


def _print_highlights(summary: dict) -> None:
    """Top-level scalar entries of a scenario summary."""
    table = Table(show_header=True, header_style="bold cyan")
    table.add_column("Quantity", style="bold")
    table.add_column("Value", justify="right")
    for key, value in summary.items():
        if isinstance(value, bool) or isinstance(value, str):
            table.add_row(key, str(value))
        elif isinstance(value, (int, float)) and math.isfinite(value):
            table.add_row(key, f"{value:.10g}")
    console.print(table)


# ─── Entry point ─────────────────────────────────────────────

def _setup_logging(level: str) -> None:
    logging.basicConfig(
        level=level,
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=Console(stderr=True), show_path=False)],
        force=True,
    )


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=None, help="System or scenario JSON file")
    common.add_argument("--out", default=None, help="Output directory (default: $LOGQUOTIENT_OUT_DIR or results)")
    common.add_argument("--t-end", type=float, default=None, dest="t_end", help="Final time (s)")
    common.add_argument("--samples", type=int, default=None, help="Number of output samples")
    common.add_argument("--seed", type=int, default=None, help="Reserved; every computation is deterministic")
    common.add_argument("--validate", action="store_true",
                        help="Recompute and compare against the stored summary.json")
    common.add_argument("-v", "--verbose", action="store_true", help="Debug logging")

    parser = argparse.ArgumentParser(
        prog="logquotient",
        description="Log-linear reaction quotient dynamics for chemical reaction networks",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subparsers = parser.add_subparsers(dest="command", help="Operation")

    sim = subparsers.add_parser("simulate", parents=[common], help="Integrate dx/dt = -Kx + u(t)")
    sim.add_argument("--scenario", default=None, help="Simulate a scenario preset's system")

    ss = subparsers.add_parser("steady-state", parents=[common], help="x_ss = K⁻¹u and Q_ss")
    ss.add_argument("--scenario", default=None, help="Use a scenario preset's system")
    ss.add_argument("--u", type=_floats, default=None, help="Constant drive, comma-separated")

    eig = subparsers.add_parser("eigen", parents=[common], help="Eigenmodes and oscillation report")
    eig.add_argument("--scenario", default=None, help="Use a scenario preset's system")

    rec = subparsers.add_parser("reconstruct", parents=[common], help="Concentrations from ln Q and totals")
    rec.add_argument("--network", required=True, help="Network JSON file or preset name")
    rec.add_argument("--x-star", type=_floats, required=True, dest="x_star", help="Target ln Q per reaction")
    rec.add_argument("--y-star", type=_floats, default=None, dest="y_star", help="Target conserved totals")
    rec.add_argument("--c0", type=_floats, default=None, help="Explicit positive base point")

    scen = subparsers.add_parser("scenario", parents=[common], help="Run a scenario preset")
    scen.add_argument("name", nargs="?", default=None, help="Preset name (see --list)")
    scen.add_argument("--list", action="store_true", help="List presets")
    scen.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                      help="Override a parameter (repeatable; time.KEY for the time section)")
    scen.add_argument("--ratio", type=float, default=None, help="Hexokinase ATP/ADP ratio")
    scen.add_argument("--alpha", type=float, default=None, help="Feedback strength")
    scen.add_argument("--drive", type=float, default=None, help="Feedback drive u")
    scen.add_argument("--u0", type=float, default=None, help="Glycolysis drive amplitude")
    scen.add_argument("--c-total", type=float, default=None, dest="c_total", help="Conserved total")
    scen.add_argument("--undriven", action="store_true", help="Glycolysis without drive")

    chk = subparsers.add_parser("check", parents=[common], help="Wegscheider and achievability report")
    chk.add_argument("--network", required=True, help="Network JSON file or preset name")
    chk.add_argument("--k-eq", type=_floats, default=None, dest="k_eq", help="Equilibrium constants")
    chk.add_argument("--x", type=_floats, default=None, help="Log-quotients to test for achievability")
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    """Entry point."""
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    args = parser.parse_args(argv)
    args.argv = argv

    if not args.command:
        parser.print_help()
        return EXIT_CONFIG

    try:
        config = Config.load()
        if args.samples is not None:
            config.samples = args.samples
        if args.out:
            config.out_dir = Path(args.out)
        config.validate()
        _setup_logging("DEBUG" if args.verbose else config.log_level)
        return COMMANDS[args.command](args, config)
    except ValidationError as e:
        console.print(Panel(str(e), title="[error]❌ Invalid input[/error]", border_style="red"))
        return EXIT_CONFIG
    except NumericalError as e:
        console.print(Panel(str(e), title=f"[error]❌ Numerical failure in {e.operation}[/error]",
                            border_style="red"))
        return EXIT_NUMERICAL
    except LogQuotientError as e:
        console.print(f"[error]❌ {e}[/error]")
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
