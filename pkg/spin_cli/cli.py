"""
spinsim: command-line surface for the multi-body spin collapse simulator.

    spinsim simulate --mean-theta 1.0 --out results/run
    spinsim ensemble --config configs/desk_scale.json --parallelism 8 --out results/sweep
    spinsim lyapunov --out results/chaos
    spinsim validate --threshold 0.07 --out results/validate

Exit codes: 0 ok, 1 validation failed, 2 config error or unwritable output,
3 simulate ended Unsettled, 4 numerical failure, 5 empty Lyapunov fit window.
"""
import functools
import logging
import math
from pathlib import Path
from typing import Optional

import click

from simulation.chaos import divergence_series, fit_lyapunov
from simulation.ensemble import run_sweep
from simulation.trajectory import Outcome, simulate
from spin_cli.config import CliSettings, apply_overrides, load_config
from spin_cli.output import (
    Manifest,
    divergence_frame,
    read_divergence_csv,
    sweep_frame,
    trajectory_frame,
    write_csv,
    write_json,
)
from spin_cli.validation import DEFAULT_THRESHOLD, render_report, run_checks
from spin_cli.version import __version__
from spin_types.errors import ConfigError, FitWindowError, NumericalError

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VALIDATION_FAILED = 1
EXIT_CONFIG = 2
EXIT_UNSETTLED = 3
EXIT_NUMERICAL = 4
EXIT_FIT_WINDOW = 5

SEED = click.IntRange(0, 2**64 - 1)
MEAN_THETA = click.FloatRange(0.0, math.pi)


def _exit_codes(command):
    """Run a command body and turn its return value or error into the exit-code contract"""
    @functools.wraps(command)
    def wrapper(*args, **kwargs):
        ctx = click.get_current_context()
        try:
            code = command(*args, **kwargs)
        except ConfigError as e:
            click.echo(f"❌ Config error:\n{e}", err=True)
            code = EXIT_CONFIG
        except FitWindowError as e:
            click.echo(f"❌ Fit window error: {e}", err=True)
            code = EXIT_FIT_WINDOW
        except NumericalError as e:
            logger.error(f"Numerical failure: {e}")
            click.echo(f"❌ Numerical failure: {e}", err=True)
            code = EXIT_NUMERICAL
        except OSError as e:
            logger.error(f"Cannot write output: {e}")
            click.echo(f"❌ Cannot write output: {e}", err=True)
            code = EXIT_CONFIG
        ctx.exit(code)
    return wrapper


def _common_options(command):
    command = click.option("--config", "config_path", type=click.Path(dir_okay=False, path_type=Path),
                           default=None, help="JSON RootConfig; omitted blocks take defaults")(command)
    command = click.option("--out", "out_dir", type=click.Path(file_okay=False, path_type=Path),
                           default=None, help="Output directory (default: $SPINSIM_OUT_DIR or ./results)")(command)
    command = click.option("--seed", type=SEED, default=None,
                           help="Seed (default: sweep.base_seed of the config)")(command)
    return command


def _out_dir(ctx: click.Context, out_dir: Optional[Path], command: str) -> Path:
    if out_dir is not None:
        return out_dir
    settings: CliSettings = ctx.obj["settings"]
    return settings.out_dir / command


@click.group()
@click.option("--log-level", default=None, help="DEBUG, INFO, WARNING, ... (default: $SPINSIM_LOG_LEVEL or INFO)")
@click.version_option(__version__, prog_name="spinsim")
@click.pass_context
def cli(ctx: click.Context, log_level: Optional[str]):
    """Multi-body semi-classical spin model: collapse statistics and chaos."""
    settings = CliSettings()
    logging.basicConfig(
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        level=(log_level or settings.log_level).upper(),
    )
    ctx.ensure_object(dict)
    ctx.obj["settings"] = settings


@cli.command("simulate")
@_common_options
@click.option("--mean-theta", type=MEAN_THETA, required=True, help="Mean initial angle in radians, [0, pi]")
@click.pass_context
@_exit_codes
def cmd_simulate(ctx, config_path, out_dir, seed, mean_theta):
    """Run one collapse trajectory and write its samples."""
    config = load_config(config_path)
    seed = config.sweep.base_seed if seed is None else seed
    out_dir = _out_dir(ctx, out_dir, "simulate")
    manifest = Manifest("simulate", config, {"mean_theta": mean_theta, "seed": seed})

    record = simulate(mean_theta, seed, config.model, config.run, record_samples=True,
                      integrator=config.integrator)

    write_csv(trajectory_frame(record), out_dir / "trajectory.csv")
    manifest.write_resolved_config(out_dir)
    write_json(
        {
            "outcome": record.outcome.value,
            "settle_time": record.settle_time,
            "final_time": record.final_time,
            "manifest": manifest.to_dict(),
        },
        out_dir / "summary.json",
    )
    click.echo(f"Outcome: {record.outcome.value}"
               + ("" if record.settle_time is None else f" (settled at t={record.settle_time:g})"))
    return EXIT_UNSETTLED if record.outcome is Outcome.UNSETTLED else EXIT_OK


@cli.command("ensemble")
@_common_options
@click.option("--parallelism", type=click.IntRange(min=1), default=None, help="Worker processes")
@click.pass_context
@_exit_codes
def cmd_ensemble(ctx, config_path, out_dir, seed, parallelism):
    """Sweep mean angles over [0, pi] and tally Up/Down fractions."""
    config = apply_overrides(load_config(config_path),
                             {"sweep.base_seed": seed, "sweep.parallelism": parallelism})
    out_dir = _out_dir(ctx, out_dir, "ensemble")
    manifest = Manifest("ensemble", config)

    result = run_sweep(config.sweep, config.model, config.run, config.integrator)

    write_csv(sweep_frame(result), out_dir / "sweep.csv")
    manifest.write_resolved_config(out_dir)
    write_json(
        {
            "rms_residual": result.rms_residual,
            "unsettled_rate": result.unsettled_rate,
            "manifest": manifest.to_dict(),
        },
        out_dir / "summary.json",
    )
    rms = "undefined" if result.rms_residual is None else f"{result.rms_residual:.4f}"
    click.echo(f"RMS residual vs cos^2(theta/2): {rms}")
    return EXIT_OK


@cli.command("lyapunov")
@_common_options
@click.option("--mean-theta", type=MEAN_THETA, default=math.pi / 2, show_default=True,
              help="Mean initial angle of the reference trajectory")
@click.option("--dissipative", is_flag=True, default=False, help="Keep damping on from t=0")
@click.option("--series-file", type=click.Path(exists=True, dir_okay=False, path_type=Path), default=None,
              help="Fit an existing t,ln_separation CSV instead of simulating")
@click.pass_context
@_exit_codes
def cmd_lyapunov(ctx, config_path, out_dir, seed, mean_theta, dissipative, series_file):
    """Measure trajectory divergence and fit the Lyapunov exponent."""
    config = apply_overrides(load_config(config_path), {"chaos.dissipative": dissipative or None})
    seed = config.sweep.base_seed if seed is None else seed
    out_dir = _out_dir(ctx, out_dir, "lyapunov")
    arguments = {"mean_theta": mean_theta, "seed": seed,
                 "series_file": None if series_file is None else str(series_file)}
    manifest = Manifest("lyapunov", config, arguments)

    if series_file is not None:
        series = read_divergence_csv(series_file)
    else:
        series = divergence_series(mean_theta, seed, config.model, config.chaos, config.run, config.integrator)
    write_csv(divergence_frame(series), out_dir / "divergence.csv")
    manifest.write_resolved_config(out_dir)

    estimate = fit_lyapunov(series, config.chaos)
    write_json(
        {
            "lambda": estimate.exponent,
            "r_squared": estimate.r_squared,
            "saturated_at": estimate.saturated_at,
            "fit_window": list(estimate.fit_window),
            "fit_points": estimate.fit_points,
            "manifest": manifest.to_dict(),
        },
        out_dir / "summary.json",
    )
    click.echo(f"lambda = {estimate.exponent:.4f} (r^2 = {estimate.r_squared:.4f}, {estimate.fit_points} points)")
    return EXIT_OK


@cli.command("validate")
@_common_options
@click.option("--threshold", type=click.FloatRange(min=0.0), default=DEFAULT_THRESHOLD, show_default=True,
              help="RMS residual must be below this")
@click.option("--parallelism", type=click.IntRange(min=1), default=None, help="Worker processes")
@click.pass_context
@_exit_codes
def cmd_validate(ctx, config_path, out_dir, seed, threshold, parallelism):
    """Run the acceptance sweep and check it against cos^2(theta/2)."""
    config = apply_overrides(load_config(config_path),
                             {"sweep.base_seed": seed, "sweep.parallelism": parallelism})
    out_dir = _out_dir(ctx, out_dir, "validate")
    manifest = Manifest("validate", config, {"threshold": threshold})

    result = run_sweep(config.sweep, config.model, config.run, config.integrator)
    checks = run_checks(result, threshold)
    passed = all(c.passed for c in checks)
    report = render_report(result, checks)

    write_csv(sweep_frame(result), out_dir / "sweep.csv")
    (out_dir / "report.txt").write_text(report, encoding="utf-8")
    manifest.write_resolved_config(out_dir)
    write_json(
        {
            "passed": passed,
            "rms_residual": result.rms_residual,
            "checks": [c.to_dict() for c in checks],
            "manifest": manifest.to_dict(),
        },
        out_dir / "summary.json",
    )
    click.echo(report, nl=False)
    return EXIT_OK if passed else EXIT_VALIDATION_FAILED


def main():
    cli(prog_name="spinsim")


if __name__ == "__main__":
    main()
