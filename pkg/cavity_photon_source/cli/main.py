"""Command-line entry point (``cps``)."""

from pathlib import Path
from typing import Any, Callable, Optional

import click
import structlog

from shared.logging import clear_context, configure_logging

from .. import __version__
from ..config import get_settings
from ..utils.error_handler import handle_command_errors
from . import scenarios

logger = structlog.get_logger(__name__)

_config_option = click.option(
    "--config",
    "config_path",
    required=True,
    type=click.Path(path_type=Path),
    help="Scenario TOML file.",
)
_out_option = click.option(
    "--out", type=click.Path(path_type=Path), default=None, help="Output directory (overrides run.output_dir)."
)


def _run(ctx: click.Context, func: Callable[..., Any], *args: Any, **kwargs: Any) -> None:
    code = handle_command_errors()(func)(*args, **kwargs)
    clear_context()
    ctx.exit(code)


@click.group()
@click.option("--log-level", default=None, help="Overrides CPS_LOG_LEVEL.")
@click.option("--json-logs/--console-logs", default=None, help="Overrides CPS_JSON_LOGS.")
@click.version_option(__version__, prog_name="cps")
def cli(log_level: Optional[str], json_logs: Optional[bool]) -> None:
    """Cavity-QED single-photon source simulator."""
    settings = get_settings()
    configure_logging(
        log_level=log_level or settings.log_level,
        json_logs=settings.json_logs if json_logs is None else json_logs,
        service_name="cps",
    )


@cli.command("design-pulse")
@_config_option
@_out_option
@click.pass_context
def design_pulse(ctx: click.Context, config_path: Path, out: Optional[Path]) -> None:
    """Invert the configured photon shape into a drive pulse."""

    def run() -> None:
        config = scenarios.prepare_scenario(config_path, "design-pulse", out=out)
        design = scenarios.cmd_design_pulse(config)
        click.echo(
            f"P_emit={design.emission_probability:.4f} feasible={design.inversion.feasible} "
            f"shape_error={design.shape_error:.2e} -> {config.run.output_dir}"
        )

    _run(ctx, run)


@cli.command()
@_config_option
@click.option("--seed", type=int, default=None, help="Overrides run.rng_seed.")
@_out_option
@click.option("--format", "click_format", type=click.Choice(["text", "binary"]), default=None)
@click.option("--threads", type=click.IntRange(min=1), default=None, help="Worker threads (default CPS_THREADS).")
@click.option("--shots", type=click.IntRange(min=1), default=None, help="Overrides run.n_shots.")
@click.pass_context
def simulate(
    ctx: click.Context,
    config_path: Path,
    seed: Optional[int],
    out: Optional[Path],
    click_format: Optional[str],
    threads: Optional[int],
    shots: Optional[int],
) -> None:
    """Simulate a click stream and its ground-truth sidecar."""

    def run() -> None:
        config = scenarios.prepare_scenario(
            config_path, "simulate", seed=seed, out=out, click_format=click_format, n_shots=shots
        )
        result = scenarios.cmd_simulate(config, threads=threads)
        click.echo(f"clicks={len(result.stream)} photons={len(result.photons)} -> {config.run.output_dir}")

    _run(ctx, run)


@cli.command()
@click.argument("stream_path", type=click.Path(path_type=Path))
@_config_option
@_out_option
@click.option(
    "--perpendicular",
    "perpendicular_path",
    type=click.Path(path_type=Path),
    default=None,
    help="Perpendicular-polarization stream for HOM visibility.",
)
@click.pass_context
def analyze(
    ctx: click.Context,
    stream_path: Path,
    config_path: Path,
    out: Optional[Path],
    perpendicular_path: Optional[Path],
) -> None:
    """Run the statistics suite on a click-stream file."""

    def run() -> None:
        config = scenarios.prepare_scenario(config_path, "analyze", out=out)
        records = scenarios.cmd_analyze(config, stream_path, perpendicular_path)
        click.echo(f"statistics={len(records)} -> {config.run.output_dir}")

    _run(ctx, run)


@cli.command()
@click.argument("summary_path", type=click.Path(path_type=Path))
@click.option(
    "--ground-truth",
    "ground_truth_path",
    type=click.Path(path_type=Path),
    default=None,
    help="Sidecar of the simulated run, for the overlap fraction.",
)
@click.pass_context
def report(ctx: click.Context, summary_path: Path, ground_truth_path: Optional[Path]) -> None:
    """Print statistics next to the published reference values."""

    def run() -> None:
        rows = scenarios.cmd_report(summary_path, ground_truth_path)
        click.echo(scenarios.format_report(rows))

    _run(ctx, run)


if __name__ == "__main__":
    cli()
