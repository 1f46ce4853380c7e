"""Command line entry point: generate, run, verify, compare and sweep."""

import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional

import click
import typer
import yaml
from dotenv import load_dotenv
from typer.core import TyperGroup

from harness import ExperimentHarness
from models import RunConfigFile, load_run_config
from supplychain import ConfigError, SupplyChainError
from supplychain.tracing import json_safe
from utils import configure_logging

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_VERIFY_FAILED = 2


class CommandGroup(TyperGroup):
    """Usage errors exit with the same code as config errors."""

    def make_context(self, info_name, args, parent=None, **extra):
        try:
            return super().make_context(info_name, args, parent=parent, **extra)
        except click.UsageError as error:
            error.exit_code = EXIT_ERROR
            raise

    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except click.UsageError as error:
            error.exit_code = EXIT_ERROR
            raise


app = typer.Typer(
    cls=CommandGroup,
    help="Asynchronous primal-dual supply chain simulator.",
    no_args_is_help=True,
)
logger = logging.getLogger("dapd-sco")


@app.callback()
def main() -> None:
    load_dotenv()
    configure_logging()


def _harness(output_root: Optional[Path], overwrite: bool, workers: Optional[int] = None):
    return ExperimentHarness(
        output_root=str(output_root) if output_root else None,
        overwrite=overwrite,
        workers=workers,
    )


def _echo(data: Any) -> None:
    typer.echo(json.dumps(json_safe(data), indent=2))


def _fail(error: SupplyChainError) -> None:
    typer.echo(f"error: {error.message}", err=True)
    raise typer.Exit(code=EXIT_ERROR)


def _load_config(
    harness: ExperimentHarness,
    config: Optional[Path],
    preset: Optional[str],
    seed: Optional[int],
    algorithm: Optional[str] = None,
) -> RunConfigFile:
    """Config file merged over its preset, with command line overrides applied last."""
    if config is not None:
        loaded = harness.load_config(config)
        if preset is not None and preset != loaded.preset:
            raise ConfigError("preset", "preset given on the command line differs from the config file")
    else:
        loaded = load_run_config({"preset": preset or "theory"})
    overrides: Dict[str, Any] = {}
    if seed is not None:
        overrides["seed"] = seed
    if algorithm is not None:
        overrides["algorithm"] = algorithm
    return loaded.with_overrides(**overrides) if overrides else loaded


def _base_dir(config: Optional[Path]) -> Optional[Path]:
    return config.parent if config is not None else None


def parse_grid(entries: List[str]) -> Dict[str, List[Any]]:
    """``key=v1,v2`` entries into a grid; values are parsed as YAML scalars."""
    grid: Dict[str, List[Any]] = {}
    for entry in entries:
        key, sep, values = entry.partition("=")
        if not sep or not key.strip():
            raise ConfigError("grid", f"expected key=v1,v2 but got '{entry}'")
        grid[key.strip()] = [yaml.safe_load(v) for v in values.split(",") if v.strip()]
    return grid


@app.command()
def generate(
    output: Path = typer.Argument(..., help="Problem JSON file to write"),
    spec: Optional[Path] = typer.Option(None, "--spec", help="YAML generator spec"),
    kind: Optional[str] = typer.Option(None, "--kind", help="three_tier, fig1 or quadratic"),
    seed: Optional[int] = typer.Option(None, "--seed"),
    overwrite: bool = typer.Option(False, "--overwrite"),
) -> None:
    """Write a seeded problem instance and print its Slater/KKT status."""
    try:
        harness = _harness(None, overwrite)
        data: Dict[str, Any] = {}
        if spec is not None:
            data = yaml.safe_load(harness._read_text(spec, key="spec")) or {}
        if kind is not None:
            data["kind"] = kind
        _echo(harness.generate(data, output, seed))
    except SupplyChainError as e:
        _fail(e)


@app.command()
def run(
    config: Optional[Path] = typer.Option(None, "--config", "-c", help="YAML run config"),
    preset: Optional[str] = typer.Option(None, "--preset"),
    algorithm: Optional[str] = typer.Option(None, "--algorithm"),
    seed: Optional[int] = typer.Option(None, "--seed"),
    output: Optional[Path] = typer.Option(None, "--output", "-o", help="Run directory"),
    output_root: Optional[Path] = typer.Option(None, "--output-root"),
    overwrite: bool = typer.Option(False, "--overwrite"),
) -> None:
    """Execute DAPD-SCO or a baseline and write the run directory."""
    try:
        harness = _harness(output_root, overwrite)
        loaded = _load_config(harness, config, preset, seed, algorithm)
        result = harness.run(loaded, output, _base_dir(config))
        _echo(result)
    except SupplyChainError as e:
        _fail(e)


@app.command()
def verify(
    run_dir: Path = typer.Argument(..., help="Run directory written by 'run'"),
) -> None:
    """Run the theory checks; exits 2 when any check fails."""
    try:
        report = _harness(None, True).verify(run_dir)
    except SupplyChainError as e:
        _fail(e)
        return
    for name, check in report.checks.items():
        typer.echo(f"{name}: {check.status}")
    if not report.passed:
        raise typer.Exit(code=EXIT_VERIFY_FAILED)


@app.command()
def compare(
    algorithms: List[str] = typer.Option(
        ["dapdsco", "sync_pd"], "--algorithm", "-a", help="Repeat for each algorithm"
    ),
    seeds: List[int] = typer.Option([0], "--seed", "-s", help="Repeat for each seed"),
    config: Optional[Path] = typer.Option(None, "--config", "-c"),
    preset: Optional[str] = typer.Option(None, "--preset"),
    output: Optional[Path] = typer.Option(None, "--output", "-o"),
    output_root: Optional[Path] = typer.Option(None, "--output-root"),
    workers: Optional[int] = typer.Option(None, "--workers"),
    overwrite: bool = typer.Option(False, "--overwrite"),
) -> None:
    """Per-seed and median comparison table across algorithms."""
    try:
        harness = _harness(output_root, overwrite, workers)
        loaded = _load_config(harness, config, preset, None)
        _echo(harness.compare(loaded, algorithms, seeds, output, _base_dir(config)))
    except SupplyChainError as e:
        _fail(e)


@app.command()
def sweep(
    grid: List[str] = typer.Option(..., "--grid", "-g", help="key=v1,v2 (repeatable)"),
    seeds: Optional[List[int]] = typer.Option(None, "--seed", "-s"),
    config: Optional[Path] = typer.Option(None, "--config", "-c"),
    preset: Optional[str] = typer.Option(None, "--preset"),
    output: Optional[Path] = typer.Option(None, "--output", "-o"),
    output_root: Optional[Path] = typer.Option(None, "--output-root"),
    workers: Optional[int] = typer.Option(None, "--workers"),
    overwrite: bool = typer.Option(False, "--overwrite"),
) -> None:
    """Cross product of config overrides with an aggregate CSV per cell."""
    try:
        harness = _harness(output_root, overwrite, workers)
        loaded = _load_config(harness, config, preset, None)
        _echo(harness.sweep(loaded, parse_grid(grid), seeds, output, _base_dir(config)))
    except SupplyChainError as e:
        _fail(e)


if __name__ == "__main__":
    app()
