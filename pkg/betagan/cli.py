"""
Command-line interface for betagan.
"""

import sys
from pathlib import Path
from typing import Dict, List, Optional

import click
from rich.console import Console
from rich.panel import Panel
from rich.progress import Progress, SpinnerColumn, TextColumn
from rich.table import Table

from . import __version__
from .config import load_config
from .core import BetaGanLab, EvaluationReport, RunResult
from .models import CheckpointError, ConfigError, DataFormatError, TrainingFault, TrainingMode
from .synthetic import LAYOUTS


console = Console()

EXIT_OK = 0
EXIT_OTHER = 1
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_TRAINING = 4

MODES = [mode.value for mode in TrainingMode]


def exit_code_for(error: BaseException) -> int:
    """Map an exception to the process exit code."""
    if isinstance(error, ConfigError):
        return EXIT_CONFIG
    if isinstance(error, (DataFormatError, CheckpointError, OSError)):
        return EXIT_IO
    if isinstance(error, TrainingFault):
        return EXIT_TRAINING
    return EXIT_OTHER


def _fail(what: str, error: BaseException) -> None:
    console.print(f"{what} failed: {error}", style="red")
    sys.exit(exit_code_for(error))


def parse_seeds(text: str) -> List[int]:
    """'0-9' or '1,4,7' or a mix such as '0-2,10'."""
    seeds: List[int] = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part:
            low, high = part.split("-", 1)
            seeds.extend(range(int(low), int(high) + 1))
        else:
            seeds.append(int(part))
    if not seeds:
        raise click.BadParameter(f"no seeds in '{text}'")
    return seeds


@click.group()
@click.version_option(version=__version__)
def main():
    """betagan - annealed adversarial training lab"""
    pass


@main.command()
@click.argument('layout', type=click.Choice(sorted(LAYOUTS)))
@click.option('--n', 'n_points', type=int, default=10000, show_default=True, help='Number of points')
@click.option('--seed', type=int, default=0, show_default=True, help='Random seed')
@click.option('--out', 'out_path', type=click.Path(dir_okay=False), required=True, help='Output CSV path')
@click.option('--rescale', is_flag=True, help='Map points onto [-1, 1]^d and record the transform')
@click.option('--balanced-edges', is_flag=True, help='Visit cube edges in turn (cubes layout only)')
def synth(layout: str, n_points: int, seed: int, out_path: str, rescale: bool, balanced_edges: bool):
    """Write a synthetic dataset and its sidecar description."""
    try:
        lab = BetaGanLab()
        path = lab.synth(layout, n_points, seed, out_path, rescale=rescale, balanced_edges=balanced_edges)
        console.print(f"Wrote {n_points} points to {path}", style="green")
    except Exception as e:
        _fail("Dataset synthesis", e)


@main.command()
@click.option('--config', 'config_path', type=click.Path(), required=True, help='Experiment YAML file')
@click.option('--seed', type=int, help='Override the configured seed')
@click.option('--out', type=click.Path(file_okay=False), help='Override the output directory')
@click.option('--mode', type=click.Choice(MODES), help='Override the training mode')
@click.option('--progress', 'show_progress', is_flag=True, help='Show per-stage progress bars')
def train(config_path: str, seed: Optional[int], out: Optional[str], mode: Optional[str], show_progress: bool):
    """Train one beta-GAN or vanilla run."""
    try:
        config = load_config(config_path).with_overrides(seed=seed, out=out, mode=mode)
        lab = BetaGanLab(show_progress=show_progress)

        if show_progress:
            result = lab.train(config)
        else:
            with Progress(
                SpinnerColumn(),
                TextColumn("[progress.description]{task.description}"),
                console=console
            ) as progress:
                progress.add_task(f"Training {config.mode.value} (seed {config.seed})...", total=None)
                result = lab.train(config)

        _display_run(result)
    except Exception as e:
        _fail("Training", e)


@main.command(name="eval")
@click.argument('samples_path', type=click.Path())
@click.argument('dataset_spec_path', type=click.Path())
@click.option('--out', 'report_path', type=click.Path(dir_okay=False),
              help='Report path (default: report.yaml beside the samples)')
def evaluate(samples_path: str, dataset_spec_path: str, report_path: Optional[str]):
    """Score a sample CSV against a dataset sidecar."""
    try:
        if report_path is None:
            report_path = str(Path(samples_path).parent / "report.yaml")
        report = BetaGanLab().evaluate(samples_path, dataset_spec_path, report_path)
        _display_report(report)
        console.print(f"Report written to {report_path}", style="green")
    except Exception as e:
        _fail("Evaluation", e)


@main.command()
@click.option('--config', 'config_path', type=click.Path(), required=True, help='Experiment YAML file')
@click.option('--seeds', default='0-9', show_default=True, help="Seeds, e.g. '0-9' or '1,3,5'")
@click.option('--out', type=click.Path(file_okay=False), help='Override the output directory')
@click.option('--mode', type=click.Choice(MODES), help='Override the training mode')
@click.option('--paired', is_flag=True, help='Run beta_gan and a tau-matched vanilla run per seed')
@click.option('--workers', type=int, help='Worker processes (default: CPU count)')
def sweep(config_path: str, seeds: str, out: Optional[str], mode: Optional[str], paired: bool,
          workers: Optional[int]):
    """Run seed replicas concurrently and summarize them."""
    try:
        config = load_config(config_path).with_overrides(out=out, mode=mode)
        seed_list = parse_seeds(seeds)
        with Progress(
            SpinnerColumn(),
            TextColumn("[progress.description]{task.description}"),
            console=console
        ) as progress:
            progress.add_task(f"Running {len(seed_list)} seeds...", total=None)
            rows = BetaGanLab().sweep(config, seed_list, paired=paired, workers=workers)
        _display_sweep(rows)
        console.print(f"Summary written to {Path(config.out) / 'sweep_summary.csv'}", style="green")
    except click.BadParameter:
        raise
    except Exception as e:
        _fail("Sweep", e)


def _display_run(result: RunResult) -> None:
    table = Table(title="Training Run")
    table.add_column("Property", style="cyan")
    table.add_column("Value", style="white")

    table.add_row("Mode", result.mode.value)
    table.add_row("Generator", result.generator.spec.describe())
    table.add_row("Discriminator", result.discriminator.spec.describe())
    table.add_row("Steps", str(len(result.trace)))
    table.add_row("Gradient evaluations (tau)", str(result.tau))
    if result.pretrain is not None:
        outcome = "converged" if result.pretrain.success else "budget exhausted"
        table.add_row("Uniform pretraining", f"{outcome} after {result.pretrain.steps} steps")
    table.add_row("Stage snapshots", str(len(result.stage_files)))
    table.add_row("Output", str(result.out_dir))
    console.print(table)


def _display_report(report: EvaluationReport) -> None:
    coverage = report.coverage
    summary = (
        f"Modes covered: {coverage.covered_count}/{coverage.total_modes}\n"
        f"Frozen-noise score: {report.frozen_noise:.4f}"
    )
    if report.ks is not None:
        summary += f"\nMax KS: {max(report.ks):.4f}   Max |corr|: {report.max_abs_correlation:.4f}"
    if report.wireframe_fraction is not None:
        summary += (
            f"\nOn wireframe: {report.wireframe_fraction:.3f}   "
            f"outer/inner: {report.cube_shares[0]:.3f}/{report.cube_shares[1]:.3f}"
        )
    console.print(Panel(summary, title=f"Evaluation ({report.n_samples} samples)", border_style="green"))

    table = Table(title="Mode Fractions")
    table.add_column("Mode", style="cyan")
    table.add_column("Fraction", style="white")
    for index, fraction in enumerate(coverage.fractions):
        table.add_row(str(index), f"{fraction:.4f}")
    console.print(table)


def _display_sweep(rows: List[Dict]) -> None:
    table = Table(title="Sweep Summary")
    for column in ("seed", "mode", "covered_modes", "final_gap", "frozen_noise", "tau"):
        table.add_column(column, style="cyan" if column == "seed" else "white")
    for row in rows:
        cells = []
        for column in ("seed", "mode", "covered_modes", "final_gap", "frozen_noise", "tau"):
            value = row.get(column)
            cells.append("" if value is None else (f"{value:.4f}" if isinstance(value, float) else str(value)))
        table.add_row(*cells)
    console.print(table)


if __name__ == '__main__':
    main()
