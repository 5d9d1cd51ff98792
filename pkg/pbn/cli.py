from pathlib import Path
from typing import Optional

import typer
from pydantic import ValidationError
from rich.console import Console
from rich.markup import escape
from rich.table import Table

from .config import settings
from .exceptions import PbnError
from .harness import (
    ExperimentConfig,
    ExperimentId,
    OutputFormat,
    SigmaMode,
    SummaryRow,
    column_label,
    emit_table,
    export_boundaries,
    phi_sensitivity,
    run_experiment,
)
from .log import configure_logging
from .risk import Weighting

app = typer.Typer(help="Positive and biased negative classification experiments.", no_args_is_help=True)
console = Console(stderr=True)


def _floats(text: Optional[str]) -> Optional[tuple[float, ...]]:
    if text is None:
        return None
    return tuple(float(v) for v in text.replace(",", " ").split())


def _show(rows: list[SummaryRow], title: str) -> None:
    table = Table(title=title)
    table.add_column("condition")
    columns = list(rows[0].methods)
    for name in columns:
        table.add_column(column_label(name))
    table.add_column("phi_hat")
    for row in rows:
        cells = []
        for name in columns:
            m = row.methods[name]
            text = f"{m.mean:.2f} ± {m.std:.2f}"
            cells.append(f"[bold]{text}[/bold]" if m.bold else text)
        table.add_row(row.condition, *cells, f"{row.phi_mean:.2f} ± {row.phi_std:.2f}")
    console.print(table)


def _build_config(config_path: Optional[Path], **options) -> ExperimentConfig:
    options = {k: v for k, v in options.items() if v is not None}
    if config_path is not None:
        return ExperimentConfig.from_yaml(config_path, **options)
    return ExperimentConfig.model_validate(options)


@app.command()
def run(
    experiment: Optional[ExperimentId] = typer.Option(None, "--experiment", "-e"),
    trials: Optional[int] = typer.Option(None, "--trials", "-n"),
    seed: Optional[int] = typer.Option(None, "--seed"),
    out: Optional[Path] = typer.Option(None, "--out", "-o", help="Write the table here instead of stdout."),
    fmt: Optional[OutputFormat] = typer.Option(None, "--format"),
    rho: Optional[float] = typer.Option(None, "--rho"),
    phi: Optional[float] = typer.Option(None, "--phi", help="Use this false negative rate instead of estimating it."),
    k_grid: Optional[str] = typer.Option(None, "--k-grid", help="Comma separated k candidates."),
    phi_factors: Optional[str] = typer.Option(None, "--phi-factors", help="Comma separated multipliers of phi_hat."),
    data: Optional[Path] = typer.Option(None, "--data", help="Path to wifi_localization.txt."),
    sigma: Optional[SigmaMode] = typer.Option(None, "--sigma"),
    bandwidth: Optional[float] = typer.Option(None, "--bandwidth"),
    weighting: Optional[Weighting] = typer.Option(None, "--weighting"),
    workers: Optional[int] = typer.Option(None, "--workers"),
    no_standardize: bool = typer.Option(False, "--no-standardize", help="Keep raw signal strengths before KDE."),
    epochs: Optional[int] = typer.Option(None, "--epochs"),
    learning_rate: Optional[float] = typer.Option(None, "--lr"),
    batch_size: Optional[int] = typer.Option(None, "--batch-size"),
    dump_dir: Optional[Path] = typer.Option(None, "--dump-dir", help="Write every trial's splits here as TSV."),
    config_path: Optional[Path] = typer.Option(None, "--config", help="YAML experiment config."),
):
    """Run an experiment and emit its summary table."""
    configure_logging(settings.LOG_LEVEL)
    sgd = {k: v for k, v in {"epochs": epochs, "learning_rate": learning_rate, "batch_size": batch_size}.items() if v is not None}
    grid = _floats(k_grid)
    try:
        config = _build_config(
            config_path,
            experiment=experiment,
            n_trials=trials,
            seed=seed,
            output_format=fmt,
            rho=rho,
            phi=phi,
            k_grid={"candidates": grid} if grid else None,
            phi_factors=_floats(phi_factors),
            data_path=data,
            sigma_mode=sigma,
            bandwidth=bandwidth,
            weighting=weighting,
            workers=workers,
            standardize=False if no_standardize else None,
            dump_dir=dump_dir,
            sgd=sgd or None,
        )
        if config.is_phi_sensitivity:
            rows = phi_sensitivity(config, config.phi_factors)
        else:
            rows = run_experiment(config)
    except (PbnError, ValidationError, OSError) as exc:
        console.print(f"[red]error:[/red] {escape(str(exc))}")
        raise typer.Exit(code=1)

    text = emit_table(rows, config.output_format)
    if out is None:
        typer.echo(text, nl=False)
    else:
        out.write_text(text)
        console.print(f"table written to {out}")
    _show(rows, f"{config.experiment.value} ({config.n_trials} trials, seed {config.seed})")


@app.command()
def boundaries(
    experiment: ExperimentId = typer.Option(ExperimentId.SITUATION1, "--experiment", "-e"),
    condition: int = typer.Option(0, "--condition"),
    trial: int = typer.Option(0, "--trial"),
    seed: Optional[int] = typer.Option(None, "--seed"),
    epochs: Optional[int] = typer.Option(None, "--epochs"),
    out: Optional[Path] = typer.Option(None, "--out", "-o"),
):
    """Export decision-boundary coefficients and sample coordinates of one trial as CSV."""
    configure_logging(settings.LOG_LEVEL)
    try:
        config = _build_config(None, experiment=experiment, seed=seed, sgd={"epochs": epochs} if epochs else None)
        text = export_boundaries(config, condition, trial)
    except (PbnError, ValidationError, IndexError) as exc:
        console.print(f"[red]error:[/red] {escape(str(exc))}")
        raise typer.Exit(code=1)
    if out is None:
        typer.echo(text, nl=False)
    else:
        out.write_text(text)


if __name__ == "__main__":
    app()
