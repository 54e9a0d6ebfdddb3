"""Utility functions for displaying CLI output"""
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Callable, Dict, Iterable, Iterator, List, Optional, Tuple

from rich.console import Console
from rich.markup import escape
from rich.progress import BarColumn, MofNCompleteColumn, Progress, TextColumn, TimeElapsedColumn
from rich.table import Table

console = Console()


def print_error(error: Exception) -> None:
    console.print(f"[red]Error: {escape(str(error))}[/red]")


def print_written(paths: Iterable[Path]) -> None:
    for path in paths:
        console.print(f"  [green]wrote[/green] [blue]{path}[/blue]")


@contextmanager
def progress_bar(*tasks: Tuple[str, int]) -> Iterator[List[Callable[..., None]]]:
    """One rich progress display with a bar per (description, total); yields an advance callable per bar."""
    progress = Progress(
        TextColumn("[bold cyan]{task.description}"),
        BarColumn(),
        MofNCompleteColumn(),
        TextColumn("{task.fields[status]}"),
        TimeElapsedColumn(),
        console=console,
        transient=True,
    )
    with progress:
        ids = [progress.add_task(description, total=total, status="") for description, total in tasks]

        def stepper(task_id) -> Callable[..., None]:
            def advance(status: str = "") -> None:
                progress.update(task_id, advance=1, status=status)
            return advance

        yield [stepper(task_id) for task_id in ids]


def metrics_table(report: Dict[str, Any], title: str = "Metrics") -> Table:
    table = Table(title=title)
    table.add_column("Metric", style="cyan")
    table.add_column("Value", justify="right", style="magenta")
    for name, value in report.items():
        if value is None:
            shown = "-"
        elif isinstance(value, float):
            shown = f"{value:.2f}"
        else:
            shown = str(value)
        table.add_row(name, shown)
    return table


def display_ordering(labels: Iterable[str], title: Optional[str] = None) -> None:
    if title:
        console.print(f"\n[bold cyan]{title}[/bold cyan]")
    console.print("  " + " [dim]->[/dim] ".join(f"[blue]{label}[/blue]" for label in labels))


def display_summary(frame, title: str) -> None:
    """Mean of the numeric bench columns per variant."""
    table = Table(title=title)
    summary = frame.groupby('variant').agg(
        runs=('d_top', 'size'), d_top=('d_top', 'mean'), shd=('shd', 'mean'), seconds=('seconds', 'mean'))
    table.add_column("Variant", style="cyan")
    for column in summary.columns:
        table.add_column(column, justify="right")
    for variant, row in summary.iterrows():
        table.add_row(variant, *(f"{value:.2f}" if isinstance(value, float) else str(value) for value in row))
    console.print(table)
