"""Progress display for long solver, sampler and training loops.

Loops in modgate report progress through a plain ``callback(step)``; this
module turns a rich Progress bar into such a callback. Progress goes to
stderr and is disabled when the console is not a terminal, so CSV output
and test runs stay clean.
"""

from collections.abc import Callable, Iterator
from contextlib import contextmanager

from rich.console import Console
from rich.progress import (
    BarColumn,
    MofNCompleteColumn,
    Progress,
    ProgressColumn,
    Task,
    TextColumn,
    TimeRemainingColumn,
)
from rich.text import Text

StepCallback = Callable[[int], None]


class StepRateColumn(ProgressColumn):
    """Iterations per second, or nothing until rich has a speed estimate."""

    def render(self, task: Task) -> Text:
        speed = task.finished_speed or task.speed
        if speed is None:
            return Text("")
        return Text(f"{speed:,.0f} it/s", style="progress.data.speed")


def loop_columns(with_eta: bool = True) -> list[ProgressColumn]:
    columns: list[ProgressColumn] = [
        TextColumn("[progress.description]{task.description}"),
        BarColumn(),
        MofNCompleteColumn(),
        StepRateColumn(),
    ]
    if with_eta:
        columns.append(TimeRemainingColumn())
    return columns


@contextmanager
def step_progress(
    description: str,
    total: int,
    console: Console | None = None,
    disable: bool | None = None,
) -> Iterator[StepCallback]:
    """Yield a ``callback(step)`` that moves a progress bar to ``step``.

    Args:
        description: Label shown next to the bar
        total: Number of steps of the loop
        console: Console to draw on (stderr by default)
        disable: Force the bar on or off; by default it is shown only on a terminal
    """
    console = console or Console(stderr=True)
    if disable is None:
        disable = not console.is_terminal
    bar = Progress(*loop_columns(), console=console, disable=disable, transient=True)
    with bar:
        task_id = bar.add_task(description, total=total)

        def advance(step: int) -> None:
            bar.update(task_id, completed=step)

        yield advance
