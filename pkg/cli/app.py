from __future__ import annotations

import typer

from .commands import register_commands

app = typer.Typer(help="Inoue surface flow lab")
register_commands(app)
