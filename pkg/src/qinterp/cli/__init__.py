"""CLI package: exports the Typer app for the qinterp entry point"""

from qinterp.cli.cli import app

__all__ = ["app"]
