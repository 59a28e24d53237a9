"""CLI entrypoint: Typer app definition and command registration"""

import typer

from qinterp.cli.commands import (
    bench_cmd, evaluate_cmd, ingest_cmd, interpret_cmd, link_cmd,
    run_cmd, segment_cmd, serve_cmd, split_cmd, tune_cmd,
)


app = typer.Typer(name="qinterp", no_args_is_help=True, help="Entity-based keyword query interpretation")

app.command(name="ingest")(ingest_cmd)
app.command(name="segment")(segment_cmd)
app.command(name="link")(link_cmd)
app.command(name="interpret")(interpret_cmd)
app.command(name="run")(run_cmd)
app.command(name="evaluate")(evaluate_cmd)
app.command(name="split")(split_cmd)
app.command(name="tune")(tune_cmd)
app.command(name="serve")(serve_cmd)
app.command(name="bench")(bench_cmd)
