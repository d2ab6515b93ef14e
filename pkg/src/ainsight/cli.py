"""Command line entry points: ingest, serve, replay, report, fixtures-export."""

from __future__ import annotations

import logging
import shutil
import tempfile
from pathlib import Path

import click
import uvicorn

from .api import create_app
from .clock import SimulatedClock, WallClock
from .config import EngineConfig, bundled_fixtures_dir
from .engine import Engine
from .errors import AinsightError
from .ingest import ingest_kb
from .providers import build_providers
from .replay import export_metrics, load_script, run_replay
from .report import generate_report


@click.group()
@click.option("--verbose", "-v", is_flag=True, help="Debug logging.")
def main(verbose: bool) -> None:
    """Real-time conversation insight engine."""
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )


@main.command()
@click.option(
    "--kb-dir",
    type=click.Path(exists=True, file_okay=False, path_type=Path),
    default=None,
    help="Knowledge directory (default: AINSIGHT_KB_DIR).",
)
@click.option(
    "--index-path",
    type=click.Path(dir_okay=False, path_type=Path),
    default=None,
    help="Output index file (default: AINSIGHT_INDEX_PATH).",
)
def ingest(kb_dir: Path | None, index_path: Path | None) -> None:
    """Chunk and embed a knowledge directory into a persisted index."""
    config = EngineConfig.from_env()
    kb = kb_dir or config.kb_dir
    out = index_path or config.index_path
    if kb is None:
        raise click.UsageError("--kb-dir or AINSIGHT_KB_DIR is required")
    if out is None:
        raise click.UsageError("--index-path or AINSIGHT_INDEX_PATH is required")
    providers = build_providers(config.provider)
    try:
        manifest = ingest_kb(
            kb,
            out,
            providers.embedding.embed,
            max_chunk_chars=config.max_chunk_chars,
            overlap_chars=config.overlap_chars,
        )
    except AinsightError as exc:
        raise click.ClickException(str(exc)) from exc
    click.echo(
        f"indexed {manifest.chunk_count} chunks "
        f"from {len(manifest.sources)} sources into {out}"
    )


@main.command()
@click.option("--listen", default=None, help="host:port (default: AINSIGHT_LISTEN_ADDR).")
def serve(listen: str | None) -> None:
    """Run the HTTP/SSE service over a previously ingested index."""
    config = EngineConfig.from_env()
    if listen:
        config.listen_addr = listen
    host, _, port_text = config.listen_addr.rpartition(":")
    if not host or not port_text.isdigit():
        raise click.UsageError(f"listen address must be host:port, got {config.listen_addr!r}")
    try:
        engine = Engine.from_config(config)
    except AinsightError as exc:
        raise click.ClickException(str(exc)) from exc
    engine.start_scheduler()
    try:
        uvicorn.run(create_app(engine), host=host, port=int(port_text), log_level="info")
    finally:
        engine.stop_scheduler()


@main.command()
@click.option(
    "--script",
    "script_path",
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    default=None,
    help="Dialogue script JSON (default: the bundled demo script).",
)
@click.option(
    "--mode",
    type=click.Choice(["simulated", "wall"]),
    default="simulated",
    show_default=True,
)
@click.option("--speed", type=float, default=1.0, show_default=True, help="Wall-mode playback multiplier.")
@click.option(
    "--metrics-out",
    type=click.Path(dir_okay=False, path_type=Path),
    default=None,
    help="Write replay metrics JSON here.",
)
def replay(
    script_path: Path | None, mode: str, speed: float, metrics_out: Path | None
) -> None:
    """Replay a scripted conversation and print the final state.

    Without a configured index this builds a throwaway demo index from the
    bundled fixtures first (mock provider mode only).
    """
    config = EngineConfig.from_env()
    try:
        script = load_script(
            script_path or bundled_fixtures_dir() / "scripts" / "lower-back-pain.json"
        )
    except AinsightError as exc:
        raise click.ClickException(str(exc)) from exc
    scratch: tempfile.TemporaryDirectory | None = None
    try:
        try:
            if config.index_path is None:
                if config.provider.mode != "mock":
                    raise click.UsageError(
                        "no index configured; set AINSIGHT_INDEX_PATH (or use mock mode)"
                    )
                scratch = tempfile.TemporaryDirectory(prefix="ainsight-demo-")
                if config.kb_dir is None:
                    config.kb_dir = bundled_fixtures_dir() / "kb"
                config.index_path = Path(scratch.name) / "index.ldjson"
                providers = build_providers(config.provider)
                ingest_kb(
                    config.kb_dir,
                    config.index_path,
                    providers.embedding.embed,
                    max_chunk_chars=config.max_chunk_chars,
                    overlap_chars=config.overlap_chars,
                )
                click.echo(f"built demo index from {config.kb_dir}")
            clock = SimulatedClock() if mode == "simulated" else WallClock()
            engine = Engine.from_config(config, clock=clock)
            metrics = run_replay(engine, script, mode=mode, speed=speed)
        except AinsightError as exc:
            raise click.ClickException(str(exc)) from exc
    finally:
        if scratch is not None:
            scratch.cleanup()

    click.echo(
        f"replayed '{metrics.script_title}' ({metrics.mode}): "
        f"{metrics.tick_count} ticks, {metrics.segments_appended} segments, "
        f"{metrics.insights_total} insights"
    )
    extracted = metrics.final_snapshot.extracted
    if extracted.problem:
        click.echo(f"problem: {extracted.problem}")
    for key, value in extracted.info:
        click.echo(f"  {key}: {value}")
    if extracted.solutions:
        click.echo("solutions: " + "; ".join(extracted.solutions))
    for insight in metrics.final_snapshot.insights:
        click.echo(f"insight [{insight.insight_id}]: {insight.text}")
        for _chunk_id, source_path in insight.sources:
            click.echo(f"    source: {source_path}")
    if metrics_out is not None:
        export_metrics(metrics, metrics_out)
        click.echo(f"metrics written to {metrics_out}")


@main.command()
@click.option(
    "--metrics",
    "metrics_path",
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    required=True,
    help="Metrics JSON produced by replay --metrics-out.",
)
@click.option(
    "--out-dir",
    type=click.Path(file_okay=False, path_type=Path),
    required=True,
    help="Directory for ticks.csv and the PNG figures.",
)
def report(metrics_path: Path, out_dir: Path) -> None:
    """Render a metrics file into a per-tick CSV plus PNG figures."""
    try:
        paths = generate_report(metrics_path, out_dir)
    except AinsightError as exc:
        raise click.ClickException(str(exc)) from exc
    for path in paths:
        click.echo(f"wrote {path}")


@main.command("fixtures-export")
@click.option(
    "--dest",
    type=click.Path(file_okay=False, path_type=Path),
    required=True,
    help="Destination directory.",
)
def fixtures_export(dest: Path) -> None:
    """Copy the bundled demo fixtures (kb, scripts, mock responses) out."""
    source = bundled_fixtures_dir()
    dest.mkdir(parents=True, exist_ok=True)
    for child in sorted(source.iterdir()):
        target = dest / child.name
        if child.is_dir():
            shutil.copytree(child, target, dirs_exist_ok=True)
        else:
            shutil.copy2(child, target)
    click.echo(f"fixtures copied to {dest}")


if __name__ == "__main__":
    main()
