"""Turn a replay metrics file into a per-tick CSV and rendered figures.

The CSV is the flat record (one row per tick, latency stages as columns);
the PNGs are quick visual summaries of the same data: stage latencies per
tick and session activity (segments consumed, insights produced).
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .errors import InvalidInputError

TICK_COLUMNS = [
    "tick_index",
    "new_segments_consumed",
    "extraction_changed",
    "insights_generated",
    "skipped",
    "skip_reason",
    "error",
    "transcribe_pending_ms",
    "extract_ms",
    "retrieve_ms",
    "generate_ms",
]

STAGES = ["transcribe_pending", "extract", "retrieve", "generate"]


def load_metrics(path: Path | str) -> dict:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidInputError(f"cannot read metrics {path}: {exc}") from exc
    if not isinstance(data, dict) or not isinstance(data.get("ticks"), list):
        raise InvalidInputError("metrics file must be an object with a 'ticks' list")
    return data


def write_ticks_csv(metrics: dict, path: Path) -> Path:
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TICK_COLUMNS)
        for tick in metrics["ticks"]:
            latencies = tick.get("stage_latencies_ms") or {}
            writer.writerow(
                [
                    tick.get("tick_index", ""),
                    tick.get("new_segments_consumed", 0),
                    tick.get("extraction_changed", False),
                    tick.get("insights_generated", 0),
                    tick.get("skipped", False),
                    tick.get("skip_reason") or "",
                    tick.get("error") or "",
                ]
                + [latencies.get(stage, 0.0) for stage in STAGES]
            )
    return path


def render_figures(metrics: dict, out_dir: Path) -> list[Path]:
    ticks = metrics["ticks"]
    indexes = [t.get("tick_index", i) for i, t in enumerate(ticks)]
    written: list[Path] = []

    fig, ax = plt.subplots(figsize=(8, 4.5))
    bottom = [0.0] * len(ticks)
    for stage in STAGES:
        values = [
            float((t.get("stage_latencies_ms") or {}).get(stage, 0.0)) for t in ticks
        ]
        ax.bar(indexes, values, bottom=bottom, label=stage)
        bottom = [b + v for b, v in zip(bottom, values)]
    ax.set_xlabel("tick")
    ax.set_ylabel("latency (ms)")
    ax.set_title(f"Stage latencies per tick ({metrics.get('session_id', 'session')})")
    if ticks:
        ax.legend(loc="upper right", fontsize="small")
    fig.tight_layout()
    latency_path = out_dir / "stage_latencies.png"
    fig.savefig(latency_path, dpi=120)
    plt.close(fig)
    written.append(latency_path)

    fig, ax = plt.subplots(figsize=(8, 4.5))
    segments = [int(t.get("new_segments_consumed", 0)) for t in ticks]
    insights = [int(t.get("insights_generated", 0)) for t in ticks]
    cumulative = []
    total = 0
    for n in insights:
        total += n
        cumulative.append(total)
    ax.bar(indexes, segments, color="tab:blue", alpha=0.6, label="segments consumed")
    ax.set_xlabel("tick")
    ax.set_ylabel("segments")
    ax2 = ax.twinx()
    ax2.plot(indexes, cumulative, color="tab:red", marker="o", label="insights (cumulative)")
    ax2.set_ylabel("insights")
    ax.set_title(f"Session activity ({metrics.get('session_id', 'session')})")
    lines, labels = ax.get_legend_handles_labels()
    lines2, labels2 = ax2.get_legend_handles_labels()
    if ticks:
        ax.legend(lines + lines2, labels + labels2, loc="upper left", fontsize="small")
    fig.tight_layout()
    activity_path = out_dir / "session_activity.png"
    fig.savefig(activity_path, dpi=120)
    plt.close(fig)
    written.append(activity_path)

    return written


def generate_report(metrics_path: Path | str, out_dir: Path | str) -> list[Path]:
    """Write ticks.csv plus the PNG figures into *out_dir*; returns all paths."""
    metrics = load_metrics(metrics_path)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = [write_ticks_csv(metrics, out / "ticks.csv")]
    paths.extend(render_figures(metrics, out))
    return paths
