"""Session report artifacts: delimited timelines plus rendered figures.

Given a completed engine run, writes timeline.csv / events.csv / audit.csv /
decisions.jsonl and three PNG timelines (posture, heart activity, cognitive
load) with delivered events overlaid.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .session import SessionEngine

TIMELINE_FIELDS = ["t", "phase", "posture_overall", "posture_category",
                   "hr_bpm", "sdnn_ms", "rmssd_ms", "stress_level",
                   "stress_confidence", "load_score", "load_level", "fatigue"]


def write_report(engine: SessionEngine, out_dir: str | Path) -> dict:
    """Write all report artifacts; returns {name: path}."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {}

    timeline = out / "timeline.csv"
    with timeline.open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=TIMELINE_FIELDS)
        w.writeheader()
        for row in engine.timeline:
            w.writerow(row.to_doc())
    paths["timeline"] = timeline

    events = out / "events.csv"
    with events.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "route", "type", "urgency", "message", "confidence", "tone"])
        for ev in engine.events:
            w.writerow([ev.t, ev.route, ev.spec.type, ev.spec.urgency,
                        ev.spec.message, ev.spec.confidence, ev.spec.tone])
    paths["events"] = events

    audit = out / "audit.csv"
    with audit.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "type", "route", "action", "reason"])
        for entry in engine.policy.audit:
            w.writerow([entry.t, entry.type, entry.route, entry.action, entry.reason])
    paths["audit"] = audit

    decisions = out / "decisions.jsonl"
    with decisions.open("w") as fh:
        for d in engine.decisions:
            fh.write(json.dumps(d, separators=(",", ":")) + "\n")
    paths["decisions"] = decisions

    paths.update(render_figures(engine, out))
    return paths


def _event_overlay(ax, engine: SessionEngine) -> None:
    for ev in engine.events:
        color = "tab:orange" if ev.route == "in_chat" else "tab:red"
        ax.axvline(ev.t, color=color, alpha=0.6, linewidth=1.0)


def render_figures(engine: SessionEngine, out_dir: str | Path) -> dict:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = engine.timeline
    t = [r.t for r in rows]
    paths = {}

    fig, ax = plt.subplots(figsize=(9, 3))
    ax.plot(t, [r.posture_overall for r in rows], color="tab:blue", label="overall score")
    ax.axhline(50, color="tab:red", linestyle="--", linewidth=0.8, label="poor threshold")
    _event_overlay(ax, engine)
    ax.set_xlabel("session time (s)")
    ax.set_ylabel("posture score")
    ax.set_ylim(0, 105)
    ax.legend(loc="lower right", fontsize=8)
    fig.tight_layout()
    path = out / "posture.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    paths["posture_png"] = path

    fig, axes = plt.subplots(2, 1, figsize=(9, 5), sharex=True)
    axes[0].plot(t, [r.hr_bpm for r in rows], color="tab:red", label="HR (bpm)")
    axes[0].set_ylabel("HR (bpm)")
    axes[0].legend(loc="upper left", fontsize=8)
    axes[1].plot(t, [r.sdnn_ms for r in rows], color="tab:green", label="SDNN (ms)")
    axes[1].plot(t, [r.rmssd_ms for r in rows], color="tab:olive", label="RMSSD (ms)")
    axes[1].set_ylabel("HRV (ms)")
    axes[1].set_xlabel("session time (s)")
    axes[1].legend(loc="upper left", fontsize=8)
    _event_overlay(axes[0], engine)
    fig.tight_layout()
    path = out / "heart.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    paths["heart_png"] = path

    fig, ax = plt.subplots(figsize=(9, 3))
    ax.plot(t, [r.load_score for r in rows], color="tab:purple", label="cognitive load")
    ax.axhline(90, color="tab:red", linestyle="--", linewidth=0.8, label="sustained-load threshold")
    _event_overlay(ax, engine)
    ax.set_xlabel("session time (s)")
    ax.set_ylabel("load score")
    ax.set_ylim(0, 105)
    ax.legend(loc="upper right", fontsize=8)
    fig.tight_layout()
    path = out / "load.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    paths["load_png"] = path
    return paths
