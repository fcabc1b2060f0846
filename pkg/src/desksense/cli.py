"""Command-line entry points: synthesize, replay/report, serve."""

from __future__ import annotations

import json
import logging

import click

from .context import MockVisionClient
from .loops import RuleBasedMockReasoner
from .session import SessionEngine
from .streams import open_recording
from .synth import SCENARIO_DEFAULT_DURATION, SCENARIOS, write_scenario


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="Debug logging.")
def main(verbose: bool):
    """desksense: multimodal work-session sensing and proactive assistance."""
    logging.basicConfig(level=logging.DEBUG if verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")


@main.command()
@click.option("--scenario", type=click.Choice(sorted(SCENARIOS)), default="nominal",
              show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@click.option("--duration", type=float, default=None,
              help="Session length in seconds (scenario default otherwise).")
@click.option("--seed", type=int, default=11, show_default=True)
def synth(scenario: str, out: str, duration: float | None, seed: int):
    """Write a synthetic session recording."""
    rec = write_scenario(out, scenario, duration=duration, seed=seed)
    click.echo(f"wrote {out}: {len(rec.records)} records over "
               f"{duration or SCENARIO_DEFAULT_DURATION[scenario]:.0f} s "
               f"({len(rec.descriptors)} streams)")


def _run(session: str, duration: float | None, speed: str) -> SessionEngine:
    recording = open_recording(session)
    engine = SessionEngine(vision_client=MockVisionClient(), reasoner=RuleBasedMockReasoner())
    engine.run_recording(recording, duration=duration,
                         speed="max" if speed == "max" else float(speed))
    return engine


@main.command()
@click.option("--session", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--speed", default="max", show_default=True,
              help="Real-time multiplier, or 'max' for as fast as possible.")
@click.option("--duration", type=float, default=None,
              help="Session end time; defaults to the last record.")
@click.option("--report-dir", type=click.Path(file_okay=False), default=None,
              help="Also write the CSV/figure report here.")
def replay(session: str, speed: str, duration: float | None, report_dir: str | None):
    """Replay a recording through the engine and print decisions and events."""
    engine = _run(session, duration, speed)
    for d in engine.decisions:
        click.echo(f"[{d['loop']:>2} t={d['t']:6.1f}] {json.dumps(d['decision'])}")
    click.echo("-" * 72)
    for ev in engine.events:
        click.echo(f"[event t={ev.t:6.1f}] {ev.route}: ({ev.spec.type}) {ev.spec.message}")
    click.echo(f"{len(engine.decisions)} decisions, {len(engine.events)} events, "
               f"{len(engine.policy.audit)} audit entries")
    if report_dir:
        from .report import write_report
        paths = write_report(engine, report_dir)
        click.echo("report: " + ", ".join(str(p) for p in paths.values()))


@main.command()
@click.option("--session", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--out", "out_dir", type=click.Path(file_okay=False), required=True)
@click.option("--duration", type=float, default=None)
def report(session: str, out_dir: str, duration: float | None):
    """Replay a recording and write the delimited + figure report."""
    from .report import write_report
    engine = _run(session, duration, "max")
    paths = write_report(engine, out_dir)
    for name, p in paths.items():
        click.echo(f"{name}: {p}")


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True)
def serve(host: str, port: int):
    """Run the gateway API (mock reasoning/vision clients)."""
    import uvicorn

    from .gateway import create_app
    uvicorn.run(create_app(), host=host, port=port)


if __name__ == "__main__":
    main()
