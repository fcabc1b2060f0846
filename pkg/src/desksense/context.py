"""Screenshot / egocentric frame classification via a pluggable vision client.

The engine only ever sees parsed, schema-checked contexts; a malformed client
reply gets one repair re-prompt and then degrades to the "unknown" context so
the capture schedule never blocks on a flaky client.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass
from typing import Protocol

from . import prompts
from .streams import StreamKind

log = logging.getLogger(__name__)

CANONICAL_TASKS = ("front-end web development", "data science", "literature review")
CLIENT_TIMEOUT_S = 10.0  # two vision calls must fit inside one 15 s capture slot
UNKNOWN = "unknown"


@dataclass(frozen=True)
class VisualFrame:
    kind: StreamKind
    t: float
    payload: object  # opaque encoded image bytes, or a fixture handle in replay


@dataclass(frozen=True)
class ScreenContext:
    activity: str
    task: str
    description: str

    @classmethod
    def unknown(cls) -> "ScreenContext":
        return cls(UNKNOWN, UNKNOWN, UNKNOWN)

    def to_doc(self) -> dict:
        return {"activity": self.activity, "task": self.task, "description": self.description}


@dataclass(frozen=True)
class WorldContext:
    activity: str
    description: str

    @classmethod
    def unknown(cls) -> "WorldContext":
        return cls(UNKNOWN, UNKNOWN)

    def to_doc(self) -> dict:
        return {"activity": self.activity, "description": self.description}


class VisionClient(Protocol):
    def submit(self, prompt: str, image: object) -> str:
        """Prompt text + image payload in, raw model text out."""
        ...


class MockVisionClient:
    """Deterministic fixture-keyed stand-in for the remote vision model.

    Replay payloads carry ``{"fixture": <id>}``; responses come from a canned
    table, so identical fixtures always yield identical contexts. A list value
    is consumed one element per call (for retry scenarios).
    """

    def __init__(self, fixtures: dict | None = None):
        self.fixtures = dict(DEFAULT_FIXTURES)
        if fixtures:
            self.fixtures.update(fixtures)
        self.calls = 0

    def submit(self, prompt: str, image: object) -> str:
        self.calls += 1
        fixture = image.get("fixture") if isinstance(image, dict) else image
        if fixture not in self.fixtures:
            raise KeyError(f"no canned response for fixture {fixture!r}")
        entry = self.fixtures[fixture]
        if isinstance(entry, list):
            reply = entry.pop(0) if len(entry) > 1 else entry[0]
        else:
            reply = entry
        if reply == "__raise__":
            raise ConnectionError("mock transport failure")
        return reply


def _canned(doc: dict) -> str:
    return json.dumps(doc)


DEFAULT_FIXTURES = {
    # screenshots
    "screen_webscrape": _canned({
        "activity": "web scraping",
        "task": "data science",
        "description": "Writing a Python script using BeautifulSoup and requests to extract "
                       "job listings from a website. Terminal shows script execution.",
    }),
    "screen_datacleaning": _canned({
        "activity": "data processing",
        "task": "data science",
        "description": "Cleaning a dataset in Python using pandas within a Jupyter notebook. "
                       "Focusing on handling missing values and outliers in a dataframe.",
    }),
    "screen_chatbot_litreview": _canned({
        "activity": "working - literature review",
        "task": "literature review",
        "description": "Engaging with a chatbot to summarize key findings from recent "
                       "publications on machine learning.",
    }),
    "screen_scholar": _canned({
        "activity": "browsing an academic search engine",
        "task": "literature review",
        "description": "Scanning search results for survey papers and opening PDFs of "
                       "candidate references in browser tabs.",
    }),
    "screen_frontend": _canned({
        "activity": "editing a responsive page layout",
        "task": "front-end web development",
        "description": "Editing HTML and CSS in an IDE with a live browser preview beside it. "
                       "Devtools shows the responsive layout grid.",
    }),
    "screen_frontend_errors": _canned({
        "activity": "debugging JavaScript",
        "task": "front-end web development",
        "description": "The browser console shows repeated TypeError errors while the same "
                       "function is edited again and again without progress.",
    }),
    "screen_social": _canned({
        "activity": "browsing social media",
        "task": "other",
        "description": "An active social media feed fills the screen; the editor window is "
                       "in the background.",
    }),
    "screen_desktop": _canned({
        "activity": "idle desktop",
        "task": "other",
        "description": "A mostly empty desktop with a file manager window open.",
    }),
    # egocentric worldviews
    "world_ide": _canned({
        "activity": "working - coding in Python",
        "description": "The person is writing Python code in VS Code, with a terminal running "
                       "scripts. A notebook and coffee mug are on the desk.",
    }),
    "world_phone": _canned({
        "activity": "distracted - scrolling social media",
        "description": "The person is holding a smartphone and scrolling through social media "
                       "while seated at a cluttered desk with an open laptop.",
    }),
    "world_paper": _canned({
        "activity": "working - reading research paper",
        "description": "The person is reading a research paper on machine learning on their "
                       "laptop screen, with handwritten notes beside them.",
    }),
}


def _extract_json(text: str) -> dict:
    text = text.strip()
    if text.startswith("```"):
        m = re.search(r"```(?:json)?\s*([\s\S]*?)```", text)
        if m:
            text = m.group(1)
    start = text.find("{")
    end = text.rfind("}")
    if start < 0 or end <= start:
        raise ValueError("no JSON object in reply")
    obj = json.loads(text[start:end + 1])
    if not isinstance(obj, dict):
        raise ValueError("reply is not a JSON object")
    return obj


def _require(obj: dict, keys: tuple) -> dict:
    for k in keys:
        v = obj.get(k)
        if not isinstance(v, str) or not v.strip():
            raise ValueError(f"missing or empty key {k!r}")
    return obj


def _submit_parsed(client: VisionClient, prompt: str, frame: VisualFrame,
                   keys: tuple, check=None) -> dict | None:
    """One call plus one repair retry; None when both fail."""
    attempt_prompt = prompt
    for attempt in (1, 2):
        try:
            raw = client.submit(attempt_prompt, frame.payload)
            obj = _require(_extract_json(raw), keys)
            if check is not None:
                check(obj)
            return obj
        except Exception as exc:
            log.debug("vision parse attempt %d failed at t=%.1f: %s", attempt, frame.t, exc)
            attempt_prompt = prompt + prompts.REPAIR_SUFFIX
    return None


def analyze_screenshot(frame: VisualFrame, client: VisionClient) -> ScreenContext:
    if frame.kind is not StreamKind.SCREENSHOT:
        raise ValueError(f"expected a screenshot frame, got {frame.kind}")
    obj = _submit_parsed(client, prompts.SCREENSHOT_PROMPT, frame,
                         ("activity", "task", "description"))
    if obj is None:
        return ScreenContext.unknown()
    return ScreenContext(obj["activity"], obj["task"], obj["description"])


def _check_prefix(obj: dict) -> None:
    if engagement_from_activity(obj["activity"]) == UNKNOWN:
        raise ValueError("activity lacks a working/distracted prefix")


def analyze_worldview(frame: VisualFrame, client: VisionClient) -> WorldContext:
    if frame.kind is not StreamKind.EGOCENTRIC:
        raise ValueError(f"expected an egocentric frame, got {frame.kind}")
    obj = _submit_parsed(client, prompts.WORLDVIEW_PROMPT, frame,
                         ("activity", "description"), check=_check_prefix)
    if obj is None:
        return WorldContext.unknown()
    return WorldContext(obj["activity"], obj["description"])


def engagement_from_activity(activity: str) -> str:
    a = activity.strip().lower()
    if a.startswith("working"):
        return "working"
    if a.startswith("distracted"):
        return "distracted"
    return UNKNOWN


def engagement_flag(ctx: WorldContext) -> str:
    """'working' | 'distracted' | 'unknown' from the activity prefix."""
    return engagement_from_activity(ctx.activity)
