"""JSON schemas for every externally visible document shape.

Used by the test suite for conformance checks and available to integrators
who consume the gateway payloads.
"""

from __future__ import annotations

import jsonschema

_METRIC_STRING = {"type": "string", "pattern": r"^-?\d+(\.\d+)?( bpm| ms|%) \(change: (-?\d+(\.\d+)?%|n/a)\)$"}

POSTURE_DOC = {
    "type": "object",
    "required": ["posture_data"],
    "additionalProperties": False,
    "properties": {
        "posture_data": {
            "type": "object",
            "required": ["overall_score", "shoulder_score", "neck_score", "back_score",
                         "current_posture_category", "feedback"],
            "additionalProperties": False,
            "properties": {
                "overall_score": {"type": "integer", "minimum": 0, "maximum": 100},
                "shoulder_score": {"type": "integer", "minimum": 0, "maximum": 100},
                "neck_score": {"type": "integer", "minimum": 0, "maximum": 100},
                "back_score": {"type": "integer", "minimum": 0, "maximum": 100},
                "current_posture_category": {"enum": ["IDEAL", "FAIRLY GOOD", "AVERAGE", "POOR"]},
                "feedback": {"type": "string", "minLength": 1},
            },
        }
    },
}

GAZE_DOC = {
    "type": "object",
    "required": ["pupil", "gaze_behavior", "practical_insight"],
    "additionalProperties": False,
    "properties": {
        "pupil": {
            "type": "object",
            "required": ["summary", "pupillary_response", "asymmetry_insight"],
            "additionalProperties": False,
            "properties": {
                "summary": {
                    "type": "object",
                    "required": ["level", "score", "confidence", "interpretation"],
                    "additionalProperties": False,
                    "properties": {
                        "level": {"enum": ["low", "medium", "high"]},
                        "score": {"type": "integer", "minimum": 0, "maximum": 100},
                        "confidence": {"type": "number", "minimum": 0, "maximum": 1},
                        "interpretation": {"type": "string", "minLength": 1},
                    },
                },
                "pupillary_response": {
                    "type": "object",
                    "required": ["interpretation"],
                    "additionalProperties": False,
                    "properties": {"interpretation": {"type": "string", "minLength": 1}},
                },
                "asymmetry_insight": {"type": "string", "minLength": 1},
            },
        },
        "gaze_behavior": {
            "type": "object",
            "required": ["fixation_insight", "saccade_insight"],
            "additionalProperties": False,
            "properties": {
                "fixation_insight": {"type": "string", "minLength": 1},
                "saccade_insight": {"type": "string", "minLength": 1},
                # engine extension consumed by the three-minute loop's fatigue rule
                "fatigue_warning": {"type": "boolean"},
            },
        },
        "practical_insight": {"type": "string", "minLength": 1},
    },
}

HRV_DOC = {
    "type": "object",
    "required": ["hrv_metrics", "stress_analysis", "practical_insight"],
    "additionalProperties": False,
    "properties": {
        "hrv_metrics": {
            "type": "object",
            "required": ["heart_rate", "sdnn", "rmssd", "pnn20", "pnn50"],
            "additionalProperties": False,
            "properties": {
                "heart_rate": _METRIC_STRING,
                "sdnn": _METRIC_STRING,
                "rmssd": _METRIC_STRING,
                "pnn20": _METRIC_STRING,
                "pnn50": _METRIC_STRING,
            },
        },
        "stress_analysis": {
            "type": "object",
            "required": ["level", "confidence", "interpretation"],
            "additionalProperties": False,
            "properties": {
                "level": {"enum": ["low", "normal", "moderate", "high"]},
                "confidence": {"type": "integer", "minimum": 0, "maximum": 100},
                "interpretation": {"type": "string", "minLength": 1},
            },
        },
        "practical_insight": {"type": "string", "minLength": 1},
    },
}

_DECISION_BASE = {
    "type": "object",
    "required": ["intervention", "intervention_type", "i_message",
                 "suggestion", "suggestion_type", "s_message", "summary"],
    "additionalProperties": False,
    "properties": {
        "intervention": {"enum": ["Yes", "No"]},
        "i_message": {"type": "string"},
        "suggestion": {"enum": ["Yes", "No"]},
        "suggestion_type": {"enum": ["front-end web development", "data science",
                                     "literature review", "none"]},
        "s_message": {"type": "string"},
        "summary": {"type": "string", "minLength": 1},
    },
    "allOf": [
        {"if": {"properties": {"intervention": {"const": "No"}}},
         "then": {"properties": {"i_message": {"const": ""}}},
         "else": {"properties": {"i_message": {"minLength": 1}}}},
        {"if": {"properties": {"suggestion": {"const": "No"}}},
         "then": {"properties": {"s_message": {"const": ""}}},
         "else": {"properties": {"s_message": {"minLength": 1}}}},
    ],
}

DECISION_HF = {**_DECISION_BASE, "properties": {
    **_DECISION_BASE["properties"],
    "intervention_type": {"enum": ["stress", "cognitive load", "distraction", "posture",
                                   "encouragement", "break suggestion", "none"]},
}}

# The three-minute output names the same type "distracted"; accept both spellings.
DECISION_LF = {**_DECISION_BASE, "properties": {
    **_DECISION_BASE["properties"],
    "intervention_type": {"enum": ["stress", "cognitive load", "distracted", "distraction",
                                   "posture", "encouragement", "break suggestion", "none"]},
}}

_SNAPSHOT_ENTRY = {
    "type": "object",
    "required": ["world_view_analysis", "posture_data", "screenshot_analysis"],
    "additionalProperties": False,
    "properties": {
        "world_view_analysis": {
            "oneOf": [
                {"type": "null"},
                {"type": "object",
                 "required": ["activity", "description"],
                 "additionalProperties": False,
                 "properties": {"activity": {"type": "string", "minLength": 1},
                                "description": {"type": "string", "minLength": 1}}},
            ]
        },
        "posture_data": {
            "oneOf": [{"type": "null"}, POSTURE_DOC["properties"]["posture_data"]]
        },
        "screenshot_analysis": {
            "oneOf": [
                {"type": "null"},
                {"type": "object",
                 "required": ["activity", "task", "description"],
                 "additionalProperties": False,
                 "properties": {"activity": {"type": "string", "minLength": 1},
                                "task": {"type": "string", "minLength": 1},
                                "description": {"type": "string", "minLength": 1}}},
            ]
        },
    },
}

MINUTE_BUNDLE = {
    "type": "object",
    "required": ["data"],
    "additionalProperties": False,
    "properties": {
        "data": {
            "type": "object",
            "required": ["0", "1", "2", "3", "prev_min_summary"],
            "additionalProperties": False,
            "properties": {
                "0": _SNAPSHOT_ENTRY, "1": _SNAPSHOT_ENTRY,
                "2": _SNAPSHOT_ENTRY, "3": _SNAPSHOT_ENTRY,
                "prev_min_summary": {"type": "string"},
            },
        }
    },
}

_MINUTE_ENTRY = {
    "type": "object",
    "required": ["ecg_data", "pupil_data", "min_summary"],
    "additionalProperties": False,
    "properties": {
        "ecg_data": {"oneOf": [{"type": "null"}, HRV_DOC]},
        "pupil_data": {"oneOf": [{"type": "null"}, GAZE_DOC]},
        "min_summary": {"type": "string"},
    },
}

TRI_MINUTE_BUNDLE = {
    "type": "object",
    "required": ["data"],
    "additionalProperties": False,
    "properties": {
        "data": {
            "type": "object",
            "required": ["session_summary", "0", "1", "2"],
            "additionalProperties": False,
            "properties": {
                "session_summary": {"type": "string"},
                "0": _MINUTE_ENTRY, "1": _MINUTE_ENTRY, "2": _MINUTE_ENTRY,
            },
        }
    },
}


def validate(doc: dict, schema: dict) -> None:
    """Raises jsonschema.ValidationError on any mismatch."""
    jsonschema.validate(doc, schema)
