"""desksense: multimodal work-session sensing and proactive assistance.

The package turns synchronized sensor streams (ECG, gaze/pupil, upper-body
landmarks, screen and worldview captures) into posture, stress, cognitive-load
and activity assessments, runs a dual-cadence reasoning loop over them, and
delivers debounced interventions over two channels (in-chat / notification).
"""

__version__ = "0.1.0"
