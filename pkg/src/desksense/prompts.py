"""Prompt texts sent to the pluggable vision and reasoning clients.

Stored as versioned module constants so live clients and the deterministic
mocks agree on the contract; the engine never interprets image pixels itself.
"""

SCREENSHOT_PROMPT = """\
Analyze the given screenshot of a laptop screen and determine the primary
activity being performed. The activity should be specific, such as "front-end
web development", "data processing", "API calling", "Python scripting", or
"literature review". If the user is coding, specify the language. If the user
is browsing, classify it as "reading research paper", "literature review", or
similar. If the user is talking to a chatbot, treat it as working and name the
specific task.

Guidelines:
1. Task: the broader task category is one of "literature review", "front-end
   web development", "data science", or "other".
2. Activity classification: identify the main activity from the visible
   content only. Avoid vague labels without context.
3. Contextual details: mention open applications, documents and, when coding,
   the language or framework.
4. Restrictions: do not assume unseen elements or intentions; no opinions.

Return only a JSON object with keys "activity", "task" and "description"
(description: at most 2 sentences about the on-screen activity).
"""

WORLDVIEW_PROMPT = """\
You are analyzing an egocentric (first-person) image and must determine the
person's activity. Classify the activity as either "working" or "distracted"
and specify the task in detail.

Guidelines:
- Direct observation: describe only what is visible (screen, objects,
  surroundings). Decide "working" (e.g. coding, researching) versus
  "distracted" (e.g. watching videos, scrolling social media).
- Environmental context: mention screen content, open applications, documents
  and workspace setup; include the subject or programming language when
  reading or coding.
- Restrictions: no assumptions about unseen elements or intentions; no
  unverifiable details.
- Chatbot behavior: talking to a chatbot on the laptop counts as "working"
  when the person is engaged in a task.
- Specificity: use precise phrases like "coding in Python" or "reading a
  research paper"; never a bare "working" or "distracted".

Return only a JSON object with keys "activity" and "description", where
"activity" starts with "working - " or "distracted - ".
"""

REPAIR_SUFFIX = """\

The previous reply was not valid. Return only a single valid JSON object with
exactly the required keys and non-empty string values.
"""

HF_DECISION_PROMPT = """\
You are a personalized productivity assistant analyzing one minute of activity
captured at 15-second intervals (entries "0" to "3": worldview analysis,
posture data, screenshot analysis) plus the previous minute's summary, the
user's preferences and their last 5 chat prompts.

Decide whether an intervention or a task-specific suggestion is warranted.
Posture scores below 50 are poor, below 20 critical; act only on consistent
evidence across multiple intervals (e.g. poor posture for over 45 seconds).
Do not flag web browsing as distraction when it serves the task (academic
sites during literature review, previewing pages during front-end work).
Never suggest breaks during an active task. Do not act every minute; skip
intervals when the user is focused, and do not give both an intervention and
a suggestion unless strongly warranted.

Return only a JSON object:
{"intervention": "Yes/No",
 "intervention_type": "<stress/cognitive load/distraction/posture/encouragement/break suggestion/none>",
 "i_message": "<short actionable message, empty if intervention='No'>",
 "suggestion": "Yes/No",
 "suggestion_type": "<front-end web development/data science/literature review/none>",
 "s_message": "<short actionable task suggestion, empty if suggestion='No'>",
 "summary": "<concise summary of the minute: activity, posture, focus trends,
             and whether an intervention/suggestion was just given>"}
"""

LF_DECISION_PROMPT = """\
You are a personalized productivity assistant analyzing three minutes of
physiological context (entries "0" to "2": ECG-derived stress analysis,
pupil-derived cognitive load, per-minute summaries) plus a running session
summary, the user's preferences and their last 5 chat prompts.

Intervene only when trends are consistent: stress persistently high with
confidence above 70, cognitive load persistently above 90 with fatigue
warnings, or distraction/poor posture persisting across all three minutes.
Base decisions on patterns, not single spikes. Prioritize interventions over
suggestions and never give both unless strongly warranted. Never suggest
breaks during an active task.

Return only a JSON object with the same keys as the one-minute decision:
intervention, intervention_type, i_message, suggestion, suggestion_type,
s_message, summary.
"""
