"""Prompt catalog and structured-output schemas, one entry per agent operation.

Every call into a text-generation model renders one of these templates.
Structured replies are validated against the schema registered under the
template's ``schema_name``; templates without a schema expect free text.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Any, Mapping


class MissingBinding(KeyError):
    """A template placeholder was left unbound."""

    def __init__(self, name: str) -> None:
        self.name = name
        super().__init__(name)


class UnknownTemplate(KeyError):
    pass


@dataclass(frozen=True)
class PromptTemplate:
    name: str
    system: str
    user: str
    schema_name: str | None = None
    # False for the two induction task texts, which are fixed wording;
    # True for templates authored for this implementation.
    reconstructed: bool = True


_PLACEHOLDER = re.compile(r"\{([a-z_]+)\}")


def render_prompt(template_name: str, bindings: Mapping[str, Any]) -> tuple[str, str]:
    """Substitute bindings into a named template, returning (system, user).

    Raises MissingBinding naming the first unbound placeholder; substitution
    is a single deterministic pass, so no placeholder survives rendering.
    """
    template = TEMPLATES.get(template_name)
    if template is None:
        raise UnknownTemplate(template_name)

    def fill(text: str) -> str:
        def sub(match: re.Match[str]) -> str:
            name = match.group(1)
            if name not in bindings:
                raise MissingBinding(name)
            return str(bindings[name])

        return _PLACEHOLDER.sub(sub, text)

    return fill(template.system), fill(template.user)


_DIMENSION_INDUCTION_SYSTEM = """\
You maintain a three-level ontology of requirement concerns: aspects contain \
dimensions, dimensions contain clarification slots. You will receive the \
current tree and one new requirements text. Extract the functional dimensions \
the text implies and place each one under the correct existing aspect. Merge \
into an existing dimension whenever the meaning overlaps; add a new dimension \
only when no existing one fits. Never remove or rename existing nodes.

Output strict JSON only, no prose, in exactly this shape:
{"proposals": [{"aspect": "<existing aspect name>", "action": "merge" or "add", \
"dimension": "<dimension name>", "evidence": "<short quote from the text>"}]}
For "merge" the dimension names the existing node to merge into; for "add" it \
names the new dimension."""

_DIMENSION_INDUCTION_USER = """\
Current Ontology Tree:
{ontology}

New Requirements Text:
{requirements}

Task:
1) Extract requirement points from the requirements text into the aspect level.
2) Integrate them into the current tree using the policy (merge > expand > add). Prefer merging into existing
3) Output the strict JSON specified in the system instructions."""

_SLOT_INDUCTION_SYSTEM = """\
You extend a requirements ontology with clarification slots. You will receive \
a two-level tree (aspects and their dimensions) and one requirements text. \
For each dimension the text touches, extract the clarifiable items as slots. \
A slot has a short normalized key and one clarification question. If the text \
only mentions a topic, phrase the question in the binary form "Do you need \
[X]?"; if the text describes the topic in detail, phrase an open-ended \
question such as "What ...?". If a proposed key overlaps an existing slot key \
in the same dimension, set "overlaps_with" to that existing key, else null.

Output strict JSON only, no prose, in exactly this shape:
{"proposals": [{"aspect": "<aspect name>", "dimension": "<dimension name>", \
"key": "<item>", "question": "<question>", "form": "binary" or "open", \
"overlaps_with": "<existing key>" or null}]}"""

_SLOT_INDUCTION_USER = """\
Two-level Ontology:
{ontology}

New Requirements Text:
{instruction}

Task:
1) Identify which dimensions the requirements text touches.
2) If the text describes in detail, please output a clarifying question; If only mentions, please output "Do you need [X]?" question.
3) Return the strict JSON specified in the system instructions.
4) Omit topics the instruction does not mention."""

_SCORE_SYSTEM = """\
You prioritize which parts of a requirements ontology an interviewer should \
explore first for a new project. Score every listed node id for semantic \
relevance to the stakeholder's initial description; each score is a number \
between 0 and 1, higher meaning more relevant. Output strict JSON only: \
{"scores": {"<node id>": <number>}}. Include every node id you were given."""

_SCORE_USER = """\
Initial description:
{description}

Ontology nodes:
{nodes}

Score every node id for relevance to the initial description."""

_RERANK_SYSTEM = """\
You choose which requirement slot an interviewer should clarify next. Given \
the dialogue so far and a list of candidate slots, pick the one most likely \
to surface an implicit requirement now, favoring items the stakeholder's \
latest answers point toward. Output strict JSON only: {"choice": "<slot id>", \
"scores": {"<slot id>": <number between 0 and 1>}}. The choice must be one of \
the candidate ids; scores are optional refreshed priorities."""

_RERANK_USER = """\
Dialogue so far:
{history}

Candidate slots:
{candidates}

Pick the best next slot id."""

_PARSE_SLOT_SYSTEM = """\
You interpret a stakeholder's reply to one interview question about a \
specific requirement item. Classify the reply as exactly one of:
- "confirmed_slot": the stakeholder wants the item or gives substantive \
detail about it (also the right call for partial or ambiguous replies that \
carry substance);
- "rejected_slot": the stakeholder explicitly declines the asked item;
- "rejected_dimension": the stakeholder explicitly rules out the whole \
dimension named below, not just the asked item.
Output strict JSON only: {"verdict": "<one of the three>", "excerpt": \
"<the reply fragment justifying the verdict>"}."""

_PARSE_SLOT_USER = """\
Aspect: {aspect_name}
Dimension: {dimension_name}
Slot asked about: {slot_key}
Question asked: {question}
Stakeholder reply: {answer}"""

_PARSE_GATE_SYSTEM = """\
You interpret a stakeholder's reply to a wrap-up question asking whether \
anything else is needed under one requirement aspect. Classify the reply as \
"aspect_done" when it clearly states nothing further is needed under that \
aspect, otherwise "aspect_has_more". Output strict JSON only: {"verdict": \
"aspect_done" or "aspect_has_more", "excerpt": "<justifying fragment>"}."""

_PARSE_GATE_USER = """\
Aspect: {aspect_name}
Wrap-up question asked: {question}
Stakeholder reply: {answer}"""

_QUESTION_SYSTEM = """\
You are a requirements interviewer. Write the next interview question about \
the given slot, phrased naturally in the context of the conversation so far. \
Binary slots take a yes/no confirmation question; open slots take a \
wh-question inviting detail. Ask about exactly the given item and nothing \
else, one question only. Output strict JSON only: {"question": "<the \
question>"}."""

_QUESTION_USER = """\
Dialogue so far:
{history}

Next slot to clarify:
- aspect: {aspect_name}
- dimension: {dimension_name}
- key: {slot_key}
- form: {question_form}
- candidate question: {candidate_question}

Write the next interview question."""

_FREEFORM_SYSTEM = """\
You are a requirements elicitation interviewer talking to a stakeholder \
about their project. Ask the next clarification or probing question. Reply \
with the question only."""

_FREEFORM_USER = """\
Dialogue so far:
{history}

Ask your next question."""

_STAKEHOLDER_SYSTEM = """\
You role-play the stakeholder in a requirements interview. You know the full \
project specification given below and nothing else. Answer only from it: if \
the asked item appears in the specification, affirm it and add one sentence \
of detail taken from the specification; if it does not appear, say you do \
not need it. If asked whether anything else is needed in some area, answer \
from the specification alone. Never volunteer requirements that were not \
asked about. Keep answers to one or two sentences. {persona}"""

_STAKEHOLDER_USER = """\
Full specification:
{specification}

Dialogue so far:
{history}

Interviewer question: {question}"""

_JUDGE_SYSTEM = """\
You check which ground-truth requirements a question-answer exchange has \
surfaced. A requirement counts as matched only when the exchange affirms its \
substance, not when it is merely hinted at or denied. Output strict JSON \
only: {"matched": ["<req_id>"]}, using ids from the candidate list; output \
an empty list when none match."""

_JUDGE_USER = """\
Question: {question}
Answer: {answer}

Candidate requirements:
{candidates}"""


TEMPLATES: dict[str, PromptTemplate] = {
    t.name: t
    for t in [
        PromptTemplate(
            "dimension_induction",
            _DIMENSION_INDUCTION_SYSTEM,
            _DIMENSION_INDUCTION_USER,
            schema_name="dimension_induction",
            reconstructed=False,
        ),
        PromptTemplate(
            "slot_induction",
            _SLOT_INDUCTION_SYSTEM,
            _SLOT_INDUCTION_USER,
            schema_name="slot_induction",
            reconstructed=False,
        ),
        PromptTemplate("score_ontology", _SCORE_SYSTEM, _SCORE_USER, schema_name="score_map"),
        PromptTemplate("rerank_slots", _RERANK_SYSTEM, _RERANK_USER, schema_name="rank_choice"),
        PromptTemplate(
            "parse_answer_slot", _PARSE_SLOT_SYSTEM, _PARSE_SLOT_USER, schema_name="user_judgment"
        ),
        PromptTemplate(
            "parse_answer_gate", _PARSE_GATE_SYSTEM, _PARSE_GATE_USER, schema_name="user_judgment"
        ),
        PromptTemplate(
            "generate_question", _QUESTION_SYSTEM, _QUESTION_USER, schema_name="question_text"
        ),
        PromptTemplate("freeform_question", _FREEFORM_SYSTEM, _FREEFORM_USER, schema_name=None),
        PromptTemplate(
            "simulate_stakeholder", _STAKEHOLDER_SYSTEM, _STAKEHOLDER_USER, schema_name=None
        ),
        PromptTemplate("judge_hits", _JUDGE_SYSTEM, _JUDGE_USER, schema_name="hit_judgment"),
    ]
}


SCHEMAS: dict[str, dict[str, Any]] = {
    "dimension_induction": {
        "type": "object",
        "additionalProperties": False,
        "required": ["proposals"],
        "properties": {
            "proposals": {
                "type": "array",
                "items": {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["aspect", "action", "dimension"],
                    "properties": {
                        "aspect": {"type": "string"},
                        "action": {"enum": ["merge", "add"]},
                        "dimension": {"type": "string", "minLength": 1},
                        "evidence": {"type": "string"},
                    },
                },
            }
        },
    },
    "slot_induction": {
        "type": "object",
        "additionalProperties": False,
        "required": ["proposals"],
        "properties": {
            "proposals": {
                "type": "array",
                "items": {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["aspect", "dimension", "key", "question", "form"],
                    "properties": {
                        "aspect": {"type": "string"},
                        "dimension": {"type": "string"},
                        "key": {"type": "string", "minLength": 1},
                        "question": {"type": "string", "minLength": 1},
                        "form": {"enum": ["binary", "open"]},
                        "overlaps_with": {"type": ["string", "null"]},
                    },
                },
            }
        },
    },
    "score_map": {
        "type": "object",
        "additionalProperties": False,
        "required": ["scores"],
        "properties": {
            "scores": {"type": "object", "additionalProperties": {"type": "number"}}
        },
    },
    "rank_choice": {
        "type": "object",
        "additionalProperties": False,
        "required": ["choice"],
        "properties": {
            "choice": {"type": "string"},
            "scores": {"type": "object", "additionalProperties": {"type": "number"}},
        },
    },
    "user_judgment": {
        "type": "object",
        "additionalProperties": False,
        "required": ["verdict"],
        "properties": {
            "verdict": {
                "enum": [
                    "confirmed_slot",
                    "rejected_slot",
                    "rejected_dimension",
                    "aspect_done",
                    "aspect_has_more",
                ]
            },
            "excerpt": {"type": "string"},
        },
    },
    "question_text": {
        "type": "object",
        "additionalProperties": False,
        "required": ["question"],
        "properties": {"question": {"type": "string", "minLength": 1}},
    },
    "hit_judgment": {
        "type": "object",
        "additionalProperties": False,
        "required": ["matched"],
        "properties": {"matched": {"type": "array", "items": {"type": "string"}}},
    },
}
