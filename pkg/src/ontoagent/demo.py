"""Deterministic desk-scale backend and the bundled demo pack builder.

``RuleResponder`` is a rule-based stand-in for a language model: it parses
the rendered prompts and answers every registered schema with simple lexical
rules. It exists to record the replay scripts that ship with the package, so
the whole pipeline (induction, interviews, evaluation) can run offline and
byte-reproducibly. ``build_pack`` regenerates those bundled files.

Run ``python -m ontoagent.demo --out DIR`` to materialize the pack.
"""

from __future__ import annotations

import json
import re
from pathlib import Path
from typing import Any

from .backend import GenerationRequest, RecordingBackend, save_script
from .engine import SessionConfig
from .gym import (
    LexicalMatcher,
    Scenario,
    SimulatedStakeholder,
    text_tokens,
    run_benchmark,
    OntologyInterviewer,
    FreeformInterviewer,
)
from .induction import RequirementDoc, induce_ontology, write_induction_log
from .ontology import serialize, to_json

DEMO_ASPECTS = ["Interaction", "Content", "Style"]

# (trigger stem, aspect, dimension): fires when the stem appears in a document
DIMENSION_RULES = [
    ("search", "Interaction", "Search"),
    ("login", "Interaction", "Login"),
    ("account", "Interaction", "Login"),
    ("alert", "Interaction", "Alerts"),
    ("report", "Content", "Reports"),
    ("export", "Content", "Reports"),
    ("view", "Content", "Display"),
    ("display", "Content", "Display"),
    ("sav", "Content", "Display"),
    ("theme", "Style", "Theme"),
    ("color", "Style", "Theme"),
    ("layout", "Style", "Layout"),
]

# (trigger stems, aspect, dimension, key, question, form): fires when every
# trigger stem appears in the document
SLOT_RULES = [
    ({"filter"}, "Interaction", "Search", "filtering options", "Do you need filtering options?", "binary"),
    ({"sort"}, "Interaction", "Search", "sorting rules", "What sorting rules should apply?", "open"),
    ({"account"}, "Interaction", "Login", "user accounts", "Do you need user accounts?", "binary"),
    ({"alert"}, "Interaction", "Alerts", "notification alerts", "Do you need notification alerts?", "binary"),
    ({"report", "format"}, "Content", "Reports", "report format", "What format should generated reports use?", "open"),
    ({"export"}, "Content", "Reports", "csv export", "Do you need CSV export?", "binary"),
    ({"sav", "item", "list"}, "Content", "Display", "list of saved items", "Do you need a list of saved items?", "binary"),
    ({"sav", "item", "view"}, "Content", "Display", "saved items view", "Do you need a saved items view?", "binary"),
    ({"color"}, "Style", "Theme", "color scheme", "What color scheme do you prefer?", "open"),
    ({"dark"}, "Style", "Theme", "dark mode", "Do you need dark mode?", "binary"),
    ({"mobile"}, "Style", "Layout", "mobile layout", "Do you need a mobile layout?", "binary"),
    ({"download"}, "Content", "Reports", "csv export download options", "Do you need csv export download options?", "binary"),
]

FREEFORM_QUESTIONS = [
    "Could you tell me more about what you have in mind for the site?",
    "Do you need filtering options in search?",
    "Who will use the site day to day?",
    "What color scheme do you prefer?",
    "Is there anything else you would like to add?",
    "Do you have a launch date in mind?",
    "What devices should the site support?",
    "Do you need anything else for search?",
    "Any preferences for fonts?",
    "Do you need printing support?",
]

_NEGATIVE = re.compile(r"^(no\b|not\b|we do not\b|nothing\b)|\b(don't need|do not need|not required|no need|unnecessary)\b")
_GATE_QUESTION = re.compile(r"Are there any other requirements related to (.+)\?")
_GATE_ANSWER = re.compile(r"\b(nothing else|no other|no more|that's all|nothing more)\b")


def _after(text: str, marker: str) -> str:
    idx = text.index(marker)
    return text[idx + len(marker):]


def _between(text: str, start: str, end: str) -> str:
    tail = _after(text, start)
    return tail[: tail.index(end)]


def _first_json(text: str) -> Any:
    decoder = json.JSONDecoder()
    for match in re.finditer(r"[\[{]", text):
        try:
            value, _ = decoder.raw_decode(text[match.start():])
            return value
        except json.JSONDecodeError:
            continue
    raise ValueError("no JSON value found in prompt")


def _line_value(text: str, label: str) -> str:
    match = re.search(rf"^{re.escape(label)}:\s*(.*)$", text, re.MULTILINE)
    return match.group(1).strip() if match else ""


class RuleResponder:
    """Backend double driven entirely by lexical rules over the prompt text."""

    def complete(self, request: GenerationRequest) -> str:
        handler = getattr(self, f"_do_{request.schema_name}", None)
        if handler is None:
            raise ValueError(f"RuleResponder has no rule for schema {request.schema_name!r}")
        return handler(request.user_text)

    # -- interview operations --

    def _do_score_map(self, user_text: str) -> str:
        description = _between(user_text, "Initial description:", "Ontology nodes:")
        nodes = _first_json(_after(user_text, "Ontology nodes:"))
        wanted = text_tokens(description)
        scores = {}
        for node in nodes:
            label_tokens = text_tokens(node["label"])
            overlap = len(wanted & label_tokens)
            scores[node["id"]] = round(overlap / len(label_tokens), 4) if label_tokens else 0.0
        return json.dumps({"scores": scores})

    def _do_rank_choice(self, user_text: str) -> str:
        history = _between(user_text, "Dialogue so far:", "Candidate slots:")
        candidates = _first_json(_after(user_text, "Candidate slots:"))
        last_line = ""
        for line in history.strip().splitlines():
            if line.startswith("Stakeholder:"):
                last_line = line
        mentioned = text_tokens(last_line)
        best_id, best_overlap = candidates[0]["id"], 0
        scores = {}
        for candidate in candidates:
            overlap = len(mentioned & text_tokens(candidate["key"]))
            if overlap > 0:
                scores[candidate["id"]] = round(min(1.0, overlap / 4), 4)
            if overlap > best_overlap:
                best_id, best_overlap = candidate["id"], overlap
        reply: dict[str, Any] = {"choice": best_id}
        if scores:
            reply["scores"] = scores
        return json.dumps(reply)

    def _do_user_judgment(self, user_text: str) -> str:
        answer = _line_value(user_text, "Stakeholder reply")
        lowered = answer.lower()
        if "Wrap-up question asked:" in user_text:
            verdict = "aspect_done" if _GATE_ANSWER.search(lowered) else "aspect_has_more"
            return json.dumps({"verdict": verdict, "excerpt": answer})
        dimension = _line_value(user_text, "Dimension")
        if _NEGATIVE.search(lowered):
            tokens = text_tokens(answer)
            dim_tokens = text_tokens(dimension)
            whole = (
                bool(dim_tokens and dim_tokens <= tokens)
                or " entire " in lowered
                or " whole " in lowered
            )
            verdict = "rejected_dimension" if whole else "rejected_slot"
        else:
            verdict = "confirmed_slot"
        return json.dumps({"verdict": verdict, "excerpt": answer})

    def _do_question_text(self, user_text: str) -> str:
        candidate = _line_value(user_text, "- candidate question")
        return json.dumps({"question": candidate})

    def _do_freeform_question(self, user_text: str) -> str:
        history = _between(user_text, "Dialogue so far:", "Ask your next question.")
        asked = sum(1 for line in history.splitlines() if line.startswith("Interviewer:"))
        return FREEFORM_QUESTIONS[asked % len(FREEFORM_QUESTIONS)]

    # -- gym persona --

    def _do_stakeholder_answer(self, user_text: str) -> str:
        question = _line_value(user_text, "Interviewer question")
        gate = _GATE_QUESTION.search(question)
        if gate:
            return f"No, nothing else about {gate.group(1)}."
        specification = _between(user_text, "Full specification:", "Dialogue so far:")
        q_tokens = text_tokens(question)
        required = min(2, len(q_tokens)) or 1
        best_sentence, best_overlap = "", 0
        for sentence in re.split(r"(?<=[.!?])\s+", specification.strip()):
            if not sentence.strip():
                continue
            overlap = len(q_tokens & text_tokens(sentence))
            if overlap > best_overlap:
                best_sentence, best_overlap = sentence.strip(), overlap
        if best_overlap >= required:
            return f"Yes. {best_sentence}"
        return "No, we don't need that."

    def _do_hit_judgment(self, user_text: str) -> str:
        question = _line_value(user_text, "Question")
        answer = _line_value(user_text, "Answer")
        matcher = LexicalMatcher()
        exchange = text_tokens(question + " " + answer)
        matched = []
        for line in _after(user_text, "Candidate requirements:").strip().splitlines():
            entry = re.match(r"- (\S+): (.+)$", line.strip())
            if not entry:
                continue
            req_tokens = text_tokens(entry.group(2))
            if req_tokens and len(exchange & req_tokens) / len(exchange | req_tokens) >= matcher.threshold:
                matched.append(entry.group(1))
        return json.dumps({"matched": matched})

    # -- induction --

    def _do_dimension_induction(self, user_text: str) -> str:
        outline = _first_json(_after(user_text, "Current Ontology Tree:"))
        body = _between(user_text, "New Requirements Text:", "Task:")
        tokens = text_tokens(body)
        existing = {
            aspect["name"]: set(aspect["dimensions"]) for aspect in outline["aspects"]
        }
        proposals = []
        seen: set[tuple[str, str]] = set()
        for trigger, aspect, dimension in DIMENSION_RULES:
            if trigger not in tokens or (aspect, dimension) in seen:
                continue
            seen.add((aspect, dimension))
            action = "merge" if dimension in existing.get(aspect, set()) else "add"
            proposals.append(
                {"aspect": aspect, "action": action, "dimension": dimension, "evidence": trigger}
            )
        return json.dumps({"proposals": proposals})

    def _do_slot_induction(self, user_text: str) -> str:
        outline = _first_json(_after(user_text, "Two-level Ontology:"))
        body = _between(user_text, "New Requirements Text:", "Task:")
        tokens = text_tokens(body)
        existing_keys: dict[tuple[str, str], list[str]] = {}
        for aspect in outline["aspects"]:
            for dim in aspect["dimensions"]:
                existing_keys[(aspect["name"], dim["name"])] = list(dim["slots"])
        proposals = []
        for triggers, aspect, dimension, key, question, form in SLOT_RULES:
            if not triggers <= tokens:
                continue
            if (aspect, dimension) not in existing_keys:
                continue
            overlaps = None
            key_tokens = text_tokens(key)
            for existing in existing_keys[(aspect, dimension)]:
                if existing != key and len(key_tokens & text_tokens(existing)) >= 2:
                    overlaps = existing
                    break
            proposals.append(
                {
                    "aspect": aspect,
                    "dimension": dimension,
                    "key": key,
                    "question": question,
                    "form": form,
                    "overlaps_with": overlaps,
                }
            )
        return json.dumps({"proposals": proposals})


DEMO_CORPUS = [
    RequirementDoc("stock-01", "stock-screener", "Users search stocks with filtering options by sector and market cap."),
    RequirementDoc("stock-02", "stock-screener", "The screener generates reports in PDF format and supports CSV export for results."),
    RequirementDoc("stock-03", "stock-screener", "Members get notification alerts when prices move; login with user accounts keeps preferences."),
    RequirementDoc("stock-04", "stock-screener", "A list of saved items keeps chosen stocks; results can be sorted with custom sorting rules."),
    RequirementDoc("stock-05", "stock-screener", "Charts show stock history with a dark mode theme option."),
    RequirementDoc("recipe-01", "recipe-portal", "Visitors browse a saved items view of favorite recipes."),
    RequirementDoc("recipe-02", "recipe-portal", "Recipes can be searched and exported; downloads offer csv export download options."),
    RequirementDoc("recipe-03", "recipe-portal", "The recipe site uses a warm color scheme and a clean page layout."),
    RequirementDoc("recipe-04", "recipe-portal", "Pages adapt with a responsive mobile layout for phones."),
    RequirementDoc("recipe-05", "recipe-portal", "Cooks log in with login user accounts to rate recipes; search offers sorting rules by rating."),
]

DEMO_SCENARIOS = [
    Scenario.from_dict(
        {
            "id": "stock-screener",
            "app_type": "stock-screener",
            "initial_description": "I want a website that allows users to search stocks and generate reports.",
            "full_specification": (
                "The site is a stock screening tool. Users can search stocks by keyword. "
                "Search results offer filtering options by sector. "
                "Generated reports use PDF format with charts. "
                "Notification alerts cover saved stocks. "
                "A saved items view lists chosen stocks. "
                "The color scheme is dark. "
                "A responsive mobile layout is used."
            ),
            "implicit_requirements": [
                {"req_id": "st-i1", "text": "filtering options for search results by sector", "aspect": "interaction"},
                {"req_id": "st-i2", "text": "notification alerts for saved stocks", "aspect": "interaction"},
                {"req_id": "st-c1", "text": "generated reports in pdf format with charts", "aspect": "content"},
                {"req_id": "st-c2", "text": "a saved items view for chosen stocks", "aspect": "content"},
                {"req_id": "st-s1", "text": "a dark color scheme", "aspect": "style"},
                {"req_id": "st-s2", "text": "a responsive mobile layout", "aspect": "style"},
            ],
        }
    ),
    Scenario.from_dict(
        {
            "id": "recipe-portal",
            "app_type": "recipe-portal",
            "initial_description": "I need a website where visitors browse recipes and save favorites.",
            "full_specification": (
                "The site shows recipes with photos. "
                "Recipe pages use a printable layout. "
                "The color scheme is warm and bright. "
                "A saved items view lists favorite recipes."
            ),
            "implicit_requirements": [
                {"req_id": "rp-c1", "text": "a saved items view for favorite recipes", "aspect": "content"},
                {"req_id": "rp-s1", "text": "a warm bright color scheme", "aspect": "style"},
                {"req_id": "rp-s2", "text": "a printable layout for recipe pages", "aspect": "style"},
            ],
        }
    ),
    Scenario.from_dict(
        {
            "id": "team-wiki",
            "app_type": "team-wiki",
            "initial_description": "We want an internal wiki website for our team documents.",
            "full_specification": (
                "The wiki stores team documents. "
                "Search supports filtering options by tag. "
                "Documents have CSV export. "
                "A responsive mobile layout is used."
            ),
            "implicit_requirements": [
                {"req_id": "tw-i1", "text": "filtering options by tag in search", "aspect": "interaction"},
                {"req_id": "tw-c1", "text": "csv export of documents", "aspect": "content"},
                {"req_id": "tw-s1", "text": "a responsive mobile layout", "aspect": "style"},
            ],
        }
    ),
    Scenario.from_dict(
        {
            "id": "gallery-site",
            "app_type": "gallery-site",
            "initial_description": "An online gallery website to show artwork collections.",
            "full_specification": (
                "Artwork pages show photos in a grid. "
                "Visitors sort artwork with sorting rules by year. "
                "The color scheme is black and white."
            ),
            "implicit_requirements": [
                {"req_id": "ga-i1", "text": "sorting rules by year for artwork", "aspect": "interaction"},
                {"req_id": "ga-s1", "text": "a black and white color scheme", "aspect": "style"},
            ],
        }
    ),
]

DEMO_CONFIG = SessionConfig(max_turns=10, gate_threshold=3)


def build_pack(out_dir: str | Path) -> dict[str, Path]:
    """Materialize the demo pack: corpus, ontology, scenarios, replay scripts.

    Everything is produced by recording the rule responder, so replaying the
    scripts through a strict scripted backend reproduces each run exactly.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths: dict[str, Path] = {}

    paths["corpus"] = out / "corpus.jsonl"
    paths["corpus"].write_text(
        "".join(
            json.dumps({"id": d.id, "app_type": d.app_type, "body": d.body}, ensure_ascii=False) + "\n"
            for d in DEMO_CORPUS
        ),
        encoding="utf-8",
    )
    paths["aspects"] = out / "aspects.json"
    paths["aspects"].write_text(json.dumps(DEMO_ASPECTS) + "\n", encoding="utf-8")

    induction_recorder = RecordingBackend(RuleResponder())
    onto, events = induce_ontology(
        DEMO_CORPUS, DEMO_ASPECTS, induction_recorder, domain_name="website"
    )
    paths["induction_script"] = out / "induction_script.json"
    induction_recorder.save(paths["induction_script"])
    paths["induction_log"] = out / "induction_log.jsonl"
    write_induction_log(events, paths["induction_log"])
    paths["ontology"] = out / "ontology.json"
    paths["ontology"].write_text(to_json(onto), encoding="utf-8")

    paths["scenarios"] = out / "scenarios.jsonl"
    paths["scenarios"].write_text(
        "".join(json.dumps(s.as_dict(), ensure_ascii=False) + "\n" for s in DEMO_SCENARIOS),
        encoding="utf-8",
    )

    eval_recorder = RecordingBackend(RuleResponder())
    matcher = LexicalMatcher()
    run_benchmark(
        DEMO_SCENARIOS,
        lambda scenario: OntologyInterviewer(
            onto, eval_recorder, DEMO_CONFIG, session_id=scenario.id
        ),
        eval_recorder,
        matcher,
    )
    run_benchmark(
        DEMO_SCENARIOS,
        lambda scenario: FreeformInterviewer(eval_recorder, max_turns=DEMO_CONFIG.max_turns),
        eval_recorder,
        matcher,
    )
    paths["eval_script"] = out / "eval_script.json"
    eval_recorder.save(paths["eval_script"])
    return paths


def bundled_data_dir() -> Path:
    """Location of the pack files shipped inside the package."""
    return Path(__file__).parent / "data"


def main(argv: list[str] | None = None) -> int:
    import argparse

    parser = argparse.ArgumentParser(description="Write the bundled demo pack to a directory.")
    parser.add_argument("--out", default="demo-pack", help="output directory")
    args = parser.parse_args(argv)
    paths = build_pack(args.out)
    for name, path in sorted(paths.items()):
        print(f"{name}: {path}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
