"""Evaluation gym: scenarios, a simulated oracle stakeholder, hit judging,
and the episode/benchmark runners that pit interviewers against scenarios.

A scenario bundles an underspecified initial description, the full
specification the simulated stakeholder answers from, and the ground-truth
implicit requirements the interviewer is supposed to surface.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Iterable, Protocol

from . import engine as engine_mod
from .backend import Backend, BackendError, GenerationRequest, generate
from .engine import SessionConfig, Speaker, Turn, TurnKind
from .metrics import HitSequence, MetricsReport, compute_tkqr
from .ontology import ExperienceOntology
from .prompts import render_prompt

logger = logging.getLogger(__name__)

ASPECT_LABELS = ("interaction", "content", "style")


class GymError(Exception):
    pass


class EmptyGroundTruth(GymError):
    pass


class ScenarioFormatError(GymError):
    def __init__(self, line_no: int, message: str) -> None:
        self.line_no = line_no
        super().__init__(f"line {line_no}: {message}")


class EpisodeError(GymError):
    """An episode aborted; carries the transcript prefix plus a diagnostic row."""

    def __init__(self, message: str, transcript: list[dict[str, Any]]):
        self.transcript = transcript
        super().__init__(message)


@dataclass(frozen=True)
class ImplicitRequirement:
    req_id: str
    text: str
    aspect: str

    def __post_init__(self) -> None:
        if self.aspect not in ASPECT_LABELS:
            raise ValueError(f"aspect must be one of {ASPECT_LABELS}, got {self.aspect!r}")


@dataclass(frozen=True)
class Scenario:
    id: str
    app_type: str
    initial_description: str
    full_specification: str
    implicit_requirements: tuple[ImplicitRequirement, ...]

    def __post_init__(self) -> None:
        if not self.implicit_requirements:
            raise ValueError(f"scenario {self.id!r} has no implicit requirements")
        ids = [r.req_id for r in self.implicit_requirements]
        if len(set(ids)) != len(ids):
            raise ValueError(f"scenario {self.id!r} has duplicate requirement ids")

    @classmethod
    def from_dict(cls, record: dict[str, Any]) -> "Scenario":
        reqs = tuple(
            ImplicitRequirement(r["req_id"], r["text"], r["aspect"])
            for r in record["implicit_requirements"]
        )
        return cls(
            id=record["id"],
            app_type=record["app_type"],
            initial_description=record["initial_description"],
            full_specification=record["full_specification"],
            implicit_requirements=reqs,
        )

    def as_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "app_type": self.app_type,
            "initial_description": self.initial_description,
            "full_specification": self.full_specification,
            "implicit_requirements": [
                {"req_id": r.req_id, "text": r.text, "aspect": r.aspect}
                for r in self.implicit_requirements
            ],
        }


def load_scenarios(path: str | Path) -> list[Scenario]:
    """Read a JSONL scenario corpus, reporting bad lines by number."""
    scenarios = []
    for line_no, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ScenarioFormatError(line_no, f"invalid JSON ({exc.msg})") from None
        try:
            scenarios.append(Scenario.from_dict(record))
        except (KeyError, TypeError, ValueError) as exc:
            raise ScenarioFormatError(line_no, str(exc)) from None
    return scenarios


# --- metric entry points over scenarios ---


def compute_ire(elicited_req_ids: Iterable[str], scenario: Scenario) -> float:
    """Fraction of ground-truth implicit requirements elicited."""
    ground_truth = {r.req_id for r in scenario.implicit_requirements}
    if not ground_truth:
        raise EmptyGroundTruth(scenario.id)
    return len(set(elicited_req_ids) & ground_truth) / len(ground_truth)


def compute_aspect_ire(elicited_req_ids: Iterable[str], scenario: Scenario) -> dict[str, float]:
    """Per-aspect IRE; aspects with no ground-truth items are omitted."""
    elicited = set(elicited_req_ids)
    result: dict[str, float] = {}
    for aspect in ASPECT_LABELS:
        ids = {r.req_id for r in scenario.implicit_requirements if r.aspect == aspect}
        if ids:
            result[aspect] = len(elicited & ids) / len(ids)
    return result


# --- hit judging ---

STOPWORDS = frozenset(
    """a an the and or of to for in on at by with from as do does did done you your
    yours i we our us it its this that these those is are was were be been being
    have has had will would should could can may might must need needs needed want
    wants wanted like prefer no yes not any some all there here what which how who
    when where why please about more other else thanks ok okay sure course
    definitely really just also too very them they he she his her my me us
    user users site website""".split()
)


def _stem(token: str) -> str:
    if len(token) > 4 and token.endswith("ies"):
        return token[:-3] + "y"
    if len(token) > 5 and token.endswith("ing"):
        return token[:-3]
    if len(token) > 6 and token.endswith("able"):
        return token[:-4]
    if len(token) > 4 and token.endswith("ed"):
        return token[:-2]
    if len(token) > 3 and token.endswith("s") and not token.endswith(("ss", "us", "is")):
        return token[:-1]
    return token


def text_tokens(text: str) -> frozenset[str]:
    """Lowercased, stopword-free, lightly stemmed content tokens."""
    raw = re.findall(r"[a-z0-9]+", text.lower())
    return frozenset(_stem(tok) for tok in raw if tok not in STOPWORDS)


Matcher = Callable[[str, str, "list[ImplicitRequirement]"], "list[str]"]


@dataclass(frozen=True)
class LexicalMatcher:
    """Deterministic hit judge: token-overlap Jaccard between the exchange
    (question plus answer) and each requirement text."""

    threshold: float = 0.6

    def __call__(
        self, question: str, answer: str, candidates: list[ImplicitRequirement]
    ) -> list[str]:
        exchange = text_tokens(question + " " + answer)
        matched = []
        for req in candidates:
            req_tokens = text_tokens(req.text)
            if not req_tokens:
                continue
            overlap = len(exchange & req_tokens) / len(exchange | req_tokens)
            if overlap >= self.threshold:
                matched.append(req.req_id)
        return matched


@dataclass
class BackendJudge:
    """Model-based hit judge with a lexical fallback on any backend failure."""

    backend: Backend
    fallback: LexicalMatcher = field(default_factory=LexicalMatcher)

    def __call__(
        self, question: str, answer: str, candidates: list[ImplicitRequirement]
    ) -> list[str]:
        listing = "\n".join(f"- {r.req_id}: {r.text}" for r in candidates)
        system, user = render_prompt(
            "judge_hits", {"question": question, "answer": answer, "candidates": listing}
        )
        try:
            response = generate(
                GenerationRequest(system, user, expects_structure=True, schema_name="hit_judgment"),
                self.backend,
            )
        except BackendError as exc:
            logger.warning("backend judge failed, using lexical fallback: %s", exc)
            return self.fallback(question, answer, candidates)
        valid_ids = {r.req_id for r in candidates}
        return [rid for rid in response.parsed["matched"] if rid in valid_ids]


def judge_hits(
    question: str,
    answer: str,
    scenario: Scenario,
    already_hit: set[str],
    matcher: Matcher,
) -> list[str]:
    """Ground-truth requirements newly evidenced by this exchange.

    Requirements already hit earlier in the episode are never returned again.
    """
    candidates = [r for r in scenario.implicit_requirements if r.req_id not in already_hit]
    matched = matcher(question, answer, candidates)
    seen: set[str] = set()
    unique = []
    for rid in matched:
        if rid not in seen:
            seen.add(rid)
            unique.append(rid)
    return unique


# --- simulated stakeholder ---


@dataclass
class SimulatedStakeholder:
    """Oracle persona that answers strictly from the scenario's full
    specification: affirm what is in it, deny what is not, volunteer only
    detail about the asked item."""

    scenario: Scenario
    backend: Backend
    persona: str = ""

    def answer(self, question: str, history: list[Turn]) -> str:
        return simulate_answer(self, question, history)


def simulate_answer(
    stakeholder: SimulatedStakeholder, question: str, history: list[Turn]
) -> str:
    if not question.strip():
        raise ValueError("question must be nonempty")
    system, user = render_prompt(
        "simulate_stakeholder",
        {
            "specification": stakeholder.scenario.full_specification,
            "history": engine_mod.render_history(history),
            "question": question,
            "persona": stakeholder.persona,
        },
    )
    response = generate(
        GenerationRequest(system, user, expects_structure=False, schema_name="stakeholder_answer"),
        stakeholder.backend,
    )
    return response.raw_text.strip()


# --- interviewers ---


@dataclass
class AgentQuestion:
    text: str
    kind: TurnKind
    node_id: str | None = None


class Interviewer(Protocol):
    kind: str

    def start(self, u0: str) -> AgentQuestion | None: ...

    def observe(self, answer: str) -> AgentQuestion | None: ...

    @property
    def finish_reason(self) -> str | None: ...


class OntologyInterviewer:
    """The ontology-guided agent, adapted to the gym's question/answer loop."""

    kind = "ontoagent"

    def __init__(
        self,
        onto: ExperienceOntology,
        backend: Backend,
        config: SessionConfig | None = None,
        session_id: str = "episode",
    ):
        self.onto = onto
        self.backend = backend
        self.config = config or SessionConfig()
        self.session_id = session_id
        self.session: engine_mod.SessionState | None = None

    def start(self, u0: str) -> AgentQuestion | None:
        self.session, outcome = engine_mod.start_session(
            self.onto, u0, self.config, self.backend, session_id=self.session_id
        )
        return self._to_question(outcome)

    def observe(self, answer: str) -> AgentQuestion | None:
        outcome = engine_mod.step(self.session, answer, self.backend)
        return self._to_question(outcome)

    @staticmethod
    def _to_question(outcome: engine_mod.StepOutcome) -> AgentQuestion | None:
        if outcome.finished:
            return None
        kind = TurnKind.GATE_QUESTION if outcome.kind == "gate" else TurnKind.SLOT_QUESTION
        return AgentQuestion(outcome.question, kind, outcome.node_id)

    @property
    def finish_reason(self) -> str | None:
        return self.session.finish_reason if self.session else None


class FreeformInterviewer:
    """Baseline: questions straight from dialogue history, no ontology.

    Stops only when the turn budget runs out.
    """

    kind = "freeform"

    def __init__(self, backend: Backend, max_turns: int = engine_mod.DEFAULT_MAX_TURNS):
        self.backend = backend
        self.max_turns = max_turns
        self.history: list[Turn] = []
        self.asked = 0
        self._finish_reason: str | None = None

    def start(self, u0: str) -> AgentQuestion | None:
        self.history = [Turn(Speaker.STAKEHOLDER, u0, TurnKind.INITIAL)]
        return self._next_question()

    def observe(self, answer: str) -> AgentQuestion | None:
        self.history.append(Turn(Speaker.STAKEHOLDER, answer, TurnKind.ANSWER))
        return self._next_question()

    def _next_question(self) -> AgentQuestion | None:
        if self.asked >= self.max_turns:
            self._finish_reason = "max_turns"
            return None
        question = engine_mod.freeform_step(self.history, self.backend)
        self.history.append(Turn(Speaker.AGENT, question, TurnKind.FREEFORM_QUESTION))
        self.asked += 1
        return AgentQuestion(question, TurnKind.FREEFORM_QUESTION)

    @property
    def finish_reason(self) -> str | None:
        return self._finish_reason


# --- episode and benchmark runners ---


@dataclass
class EpisodeResult:
    scenario_id: str
    interviewer_kind: str
    report: MetricsReport
    transcript: list[dict[str, Any]]
    hit_sequence: HitSequence
    finish_reason: str | None


def run_episode(
    interviewer: Interviewer,
    scenario: Scenario,
    stakeholder: SimulatedStakeholder,
    matcher: Matcher,
) -> EpisodeResult:
    """Drive one full interview and measure it.

    n counts every agent question (slot and gate alike); a hit at question i
    means at least one previously unelicited requirement surfaced there.
    """
    history: list[Turn] = [Turn(Speaker.STAKEHOLDER, scenario.initial_description, TurnKind.INITIAL)]
    hits: list[int] = []
    elicited_ids: list[str] = []
    already: set[str] = set()
    try:
        question = interviewer.start(scenario.initial_description)
        while question is not None:
            history.append(Turn(Speaker.AGENT, question.text, question.kind, question.node_id))
            answer = stakeholder.answer(question.text, history)
            history.append(Turn(Speaker.STAKEHOLDER, answer, TurnKind.ANSWER))
            new_ids = judge_hits(question.text, answer, scenario, already, matcher)
            already.update(new_ids)
            elicited_ids.extend(new_ids)
            hits.append(1 if new_ids else 0)
            question = interviewer.observe(answer)
    except Exception as exc:
        rows = [t.as_record() for t in history]
        rows.append({"kind": "error", "text": f"{type(exc).__name__}: {exc}"})
        raise EpisodeError(f"episode {scenario.id} aborted: {exc}", rows) from exc

    sequence = HitSequence(tuple(hits), k=len(scenario.implicit_requirements))
    values = compute_tkqr(sequence)
    report = MetricsReport(
        ire=compute_ire(elicited_ids, scenario),
        ire_by_aspect=compute_aspect_ire(elicited_ids, scenario),
        tkqr=values.tkqr,
        dcg=values.dcg,
        idcg=values.idcg,
        n=sequence.n,
        k=sequence.k,
        elicited_req_ids=elicited_ids,
    )
    transcript = [t.as_record() for t in history]
    transcript.append(
        {
            "elicited": elicited_ids,
            "hits": list(sequence.hits),
            "finish_reason": interviewer.finish_reason,
        }
    )
    return EpisodeResult(
        scenario_id=scenario.id,
        interviewer_kind=interviewer.kind,
        report=report,
        transcript=transcript,
        hit_sequence=sequence,
        finish_reason=interviewer.finish_reason,
    )


@dataclass
class BenchmarkResult:
    episodes: list[EpisodeResult]
    failures: list[dict[str, str]]

    def aggregate(self) -> dict[str, Any]:
        reports = [e.report for e in self.episodes]
        if not reports:
            return {"ire": 0.0, "ire_by_aspect": {}, "tkqr": 0.0}
        by_aspect: dict[str, list[float]] = {}
        for report in reports:
            for aspect, value in report.ire_by_aspect.items():
                by_aspect.setdefault(aspect, []).append(value)
        return {
            "ire": sum(r.ire for r in reports) / len(reports),
            "ire_by_aspect": {
                aspect: sum(vals) / len(vals) for aspect, vals in sorted(by_aspect.items())
            },
            "tkqr": sum(r.tkqr for r in reports) / len(reports),
        }

    def as_dict(self) -> dict[str, Any]:
        per_scenario: list[dict[str, Any]] = []
        for episode in self.episodes:
            row = episode.report.as_dict()
            row["scenario_id"] = episode.scenario_id
            row["interviewer"] = episode.interviewer_kind
            row["finish_reason"] = episode.finish_reason
            row["hits"] = list(episode.hit_sequence.hits)
            per_scenario.append(row)
        for failure in self.failures:
            per_scenario.append(dict(failure))
        per_scenario.sort(key=lambda r: r["scenario_id"])
        return {"per_scenario": per_scenario, "aggregate": self.aggregate()}


def run_benchmark(
    scenarios: list[Scenario],
    interviewer_factory: Callable[[Scenario], Interviewer],
    backend: Backend,
    matcher: Matcher,
    persona: str = "",
) -> BenchmarkResult:
    """Run every scenario, isolating failures so one bad episode cannot sink
    the batch."""
    if not scenarios:
        raise GymError("at least one scenario is required")
    episodes: list[EpisodeResult] = []
    failures: list[dict[str, str]] = []
    for scenario in scenarios:
        stakeholder = SimulatedStakeholder(scenario, backend, persona=persona)
        try:
            episodes.append(
                run_episode(interviewer_factory(scenario), scenario, stakeholder, matcher)
            )
        except EpisodeError as exc:
            logger.warning("scenario %s failed: %s", scenario.id, exc)
            failures.append({"scenario_id": scenario.id, "error": str(exc)})
    return BenchmarkResult(episodes=episodes, failures=failures)
