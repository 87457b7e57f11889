"""Shared fixtures and builders for the test suite."""

from __future__ import annotations

import random
from typing import Callable

import pytest

from ontoagent import ontology as onto_mod
from ontoagent.backend import BackendUnavailable, GenerationRequest
from ontoagent.ontology import ExperienceOntology, QuestionForm, new_ontology


class StubBackend:
    """Maps schema_name to a canned reply, a reply queue, or a handler."""

    def __init__(self, handlers: dict[str, str | list[str] | Callable[[GenerationRequest], str]]):
        self.handlers = handlers
        self.calls: list[GenerationRequest] = []

    def complete(self, request: GenerationRequest) -> str:
        self.calls.append(request)
        handler = self.handlers[request.schema_name]
        if callable(handler):
            return handler(request)
        if isinstance(handler, list):
            return handler.pop(0)
        return handler


class FailingBackend:
    def complete(self, request: GenerationRequest) -> str:
        raise BackendUnavailable("transport down")

WORDS = [
    "search", "login", "display", "report", "filter", "sort", "export", "chart",
    "profile", "theme", "layout", "color", "alert", "history", "feed", "upload",
    "share", "tag", "rank", "archive", "draft", "badge", "stream", "digest",
]


def random_ontology(rng: random.Random, max_aspects: int = 3) -> ExperienceOntology:
    """Build a random but valid three-level tree for property tests."""
    n_aspects = rng.randint(1, max_aspects)
    names = ["Interaction", "Content", "Style", "Workflow"][:n_aspects]
    onto = new_ontology("website", names)
    for aspect in list(onto.aspects):
        for _ in range(rng.randint(0, 3)):
            word = rng.choice(WORDS)
            try:
                dim_id = onto_mod.add_dimension(onto, aspect.id, word.capitalize())
            except onto_mod.DuplicateName:
                continue
            for _ in range(rng.randint(0, 4)):
                noun = rng.choice(WORDS)
                form = rng.choice([QuestionForm.BINARY, QuestionForm.OPEN])
                key = f"{noun} {rng.choice(['options', 'rules', 'format', 'limit'])}"
                question = (
                    f"Do you need {key}?"
                    if form is QuestionForm.BINARY
                    else f"What {key} should apply?"
                )
                try:
                    onto_mod.add_slot(onto, dim_id, key, question, form)
                except onto_mod.DuplicateKey:
                    continue
    return onto


def scramble_state(onto: ExperienceOntology, rng: random.Random) -> None:
    """Randomize scores and push some slots into terminal states."""
    for aspect, dim, slot in onto_mod.walk(onto):
        aspect.score = round(rng.random(), 3)
        dim.score = round(rng.random(), 3)
        slot.score = round(rng.random(), 3)
        roll = rng.random()
        if roll < 0.15:
            onto_mod.mark_slot(onto, slot.id, onto_mod.SlotState.CONFIRMED)
        elif roll < 0.3:
            onto_mod.mark_slot(onto, slot.id, onto_mod.SlotState.REJECTED)
    for aspect in onto.aspects:
        for dim in aspect.dimensions:
            if rng.random() < 0.1:
                onto_mod.prune_dimension(onto, dim.id)
        if rng.random() < 0.05:
            onto_mod.prune_aspect(onto, aspect.id)


@pytest.fixture
def web_ontology() -> ExperienceOntology:
    """Small hand-built website tree used across module tests."""
    onto = new_ontology("website", ["Interaction", "Content", "Style"])
    search = onto_mod.add_dimension(onto, "interaction", "Search")
    login = onto_mod.add_dimension(onto, "interaction", "Login")
    display = onto_mod.add_dimension(onto, "content", "Display")
    theme = onto_mod.add_dimension(onto, "style", "Theme")
    onto_mod.add_slot(onto, search, "filtering options", "Do you need filtering options?", QuestionForm.BINARY)
    onto_mod.add_slot(onto, search, "sorting rules", "What sorting rules should apply?", QuestionForm.OPEN)
    onto_mod.add_slot(onto, login, "user accounts", "Do you need user accounts?", QuestionForm.BINARY)
    onto_mod.add_slot(onto, login, "password reset", "Do you need password reset?", QuestionForm.BINARY)
    onto_mod.add_slot(onto, display, "report format", "What format should generated reports use?", QuestionForm.OPEN)
    onto_mod.add_slot(onto, display, "export", "Do you need export?", QuestionForm.BINARY)
    onto_mod.add_slot(onto, theme, "color scheme", "What color scheme do you prefer?", QuestionForm.OPEN)
    return onto
