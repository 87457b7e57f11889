"""The experience-ontology tree: aspects, dimensions, slots, and their lifecycle.

The tree is exactly three levels deep. Aspects partition the requirement
space, dimensions group functional concerns under an aspect, and slots are
the individual clarifiable items the interviewer asks about. Every other
module manipulates the tree only through the operations defined here.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Iterator


class OntologyError(Exception):
    """Base class for ontology manipulation errors."""


class UnknownNode(OntologyError):
    """Raised when a node id does not resolve to a node in the tree."""


class DuplicateName(OntologyError):
    """Raised when a dimension name collides within its aspect."""


class DuplicateKey(OntologyError):
    """Raised when a slot key collides within its dimension."""


class IllegalStateChange(OntologyError):
    """Raised on an attempt to move a slot out of a terminal state."""


class SchemaViolation(OntologyError):
    """A document failed validation; ``path`` points at the offending field."""

    def __init__(self, path: str, message: str) -> None:
        self.path = path
        self.message = message
        super().__init__(f"{path}: {message}")


class SlotState(str, Enum):
    UNEXPLORED = "unexplored"
    CONFIRMED = "confirmed"
    REJECTED = "rejected"
    PRUNED = "pruned"


class QuestionForm(str, Enum):
    BINARY = "binary"
    OPEN = "open"


TERMINAL_STATES = frozenset({SlotState.CONFIRMED, SlotState.REJECTED, SlotState.PRUNED})


def normalize_text(text: str) -> str:
    """Lowercase, trim, and collapse internal whitespace."""
    return re.sub(r"\s+", " ", text.strip().lower())


def slugify(text: str) -> str:
    slug = re.sub(r"[^a-z0-9]+", "-", normalize_text(text)).strip("-")
    return slug or "node"


@dataclass
class Slot:
    id: str
    key: str
    question: str
    question_form: QuestionForm
    state: SlotState = SlotState.UNEXPLORED
    score: float = 0.0


@dataclass
class Dimension:
    id: str
    name: str
    slots: list[Slot] = field(default_factory=list)
    pruned: bool = False
    score: float = 0.0


@dataclass
class Aspect:
    id: str
    name: str
    dimensions: list[Dimension] = field(default_factory=list)
    pruned: bool = False
    score: float = 0.0


@dataclass
class ExperienceOntology:
    domain_name: str
    aspects: list[Aspect] = field(default_factory=list)
    version: int = 1


def new_ontology(domain_name: str, aspect_names: list[str]) -> ExperienceOntology:
    """Create a tree with the given aspect layer and nothing underneath it."""
    onto = ExperienceOntology(domain_name=domain_name)
    seen: set[str] = set()
    for name in aspect_names:
        norm = normalize_text(name)
        if not norm:
            raise DuplicateName("aspect name is empty after normalization")
        if norm in seen:
            raise DuplicateName(f"duplicate aspect name {name!r}")
        seen.add(norm)
        onto.aspects.append(Aspect(id=_unique_id(onto, slugify(name)), name=name.strip()))
    return onto


def _all_ids(onto: ExperienceOntology) -> set[str]:
    ids = set()
    for aspect in onto.aspects:
        ids.add(aspect.id)
        for dim in aspect.dimensions:
            ids.add(dim.id)
            for slot in dim.slots:
                ids.add(slot.id)
    return ids


def _unique_id(onto: ExperienceOntology, base: str) -> str:
    taken = _all_ids(onto)
    if base not in taken:
        return base
    n = 2
    while f"{base}-{n}" in taken:
        n += 1
    return f"{base}-{n}"


def walk(onto: ExperienceOntology) -> Iterator[tuple[Aspect, Dimension, Slot]]:
    """Yield (aspect, dimension, slot) triples in insertion order."""
    for aspect in onto.aspects:
        for dim in aspect.dimensions:
            for slot in dim.slots:
                yield aspect, dim, slot


def find_aspect(onto: ExperienceOntology, aspect_id: str) -> Aspect:
    for aspect in onto.aspects:
        if aspect.id == aspect_id:
            return aspect
    raise UnknownNode(f"no aspect with id {aspect_id!r}")


def find_dimension(onto: ExperienceOntology, dimension_id: str) -> tuple[Aspect, Dimension]:
    for aspect in onto.aspects:
        for dim in aspect.dimensions:
            if dim.id == dimension_id:
                return aspect, dim
    raise UnknownNode(f"no dimension with id {dimension_id!r}")


def find_slot(onto: ExperienceOntology, slot_id: str) -> tuple[Aspect, Dimension, Slot]:
    for aspect, dim, slot in walk(onto):
        if slot.id == slot_id:
            return aspect, dim, slot
    raise UnknownNode(f"no slot with id {slot_id!r}")


def aspect_by_name(onto: ExperienceOntology, name: str) -> Aspect | None:
    norm = normalize_text(name)
    for aspect in onto.aspects:
        if normalize_text(aspect.name) == norm:
            return aspect
    return None


def dimension_by_name(aspect: Aspect, name: str) -> Dimension | None:
    norm = normalize_text(name)
    for dim in aspect.dimensions:
        if normalize_text(dim.name) == norm:
            return dim
    return None


def slot_by_key(dim: Dimension, key: str) -> Slot | None:
    norm = normalize_text(key)
    for slot in dim.slots:
        if slot.key == norm:
            return slot
    return None


def add_dimension(onto: ExperienceOntology, aspect_id: str, name: str) -> str:
    """Append a dimension under an aspect and return its id.

    Raises UnknownNode for a missing or pruned aspect and DuplicateName when
    the normalized name already exists under that aspect.
    """
    aspect = find_aspect(onto, aspect_id)
    if aspect.pruned:
        raise UnknownNode(f"aspect {aspect_id!r} is pruned")
    if not normalize_text(name):
        raise DuplicateName("dimension name is empty after normalization")
    if dimension_by_name(aspect, name) is not None:
        raise DuplicateName(f"dimension {name!r} already exists under aspect {aspect.name!r}")
    dim_id = _unique_id(onto, f"{aspect.id}.{slugify(name)}")
    aspect.dimensions.append(Dimension(id=dim_id, name=name.strip()))
    onto.version += 1
    return dim_id


def add_slot(
    onto: ExperienceOntology,
    dimension_id: str,
    key: str,
    question: str,
    form: QuestionForm,
) -> str:
    """Append an Unexplored slot under a dimension and return its id.

    The key is stored normalized; a normalized collision within the
    dimension raises DuplicateKey.
    """
    _, dim = find_dimension(onto, dimension_id)
    if dim.pruned:
        raise UnknownNode(f"dimension {dimension_id!r} is pruned")
    norm_key = normalize_text(key)
    if not norm_key:
        raise DuplicateKey("slot key is empty after normalization")
    if slot_by_key(dim, norm_key) is not None:
        raise DuplicateKey(f"slot key {norm_key!r} already exists under dimension {dim.name!r}")
    slot_id = _unique_id(onto, f"{dim.id}.{slugify(norm_key)}")
    dim.slots.append(
        Slot(id=slot_id, key=norm_key, question=question.strip(), question_form=QuestionForm(form))
    )
    onto.version += 1
    return slot_id


def reword_slot(onto: ExperienceOntology, slot_id: str, key: str, question: str) -> None:
    """Replace an Unexplored slot's key and question in place.

    Used by induction conflict resolution when a shorter formulation of the
    same item wins; the node id is preserved.
    """
    _, dim, slot = find_slot(onto, slot_id)
    if slot.state is not SlotState.UNEXPLORED:
        raise IllegalStateChange(f"slot {slot_id!r} is {slot.state.value}, cannot be reworded")
    norm_key = normalize_text(key)
    if not norm_key:
        raise DuplicateKey("slot key is empty after normalization")
    existing = slot_by_key(dim, norm_key)
    if existing is not None and existing.id != slot_id:
        raise DuplicateKey(f"slot key {norm_key!r} already exists under dimension {dim.name!r}")
    if slot.key == norm_key and slot.question == question.strip():
        return
    slot.key = norm_key
    slot.question = question.strip()
    onto.version += 1


def mark_slot(onto: ExperienceOntology, slot_id: str, state: SlotState) -> None:
    """Move a slot from Unexplored into a terminal state."""
    _, _, slot = find_slot(onto, slot_id)
    state = SlotState(state)
    if slot.state is state:
        return
    if slot.state in TERMINAL_STATES:
        raise IllegalStateChange(
            f"slot {slot_id!r} is already {slot.state.value}; cannot become {state.value}"
        )
    if state is SlotState.UNEXPLORED:
        raise IllegalStateChange("cannot mark a slot back to unexplored")
    slot.state = state
    onto.version += 1


def _prune_slots(dim: Dimension) -> bool:
    changed = False
    for slot in dim.slots:
        if slot.state is SlotState.UNEXPLORED:
            slot.state = SlotState.PRUNED
            changed = True
    return changed


def prune_aspect(onto: ExperienceOntology, aspect_id: str) -> ExperienceOntology:
    """Prune an aspect branch; confirmed/rejected slots keep their state."""
    aspect = find_aspect(onto, aspect_id)
    changed = not aspect.pruned
    aspect.pruned = True
    for dim in aspect.dimensions:
        if not dim.pruned:
            dim.pruned = True
            changed = True
        changed = _prune_slots(dim) or changed
    if changed:
        onto.version += 1
    return onto


def prune_dimension(onto: ExperienceOntology, dimension_id: str) -> ExperienceOntology:
    """Prune one dimension; confirmed/rejected slots keep their state."""
    _, dim = find_dimension(onto, dimension_id)
    changed = not dim.pruned
    dim.pruned = True
    changed = _prune_slots(dim) or changed
    if changed:
        onto.version += 1
    return onto


def eligible_slots(onto: ExperienceOntology) -> list[str]:
    """Slot ids still open for questioning, in exploration order.

    A slot is eligible when it is Unexplored and neither its dimension nor
    its aspect is pruned. Ordering is aspect score, then dimension score,
    then slot score (all descending), with insertion order as the final
    tie-break. The list is empty exactly when the interview must stop.
    """
    candidates = [
        (aspect, dim, slot)
        for aspect, dim, slot in walk(onto)
        if slot.state is SlotState.UNEXPLORED and not aspect.pruned and not dim.pruned
    ]
    candidates.sort(key=lambda t: (-t[0].score, -t[1].score, -t[2].score))
    return [slot.id for _, _, slot in candidates]


def clamp_score(value: float) -> float:
    return min(1.0, max(0.0, float(value)))


def apply_scores(onto: ExperienceOntology, scores: dict[str, float]) -> list[str]:
    """Write a node-id -> score map onto the tree, clamping into [0, 1].

    Nodes absent from the map are left untouched; unknown ids are skipped.
    Returns the ids whose incoming value was out of range, for logging.
    """
    out_of_range: list[str] = []
    nodes: dict[str, Aspect | Dimension | Slot] = {}
    for aspect in onto.aspects:
        nodes[aspect.id] = aspect
        for dim in aspect.dimensions:
            nodes[dim.id] = dim
            for slot in dim.slots:
                nodes[slot.id] = slot
    changed = False
    for node_id, value in scores.items():
        node = nodes.get(node_id)
        if node is None:
            continue
        clamped = clamp_score(value)
        if clamped != float(value):
            out_of_range.append(node_id)
        if node.score != clamped:
            node.score = clamped
            changed = True
    if changed:
        onto.version += 1
    return out_of_range


def reset_for_session(onto: ExperienceOntology) -> None:
    """Reset every slot to Unexplored and clear pruning and scores.

    Sessions call this on their private working copy so an interview always
    starts from the full questioning space.
    """
    changed = False
    for aspect in onto.aspects:
        if aspect.pruned or aspect.score != 0.0:
            changed = True
        aspect.pruned = False
        aspect.score = 0.0
        for dim in aspect.dimensions:
            if dim.pruned or dim.score != 0.0:
                changed = True
            dim.pruned = False
            dim.score = 0.0
            for slot in dim.slots:
                if slot.state is not SlotState.UNEXPLORED or slot.score != 0.0:
                    changed = True
                slot.state = SlotState.UNEXPLORED
                slot.score = 0.0
    if changed:
        onto.version += 1


def serialize(onto: ExperienceOntology) -> dict[str, Any]:
    """Render the tree as its JSON document form."""
    return {
        "domain_name": onto.domain_name,
        "version": onto.version,
        "aspects": [
            {
                "id": aspect.id,
                "name": aspect.name,
                "pruned": aspect.pruned,
                "score": aspect.score,
                "dimensions": [
                    {
                        "id": dim.id,
                        "name": dim.name,
                        "pruned": dim.pruned,
                        "score": dim.score,
                        "slots": [
                            {
                                "id": slot.id,
                                "key": slot.key,
                                "question": slot.question,
                                "question_form": slot.question_form.value,
                                "state": slot.state.value,
                                "score": slot.score,
                            }
                            for slot in dim.slots
                        ],
                    }
                    for dim in aspect.dimensions
                ],
            }
            for aspect in onto.aspects
        ],
    }


def _expect(doc: Any, path: str, fields: dict[str, type | tuple[type, ...]]) -> None:
    if not isinstance(doc, dict):
        raise SchemaViolation(path, f"expected an object, got {type(doc).__name__}")
    unknown = set(doc) - set(fields)
    if unknown:
        raise SchemaViolation(f"{path}.{sorted(unknown)[0]}", "unknown field")
    for name, types in fields.items():
        if name not in doc:
            raise SchemaViolation(f"{path}.{name}", "missing required field")
        if not isinstance(doc[name], types) or isinstance(doc[name], bool) and types is not bool:
            expected = types.__name__ if isinstance(types, type) else "number"
            raise SchemaViolation(f"{path}.{name}", f"expected {expected}")


def _check_score(value: Any, path: str) -> float:
    if not 0.0 <= float(value) <= 1.0:
        raise SchemaViolation(path, f"score {value!r} outside [0, 1]")
    return float(value)


def deserialize(doc: dict[str, Any]) -> ExperienceOntology:
    """Rebuild a tree from its document form, rejecting invalid documents.

    Validation covers field names and types, enum values, name/key/id
    uniqueness, and the pruning invariant (a pruned branch holds no
    Unexplored slot). Violations carry the document path of the bad field.
    """
    _expect(doc, "$", {"domain_name": str, "version": int, "aspects": list})
    if doc["version"] < 0:
        raise SchemaViolation("$.version", "version must be non-negative")
    onto = ExperienceOntology(domain_name=doc["domain_name"], version=doc["version"])
    seen_ids: set[str] = set()
    seen_aspect_names: set[str] = set()

    def claim_id(node_id: str, path: str) -> None:
        if not node_id:
            raise SchemaViolation(path, "id must be a nonempty string")
        if node_id in seen_ids:
            raise SchemaViolation(path, f"duplicate node id {node_id!r}")
        seen_ids.add(node_id)

    for i, aspect_doc in enumerate(doc["aspects"]):
        apath = f"$.aspects[{i}]"
        _expect(
            aspect_doc,
            apath,
            {"id": str, "name": str, "pruned": bool, "score": (int, float), "dimensions": list},
        )
        claim_id(aspect_doc["id"], f"{apath}.id")
        norm_name = normalize_text(aspect_doc["name"])
        if not norm_name:
            raise SchemaViolation(f"{apath}.name", "name must be nonempty")
        if norm_name in seen_aspect_names:
            raise SchemaViolation(f"{apath}.name", f"duplicate aspect name {aspect_doc['name']!r}")
        seen_aspect_names.add(norm_name)
        aspect = Aspect(
            id=aspect_doc["id"],
            name=aspect_doc["name"],
            pruned=aspect_doc["pruned"],
            score=_check_score(aspect_doc["score"], f"{apath}.score"),
        )
        seen_dim_names: set[str] = set()
        for j, dim_doc in enumerate(aspect_doc["dimensions"]):
            dpath = f"{apath}.dimensions[{j}]"
            _expect(
                dim_doc,
                dpath,
                {"id": str, "name": str, "pruned": bool, "score": (int, float), "slots": list},
            )
            claim_id(dim_doc["id"], f"{dpath}.id")
            norm_dim = normalize_text(dim_doc["name"])
            if not norm_dim:
                raise SchemaViolation(f"{dpath}.name", "name must be nonempty")
            if norm_dim in seen_dim_names:
                raise SchemaViolation(f"{dpath}.name", f"duplicate dimension name {dim_doc['name']!r}")
            seen_dim_names.add(norm_dim)
            dim = Dimension(
                id=dim_doc["id"],
                name=dim_doc["name"],
                pruned=dim_doc["pruned"],
                score=_check_score(dim_doc["score"], f"{dpath}.score"),
            )
            seen_keys: set[str] = set()
            for k, slot_doc in enumerate(dim_doc["slots"]):
                spath = f"{dpath}.slots[{k}]"
                _expect(
                    slot_doc,
                    spath,
                    {
                        "id": str,
                        "key": str,
                        "question": str,
                        "question_form": str,
                        "state": str,
                        "score": (int, float),
                    },
                )
                claim_id(slot_doc["id"], f"{spath}.id")
                key = slot_doc["key"]
                if key != normalize_text(key) or not key:
                    raise SchemaViolation(f"{spath}.key", f"key {key!r} is not normalized")
                if key in seen_keys:
                    raise SchemaViolation(f"{spath}.key", f"duplicate slot key {key!r}")
                seen_keys.add(key)
                try:
                    form = QuestionForm(slot_doc["question_form"])
                except ValueError:
                    raise SchemaViolation(
                        f"{spath}.question_form",
                        f"expected one of {[f.value for f in QuestionForm]}",
                    ) from None
                try:
                    state = SlotState(slot_doc["state"])
                except ValueError:
                    raise SchemaViolation(
                        f"{spath}.state", f"expected one of {[s.value for s in SlotState]}"
                    ) from None
                if (dim_doc["pruned"] or aspect_doc["pruned"]) and state is SlotState.UNEXPLORED:
                    raise SchemaViolation(
                        f"{spath}.state", "unexplored slot under a pruned branch"
                    )
                dim.slots.append(
                    Slot(
                        id=slot_doc["id"],
                        key=key,
                        question=slot_doc["question"],
                        question_form=form,
                        state=state,
                        score=_check_score(slot_doc["score"], f"{spath}.score"),
                    )
                )
            aspect.dimensions.append(dim)
        onto.aspects.append(aspect)
    return onto


def clone(onto: ExperienceOntology) -> ExperienceOntology:
    """Deep copy via the document form, so sessions never share mutable state."""
    return deserialize(serialize(onto))


def to_json(onto: ExperienceOntology) -> str:
    return json.dumps(serialize(onto), ensure_ascii=False, indent=2) + "\n"


def digest(onto: ExperienceOntology) -> str:
    """Stable hash of the full tree state, version included."""
    canonical = json.dumps(serialize(onto), ensure_ascii=False, sort_keys=True)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()
