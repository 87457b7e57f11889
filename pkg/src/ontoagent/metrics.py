"""Interview quality metrics: coverage (IRE) and turn-discounted efficiency (TKQR).

TKQR rewards eliciting requirements early: each hit at turn i earns
1/log2(i+1), normalized by the best achievable prefix given the number of
ground-truth requirements.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any


@dataclass(frozen=True)
class HitSequence:
    """Per-question hit indicators for one episode.

    ``hits[i]`` is 1 when question i+1 surfaced at least one previously
    unelicited ground-truth requirement. ``k`` is the ground-truth count.
    """

    hits: tuple[int, ...]
    k: int

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValueError("k must be a positive integer")
        if any(h not in (0, 1) for h in self.hits):
            raise ValueError("hits must be 0 or 1")
        if sum(self.hits) > self.k:
            raise ValueError("cannot hit more requirements than exist")

    @property
    def n(self) -> int:
        return len(self.hits)


@dataclass(frozen=True)
class TkqrValues:
    dcg: float
    idcg: float
    tkqr: float


def turn_discount(i: int) -> float:
    """The gain weight of a hit at 1-based turn i."""
    return 1.0 / math.log2(i + 1)


def compute_tkqr(hits: HitSequence) -> TkqrValues:
    """Discounted hit gain over its ideal prefix; 0 when no questions were asked."""
    dcg = sum(h * turn_discount(i) for i, h in enumerate(hits.hits, start=1))
    idcg = sum(turn_discount(i) for i in range(1, min(hits.n, hits.k) + 1))
    tkqr = dcg / idcg if idcg > 0 else 0.0
    return TkqrValues(dcg=dcg, idcg=idcg, tkqr=tkqr)


@dataclass
class MetricsReport:
    """Everything measured about one episode."""

    ire: float
    ire_by_aspect: dict[str, float]
    tkqr: float
    dcg: float
    idcg: float
    n: int
    k: int
    elicited_req_ids: list[str] = field(default_factory=list)
    transcript_ref: str | None = None

    def as_dict(self) -> dict[str, Any]:
        return {
            "ire": self.ire,
            "ire_by_aspect": dict(self.ire_by_aspect),
            "tkqr": self.tkqr,
            "dcg": self.dcg,
            "idcg": self.idcg,
            "n": self.n,
            "k": self.k,
            "elicited_req_ids": list(self.elicited_req_ids),
            "transcript_ref": self.transcript_ref,
        }
