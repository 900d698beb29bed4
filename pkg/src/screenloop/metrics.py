"""Evaluation metrics for screening outcomes.

The central object is a six-cell confusion accounting of tool suggestion
(yes / no / ignored) against ground truth (yes / no).  "Suggested" means
the tool queued the document and a human screened it, regardless of the
human's decision.  Metrics with a zero denominator are reported as None
(undefined), never coerced to 0.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

from .corpus import INCLUDED


class ValidationError(Exception):
    """Raised when counts or traces are inconsistent."""


@dataclass(frozen=True)
class ConfusionTable:
    tool_yes_truth_yes: int
    tool_no_truth_yes: int
    tool_ignored_truth_yes: int
    tool_yes_truth_no: int
    tool_no_truth_no: int
    tool_ignored_truth_no: int
    corpus_size: int

    def __post_init__(self) -> None:
        cells = (
            self.tool_yes_truth_yes,
            self.tool_no_truth_yes,
            self.tool_ignored_truth_yes,
            self.tool_yes_truth_no,
            self.tool_no_truth_no,
            self.tool_ignored_truth_no,
        )
        if any(c < 0 for c in cells):
            raise ValidationError("confusion counts must be non-negative")
        if sum(cells) != self.corpus_size:
            raise ValidationError(
                f"counts sum to {sum(cells)}, corpus size is {self.corpus_size}"
            )

    @property
    def suggested(self) -> int:
        """Documents the tool queued for human screening."""
        return (
            self.tool_yes_truth_yes
            + self.tool_yes_truth_no
            + self.tool_no_truth_yes
            + self.tool_no_truth_no
        )

    @property
    def truth_yes(self) -> int:
        return (
            self.tool_yes_truth_yes
            + self.tool_no_truth_yes
            + self.tool_ignored_truth_yes
        )


def _ratio(num: float, den: float) -> Optional[float]:
    return num / den if den else None


def compute_tool_metrics(t: ConfusionTable) -> dict[str, Optional[float]]:
    """Precision/recall/cost split into the tool's part and the human's part.

    Overall recall factors as tool_recall (relevant documents the tool
    suggested) times human_recall (suggested relevant documents the human
    actually included).
    """
    tool_yes = t.tool_yes_truth_yes + t.tool_yes_truth_no
    suggested_truth_yes = t.tool_yes_truth_yes + t.tool_no_truth_yes
    tool_recall = _ratio(suggested_truth_yes, t.truth_yes)
    human_recall = _ratio(t.tool_yes_truth_yes, suggested_truth_yes)
    return {
        "human_precision": _ratio(t.tool_yes_truth_yes, tool_yes),
        "tool_precision": _ratio(t.tool_yes_truth_yes, t.suggested),
        "tool_recall": tool_recall,
        "human_recall": human_recall,
        "compound_recall": None
        if tool_recall is None or human_recall is None
        else tool_recall * human_recall,
        "cost": _ratio(t.suggested, t.corpus_size),
    }


def compute_vote_metrics(
    yes_truth_yes: int,
    yes_truth_no: int,
    truth_yes_total: int,
    reviews_per_doc: int,
    adjudicated: int,
    corpus_size: int,
) -> dict[str, Optional[float]]:
    """Precision/recall/cost of plain majority-vote screening.

    Every document costs ``reviews_per_doc`` reads plus one more for each
    adjudicated disagreement, normalized by corpus size.
    """
    if min(yes_truth_yes, yes_truth_no, truth_yes_total, adjudicated) < 0:
        raise ValidationError("counts must be non-negative")
    return {
        "precision": _ratio(yes_truth_yes, yes_truth_yes + yes_truth_no),
        "recall": _ratio(yes_truth_yes, truth_yes_total),
        "cost": _ratio(corpus_size * reviews_per_doc + adjudicated, corpus_size),
    }


def recall_cost_curve(
    trace: Sequence[tuple[int, str]],
    truth: Mapping[int, bool],
) -> list[tuple[int, float]]:
    """(labels screened, true recall) after each label event of a replay.

    ``truth`` must cover every traced document; recall counts documents
    currently labeled included that are truly relevant, over all truly
    relevant documents.
    """
    total_relevant = sum(1 for v in truth.values() if v)
    if total_relevant == 0:
        raise ValidationError("ground truth contains no relevant documents")
    state: dict[int, str] = {}
    found = 0
    curve: list[tuple[int, float]] = []
    for step, (doc_id, decision) in enumerate(trace, start=1):
        if doc_id not in truth:
            raise ValidationError(f"doc {doc_id} has no ground-truth label")
        prev = state.get(doc_id)
        if prev == INCLUDED and truth[doc_id]:
            found -= 1
        if decision == INCLUDED and truth[doc_id]:
            found += 1
        state[doc_id] = decision
        curve.append((step, found / total_relevant))
    return curve
