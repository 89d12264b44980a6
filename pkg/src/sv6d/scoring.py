"""Deterministic, rule-based scoring of answer files against generated suites.

Exact match only: label equality, set equality, or sequence equality by
answer type, with no partial credit. Responses that no extraction rule can
read are counted unparsed and scored incorrect; an external judge hook can
be plugged in but is never required.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Iterable, Sequence

from .alignment import hungarian_match, temporal_iou
from .benchgen import BenchItem
from .document import SemanticShot


class ScoringError(ValueError):
    """Raised for malformed answer sets (duplicates, unknown item ids)."""


# ---------------------------------------------------------------------------
# match function
# ---------------------------------------------------------------------------


def match(output: Any, truth: Any, answer_type: str) -> bool:
    """Exact comparison by answer type; shape mismatches are conservatively False."""
    if output is None or truth is None:
        return False
    if answer_type == "single":
        return isinstance(output, str) and isinstance(truth, str) and output == truth
    if answer_type == "multi":
        try:
            out_set = frozenset([output]) if isinstance(output, str) else frozenset(output)
            truth_set = frozenset([truth]) if isinstance(truth, str) else frozenset(truth)
        except TypeError:
            return False
        return out_set == truth_set
    if answer_type == "ordered":
        if isinstance(output, str) or isinstance(truth, str):
            return False
        try:
            return tuple(output) == tuple(truth)
        except TypeError:
            return False
    return False


# ---------------------------------------------------------------------------
# choice extraction
# ---------------------------------------------------------------------------

_LONE_LETTER = re.compile(r"^\(?([A-Ea-e])\)?[.):]?$")
_ANSWER_PATTERN = re.compile(
    r"\banswer(?:\s+is)?\s*[:\-]?\s*\(?([A-Ea-e])\)?(?![A-Za-z0-9])", re.IGNORECASE
)
_TOKEN_PATTERN = re.compile(r"(?<![A-Za-z0-9])\(?([A-E])\)?(?![A-Za-z0-9])")


def extract_choice(raw_response: str) -> str | None:
    """Deterministic rule table mapping free text to a choice letter.

    1. A lone letter A-E (optionally parenthesised/punctuated).
    2. The last "answer ... X" pattern (final answer wins).
    3. A single unambiguous standalone uppercase letter token.
    Anything else is unparsed (None).
    """
    if raw_response is None:
        return None
    text = raw_response.strip()
    if not text:
        return None
    lone = _LONE_LETTER.match(text)
    if lone:
        return lone.group(1).upper()
    answers = _ANSWER_PATTERN.findall(text)
    if answers:
        return answers[-1].upper()
    tokens = {tok.upper() for tok in _TOKEN_PATTERN.findall(text)}
    if len(tokens) == 1:
        return next(iter(tokens))
    return None


# ---------------------------------------------------------------------------
# suite scoring
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AnswerRecord:
    item_id: str
    raw_response: str
    extracted_choice: str | None = None

    def __post_init__(self) -> None:
        if self.extracted_choice is not None and self.extracted_choice not in "ABCDE":
            raise ScoringError(
                f"extracted_choice must be A-E, got {self.extracted_choice!r}"
            )


@dataclass(frozen=True)
class ScoreReport:
    per_dimension: dict[str, float]
    macro: float
    hard: float
    per_answer_type: dict[str, float]
    n_scored: int
    n_unparsed: int
    n_correct: int = 0

    def to_dict(self) -> dict[str, Any]:
        return {
            "per_dimension": dict(sorted(self.per_dimension.items())),
            "macro": self.macro,
            "hard": self.hard,
            "per_answer_type": dict(sorted(self.per_answer_type.items())),
            "n_scored": self.n_scored,
            "n_unparsed": self.n_unparsed,
            "n_correct": self.n_correct,
        }


def score_suite(
    items: Sequence[BenchItem],
    answers: Iterable[AnswerRecord],
    judge_fallback: Callable[[str, BenchItem], str | None] | None = None,
) -> ScoreReport:
    """Per-dimension, macro, hard-subset, and per-answer-type accuracies.

    Every suite item is scored; unanswered items count as incorrect.
    Duplicate answers for one item are an error, as are answers referencing
    unknown items. The optional judge fallback only sees responses the rule
    table could not parse.
    """
    by_id = {item.item_id: item for item in items}
    chosen: dict[str, str | None] = {}
    n_unparsed = 0
    for record in answers:
        if record.item_id not in by_id:
            raise ScoringError(f"answer references unknown item {record.item_id!r}")
        if record.item_id in chosen:
            raise ScoringError(f"duplicate answer for item {record.item_id!r}")
        choice = record.extracted_choice or extract_choice(record.raw_response)
        if choice is None and judge_fallback is not None:
            choice = judge_fallback(record.raw_response, by_id[record.item_id])
        if choice is None:
            n_unparsed += 1
        chosen[record.item_id] = choice

    def accuracy(subset: Sequence[BenchItem]) -> float:
        if not subset:
            return 0.0
        correct = sum(
            1 for item in subset if chosen.get(item.item_id) == item.answer_key
        )
        return correct / len(subset)

    dimensions = sorted({item.dimension for item in items})
    per_dimension = {
        dim: accuracy([it for it in items if it.dimension == dim]) for dim in dimensions
    }
    macro = (
        sum(per_dimension.values()) / len(per_dimension) if per_dimension else 0.0
    )

    hard_dims = sorted({item.dimension for item in items if item.hard})
    hard_by_dim = [
        accuracy([it for it in items if it.dimension == dim and it.hard])
        for dim in hard_dims
    ]
    hard = sum(hard_by_dim) / len(hard_by_dim) if hard_by_dim else 0.0

    answer_types = sorted({item.answer_type for item in items})
    per_answer_type = {
        atype: accuracy([it for it in items if it.answer_type == atype])
        for atype in answer_types
    }

    n_correct = sum(
        1 for item in items if chosen.get(item.item_id) == item.answer_key
    )
    return ScoreReport(
        per_dimension=per_dimension,
        macro=macro,
        hard=hard,
        per_answer_type=per_answer_type,
        n_scored=len(items),
        n_unparsed=n_unparsed,
        n_correct=n_correct,
    )


# ---------------------------------------------------------------------------
# answer files
# ---------------------------------------------------------------------------


def load_answers(path: str | Path) -> list[AnswerRecord]:
    """One JSON record per line: {"item_id": ..., "response": ...}."""
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                raw = json.loads(line)
                records.append(
                    AnswerRecord(item_id=raw["item_id"], raw_response=raw["response"])
                )
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise ScoringError(f"bad answer record on line {line_no}: {exc}") from exc
    return records


# ---------------------------------------------------------------------------
# span adapter for interval-scored items
# ---------------------------------------------------------------------------


def span_iou_report(
    pred_spans: Sequence[tuple[float, float]],
    truth_spans: Sequence[tuple[float, float]],
) -> dict[str, Any]:
    """Mean matched IoU for interval answers; thresholding is the caller's call."""
    pred = [SemanticShot(start_s=s, end_s=e) for s, e in pred_spans]
    truth = [SemanticShot(start_s=s, end_s=e) for s, e in truth_spans]
    if not pred or not truth:
        return {"mean_iou": 0.0, "pairs": [], "n_pred": len(pred), "n_truth": len(truth)}
    costs = [[1.0 - temporal_iou(p, t) for t in truth] for p in pred]
    matches = hungarian_match(costs)
    pairs = [
        {"pred": i, "truth": j, "iou": temporal_iou(pred[i], truth[j])}
        for i, j in matches
    ]
    mean_iou = sum(p["iou"] for p in pairs) / len(pairs)
    return {
        "mean_iou": mean_iou,
        "pairs": pairs,
        "n_pred": len(pred),
        "n_truth": len(truth),
    }
