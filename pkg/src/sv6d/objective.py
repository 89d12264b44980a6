"""Structural matching loss, quality regularizers, composite loss, task rewards.

The composite loss is the raw sum of three terms (alignment, structure,
regularization). Because the raw sum can exceed 1, reward mapping uses a
normalized form: each term is scaled into [0, 1] by its own maximum
(1 + beta for alignment, 1 for structure, the lambda sum for regularization)
and the three are averaged, giving reward = 1 - normalized_loss in [0, 1].
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Any, Callable, Mapping, Sequence

from .alignment import (
    AlignmentConfig,
    AlignmentResult,
    ConfigError,
    align,
    cardinality_penalty_fraction,
    hungarian_match,
    temporal_iou,
)
from .document import (
    SemanticShot,
    ShotLabelVector,
    StructuralDocument,
    VideoMeta,
    document_from_dict,
)
from .taxonomy import DIMENSION_IDS, TaxonomyRegistry

TASK_TYPES = (
    "temporal_grounding",
    "temporal_action_localization",
    "ocr",
    "chain_of_thought",
)

# Deterministic format checklist for structural-document output. r_form is
# the fraction of violated checks.
DOC_FORMAT_CHECKS = (
    "syntax",
    "shot_boundaries",
    "dimension_keys",
    "timestamps_nonnegative",
    "start_before_end",
    "numeric_fields",
)

# Variant for span-only (localization) output, where dimension keys do not apply.
SPAN_FORMAT_CHECKS = (
    "syntax",
    "span_boundaries",
    "timestamps_nonnegative",
    "start_before_end",
    "numeric_fields",
)


class TaskInputError(ValueError):
    """Raised when task_reward inputs do not match the requested task type."""


@dataclass(frozen=True)
class RegularizerConfig:
    """Coefficients for the vocabulary, completeness, and format penalties."""

    lambda_p: float = 1.0 / 3.0
    lambda_c: float = 1.0 / 3.0
    lambda_f: float = 1.0 / 3.0

    def __post_init__(self) -> None:
        for name in ("lambda_p", "lambda_c", "lambda_f"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be >= 0")
        if self.lambda_sum <= 0:
            raise ConfigError("at least one regularizer coefficient must be > 0")

    @property
    def lambda_sum(self) -> float:
        return self.lambda_p + self.lambda_c + self.lambda_f


@dataclass(frozen=True)
class RegularizerResult:
    r_prof: float
    r_comp: float
    r_form: float
    l_reg: float

    def __iter__(self):
        return iter((self.r_prof, self.r_comp, self.r_form, self.l_reg))


@dataclass(frozen=True)
class RewardBreakdown:
    """Per-component scores plus composite loss and reward for one rollout.

    Component scores (format/iou/label) and the reward always lie in [0, 1].
    Loss fields are populated for structural comparisons (composite loss and
    temporal grounding); for ocr the text similarity is reported as
    label_score, and for chain_of_thought the externally supplied judge score
    is carried in judge_score.
    """

    task_type: str
    reward: float
    format_score: float = 0.0
    iou_score: float = 0.0
    label_score: float = 0.0
    r_prof: float = 0.0
    r_comp: float = 0.0
    r_form: float = 0.0
    l_align: float = 0.0
    l_struct: float = 0.0
    l_reg: float = 0.0
    l_sv6d: float = 0.0
    normalized_loss: float = 0.0
    judge_score: float | None = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "task_type": self.task_type,
            "reward": self.reward,
            "format_score": self.format_score,
            "iou_score": self.iou_score,
            "label_score": self.label_score,
            "r_prof": self.r_prof,
            "r_comp": self.r_comp,
            "r_form": self.r_form,
            "l_align": self.l_align,
            "l_struct": self.l_struct,
            "l_reg": self.l_reg,
            "l_sv6d": self.l_sv6d,
            "normalized_loss": self.normalized_loss,
            "judge_score": self.judge_score,
        }


# ---------------------------------------------------------------------------
# label distances
# ---------------------------------------------------------------------------


def _sub_value_distance(
    sub, a: str | frozenset[str] | None, b: str | frozenset[str] | None
) -> float:
    """Distance for one sub-dimension slot of two label vectors.

    A slot absent from both sides contributes 0 (nothing to disagree about);
    absent from exactly one side contributes the maximal 1. Multi-valued
    slots use Jaccard set distance, single-valued ones the taxonomy metric.
    """
    if a is None and b is None:
        return 0.0
    if a is None or b is None:
        return 1.0
    if sub.multi_valued:
        set_a = frozenset([a]) if isinstance(a, str) else a
        set_b = frozenset([b]) if isinstance(b, str) else b
        for atom in set_a | set_b:
            sub.require_label(atom)
        if not set_a and not set_b:
            return 0.0
        union = set_a | set_b
        if not union:
            return 0.0
        return 1.0 - len(set_a & set_b) / len(union)
    if isinstance(a, frozenset) or isinstance(b, frozenset):
        # Single-valued slot fed a set: compare as sets, same rule as above.
        set_a = frozenset([a]) if isinstance(a, str) else a
        set_b = frozenset([b]) if isinstance(b, str) else b
        for atom in set_a | set_b:
            sub.require_label(atom)
        return 1.0 - len(set_a & set_b) / len(set_a | set_b)
    return sub.distance(a, b)


def per_dimension_distance(
    pred: ShotLabelVector, truth: ShotLabelVector, registry: TaxonomyRegistry
) -> dict[str, float]:
    """d_k for each dimension: mean slot distance over its declared sub-dimensions."""
    out: dict[str, float] = {}
    for dim_id in DIMENSION_IDS:
        dim = registry.dimension(dim_id)
        total = 0.0
        for sub in dim.sub_dimensions:
            total += _sub_value_distance(
                sub, pred.value(dim_id, sub.id), truth.value(dim_id, sub.id)
            )
        out[dim_id] = total / len(dim.sub_dimensions)
    return out


def aggregate_label_distance(
    pred: ShotLabelVector,
    truth: ShotLabelVector,
    cfg: AlignmentConfig,
    registry: TaxonomyRegistry,
) -> float:
    """Weighted sum over dimensions of the per-dimension distances, in [0, 1]."""
    per_dim = per_dimension_distance(pred, truth, registry)
    return sum(cfg.weights[dim_id] * per_dim[dim_id] for dim_id in DIMENSION_IDS)


def structural_loss(
    matches: AlignmentResult | Sequence[tuple[int, int]],
    pred: StructuralDocument,
    truth: StructuralDocument,
    cfg: AlignmentConfig,
    registry: TaxonomyRegistry,
) -> float:
    """Dimension-weighted mean label distance over matched pairs.

    An empty matching takes the worst-case value 1, mirroring the alignment
    convention.
    """
    pairs = matches.matches if isinstance(matches, AlignmentResult) else tuple(matches)
    if not pairs:
        return 1.0
    dim_totals = {dim_id: 0.0 for dim_id in DIMENSION_IDS}
    for i, j in pairs:
        per_dim = per_dimension_distance(pred.labels[i], truth.labels[j], registry)
        for dim_id in DIMENSION_IDS:
            dim_totals[dim_id] += per_dim[dim_id]
    return sum(
        cfg.weights[dim_id] * dim_totals[dim_id] / len(pairs) for dim_id in DIMENSION_IDS
    )


# ---------------------------------------------------------------------------
# format inspection of raw model output
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DocumentInspection:
    """Outcome of the deterministic format checklist over raw model text."""

    violated: tuple[str, ...]
    predicted_labels: tuple[str, ...]
    dimensions_present: frozenset[str]
    parseable: bool
    document: StructuralDocument | None

    @property
    def r_form(self) -> float:
        return len(self.violated) / len(DOC_FORMAT_CHECKS)


def _find_shot_entries(payload: Any) -> list | None:
    if isinstance(payload, Mapping):
        shots = payload.get("shots")
        return shots if isinstance(shots, list) else None
    if isinstance(payload, list):
        return payload
    return None


def _is_number(value: Any) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def _collect_atoms(labels_raw: Any) -> list[tuple[str, str, str]]:
    """(dimension, sub, atom) triples from a raw labels mapping, best effort."""
    atoms: list[tuple[str, str, str]] = []
    if not isinstance(labels_raw, Mapping):
        return atoms
    for dim_id, subs in labels_raw.items():
        if not isinstance(subs, Mapping):
            continue
        for sub_id, value in subs.items():
            if isinstance(value, str):
                atoms.append((str(dim_id), str(sub_id), value))
            elif isinstance(value, (list, tuple)):
                atoms.extend(
                    (str(dim_id), str(sub_id), v) for v in value if isinstance(v, str)
                )
    return atoms


def inspect_document_text(text: str) -> DocumentInspection:
    """Run the six-point format checklist and extract whatever labels survive."""
    try:
        payload = json.loads(text)
        syntax_ok = isinstance(payload, (Mapping, list))
    except (json.JSONDecodeError, TypeError):
        payload = None
        syntax_ok = False
    if not syntax_ok:
        return DocumentInspection(
            violated=DOC_FORMAT_CHECKS,
            predicted_labels=(),
            dimensions_present=frozenset(),
            parseable=False,
            document=None,
        )

    violated: list[str] = []
    shots = _find_shot_entries(payload)
    if shots is None:
        violated.extend(["shot_boundaries", "dimension_keys"])
        shots = []

    boundaries_ok = True
    dimensions_ok = True
    nonneg_ok = True
    order_ok = True
    numeric_ok = True
    atoms: list[tuple[str, str, str]] = []
    for entry in shots:
        if not isinstance(entry, Mapping):
            boundaries_ok = dimensions_ok = False
            continue
        if "start_s" not in entry or "end_s" not in entry:
            boundaries_ok = False
        start, end = entry.get("start_s"), entry.get("end_s")
        for value in (start, end):
            if value is not None and not _is_number(value):
                numeric_ok = False
        if _is_number(start) and start < 0:
            nonneg_ok = False
        if _is_number(end) and end < 0:
            nonneg_ok = False
        if _is_number(start) and _is_number(end) and not start < end:
            order_ok = False
        labels_raw = entry.get("labels")
        if not isinstance(labels_raw, Mapping) or not any(
            k in DIMENSION_IDS for k in labels_raw
        ):
            dimensions_ok = False
        atoms.extend(_collect_atoms(labels_raw))
    if isinstance(payload, Mapping):
        duration = payload.get("meta", {})
        if isinstance(duration, Mapping):
            dur = duration.get("duration_s")
            if dur is not None and not _is_number(dur):
                numeric_ok = False

    if not boundaries_ok and "shot_boundaries" not in violated:
        violated.append("shot_boundaries")
    if not dimensions_ok and "dimension_keys" not in violated:
        violated.append("dimension_keys")
    if not nonneg_ok:
        violated.append("timestamps_nonnegative")
    if not order_ok:
        violated.append("start_before_end")
    if not numeric_ok:
        violated.append("numeric_fields")

    document = None
    if isinstance(payload, Mapping):
        try:
            document = document_from_dict(payload)
        except Exception:
            document = None

    dims_present = frozenset(
        dim for dim, _sub, _atom in atoms if dim in DIMENSION_IDS
    )
    ordered = tuple(sorted(set(check for check in violated), key=DOC_FORMAT_CHECKS.index))
    return DocumentInspection(
        violated=ordered,
        predicted_labels=tuple(atom for _d, _s, atom in atoms),
        dimensions_present=dims_present,
        parseable=True,
        document=document,
    )


def sanitize_for_alignment(
    text: str, registry: TaxonomyRegistry
) -> StructuralDocument | None:
    """Best-effort document assembly from raw output, for alignment scoring.

    Keeps only shots with valid numeric intervals and drops any label atom
    that is not canonical for its slot; out-of-vocabulary content is already
    penalized by the regularizers, so alignment scores what remains. Returns
    None when no usable shot survives.
    """
    inspection = inspect_document_text(text)
    if not inspection.parseable:
        return None
    payload = json.loads(text)
    shots_raw = _find_shot_entries(payload) or []
    shots: list[SemanticShot] = []
    vectors: list[ShotLabelVector] = []
    skeletons: list[str] = []
    for entry in shots_raw:
        if not isinstance(entry, Mapping):
            continue
        start, end = entry.get("start_s"), entry.get("end_s")
        if not (_is_number(start) and _is_number(end) and 0 <= start < end):
            continue
        dims: dict[str, dict[str, str | frozenset[str]]] = {}
        for dim_id, sub_id, atom in _collect_atoms(entry.get("labels")):
            if dim_id not in DIMENSION_IDS:
                continue
            dim = registry.dimension(dim_id)
            if sub_id not in dim.sub_ids:
                continue
            sub = dim.sub(sub_id)
            if atom not in sub.labels:
                continue
            slot = dims.setdefault(dim_id, {})
            if sub.multi_valued:
                current = slot.get(sub_id)
                members = set(current) if isinstance(current, frozenset) else set()
                members.add(atom)
                slot[sub_id] = frozenset(members)
            else:
                slot.setdefault(sub_id, atom)
        shots.append(SemanticShot(start_s=float(start), end_s=float(end)))
        vectors.append(ShotLabelVector(dims=dims))
        skeleton = entry.get("skeleton")
        skeletons.append(skeleton if isinstance(skeleton, str) else "")
    if not shots:
        return None
    duration = max(s.end_s for s in shots)
    return StructuralDocument(
        meta=VideoMeta(duration_s=duration),
        skeleton_taxonomy="dramatic_arc",
        shots=tuple(shots),
        labels=tuple(vectors),
        skeleton_labels=tuple(skeletons),
    )


# ---------------------------------------------------------------------------
# regularizers
# ---------------------------------------------------------------------------


def _profanity_free_fraction(labels: Sequence[str], registry: TaxonomyRegistry) -> float:
    """Fraction of predicted labels that fail to string-match any canonical tag.

    Matching is case-insensitive after whitespace normalization; with no
    predicted labels at all the fraction is 0 (completeness is penalized
    separately).
    """
    if not labels:
        return 0.0
    misses = sum(0 if registry.in_vocabulary(lab) else 1 for lab in labels)
    return misses / len(labels)


def regularize(
    raw_output: str | None,
    parsed: StructuralDocument | None,
    registry: TaxonomyRegistry,
    cfg: RegularizerConfig,
) -> RegularizerResult:
    """Vocabulary, completeness, and format penalties for one model output.

    Totally unparseable output takes the worst case on all three components.
    When a parsed document is supplied without raw text, the format component
    is 0 by construction.
    """
    if parsed is not None and raw_output is None:
        labels = [atom for vec in parsed.labels for atom in vec.atoms()]
        dims_present = frozenset(
            dim for vec in parsed.labels for dim, subs in vec.dims.items() if subs
        )
        r_prof = _profanity_free_fraction(labels, registry)
        r_comp = (len(DIMENSION_IDS) - len(dims_present & set(DIMENSION_IDS))) / len(
            DIMENSION_IDS
        )
        r_form = 0.0
    else:
        inspection = inspect_document_text(raw_output or "")
        if not inspection.parseable:
            r_prof = r_comp = r_form = 1.0
        else:
            r_prof = _profanity_free_fraction(inspection.predicted_labels, registry)
            r_comp = (len(DIMENSION_IDS) - len(inspection.dimensions_present)) / len(
                DIMENSION_IDS
            )
            r_form = inspection.r_form
    l_reg = cfg.lambda_p * r_prof + cfg.lambda_c * r_comp + cfg.lambda_f * r_form
    return RegularizerResult(r_prof=r_prof, r_comp=r_comp, r_form=r_form, l_reg=l_reg)


# ---------------------------------------------------------------------------
# composite loss
# ---------------------------------------------------------------------------


def sv6d_loss(
    pred_output: str | None,
    truth: StructuralDocument,
    registry: TaxonomyRegistry,
    align_cfg: AlignmentConfig | None = None,
    reg_cfg: RegularizerConfig | None = None,
    pred: StructuralDocument | None = None,
) -> RewardBreakdown:
    """Composite structural loss and its normalized reward for one rollout.

    l_sv6d is the raw sum of the three terms; normalized_loss rescales each
    term by its maximum before averaging, and reward = 1 - normalized_loss.
    An unparseable prediction takes the worst case on every term.
    """
    align_cfg = align_cfg or AlignmentConfig()
    reg_cfg = reg_cfg or RegularizerConfig()

    if pred is None and pred_output is not None:
        pred = sanitize_for_alignment(pred_output, registry)

    if pred is None or pred.n_shots == 0:
        card = cardinality_penalty_fraction(0, truth.n_shots)
        l_align = 1.0 + align_cfg.beta * card
        l_struct = 1.0
        mean_iou = 0.0
        card_frac = card
    else:
        result = align(pred, truth, align_cfg, registry)
        l_align = result.l_align
        l_struct = structural_loss(result, pred, truth, align_cfg, registry)
        mean_iou = result.mean_iou
        card_frac = cardinality_penalty_fraction(pred.n_shots, truth.n_shots)

    reg = regularize(pred_output, pred if pred_output is None else None, registry, reg_cfg)
    l_sv6d = l_align + l_struct + reg.l_reg
    normalized = (
        l_align / (1.0 + align_cfg.beta) + l_struct + reg.l_reg / reg_cfg.lambda_sum
    ) / 3.0
    return RewardBreakdown(
        task_type="structural_parse",
        reward=1.0 - normalized,
        format_score=1.0 - reg.r_form,
        iou_score=mean_iou * (1.0 - card_frac),
        label_score=1.0 - l_struct,
        r_prof=reg.r_prof,
        r_comp=reg.r_comp,
        r_form=reg.r_form,
        l_align=l_align,
        l_struct=l_struct,
        l_reg=reg.l_reg,
        l_sv6d=l_sv6d,
        normalized_loss=normalized,
    )


# ---------------------------------------------------------------------------
# task-type rewards
# ---------------------------------------------------------------------------


def edit_distance(a: str, b: str) -> int:
    """Levenshtein distance with unit insert/delete/substitute costs."""
    if a == b:
        return 0
    if not a:
        return len(b)
    if not b:
        return len(a)
    prev = list(range(len(b) + 1))
    for i, ch_a in enumerate(a, start=1):
        cur = [i] + [0] * len(b)
        for j, ch_b in enumerate(b, start=1):
            cur[j] = min(
                prev[j] + 1,
                cur[j - 1] + 1,
                prev[j - 1] + (0 if ch_a == ch_b else 1),
            )
        prev = cur
    return prev[-1]


def edit_similarity(a: str, b: str) -> float:
    """1 - normalized edit distance; two empty strings are perfectly similar."""
    if not a and not b:
        return 1.0
    return 1.0 - edit_distance(a, b) / max(len(a), len(b))


def _spans_to_shots(spans: Sequence) -> list[SemanticShot]:
    shots = []
    for span in spans:
        if isinstance(span, Mapping):
            start, end = span.get("start_s"), span.get("end_s")
        elif isinstance(span, (list, tuple)) and len(span) == 2:
            start, end = span
        else:
            continue
        if _is_number(start) and _is_number(end) and 0 <= start < end:
            shots.append(SemanticShot(start_s=float(start), end_s=float(end)))
    return shots


def inspect_span_text(text: str) -> tuple[tuple[str, ...], list[SemanticShot]]:
    """Format checklist for span-list output; returns (violated, usable spans)."""
    try:
        payload = json.loads(text)
        syntax_ok = isinstance(payload, (Mapping, list))
    except (json.JSONDecodeError, TypeError):
        return SPAN_FORMAT_CHECKS, []
    if not syntax_ok:
        return SPAN_FORMAT_CHECKS, []

    if isinstance(payload, Mapping):
        spans_raw = payload.get("spans")
        if spans_raw is None and isinstance(payload.get("shots"), list):
            spans_raw = payload["shots"]
    else:
        spans_raw = payload

    violated: list[str] = []
    if not isinstance(spans_raw, list):
        violated.append("span_boundaries")
        return tuple(violated), []

    boundaries_ok = nonneg_ok = order_ok = numeric_ok = True
    for span in spans_raw:
        if isinstance(span, Mapping):
            start, end = span.get("start_s"), span.get("end_s")
            if start is None or end is None:
                boundaries_ok = False
        elif isinstance(span, (list, tuple)) and len(span) == 2:
            start, end = span
        else:
            boundaries_ok = False
            continue
        for value in (start, end):
            if value is not None and not _is_number(value):
                numeric_ok = False
        if _is_number(start) and start < 0 or _is_number(end) and end < 0:
            nonneg_ok = False
        if _is_number(start) and _is_number(end) and not start < end:
            order_ok = False
    if not boundaries_ok:
        violated.append("span_boundaries")
    if not nonneg_ok:
        violated.append("timestamps_nonnegative")
    if not order_ok:
        violated.append("start_before_end")
    if not numeric_ok:
        violated.append("numeric_fields")
    return tuple(violated), _spans_to_shots(spans_raw)


def _matched_mean_iou(
    pred_shots: Sequence[SemanticShot], truth_shots: Sequence[SemanticShot]
) -> tuple[float, float]:
    """(mean matched IoU, cardinality fraction) for two shot/span lists."""
    card = cardinality_penalty_fraction(len(pred_shots), len(truth_shots))
    if not pred_shots or not truth_shots:
        return 0.0, card
    costs = [
        [1.0 - temporal_iou(p, t) for t in truth_shots] for p in pred_shots
    ]
    matches = hungarian_match(costs)
    mean_iou = sum(
        temporal_iou(pred_shots[i], truth_shots[j]) for i, j in matches
    ) / len(matches)
    return mean_iou, card


def _grounding_reward(
    rollout_text: str,
    truth: StructuralDocument,
    registry: TaxonomyRegistry,
    align_cfg: AlignmentConfig,
    reg_cfg: RegularizerConfig,
) -> RewardBreakdown:
    composite = sv6d_loss(rollout_text, truth, registry, align_cfg, reg_cfg)
    reward = (
        0.2 * composite.format_score
        + 0.4 * composite.iou_score
        + 0.4 * composite.label_score
    )
    return RewardBreakdown(
        task_type="temporal_grounding",
        reward=reward,
        format_score=composite.format_score,
        iou_score=composite.iou_score,
        label_score=composite.label_score,
        r_prof=composite.r_prof,
        r_comp=composite.r_comp,
        r_form=composite.r_form,
        l_align=composite.l_align,
        l_struct=composite.l_struct,
        l_reg=composite.l_reg,
        l_sv6d=composite.l_sv6d,
        normalized_loss=composite.normalized_loss,
    )


def _localization_reward(
    rollout_text: str, truth_spans: Sequence[SemanticShot]
) -> RewardBreakdown:
    violated, pred_spans = inspect_span_text(rollout_text)
    r_form = len(violated) / len(SPAN_FORMAT_CHECKS)
    format_score = 1.0 - r_form
    mean_iou, card = _matched_mean_iou(pred_spans, truth_spans)
    iou_score = mean_iou * (1.0 - card)
    return RewardBreakdown(
        task_type="temporal_action_localization",
        reward=0.2 * format_score + 0.8 * iou_score,
        format_score=format_score,
        iou_score=iou_score,
        r_form=r_form,
    )


def _ocr_reward(rollout_text: str, truth_text: str) -> RewardBreakdown:
    similarity = edit_similarity(rollout_text, truth_text)
    return RewardBreakdown(
        task_type="ocr",
        reward=similarity,
        label_score=similarity,
    )


def _cot_reward(
    rollout_text: str,
    reference: Mapping[str, Any],
    judge: Callable[[str, Mapping[str, Any]], float] | None,
) -> RewardBreakdown:
    judge_score = reference.get("judge_score")
    if judge_score is None and judge is not None:
        judge_score = judge(rollout_text, reference)
    if judge_score is None:
        raise TaskInputError(
            "chain_of_thought requires a judge_score in the reference or a "
            "configured judge provider"
        )
    if not (_is_number(judge_score) and 0 <= judge_score <= 1):
        raise TaskInputError(f"judge score must lie in [0, 1], got {judge_score!r}")
    if reference.get("format_checks") == "document":
        inspection = inspect_document_text(rollout_text)
        format_score = 1.0 - inspection.r_form
        r_form = inspection.r_form
    else:
        format_score = 1.0 if rollout_text.strip() else 0.0
        r_form = 1.0 - format_score
    return RewardBreakdown(
        task_type="chain_of_thought",
        reward=0.3 * format_score + 0.7 * float(judge_score),
        format_score=format_score,
        r_form=r_form,
        judge_score=float(judge_score),
    )


def task_reward(
    task_type: str,
    rollout_text: str,
    reference: Any,
    registry: TaxonomyRegistry,
    align_cfg: AlignmentConfig | None = None,
    reg_cfg: RegularizerConfig | None = None,
    judge: Callable[[str, Mapping[str, Any]], float] | None = None,
) -> RewardBreakdown:
    """Dispatch one rollout to its task-specific reward.

    temporal_grounding: 0.2 format + 0.4 IoU + 0.4 label, computed from the
    full structural comparison against a reference document.
    temporal_action_localization: 0.2 format + 0.8 IoU over span lists.
    ocr: normalized edit-distance similarity of the two strings.
    chain_of_thought: 0.3 format + 0.7 judge, judge supplied externally.
    """
    align_cfg = align_cfg or AlignmentConfig()
    reg_cfg = reg_cfg or RegularizerConfig()

    if task_type == "temporal_grounding":
        truth = _reference_document(reference, registry)
        return _grounding_reward(rollout_text, truth, registry, align_cfg, reg_cfg)
    if task_type == "temporal_action_localization":
        truth_spans = _reference_spans(reference)
        return _localization_reward(rollout_text, truth_spans)
    if task_type == "ocr":
        truth_text = _reference_text(reference)
        return _ocr_reward(rollout_text, truth_text)
    if task_type == "chain_of_thought":
        if not isinstance(reference, Mapping):
            raise TaskInputError("chain_of_thought reference must be a mapping")
        return _cot_reward(rollout_text, reference, judge)
    raise TaskInputError(f"unknown task type {task_type!r}; expected one of {TASK_TYPES}")


def _reference_document(reference: Any, registry: TaxonomyRegistry) -> StructuralDocument:
    """Full documents, or bare span/label pair lists ({"shots": [...]} without
    meta/skeleton), which assemble the same way permissive rollouts do."""
    if isinstance(reference, StructuralDocument):
        return reference
    if isinstance(reference, Mapping):
        payload = reference.get("document", reference)
        if isinstance(payload, Mapping) and "shots" in payload:
            try:
                return document_from_dict(payload)
            except Exception:
                assembled = sanitize_for_alignment(json.dumps(payload), registry)
                if assembled is not None:
                    return assembled
    raise TaskInputError(
        "temporal_grounding reference must carry a structural document or "
        "span/label pairs under a 'shots' list"
    )


def _reference_spans(reference: Any) -> list[SemanticShot]:
    if isinstance(reference, Mapping):
        spans = reference.get("spans")
    else:
        spans = reference
    if not isinstance(spans, (list, tuple)):
        raise TaskInputError("temporal_action_localization reference must carry spans")
    shots = _spans_to_shots(spans)
    if len(shots) != len(spans):
        raise TaskInputError("reference spans must all be valid [start, end) intervals")
    return shots


def _reference_text(reference: Any) -> str:
    if isinstance(reference, str):
        return reference
    if isinstance(reference, Mapping) and isinstance(reference.get("text"), str):
        return reference["text"]
    raise TaskInputError("ocr reference must carry the ground-truth text")
