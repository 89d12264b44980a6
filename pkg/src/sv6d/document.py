"""Timeline-grounded structural documents: parsing, validation, skeleton derivation.

A structural document is a gap-free partition of a video timeline into
semantic shots, each carrying a per-dimension label vector and a skeleton
(discourse-function) label. All values are immutable after parse.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping

from .taxonomy import DIMENSION_IDS, TaxonomyRegistry

# Absolute tolerance for adjacency/coverage checks on timestamps. Stored
# values are never mutated; the tolerance only absorbs float round-trip noise.
TIME_TOLERANCE_S = 1e-3


class DocumentError(ValueError):
    """Raised when a document file cannot be decoded into the canonical shape."""


@dataclass(frozen=True)
class VideoMeta:
    duration_s: float
    frame_rate: float | None = None
    resolution: tuple[int, int] | None = None
    platform: str | None = None
    is_aigc: bool | None = None

    def __post_init__(self) -> None:
        if not (isinstance(self.duration_s, (int, float)) and self.duration_s > 0):
            raise DocumentError(f"duration_s must be > 0, got {self.duration_s!r}")


@dataclass(frozen=True)
class SemanticShot:
    """A maximal contiguous timeline interval; zero-length intervals are rejected."""

    start_s: float
    end_s: float

    def __post_init__(self) -> None:
        if not (0 <= self.start_s < self.end_s):
            raise DocumentError(
                f"shot interval must satisfy 0 <= start < end, got "
                f"[{self.start_s}, {self.end_s}]"
            )

    @property
    def length_s(self) -> float:
        return self.end_s - self.start_s


@dataclass(frozen=True)
class ShotLabelVector:
    """Per-shot labels: dimension id -> sub-dimension id -> label or label set."""

    dims: Mapping[str, Mapping[str, str | frozenset[str]]]

    def value(self, dim_id: str, sub_id: str) -> str | frozenset[str] | None:
        return self.dims.get(dim_id, {}).get(sub_id)

    def atoms(self) -> list[str]:
        """Every atomic label string in the vector, in canonical key order."""
        out: list[str] = []
        for dim_id in sorted(self.dims):
            for sub_id in sorted(self.dims[dim_id]):
                val = self.dims[dim_id][sub_id]
                if isinstance(val, frozenset):
                    out.extend(sorted(val))
                else:
                    out.append(val)
        return out

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ShotLabelVector):
            return NotImplemented
        return _plain(self.dims) == _plain(other.dims)

    def __hash__(self) -> int:
        return hash(json.dumps(_plain(self.dims), sort_keys=True))


def _plain(dims: Mapping) -> dict:
    return {
        d: {s: sorted(v) if isinstance(v, frozenset) else v for s, v in subs.items()}
        for d, subs in dims.items()
    }


@dataclass(frozen=True)
class StructuralDocument:
    """The observed structural parse: shots, label vectors, skeleton labels.

    Parallel lists `shots`, `labels`, `skeleton_labels`, and `evidence` all
    have one entry per shot. Construction only enforces shape consistency;
    full timeline/vocabulary checking is `validate_document`'s job so that
    permissively parsed model output can still be represented.
    """

    meta: VideoMeta
    skeleton_taxonomy: str
    shots: tuple[SemanticShot, ...]
    labels: tuple[ShotLabelVector, ...]
    skeleton_labels: tuple[str, ...]
    evidence: tuple[Mapping[str, str], ...] = ()

    def __post_init__(self) -> None:
        n = len(self.shots)
        if len(self.labels) != n or len(self.skeleton_labels) != n:
            raise DocumentError(
                f"parallel lists disagree: {n} shots, {len(self.labels)} label "
                f"vectors, {len(self.skeleton_labels)} skeleton labels"
            )
        if self.evidence and len(self.evidence) != n:
            raise DocumentError("evidence list must be empty or one entry per shot")
        if not self.evidence:
            object.__setattr__(self, "evidence", tuple({} for _ in range(n)))

    @property
    def n_shots(self) -> int:
        return len(self.shots)


@dataclass(frozen=True)
class SkeletonSegment:
    """A maximal run of consecutive shots sharing one skeleton label."""

    seg_type: str
    shot_range: tuple[int, int]  # inclusive indices into the shot list
    start_s: float
    end_s: float


@dataclass(frozen=True)
class ValidationIssue:
    code: str
    message: str
    location: str = ""

    def __str__(self) -> str:
        where = f" [{self.location}]" if self.location else ""
        return f"{self.code}: {self.message}{where}"


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------


def validate_document(
    doc: StructuralDocument, registry: TaxonomyRegistry
) -> list[ValidationIssue]:
    """Total validation: returns all violations; an empty list means valid.

    Checks the timeline partition (coverage, adjacency, ordering within
    TIME_TOLERANCE_S), vocabulary membership of every label, skeleton
    taxonomy membership, multi-valued shape rules, and the config-declared
    invalid subject framing x configuration combinations.
    """
    issues: list[ValidationIssue] = []

    if doc.n_shots == 0:
        issues.append(ValidationIssue("empty_document", "document has no shots"))
        return issues

    first, last = doc.shots[0], doc.shots[-1]
    if abs(first.start_s - 0.0) > TIME_TOLERANCE_S:
        issues.append(
            ValidationIssue(
                "coverage_start",
                f"first shot starts at {first.start_s}, expected 0",
                "shot 0",
            )
        )
    if abs(last.end_s - doc.meta.duration_s) > TIME_TOLERANCE_S:
        issues.append(
            ValidationIssue(
                "coverage_end",
                f"last shot ends at {last.end_s}, expected duration "
                f"{doc.meta.duration_s}",
                f"shot {doc.n_shots - 1}",
            )
        )
    for i in range(doc.n_shots - 1):
        a, b = doc.shots[i], doc.shots[i + 1]
        gap = b.start_s - a.end_s
        if gap > TIME_TOLERANCE_S:
            issues.append(
                ValidationIssue(
                    "gap",
                    f"gap between t={a.end_s} and t={b.start_s}",
                    f"shots {i}..{i + 1}",
                )
            )
        elif gap < -TIME_TOLERANCE_S:
            issues.append(
                ValidationIssue(
                    "overlap",
                    f"overlap between t={b.start_s} and t={a.end_s}",
                    f"shots {i}..{i + 1}",
                )
            )

    try:
        skeleton_vocab = set(registry.skeleton_labels(doc.skeleton_taxonomy))
    except Exception:
        issues.append(
            ValidationIssue(
                "unknown_skeleton_taxonomy",
                f"skeleton taxonomy {doc.skeleton_taxonomy!r} is not defined",
            )
        )
        skeleton_vocab = None

    for i, (vec, skel) in enumerate(zip(doc.labels, doc.skeleton_labels)):
        if skeleton_vocab is not None and skel not in skeleton_vocab:
            issues.append(
                ValidationIssue(
                    "skeleton_label",
                    f"skeleton label {skel!r} not in taxonomy "
                    f"{doc.skeleton_taxonomy!r}",
                    f"shot {i}",
                )
            )
        issues.extend(_validate_vector(vec, registry, i))

    issues.extend(_validate_subject_combinations(doc, registry))
    return issues


def _validate_vector(
    vec: ShotLabelVector, registry: TaxonomyRegistry, shot_idx: int
) -> list[ValidationIssue]:
    issues = []
    for dim_id, subs in vec.dims.items():
        if dim_id not in DIMENSION_IDS:
            issues.append(
                ValidationIssue(
                    "unknown_dimension", f"unknown dimension {dim_id!r}", f"shot {shot_idx}"
                )
            )
            continue
        dim = registry.dimension(dim_id)
        for sub_id, value in subs.items():
            if sub_id not in dim.sub_ids:
                issues.append(
                    ValidationIssue(
                        "unknown_sub_dimension",
                        f"unknown sub-dimension {dim_id}.{sub_id}",
                        f"shot {shot_idx}",
                    )
                )
                continue
            sub = dim.sub(sub_id)
            if isinstance(value, frozenset):
                if not sub.multi_valued:
                    issues.append(
                        ValidationIssue(
                            "multi_value_shape",
                            f"{dim_id}.{sub_id} is single-valued but got a set",
                            f"shot {shot_idx}",
                        )
                    )
                if not value:
                    issues.append(
                        ValidationIssue(
                            "empty_label_set",
                            f"{dim_id}.{sub_id} has an empty label set",
                            f"shot {shot_idx}",
                        )
                    )
                atoms = sorted(value)
            else:
                atoms = [value]
            for atom in atoms:
                if atom not in sub.labels:
                    issues.append(
                        ValidationIssue(
                            "out_of_vocabulary",
                            f"label {atom!r} not in {dim_id}.{sub_id} vocabulary",
                            f"shot {shot_idx}",
                        )
                    )
    return issues


def _validate_subject_combinations(
    doc: StructuralDocument, registry: TaxonomyRegistry
) -> list[ValidationIssue]:
    issues = []
    banned = registry.subject_invalid_combinations
    if not banned:
        return issues
    for i, vec in enumerate(doc.labels):
        framing = vec.value("subject", "framing")
        config = vec.value("subject", "configuration")
        if framing is None or config is None:
            continue
        framings = sorted(framing) if isinstance(framing, frozenset) else [framing]
        configs = sorted(config) if isinstance(config, frozenset) else [config]
        for fr in framings:
            for cf in configs:
                if (fr, cf) in banned:
                    issues.append(
                        ValidationIssue(
                            "invalid_subject_combination",
                            f"framing {fr!r} cannot co-occur with configuration {cf!r}",
                            f"shot {i}",
                        )
                    )
    return issues


# ---------------------------------------------------------------------------
# skeleton derivation
# ---------------------------------------------------------------------------


def derive_skeleton(doc: StructuralDocument) -> list[SkeletonSegment]:
    """Merge maximal runs of equal skeleton labels into segments.

    The result is a shot-index partition whose time boundaries are derived
    from the first and last shot of each run; adjacent segments always carry
    distinct labels.
    """
    if doc.n_shots == 0:
        raise DocumentError("cannot derive a skeleton from an empty document")
    segments: list[SkeletonSegment] = []
    run_start = 0
    for i in range(1, doc.n_shots + 1):
        if i == doc.n_shots or doc.skeleton_labels[i] != doc.skeleton_labels[run_start]:
            segments.append(
                SkeletonSegment(
                    seg_type=doc.skeleton_labels[run_start],
                    shot_range=(run_start, i - 1),
                    start_s=doc.shots[run_start].start_s,
                    end_s=doc.shots[i - 1].end_s,
                )
            )
            run_start = i
    return segments


def flatten_skeleton(
    segments: list[SkeletonSegment], n_shots: int
) -> list[str]:
    """Inverse of derive_skeleton: per-shot labels from a segment list."""
    out: list[str | None] = [None] * n_shots
    for seg in segments:
        lo, hi = seg.shot_range
        for i in range(lo, hi + 1):
            out[i] = seg.seg_type
    if any(lab is None for lab in out):
        raise DocumentError("segments do not cover every shot index")
    return out  # type: ignore[return-value]


# ---------------------------------------------------------------------------
# canonical file format
# ---------------------------------------------------------------------------


def document_from_dict(payload: Mapping[str, Any]) -> StructuralDocument:
    """Decode the canonical document mapping; raises DocumentError on shape errors."""
    try:
        meta_raw = payload["meta"]
        meta = VideoMeta(
            duration_s=float(meta_raw["duration_s"]),
            frame_rate=(
                float(meta_raw["frame_rate"]) if meta_raw.get("frame_rate") is not None else None
            ),
            resolution=(
                (int(meta_raw["resolution"][0]), int(meta_raw["resolution"][1]))
                if meta_raw.get("resolution") is not None
                else None
            ),
            platform=meta_raw.get("platform"),
            is_aigc=meta_raw.get("is_aigc"),
        )
        skeleton_taxonomy = payload["skeleton_taxonomy"]
        shots, labels, skeleton, evidence = [], [], [], []
        for shot_raw in payload["shots"]:
            shots.append(
                SemanticShot(start_s=float(shot_raw["start_s"]), end_s=float(shot_raw["end_s"]))
            )
            labels.append(_vector_from_dict(shot_raw.get("labels", {})))
            skeleton.append(shot_raw["skeleton"])
            evidence.append(dict(shot_raw.get("evidence", {})))
    except DocumentError:
        raise
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise DocumentError(f"malformed document payload: {exc}") from exc
    return StructuralDocument(
        meta=meta,
        skeleton_taxonomy=skeleton_taxonomy,
        shots=tuple(shots),
        labels=tuple(labels),
        skeleton_labels=tuple(skeleton),
        evidence=tuple(evidence),
    )


def _vector_from_dict(raw: Mapping[str, Any]) -> ShotLabelVector:
    dims: dict[str, dict[str, str | frozenset[str]]] = {}
    for dim_id, subs in raw.items():
        if not isinstance(subs, Mapping):
            raise DocumentError(f"labels for dimension {dim_id!r} must be a mapping")
        dims[dim_id] = {}
        for sub_id, value in subs.items():
            if isinstance(value, str):
                dims[dim_id][sub_id] = value
            elif isinstance(value, (list, tuple, set, frozenset)):
                if not all(isinstance(v, str) for v in value):
                    raise DocumentError(
                        f"label set for {dim_id}.{sub_id} contains non-strings"
                    )
                dims[dim_id][sub_id] = frozenset(value)
            else:
                raise DocumentError(
                    f"label value for {dim_id}.{sub_id} must be a string or list"
                )
    return ShotLabelVector(dims=dims)


def document_to_dict(doc: StructuralDocument) -> dict[str, Any]:
    meta: dict[str, Any] = {"duration_s": doc.meta.duration_s}
    if doc.meta.frame_rate is not None:
        meta["frame_rate"] = doc.meta.frame_rate
    if doc.meta.resolution is not None:
        meta["resolution"] = list(doc.meta.resolution)
    if doc.meta.platform is not None:
        meta["platform"] = doc.meta.platform
    if doc.meta.is_aigc is not None:
        meta["is_aigc"] = doc.meta.is_aigc
    shots = []
    for shot, vec, skel, ev in zip(doc.shots, doc.labels, doc.skeleton_labels, doc.evidence):
        entry: dict[str, Any] = {
            "start_s": shot.start_s,
            "end_s": shot.end_s,
            "labels": _plain(vec.dims),
            "skeleton": skel,
        }
        if ev:
            entry["evidence"] = dict(ev)
        shots.append(entry)
    return {"meta": meta, "skeleton_taxonomy": doc.skeleton_taxonomy, "shots": shots}


def parse_document(text: str) -> StructuralDocument:
    """Strict parse of the canonical JSON document format."""
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DocumentError(f"invalid JSON: {exc}") from exc
    if not isinstance(payload, Mapping):
        raise DocumentError("document must be a JSON object")
    return document_from_dict(payload)


def dumps_document(doc: StructuralDocument) -> str:
    return json.dumps(document_to_dict(doc), ensure_ascii=False, indent=2, sort_keys=True)


def load_document(path: str | Path) -> StructuralDocument:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_document(fh.read())


def save_document(doc: StructuralDocument, path: str | Path) -> None:
    Path(path).write_text(dumps_document(doc) + "\n", encoding="utf-8")
