"""Closed label vocabularies, ordinal rankings, and confusion graphs.

The registry is the single source of truth for every label distance and
distractor neighborhood in the engine. It is immutable after load and safe
to share across threads.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping

import yaml

DIMENSION_IDS = (
    "subject",
    "aesthetics",
    "camera_language",
    "editing",
    "narrative",
    "dissemination",
)

REQUIRED_SKELETON_TAXONOMY = "dramatic_arc"
DRAMATIC_ARC_LABELS = frozenset(
    {"exposition", "rising action", "climax", "falling action", "dénouement", "other"}
)


class TaxonomyError(ValueError):
    """Raised when a taxonomy config violates its structural contract."""


def normalize_label(text: str) -> str:
    """Whitespace-collapsed, casefolded form used for vocabulary matching."""
    return " ".join(text.split()).casefold()


# ---------------------------------------------------------------------------
# types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SubDimension:
    """One factor of a dimension's label product space.

    Ordinal sub-dimensions rank labels by list position; categorical ones
    carry an undirected confusion graph over their labels. Distance tables
    are precomputed at construction so lookups are O(1).
    """

    id: str
    kind: str  # "ordinal" | "categorical"
    labels: tuple[str, ...]
    confusion_edges: tuple[tuple[str, str], ...] = ()
    multi_valued: bool = False
    synthetic: frozenset[str] = frozenset()

    _rank: dict[str, int] = field(init=False, repr=False, compare=False)
    _hops: dict[tuple[str, str], int] = field(init=False, repr=False, compare=False)
    _diameter: dict[str, int] = field(init=False, repr=False, compare=False)
    _adjacent: dict[str, frozenset[str]] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.kind not in ("ordinal", "categorical"):
            raise TaxonomyError(f"sub-dimension {self.id!r}: unknown kind {self.kind!r}")
        if not self.labels:
            raise TaxonomyError(f"sub-dimension {self.id!r}: empty label list")
        if len(set(self.labels)) != len(self.labels):
            dupes = sorted({x for x in self.labels if self.labels.count(x) > 1})
            raise TaxonomyError(f"sub-dimension {self.id!r}: duplicate label(s) {dupes}")
        if self.kind == "ordinal" and self.confusion_edges:
            raise TaxonomyError(
                f"sub-dimension {self.id!r}: confusion edges are only valid on "
                "categorical sub-dimensions"
            )
        label_set = set(self.labels)
        for a, b in self.confusion_edges:
            for end in (a, b):
                if end not in label_set:
                    raise TaxonomyError(
                        f"sub-dimension {self.id!r}: confusion edge endpoint "
                        f"{end!r} is not a member label"
                    )
            if a == b:
                raise TaxonomyError(f"sub-dimension {self.id!r}: self-loop edge on {a!r}")
        unknown_synth = self.synthetic - label_set
        if unknown_synth:
            raise TaxonomyError(
                f"sub-dimension {self.id!r}: synthetic flags for unknown labels "
                f"{sorted(unknown_synth)}"
            )
        object.__setattr__(self, "_rank", {lab: i for i, lab in enumerate(self.labels)})
        adjacency: dict[str, set[str]] = {lab: set() for lab in self.labels}
        if self.kind == "ordinal":
            for i, lab in enumerate(self.labels):
                if i > 0:
                    adjacency[lab].add(self.labels[i - 1])
                if i + 1 < len(self.labels):
                    adjacency[lab].add(self.labels[i + 1])
        else:
            for a, b in self.confusion_edges:
                adjacency[a].add(b)
                adjacency[b].add(a)
        object.__setattr__(
            self, "_adjacent", {lab: frozenset(nbrs) for lab, nbrs in adjacency.items()}
        )
        hops: dict[tuple[str, str], int] = {}
        diameter: dict[str, int] = {}
        if self.kind == "categorical":
            hops, diameter = _all_pairs_hops(self.labels, adjacency)
        object.__setattr__(self, "_hops", hops)
        object.__setattr__(self, "_diameter", diameter)

    def require_label(self, label: str) -> None:
        if label not in self._rank:
            raise TaxonomyError(f"unknown label {label!r} in sub-dimension {self.id!r}")

    def rank(self, label: str) -> int:
        self.require_label(label)
        return self._rank[label]

    def distance(self, a: str, b: str) -> float:
        """Semantic distance in [0, 1] between two member labels.

        Ordinal: |rank(a) - rank(b)| / (m - 1), zero when m == 1.
        Categorical: shortest-path hops on the confusion graph divided by the
        diameter of the shared connected component; labels in different
        components are maximally distant (1).
        """
        self.require_label(a)
        self.require_label(b)
        if a == b:
            return 0.0
        if self.kind == "ordinal":
            m = len(self.labels)
            if m == 1:
                return 0.0
            return abs(self._rank[a] - self._rank[b]) / (m - 1)
        key = (a, b) if (a, b) in self._hops else (b, a)
        if key not in self._hops:
            return 1.0
        return self._hops[key] / self._diameter[a]

    def neighborhood(self, label: str) -> frozenset[str]:
        """Labels at rank distance 1 (ordinal) or graph distance 1 (categorical)."""
        self.require_label(label)
        return self._adjacent[label]

    def second_shell(self, label: str) -> frozenset[str]:
        """Labels at exactly rank/graph distance 2; the distractor fallback ring."""
        self.require_label(label)
        if self.kind == "ordinal":
            r = self._rank[label]
            return frozenset(
                lab for lab in self.labels if abs(self._rank[lab] - r) == 2
            )
        out = set()
        for lab in self.labels:
            key = (label, lab) if (label, lab) in self._hops else (lab, label)
            if key in self._hops and self._hops[key] == 2:
                out.add(lab)
        return frozenset(out)


def _all_pairs_hops(
    labels: Iterable[str], adjacency: Mapping[str, set[str]]
) -> tuple[dict[tuple[str, str], int], dict[str, int]]:
    """BFS hop counts for all connected pairs plus per-label component diameter."""
    hop: dict[tuple[str, str], int] = {}
    eccentricity: dict[str, int] = {}
    for src in labels:
        seen = {src: 0}
        queue = deque([src])
        while queue:
            cur = queue.popleft()
            for nxt in adjacency[cur]:
                if nxt not in seen:
                    seen[nxt] = seen[cur] + 1
                    queue.append(nxt)
        eccentricity[src] = max(seen.values())
        for dst, h in seen.items():
            if dst != src:
                hop[(src, dst)] = h
    # Component diameter = max eccentricity over that component's members.
    diameter: dict[str, int] = {}
    for src in labels:
        comp = {src} | {dst for (s, dst) in hop if s == src}
        diameter[src] = max(eccentricity[member] for member in comp)
    return hop, diameter


@dataclass(frozen=True)
class Dimension:
    """One of the six structural dimensions, as an ordered sub-dimension list."""

    id: str
    sub_dimensions: tuple[SubDimension, ...]

    _by_id: dict[str, SubDimension] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        ids = [s.id for s in self.sub_dimensions]
        if len(set(ids)) != len(ids):
            raise TaxonomyError(f"dimension {self.id!r}: duplicate sub-dimension ids")
        object.__setattr__(self, "_by_id", {s.id: s for s in self.sub_dimensions})

    def sub(self, sub_id: str) -> SubDimension:
        try:
            return self._by_id[sub_id]
        except KeyError:
            raise TaxonomyError(
                f"unknown sub-dimension {sub_id!r} in dimension {self.id!r}"
            ) from None

    @property
    def sub_ids(self) -> tuple[str, ...]:
        return tuple(s.id for s in self.sub_dimensions)

    def label_count(self) -> int:
        return sum(len(s.labels) for s in self.sub_dimensions)


@dataclass(frozen=True)
class TaxonomyRegistry:
    """Validated, immutable bundle of all six dimensions and skeleton taxonomies."""

    version: str
    dimensions: tuple[Dimension, ...]
    skeleton_taxonomies: dict[str, tuple[str, ...]]
    subject_invalid_combinations: frozenset[tuple[str, str]] = frozenset()

    _by_id: dict[str, Dimension] = field(init=False, repr=False, compare=False)
    _vocabulary: frozenset[str] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        ids = tuple(d.id for d in self.dimensions)
        if sorted(ids) != sorted(DIMENSION_IDS):
            raise TaxonomyError(
                f"registry must define exactly the six dimensions {DIMENSION_IDS}, "
                f"got {ids}"
            )
        if REQUIRED_SKELETON_TAXONOMY not in self.skeleton_taxonomies:
            raise TaxonomyError(
                f"missing required skeleton taxonomy {REQUIRED_SKELETON_TAXONOMY!r}"
            )
        arc = set(self.skeleton_taxonomies[REQUIRED_SKELETON_TAXONOMY])
        if arc != set(DRAMATIC_ARC_LABELS):
            raise TaxonomyError(
                "dramatic_arc skeleton taxonomy must contain exactly "
                f"{sorted(DRAMATIC_ARC_LABELS)}, got {sorted(arc)}"
            )
        for tax_id, labels in self.skeleton_taxonomies.items():
            if len(set(labels)) != len(labels):
                raise TaxonomyError(f"skeleton taxonomy {tax_id!r}: duplicate labels")
        object.__setattr__(self, "_by_id", {d.id: d for d in self.dimensions})
        vocab = {
            normalize_label(lab)
            for d in self.dimensions
            for s in d.sub_dimensions
            for lab in s.labels
        }
        object.__setattr__(self, "_vocabulary", frozenset(vocab))

    def dimension(self, dim_id: str) -> Dimension:
        try:
            return self._by_id[dim_id]
        except KeyError:
            raise TaxonomyError(f"unknown dimension {dim_id!r}") from None

    def sub_dimension(self, dim_id: str, sub_id: str) -> SubDimension:
        return self.dimension(dim_id).sub(sub_id)

    def skeleton_labels(self, taxonomy_id: str) -> tuple[str, ...]:
        try:
            return self.skeleton_taxonomies[taxonomy_id]
        except KeyError:
            raise TaxonomyError(f"unknown skeleton taxonomy {taxonomy_id!r}") from None

    def in_vocabulary(self, label: str) -> bool:
        """Case- and whitespace-insensitive membership in the union vocabulary."""
        return normalize_label(label) in self._vocabulary


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------


def label_distance(
    registry: TaxonomyRegistry, dim_id: str, sub_id: str, a: str, b: str
) -> float:
    """Distance in [0, 1] between two labels of one sub-dimension."""
    return registry.sub_dimension(dim_id, sub_id).distance(a, b)


def confusion_neighborhood(
    registry: TaxonomyRegistry, dim_id: str, sub_id: str, label: str
) -> frozenset[str]:
    """The distance-1 shell around a label; never contains the label itself."""
    return registry.sub_dimension(dim_id, sub_id).neighborhood(label)


# ---------------------------------------------------------------------------
# loading
# ---------------------------------------------------------------------------


def default_registry_path() -> Path:
    return Path(resources.files("sv6d").joinpath("data/default_taxonomy.yaml"))  # type: ignore[arg-type]


def load_registry(source: str | Path | Mapping | None = None) -> TaxonomyRegistry:
    """Load and validate a taxonomy config.

    `source` may be a path to a YAML file, an already-parsed mapping, or None
    for the shipped default. Raises TaxonomyError on any structural violation.
    """
    if source is None:
        source = default_registry_path()
    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8") as fh:
            raw = yaml.safe_load(fh)
    else:
        raw = source
    if not isinstance(raw, Mapping):
        raise TaxonomyError("taxonomy config must be a mapping at top level")
    version = raw.get("version")
    if not isinstance(version, str) or not version:
        raise TaxonomyError("taxonomy config requires a non-empty string 'version'")

    dims_raw = raw.get("dimensions")
    if not isinstance(dims_raw, list):
        raise TaxonomyError("taxonomy config requires a 'dimensions' list")
    dimensions = []
    for dim_raw in dims_raw:
        dim_id = dim_raw.get("id")
        subs = []
        for sub_raw in dim_raw.get("sub_dimensions", []):
            subs.append(
                SubDimension(
                    id=sub_raw["id"],
                    kind=sub_raw.get("kind", "categorical"),
                    labels=tuple(sub_raw.get("labels", [])),
                    confusion_edges=tuple(
                        (pair[0], pair[1]) for pair in sub_raw.get("confusion_edges", [])
                    ),
                    multi_valued=bool(sub_raw.get("multi_valued", False)),
                    synthetic=frozenset(sub_raw.get("synthetic", [])),
                )
            )
        dim = Dimension(id=dim_id, sub_dimensions=tuple(subs))
        declared = dim_raw.get("declared_label_count")
        if declared is not None and dim.label_count() != declared:
            raise TaxonomyError(
                f"dimension {dim_id!r}: declared_label_count={declared} but "
                f"config defines {dim.label_count()} labels"
            )
        dimensions.append(dim)

    skeletons_raw = raw.get("skeleton_taxonomies", {})
    skeletons = {k: tuple(v) for k, v in skeletons_raw.items()}

    combos = frozenset(
        (entry["framing"], entry["configuration"])
        for entry in raw.get("subject_invalid_combinations", [])
    )

    registry = TaxonomyRegistry(
        version=version,
        dimensions=tuple(dimensions),
        skeleton_taxonomies=skeletons,
        subject_invalid_combinations=combos,
    )
    _check_invalid_combinations(registry)
    return registry


def _check_invalid_combinations(registry: TaxonomyRegistry) -> None:
    if not registry.subject_invalid_combinations:
        return
    subject = registry.dimension("subject")
    framing = set(subject.sub("framing").labels) if "framing" in subject.sub_ids else set()
    config = (
        set(subject.sub("configuration").labels)
        if "configuration" in subject.sub_ids
        else set()
    )
    for fr, cf in registry.subject_invalid_combinations:
        if fr not in framing or cf not in config:
            raise TaxonomyError(
                f"subject_invalid_combinations references unknown labels ({fr!r}, {cf!r})"
            )
