"""Deterministic multiple-choice item generation from structural documents.

Every item is produced by a pure function of (config, seed): option shapes
follow the answer type, distractors are confusion-aware with deterministic
fallback shells, ordered items carry temporal traps, and a fixed abstain
option E backstops out-of-vocabulary truths. `verify_item` re-implements the
generation invariants independently so generator defects cannot hide.
"""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping, Sequence

import yaml

from .document import StructuralDocument
from .taxonomy import SubDimension, TaxonomyRegistry

ANSWER_TYPES = ("single", "multi", "ordered")
LETTERS = ("A", "B", "C", "D")
OPTION_E_TEXT = "none of the above / cannot determine"
TRAP_KINDS = ("reversal", "substitution", "stasis", "skip")

ARROW = " → "  # sequence options are arrow-joined

DEFAULT_TEMPLATES = {
    "single": (
        "Consider the video segment anchored at {anchor}. Which canonical tag "
        "correctly describes the {facet} of this span?"
    ),
    "multi": (
        "Consider the video segment anchored at {anchor}. Which set of canonical "
        "tags exactly matches the {facet} observed in this span?"
    ),
    "ordered": (
        "Across the consecutive window {anchor}, which progression of {facet} "
        "tags occurs, in order?"
    ),
}


class ItemGenerationError(ValueError):
    """Raised when a config cannot yield an invariant-satisfying item."""


class PlanError(ValueError):
    """Raised for malformed or empty generation plans."""


class StableRng:
    """Deterministic choice helpers built only on Random.random().

    The underlying stream is the one part of the stdlib generator whose
    output is guaranteed stable across Python versions, so suites regenerate
    bit-exactly everywhere.
    """

    def __init__(self, seed: int) -> None:
        self._rng = random.Random(seed)

    def index(self, n: int) -> int:
        if n <= 0:
            raise ValueError("cannot pick from an empty range")
        return min(int(self._rng.random() * n), n - 1)

    def pick(self, seq: Sequence):
        return seq[self.index(len(seq))]

    def sample(self, seq: Sequence, k: int) -> list:
        pool = list(seq)
        if k > len(pool):
            raise ValueError("sample larger than population")
        return [pool.pop(self.index(len(pool))) for _ in range(k)]

    def shuffle(self, items: list) -> None:
        for i in range(len(items) - 1, 0, -1):
            j = self.index(i + 1)
            items[i], items[j] = items[j], items[i]


def derive_seed(suite_seed: int, task_id: str) -> int:
    """Stable per-item sub-seed; parallel generation order cannot matter."""
    digest = hashlib.sha256(f"{suite_seed}:{task_id}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


# ---------------------------------------------------------------------------
# item types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ItemConfig:
    """Declarative recipe for one item; generation is pure in (config, seed)."""

    task_id: str
    dimension: str
    answer_type: str
    truth: str | frozenset[str] | tuple[str, ...]
    anchor: tuple[float, float] | float
    sub_dimension: str | None = None
    template: str | None = None
    evidence: str = ""
    seed: int = 0

    def __post_init__(self) -> None:
        if self.answer_type not in ANSWER_TYPES:
            raise ItemGenerationError(
                f"unknown answer type {self.answer_type!r}; expected {ANSWER_TYPES}"
            )
        if self.answer_type == "single" and not isinstance(self.truth, str):
            raise ItemGenerationError("single items need a string truth label")
        if self.answer_type == "multi" and not isinstance(self.truth, frozenset):
            members = [self.truth] if isinstance(self.truth, str) else list(self.truth)
            object.__setattr__(self, "truth", frozenset(members))
        if self.answer_type == "ordered":
            if isinstance(self.truth, (str, frozenset)):
                raise ItemGenerationError("ordered items need a label sequence truth")
            object.__setattr__(self, "truth", tuple(self.truth))


@dataclass(frozen=True)
class BenchItem:
    """One generated item: rendered surface plus the structured option values."""

    item_id: str
    stem: str
    options: Mapping[str, str]  # letter -> rendered text, A..E
    option_values: Mapping[str, Any]  # letter -> structured value, A..D
    answer_key: str
    hard: bool
    traps: tuple[str, ...]
    dimension: str
    sub_dimension: str
    answer_type: str
    anchor: tuple[float, float] | float


# ---------------------------------------------------------------------------
# rendering
# ---------------------------------------------------------------------------


def render_anchor(anchor: tuple[float, float] | float) -> str:
    if isinstance(anchor, (tuple, list)):
        return f"[{anchor[0]:.3f}s, {anchor[1]:.3f}s]"
    return f"{anchor:.3f}s"


def facet_name(sub_id: str) -> str:
    return sub_id.replace("_", " ")


def render_value(value: Any, sub: SubDimension) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, frozenset):
        ordered = sorted(value, key=lambda lab: sub.rank(lab) if lab in sub.labels else -1)
        return "{" + ", ".join(ordered) + "}"
    return ARROW.join(value)


def canonical_value(value: Any) -> Any:
    """Hashable, order-stable form used for option dedup and file storage."""
    if isinstance(value, frozenset):
        return tuple(sorted(value))
    if isinstance(value, (list, tuple)):
        return tuple(value)
    return value


# ---------------------------------------------------------------------------
# neighborhood predicates shared by generation and the hard flag
# ---------------------------------------------------------------------------


def in_neighborhood(option: Any, truth: Any, sub: SubDimension) -> bool:
    """Type-aware membership of an option in the truth's confusion shell.

    Labels: registry distance-1 shell. Sets: differ from the truth by at most
    two atoms with every added atom adjacent to some truth member. Sequences:
    a single-position substitution by an adjacent label.
    """
    if isinstance(truth, str) and isinstance(option, str):
        return option in sub.neighborhood(truth)
    if isinstance(truth, frozenset):
        opt_set = frozenset(option) if not isinstance(option, frozenset) else option
        if opt_set == truth:
            return False
        added = opt_set - truth
        removed = truth - opt_set
        if len(added) + len(removed) > 2:
            return False
        near = set()
        for member in truth:
            near |= sub.neighborhood(member)
        return all(atom in near for atom in added)
    if isinstance(truth, tuple):
        opt_seq = tuple(option)
        if len(opt_seq) != len(truth) or opt_seq == truth:
            return False
        diffs = [p for p in range(len(truth)) if opt_seq[p] != truth[p]]
        if len(diffs) != 1:
            return False
        p = diffs[0]
        return opt_seq[p] in sub.neighborhood(truth[p])
    return False


# ---------------------------------------------------------------------------
# distractor construction
# ---------------------------------------------------------------------------


def _single_distractors(truth: str, sub: SubDimension, rng: StableRng) -> list[str]:
    near = sorted(sub.neighborhood(truth))
    shell = sorted(sub.second_shell(truth) - set(near))
    rest = sorted(set(sub.labels) - {truth} - set(near) - set(shell))
    if len(sub.labels) < 4:
        raise ItemGenerationError(
            f"label space of {sub.id!r} too small for four distinct options"
        )
    if not near:
        raise ItemGenerationError(
            f"label {truth!r} has an empty confusion neighborhood; cannot "
            "satisfy the hard-negative requirement"
        )
    picks = rng.sample(near, min(2, len(near)))
    for pool in (shell, rest, sorted(set(near) - set(picks))):
        while len(picks) < 3 and pool:
            choice = rng.pick(pool)
            pool.remove(choice)
            picks.append(choice)
    if len(picks) < 3:
        raise ItemGenerationError(
            f"could not assemble three distinct distractors for {truth!r}"
        )
    return picks[:3]


def _set_perturbations(
    truth: frozenset[str], sub: SubDimension, rng: StableRng
) -> list[frozenset[str]]:
    """Candidate distractor sets: one insertion, one deletion, one swap, then extras."""
    labels = set(sub.labels)
    near_union = set()
    for member in sorted(truth):
        near_union |= sub.neighborhood(member)
    addable_near = sorted(near_union - truth)
    addable_any = sorted(labels - truth)

    candidates: list[frozenset[str]] = []

    def push(value: frozenset[str]) -> None:
        if value and value != truth and value not in candidates:
            candidates.append(value)

    if addable_near:
        push(truth | {rng.pick(addable_near)})
    elif addable_any:
        push(truth | {rng.pick(addable_any)})
    if len(truth) >= 2:
        push(truth - {rng.pick(sorted(truth))})
    removed = rng.pick(sorted(truth))
    swap_pool = sorted((near_union - truth) or (labels - truth))
    if swap_pool:
        push((truth - {removed}) | {rng.pick(swap_pool)})
    # Extras in deterministic order until the caller has enough choices.
    for atom in addable_near + addable_any:
        push(truth | {atom})
    for member in sorted(truth):
        if len(truth) >= 2:
            push(truth - {member})
        for atom in addable_near + addable_any:
            push((truth - {member}) | {atom})
    return candidates


def _multi_distractors(
    truth: frozenset[str], sub: SubDimension, rng: StableRng
) -> list[frozenset[str]]:
    candidates = _set_perturbations(truth, sub, rng)
    if len(candidates) < 3:
        raise ItemGenerationError(
            f"set perturbations of {sorted(truth)} cannot fill three options"
        )
    picks = candidates[:3]
    if not any(in_neighborhood(c, truth, sub) for c in picks):
        replacement = next(
            (c for c in candidates if in_neighborhood(c, truth, sub)), None
        )
        if replacement is None:
            raise ItemGenerationError(
                f"no confusion-aware set distractor exists for {sorted(truth)}"
            )
        picks[-1] = replacement
    return picks


def _ordered_distractors(
    truth: tuple[str, ...], sub: SubDimension, rng: StableRng
) -> tuple[list[tuple[str, ...]], tuple[str, ...]]:
    """Three sequence distractors covering at least two trap kinds."""
    if len(truth) < 2:
        raise ItemGenerationError("temporal traps need a sequence of length >= 2")
    m = len(truth)
    candidates: list[tuple[str, tuple[str, ...]]] = []

    reversal = tuple(reversed(truth))
    if reversal != truth:
        candidates.append(("reversal", reversal))
    stasis = (truth[0],) * m
    if stasis != truth:
        candidates.append(("stasis", stasis))

    # Neighbor substitution first so at least one distractor sits in the
    # confusion shell; positions rotate deterministically from the seed.
    start = rng.index(m)
    for offset in range(m):
        p = (start + offset) % m
        near = sorted(sub.neighborhood(truth[p]) - {truth[p]})
        shell = sorted(sub.second_shell(truth[p]) - {truth[p]})
        others = sorted(set(sub.labels) - {truth[p]} - set(near) - set(shell))
        for atom in near + shell + others:
            swapped = truth[:p] + (atom,) + truth[p + 1 :]
            candidates.append(("substitution", swapped))

    for p in range(1, m - 1):
        skipped = truth[:p] + truth[p + 1 :] + (truth[-1],)
        if skipped != truth:
            candidates.append(("skip", skipped))

    picks: list[tuple[str, ...]] = []
    kinds: list[str] = []
    for kind, value in candidates:
        if value == truth or value in picks:
            continue
        picks.append(value)
        kinds.append(kind)
        if len(picks) == 3:
            break
    if len(picks) < 3:
        raise ItemGenerationError(
            f"sequence {truth} does not admit three distinct trap distractors"
        )
    if len(set(kinds)) < 2:
        raise ItemGenerationError(
            f"sequence {truth} admits only one trap kind; two are required"
        )
    return picks, tuple(dict.fromkeys(kinds))


# ---------------------------------------------------------------------------
# generation
# ---------------------------------------------------------------------------


def _resolve_sub_dimension(
    cfg: ItemConfig, registry: TaxonomyRegistry
) -> SubDimension:
    dim = registry.dimension(cfg.dimension)
    if cfg.sub_dimension is not None:
        return dim.sub(cfg.sub_dimension)
    atoms = _truth_atoms(cfg.truth)
    hits = [
        sub for sub in dim.sub_dimensions if all(a in sub.labels for a in atoms)
    ]
    if len(hits) == 1:
        return hits[0]
    if hits:
        raise ItemGenerationError(
            f"truth {cfg.truth!r} is ambiguous across sub-dimensions "
            f"{[s.id for s in hits]}; set sub_dimension explicitly"
        )
    return dim.sub_dimensions[0]


def _truth_atoms(truth: Any) -> tuple[str, ...]:
    if isinstance(truth, str):
        return (truth,)
    if isinstance(truth, frozenset):
        return tuple(sorted(truth))
    return tuple(truth)


def _truth_in_space(cfg: ItemConfig, dim_labels: set[str]) -> bool:
    atoms = _truth_atoms(cfg.truth)
    return bool(atoms) and all(a in dim_labels for a in atoms)


def _render_stem(cfg: ItemConfig, sub: SubDimension) -> str:
    template = cfg.template or DEFAULT_TEMPLATES[cfg.answer_type]
    if "{anchor}" not in template:
        raise ItemGenerationError("question template must contain an {anchor} placeholder")
    return template.format(anchor=render_anchor(cfg.anchor), facet=facet_name(sub.id))


def _check_answer_agnostic(stem: str, cfg: ItemConfig, sub: SubDimension) -> None:
    folded = stem.casefold()
    for atom in _truth_atoms(cfg.truth):
        if atom.casefold() in folded:
            raise ItemGenerationError(
                f"stem leaks the truth label {atom!r}; fix the template"
            )
    if cfg.evidence and cfg.evidence.casefold() in folded:
        raise ItemGenerationError("stem leaks the evidence text; fix the template")
    for label in sub.labels:
        if label.casefold() in folded:
            raise ItemGenerationError(
                f"stem contains the canonical label {label!r} of the queried "
                "sub-dimension; fix the template"
            )


def _filler_values(
    cfg: ItemConfig, sub: SubDimension, rng: StableRng, count: int
) -> list[Any]:
    """In-vocabulary values of the right shape for legality-fallback options."""
    labels = sorted(sub.labels)
    if cfg.answer_type == "single":
        if len(labels) < count:
            raise ItemGenerationError(
                f"label space of {sub.id!r} too small for four distinct options"
            )
        return rng.sample(labels, count)
    if cfg.answer_type == "multi":
        values: list[frozenset[str]] = []
        size = min(2, len(labels))
        guard = 0
        while len(values) < count:
            pick = frozenset(rng.sample(labels, size))
            if pick not in values:
                values.append(pick)
            guard += 1
            if guard > 200:
                raise ItemGenerationError(
                    f"label space of {sub.id!r} too small for distinct set options"
                )
        return values
    length = max(2, len(_truth_atoms(cfg.truth)) or 2)
    values = []
    guard = 0
    while len(values) < count:
        seq = tuple(rng.pick(labels) for _ in range(length))
        if seq not in values:
            values.append(seq)
        guard += 1
        if guard > 200:
            raise ItemGenerationError(
                f"label space of {sub.id!r} too small for distinct sequence options"
            )
    return values


def generate_item(cfg: ItemConfig, registry: TaxonomyRegistry) -> BenchItem:
    """Produce one item; deterministic in (cfg, cfg.seed).

    Out-of-space truths fall back to answer E with in-vocabulary filler
    options; in-space truths are placed uniformly at random among A-D with
    confusion-aware distractors (and temporal traps for ordered items).
    """
    dim = registry.dimension(cfg.dimension)
    sub = _resolve_sub_dimension(cfg, registry)
    rng = StableRng(cfg.seed)
    stem = _render_stem(cfg, sub)
    _check_answer_agnostic(stem, cfg, sub)

    dim_labels = {lab for s in dim.sub_dimensions for lab in s.labels}
    traps: tuple[str, ...] = ()

    if not _truth_in_space(cfg, dim_labels):
        values = _filler_values(cfg, sub, rng, 4)
        answer_key = "E"
        hard = False
    else:
        missing = [a for a in _truth_atoms(cfg.truth) if a not in sub.labels]
        if missing:
            raise ItemGenerationError(
                f"truth atoms {missing} are not in sub-dimension {sub.id!r}; "
                "set sub_dimension to the one that owns them"
            )
        if cfg.answer_type == "single":
            distractors: list[Any] = _single_distractors(cfg.truth, sub, rng)
        elif cfg.answer_type == "multi":
            distractors = _multi_distractors(cfg.truth, sub, rng)  # type: ignore[arg-type]
        else:
            distractors, traps = _ordered_distractors(cfg.truth, sub, rng)  # type: ignore[arg-type]
        position = rng.index(4)
        values = list(distractors)
        values.insert(position, cfg.truth)
        answer_key = LETTERS[position]
        hard = all(in_neighborhood(d, cfg.truth, sub) for d in distractors)

    options = {
        letter: render_value(value, sub) for letter, value in zip(LETTERS, values)
    }
    options["E"] = OPTION_E_TEXT
    option_values = {
        letter: canonical_value(value) for letter, value in zip(LETTERS, values)
    }
    return BenchItem(
        item_id=cfg.task_id,
        stem=stem,
        options=options,
        option_values=option_values,
        answer_key=answer_key,
        hard=hard,
        traps=traps,
        dimension=cfg.dimension,
        sub_dimension=sub.id,
        answer_type=cfg.answer_type,
        anchor=cfg.anchor,
    )


# ---------------------------------------------------------------------------
# independent verification (I1-I7)
# ---------------------------------------------------------------------------


def verify_item(
    item: BenchItem, cfg: ItemConfig, registry: TaxonomyRegistry
) -> list[str]:
    """Re-check the generation invariants from scratch; empty list means clean.

    Deliberately avoids the generator's own helpers for the match and trap
    predicates so a generator defect cannot vouch for itself.
    """
    from .scoring import match  # second implementation of the match predicate

    violations: list[str] = []
    dim = registry.dimension(item.dimension)
    sub = dim.sub(item.sub_dimension)
    dim_labels = {lab for s in dim.sub_dimensions for lab in s.labels}
    truth = canonical_value(cfg.truth)
    fallback = item.answer_key == "E"

    # I1: label atomicity over every option value.
    for letter in LETTERS:
        value = item.option_values.get(letter)
        for atom in _value_atoms(value):
            if atom not in dim_labels:
                violations.append(
                    f"I1: option {letter} contains non-canonical atom {atom!r}"
                )

    # I2: format homogeneity plus the fixed abstain option.
    for letter in LETTERS:
        value = item.option_values.get(letter)
        if item.answer_type == "single" and not isinstance(value, str):
            violations.append(f"I2: option {letter} is not an atomic label")
        if item.answer_type in ("multi", "ordered") and not isinstance(value, tuple):
            violations.append(f"I2: option {letter} is not a {item.answer_type} value")
    if item.options.get("E") != OPTION_E_TEXT:
        violations.append("I2: option E must be the fixed abstain text")
    if len({json.dumps(canonical_value(item.option_values.get(x)), ensure_ascii=False) for x in LETTERS}) != 4:
        violations.append("I2: options A-D must be pairwise distinct")

    # I3 / I7: unique correct answer, or the legality fallback.
    truth_in_space = all(a in dim_labels for a in _value_atoms(truth))
    matches = [
        letter
        for letter in LETTERS
        if match(item.option_values.get(letter), truth, item.answer_type)
    ]
    if fallback:
        if truth_in_space:
            violations.append("I7: fallback answer E although the truth is in-space")
        if matches:
            violations.append("I3: fallback item has an option matching the truth")
    else:
        if not truth_in_space:
            violations.append("I7: truth outside the label space must map to E")
        if len(matches) != 1:
            violations.append(
                f"I3: expected exactly one matching option, found {matches}"
            )
        elif matches[0] != item.answer_key:
            violations.append(
                f"I3: answer key {item.answer_key} but match at {matches[0]}"
            )

    # I4: at least one distractor inside the confusion neighborhood.
    if not fallback:
        distractors = [
            item.option_values.get(letter)
            for letter in LETTERS
            if letter != item.answer_key
        ]
        in_shell = [
            _verifier_in_shell(d, truth, item.answer_type, sub) for d in distractors
        ]
        if not any(in_shell):
            violations.append("I4: no distractor lies in the confusion neighborhood")

        # Hard flag must equal the all-distractors-in-shell recomputation.
        if item.hard != all(in_shell):
            violations.append(
                f"hard flag {item.hard} disagrees with recomputation {all(in_shell)}"
            )

        # I5: ordered items exhibit at least two distinct trap kinds.
        if item.answer_type == "ordered":
            kinds = set()
            for d in distractors:
                kinds |= _detect_traps(tuple(d), tuple(truth))
            if len(kinds) < 2:
                violations.append(f"I5: only trap kinds {sorted(kinds)} present")

    # I6: answer-agnostic surface.
    folded = item.stem.casefold()
    for atom in _value_atoms(truth):
        if atom.casefold() in folded:
            violations.append(f"I6: stem contains the truth label {atom!r}")
    if cfg.evidence and cfg.evidence.casefold() in folded:
        violations.append("I6: stem contains the evidence text")

    return violations


def _value_atoms(value: Any) -> tuple[str, ...]:
    if value is None:
        return ()
    if isinstance(value, str):
        return (value,)
    return tuple(value)


def _verifier_adjacent(sub: SubDimension, a: str, b: str) -> bool:
    """Adjacency recomputed from the raw config data, not the cached shells."""
    if a == b or a not in sub.labels or b not in sub.labels:
        return False
    if sub.kind == "ordinal":
        return abs(sub.labels.index(a) - sub.labels.index(b)) == 1
    return (a, b) in sub.confusion_edges or (b, a) in sub.confusion_edges


def _verifier_in_shell(
    option: Any, truth: Any, answer_type: str, sub: SubDimension
) -> bool:
    if option is None:
        return False
    if answer_type == "single":
        return isinstance(option, str) and isinstance(truth, str) and _verifier_adjacent(
            sub, option, truth
        )
    if answer_type == "multi":
        opt, tru = frozenset(option), frozenset(truth)
        if opt == tru:
            return False
        added, removed = opt - tru, tru - opt
        if len(added) + len(removed) > 2:
            return False
        return all(
            any(_verifier_adjacent(sub, atom, member) for member in tru)
            for atom in added
        )
    opt_seq, tru_seq = tuple(option), tuple(truth)
    if len(opt_seq) != len(tru_seq) or opt_seq == tru_seq:
        return False
    diffs = [p for p in range(len(tru_seq)) if opt_seq[p] != tru_seq[p]]
    if len(diffs) != 1:
        return False
    p = diffs[0]
    return _verifier_adjacent(sub, opt_seq[p], tru_seq[p])


def _detect_traps(option: tuple[str, ...], truth: tuple[str, ...]) -> set[str]:
    """Structural trap detection, independent of generation bookkeeping."""
    kinds: set[str] = set()
    if option == truth:
        return kinds
    if option == tuple(reversed(truth)):
        kinds.add("reversal")
    if len(set(option)) == 1:
        kinds.add("stasis")
    if len(option) == len(truth):
        diffs = [p for p in range(len(truth)) if option[p] != truth[p]]
        if len(diffs) == 1:
            kinds.add("substitution")
        for p in range(1, len(truth) - 1):
            if option == truth[:p] + truth[p + 1 :] + (truth[-1],):
                kinds.add("skip")
                break
    return kinds


# ---------------------------------------------------------------------------
# suite generation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PlanEntry:
    dimension: str
    answer_type: str
    count: int
    sub_dimension: str | None = None
    template: str | None = None
    anchor_kind: str = "interval"  # or "timestamp"


def load_plan(source: str | Path | Mapping) -> list[PlanEntry]:
    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8") as fh:
            raw = yaml.safe_load(fh)
    else:
        raw = source
    if not isinstance(raw, Mapping) or not isinstance(raw.get("entries"), list):
        raise PlanError("plan must be a mapping with an 'entries' list")
    entries_raw = raw["entries"]
    if not entries_raw:
        raise PlanError("plan has no entries")
    entries = []
    for entry in entries_raw:
        entries.append(
            PlanEntry(
                dimension=entry["dimension"],
                answer_type=entry.get("answer_type", "single"),
                count=int(entry.get("count", 0)),
                sub_dimension=entry.get("sub_dimension"),
                template=entry.get("template"),
                anchor_kind=entry.get("anchor_kind", "interval"),
            )
        )
    return entries


def generate_suite(
    docs: Sequence[StructuralDocument],
    plan: Sequence[PlanEntry],
    registry: TaxonomyRegistry,
    seed: int,
) -> tuple[list[tuple[BenchItem, ItemConfig]], dict[str, Any]]:
    """Deterministic item list plus manifest for a per-dimension task plan.

    Item sub-seeds derive from (seed, task_id), so the per-item streams are
    independent of generation order. Infeasible items (e.g. a document that
    never labels the requested slot) are skipped and recorded.
    """
    if not plan:
        raise PlanError("plan has no entries")
    if not docs:
        raise PlanError("suite generation needs at least one document")
    for entry in plan:
        registry.dimension(entry.dimension)  # raises on unknown ids

    generated: list[tuple[BenchItem, ItemConfig]] = []
    skipped: list[dict[str, str]] = []
    for entry in plan:
        dim = registry.dimension(entry.dimension)
        for k in range(entry.count):
            sub_part = entry.sub_dimension or "auto"
            task_id = f"{entry.dimension}.{sub_part}.{entry.answer_type}.{k:04d}"
            item_seed = derive_seed(seed, task_id)
            rng = StableRng(item_seed)
            try:
                cfg = _config_from_documents(entry, dim, docs, task_id, item_seed, rng)
                item = generate_item(cfg, registry)
            except ItemGenerationError as exc:
                skipped.append({"task_id": task_id, "reason": str(exc)})
                continue
            generated.append((item, cfg))

    manifest = build_manifest(generated, skipped, seed, registry)
    return generated, manifest


def _config_from_documents(
    entry: PlanEntry,
    dim,
    docs: Sequence[StructuralDocument],
    task_id: str,
    item_seed: int,
    rng: StableRng,
) -> ItemConfig:
    doc = docs[rng.index(len(docs))]
    if entry.sub_dimension is not None:
        sub = dim.sub(entry.sub_dimension)
    elif entry.answer_type == "multi":
        multi_subs = [s for s in dim.sub_dimensions if s.multi_valued]
        sub = rng.pick(multi_subs or list(dim.sub_dimensions))
    else:
        sub = rng.pick(list(dim.sub_dimensions))

    if entry.answer_type == "ordered":
        return _ordered_config(entry, dim, sub, doc, task_id, item_seed, rng)

    carriers = [
        i for i in range(doc.n_shots) if doc.labels[i].value(dim.id, sub.id) is not None
    ]
    if not carriers:
        raise ItemGenerationError(
            f"no shot in the chosen document labels {dim.id}.{sub.id}"
        )
    shot_idx = carriers[rng.index(len(carriers))]
    value = doc.labels[shot_idx].value(dim.id, sub.id)
    if entry.answer_type == "single":
        truth: Any = (
            sorted(value)[rng.index(len(value))] if isinstance(value, frozenset) else value
        )
    else:
        truth = value if isinstance(value, frozenset) else frozenset([value])
    shot = doc.shots[shot_idx]
    anchor: tuple[float, float] | float
    if entry.anchor_kind == "timestamp":
        anchor = shot.start_s
    else:
        anchor = (shot.start_s, shot.end_s)
    return ItemConfig(
        task_id=task_id,
        dimension=dim.id,
        sub_dimension=sub.id,
        answer_type=entry.answer_type,
        truth=truth,
        anchor=anchor,
        template=entry.template,
        evidence=doc.evidence[shot_idx].get(dim.id, ""),
        seed=item_seed,
    )


def _ordered_config(
    entry: PlanEntry,
    dim,
    sub,
    doc: StructuralDocument,
    task_id: str,
    item_seed: int,
    rng: StableRng,
) -> ItemConfig:
    window = 3 if doc.n_shots >= 3 else 2
    if doc.n_shots < 2:
        raise ItemGenerationError("ordered items need at least two shots")
    starts = list(range(doc.n_shots - window + 1))
    offset = rng.index(len(starts))
    rotation = starts[offset:] + starts[:offset]
    for start in rotation:
        seq = []
        for i in range(start, start + window):
            value = doc.labels[i].value(dim.id, sub.id)
            if value is None:
                seq = []
                break
            atom = sorted(value)[rng.index(len(value))] if isinstance(value, frozenset) else value
            seq.append(atom)
        if seq and len(set(seq)) >= 2:
            anchor = (doc.shots[start].start_s, doc.shots[start + window - 1].end_s)
            return ItemConfig(
                task_id=task_id,
                dimension=dim.id,
                sub_dimension=sub.id,
                answer_type="ordered",
                truth=tuple(seq),
                anchor=anchor,
                template=entry.template,
                evidence=doc.evidence[start].get(dim.id, ""),
                seed=item_seed,
            )
    raise ItemGenerationError(
        f"document has no non-constant {dim.id}.{sub.id} window of length {window}"
    )


def build_manifest(
    generated: Sequence[tuple[BenchItem, ItemConfig]],
    skipped: Sequence[Mapping[str, str]],
    seed: int,
    registry: TaxonomyRegistry,
) -> dict[str, Any]:
    per_dimension: dict[str, int] = {}
    per_answer_type: dict[str, int] = {}
    hard_count = 0
    for item, _cfg in generated:
        per_dimension[item.dimension] = per_dimension.get(item.dimension, 0) + 1
        per_answer_type[item.answer_type] = per_answer_type.get(item.answer_type, 0) + 1
        hard_count += 1 if item.hard else 0
    return {
        "seed": seed,
        "registry_version": registry.version,
        "n_items": len(generated),
        "per_dimension": dict(sorted(per_dimension.items())),
        "per_answer_type": dict(sorted(per_answer_type.items())),
        "hard_count": hard_count,
        "skipped": list(skipped),
    }


# ---------------------------------------------------------------------------
# suite files
# ---------------------------------------------------------------------------


def item_to_dict(item: BenchItem, cfg: ItemConfig) -> dict[str, Any]:
    return {
        "item_id": item.item_id,
        "stem": item.stem,
        "options": dict(item.options),
        "option_values": {k: canonical_value(v) for k, v in item.option_values.items()},
        "answer_key": item.answer_key,
        "hard": item.hard,
        "traps": list(item.traps),
        "dimension": item.dimension,
        "sub_dimension": item.sub_dimension,
        "answer_type": item.answer_type,
        "anchor": list(item.anchor) if isinstance(item.anchor, tuple) else item.anchor,
        "config": {
            "task_id": cfg.task_id,
            "dimension": cfg.dimension,
            "sub_dimension": cfg.sub_dimension,
            "answer_type": cfg.answer_type,
            "truth": canonical_value(cfg.truth),
            "anchor": list(cfg.anchor) if isinstance(cfg.anchor, tuple) else cfg.anchor,
            "template": cfg.template,
            "evidence": cfg.evidence,
            "seed": cfg.seed,
        },
    }


def item_from_dict(raw: Mapping[str, Any]) -> tuple[BenchItem, ItemConfig]:
    cfg_raw = raw["config"]
    answer_type = raw["answer_type"]
    truth_raw = cfg_raw["truth"]
    if answer_type == "multi":
        truth: Any = frozenset(truth_raw)
    elif answer_type == "ordered":
        truth = tuple(truth_raw)
    else:
        truth = truth_raw
    to_anchor = lambda a: tuple(a) if isinstance(a, list) else a  # noqa: E731
    option_values = {
        k: tuple(v) if isinstance(v, list) else v
        for k, v in raw["option_values"].items()
    }
    cfg = ItemConfig(
        task_id=cfg_raw["task_id"],
        dimension=cfg_raw["dimension"],
        sub_dimension=cfg_raw.get("sub_dimension"),
        answer_type=answer_type,
        truth=truth,
        anchor=to_anchor(cfg_raw["anchor"]),
        template=cfg_raw.get("template"),
        evidence=cfg_raw.get("evidence", ""),
        seed=cfg_raw.get("seed", 0),
    )
    item = BenchItem(
        item_id=raw["item_id"],
        stem=raw["stem"],
        options=dict(raw["options"]),
        option_values=option_values,
        answer_key=raw["answer_key"],
        hard=bool(raw["hard"]),
        traps=tuple(raw.get("traps", [])),
        dimension=raw["dimension"],
        sub_dimension=raw["sub_dimension"],
        answer_type=answer_type,
        anchor=to_anchor(raw["anchor"]),
    )
    return item, cfg


def suite_to_json(
    generated: Sequence[tuple[BenchItem, ItemConfig]], manifest: Mapping[str, Any]
) -> str:
    payload = {
        "manifest": dict(manifest),
        "items": [item_to_dict(item, cfg) for item, cfg in generated],
    }
    return json.dumps(payload, ensure_ascii=False, indent=2, sort_keys=True)


def load_suite(path: str | Path) -> tuple[list[tuple[BenchItem, ItemConfig]], dict]:
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    items = [item_from_dict(raw) for raw in payload["items"]]
    return items, payload.get("manifest", {})
