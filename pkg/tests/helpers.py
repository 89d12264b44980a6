from __future__ import annotations

import random

from sv6d.document import (
    SemanticShot,
    ShotLabelVector,
    StructuralDocument,
    VideoMeta,
)
from sv6d.taxonomy import DIMENSION_IDS, TaxonomyRegistry, load_registry


def make_toy_registry(sub_size: int = 5) -> TaxonomyRegistry:
    """Six dimensions, one ordinal sub-dimension each, equal label counts.

    Handy when a test needs exact arithmetic: with uniform weights every
    per-dimension distance is a multiple of 1/(sub_size - 1).
    """
    dims = []
    for dim_id in DIMENSION_IDS:
        dims.append(
            {
                "id": dim_id,
                "sub_dimensions": [
                    {
                        "id": f"{dim_id}_level",
                        "kind": "ordinal",
                        "labels": [f"{dim_id} level {i}" for i in range(sub_size)],
                    }
                ],
            }
        )
    return load_registry(
        {
            "version": "toy-1",
            "dimensions": dims,
            "skeleton_taxonomies": {
                "dramatic_arc": [
                    "exposition",
                    "rising action",
                    "climax",
                    "falling action",
                    "dénouement",
                    "other",
                ]
            },
        }
    )


def random_partition(rng: random.Random, n_shots: int) -> list[SemanticShot]:
    """Gap-free partition of [0, T] with millisecond-precision boundaries."""
    boundaries = [0.0]
    for _ in range(n_shots):
        boundaries.append(round(boundaries[-1] + rng.uniform(0.2, 9.0), 3))
    return [
        SemanticShot(start_s=boundaries[i], end_s=boundaries[i + 1])
        for i in range(n_shots)
    ]


def random_vector(rng: random.Random, registry: TaxonomyRegistry) -> ShotLabelVector:
    """Every dimension present with at least one sub-dimension labelled."""
    dims: dict[str, dict[str, str | frozenset[str]]] = {}
    for dim in registry.dimensions:
        subs = list(dim.sub_dimensions)
        n_slots = rng.randint(1, len(subs))
        chosen = rng.sample(subs, n_slots)
        slots: dict[str, str | frozenset[str]] = {}
        for sub in chosen:
            if sub.multi_valued:
                size = rng.randint(1, min(3, len(sub.labels)))
                slots[sub.id] = frozenset(rng.sample(list(sub.labels), size))
            else:
                slots[sub.id] = rng.choice(list(sub.labels))
        dims[dim.id] = slots
    # Steer clear of the config-declared invalid subject pairings so random
    # documents stay fully valid.
    framing = dims.get("subject", {}).get("framing")
    config = dims.get("subject", {}).get("configuration")
    if isinstance(framing, str) and isinstance(config, str):
        if (framing, config) in registry.subject_invalid_combinations:
            dims["subject"]["framing"] = "subjective POV"
    return ShotLabelVector(dims=dims)


def random_item_config(rng: random.Random, registry: TaxonomyRegistry, task_id: str):
    """Randomized generation recipe; ~6% of truths fall outside the label space."""
    from sv6d.benchgen import ItemConfig

    dim = rng.choice(list(registry.dimensions))
    sub = rng.choice(list(dim.sub_dimensions))
    labels = list(sub.labels)
    answer_type = rng.choice(["single", "multi", "ordered"])
    out_of_space = rng.random() < 0.06
    bogus = f"__uncataloged tag {rng.randint(0, 99)}__"

    if answer_type == "single":
        truth = bogus if out_of_space else rng.choice(labels)
    elif answer_type == "multi":
        size = rng.randint(1, max(1, min(3, len(labels) - 1)))
        members = set(rng.sample(labels, size))
        if out_of_space:
            members.add(bogus)
        truth = frozenset(members)
    else:
        m = rng.choice([2, 3])
        seq = [rng.choice(labels) for _ in range(m)]
        if len(set(seq)) == 1 and len(labels) > 1:
            others = [lab for lab in labels if lab != seq[0]]
            seq[-1] = rng.choice(others)
        if out_of_space:
            seq[rng.randrange(m)] = bogus
        truth = tuple(seq)

    if rng.random() < 0.2:
        anchor: tuple[float, float] | float = round(rng.uniform(0, 50), 3)
    else:
        start = round(rng.uniform(0, 40), 3)
        anchor = (start, round(start + rng.uniform(0.5, 10), 3))
    return ItemConfig(
        task_id=task_id,
        dimension=dim.id,
        sub_dimension=sub.id,
        answer_type=answer_type,
        truth=truth,
        anchor=anchor,
        evidence=rng.choice(["", "", "visible overlay text confirms the tag"]),
        seed=rng.randrange(2**32),
    )


def random_document(
    rng: random.Random,
    registry: TaxonomyRegistry,
    n_shots: int | None = None,
) -> StructuralDocument:
    n = n_shots if n_shots is not None else rng.randint(1, 20)
    shots = random_partition(rng, n)
    arc = list(registry.skeleton_labels("dramatic_arc"))
    return StructuralDocument(
        meta=VideoMeta(duration_s=shots[-1].end_s),
        skeleton_taxonomy="dramatic_arc",
        shots=tuple(shots),
        labels=tuple(random_vector(rng, registry) for _ in range(n)),
        skeleton_labels=tuple(rng.choice(arc) for _ in range(n)),
    )
