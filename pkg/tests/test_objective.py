from __future__ import annotations

import json
import random
from functools import lru_cache

import pytest

from sv6d.alignment import AlignmentConfig, ConfigError, align
from sv6d.document import ShotLabelVector, document_to_dict, dumps_document
from sv6d.objective import (
    RegularizerConfig,
    TaskInputError,
    aggregate_label_distance,
    edit_distance,
    edit_similarity,
    inspect_document_text,
    regularize,
    structural_loss,
    sv6d_loss,
    task_reward,
)

from helpers import random_document
from test_alignment import toy_doc


# ---------------------------------------------------------------------------
# aggregate label distance
# ---------------------------------------------------------------------------


def level_vector(toy_registry, level, skip=()):  # one slot per dimension
    dims = {}
    for dim in toy_registry.dimensions:
        if dim.id in skip:
            continue
        sub = dim.sub_dimensions[0]
        dims[dim.id] = {sub.id: sub.labels[level]}
    return ShotLabelVector(dims=dims)


def test_identity_distance_is_zero(toy_registry):
    vec = level_vector(toy_registry, 2)
    assert aggregate_label_distance(vec, vec, AlignmentConfig(), toy_registry) == 0.0


def test_maximal_distance_is_one(toy_registry):
    a = level_vector(toy_registry, 0)
    b = level_vector(toy_registry, 4)
    value = aggregate_label_distance(a, b, AlignmentConfig(), toy_registry)
    assert value == pytest.approx(1.0, abs=1e-15)


def test_single_dimension_half_distance(toy_registry):
    # Only the editing dimension differs, at rank distance 2 of 4 => d = 0.5;
    # uniform weights give 0.5 / 6.
    a = level_vector(toy_registry, 1)
    dims = dict(a.dims)
    sub = toy_registry.dimension("editing").sub_dimensions[0]
    dims["editing"] = {sub.id: sub.labels[3]}
    b = ShotLabelVector(dims=dims)
    value = aggregate_label_distance(a, b, AlignmentConfig(), toy_registry)
    assert value == pytest.approx(0.5 / 6.0, abs=1e-12)


def test_sub_dimension_absent_from_one_side_counts_as_one(toy_registry):
    a = level_vector(toy_registry, 2)
    b = level_vector(toy_registry, 2, skip=("narrative",))
    value = aggregate_label_distance(a, b, AlignmentConfig(), toy_registry)
    assert value == pytest.approx(1.0 / 6.0, abs=1e-12)


def test_multi_valued_uses_jaccard(registry):
    a = ShotLabelVector(dims={"aesthetics": {"composition": frozenset({"centered"})}})
    b = ShotLabelVector(
        dims={"aesthetics": {"composition": frozenset({"centered", "symmetrical"})}}
    )
    value = aggregate_label_distance(a, b, AlignmentConfig(), registry)
    # Jaccard distance 0.5 on one of nine aesthetics slots, weight 1/6.
    assert value == pytest.approx((1.0 / 6.0) * (0.5 / 9.0), abs=1e-12)


# ---------------------------------------------------------------------------
# structural loss
# ---------------------------------------------------------------------------


def test_structural_loss_zero_for_identical(toy_registry):
    doc = toy_doc([(0.0, 5.0), (5.0, 10.0)], [1, 3], toy_registry)
    result = align(doc, doc, AlignmentConfig(), toy_registry)
    assert structural_loss(result, doc, doc, AlignmentConfig(), toy_registry) == 0.0


def test_structural_loss_maximal_single_pair(toy_registry):
    pred = toy_doc([(0.0, 5.0)], [0], toy_registry)
    truth = toy_doc([(0.0, 5.0)], [4], toy_registry)
    result = align(pred, truth, AlignmentConfig(), toy_registry)
    value = structural_loss(result, pred, truth, AlignmentConfig(), toy_registry)
    assert value == pytest.approx(1.0, abs=1e-15)


def test_structural_loss_two_pair_double_sum(toy_registry):
    # Hand evaluation: pair 1 differs by rank 1 (0.25) on every dimension,
    # pair 2 is exact, so every dimension's mean is 0.125 and the weighted
    # sum collapses to 0.125.
    pred = toy_doc([(0.0, 5.0), (5.0, 10.0)], [2, 3], toy_registry)
    truth = toy_doc([(0.0, 5.0), (5.0, 10.0)], [1, 3], toy_registry)
    result = align(pred, truth, AlignmentConfig(), toy_registry)
    expected = sum((1.0 / 6.0) * ((0.25 + 0.0) / 2.0) for _ in range(6))
    value = structural_loss(result, pred, truth, AlignmentConfig(), toy_registry)
    assert value == pytest.approx(expected, abs=1e-12)


def test_structural_loss_empty_matching_is_one(toy_registry):
    pred = toy_doc([(0.0, 5.0)], [0], toy_registry)
    truth = toy_doc([(0.0, 5.0)], [0], toy_registry)
    assert structural_loss([], pred, truth, AlignmentConfig(), toy_registry) == 1.0


def test_structural_loss_pair_order_invariant(toy_registry):
    pred = toy_doc([(0.0, 5.0), (5.0, 10.0), (10.0, 12.0)], [0, 2, 4], toy_registry)
    truth = toy_doc([(0.0, 5.0), (5.0, 10.0), (10.0, 12.0)], [1, 2, 3], toy_registry)
    pairs = [(0, 0), (1, 1), (2, 2)]
    base = structural_loss(pairs, pred, truth, AlignmentConfig(), toy_registry)
    for order in ([(2, 2), (0, 0), (1, 1)], [(1, 1), (2, 2), (0, 0)]):
        assert structural_loss(order, pred, truth, AlignmentConfig(), toy_registry) == base


def test_corrupting_one_label_never_decreases_loss(toy_registry):
    rng = random.Random(8)
    cfg = AlignmentConfig()
    for _ in range(50):
        levels = [rng.randint(0, 4) for _ in range(3)]
        truth = toy_doc([(0.0, 2.0), (2.0, 4.0), (4.0, 6.0)], levels, toy_registry)
        base_result = align(truth, truth, cfg, toy_registry)
        base = structural_loss(base_result, truth, truth, cfg, toy_registry)
        # Corrupt one matched label to its farthest alternative.
        shot = rng.randrange(3)
        dim = rng.choice(list(toy_registry.dimensions))
        sub = dim.sub_dimensions[0]
        farthest = max(sub.labels, key=lambda lab: sub.distance(lab, sub.labels[levels[shot]]))
        dims = {d: dict(s) for d, s in truth.labels[shot].dims.items()}
        dims[dim.id][sub.id] = farthest
        corrupted_labels = list(truth.labels)
        corrupted_labels[shot] = ShotLabelVector(dims=dims)
        corrupted = toy_doc([(0.0, 2.0), (2.0, 4.0), (4.0, 6.0)], levels, toy_registry)
        object.__setattr__(corrupted, "labels", tuple(corrupted_labels))
        value = structural_loss(
            [(0, 0), (1, 1), (2, 2)], corrupted, truth, cfg, toy_registry
        )
        assert value >= base - 1e-15


# ---------------------------------------------------------------------------
# regularizers
# ---------------------------------------------------------------------------


def complete_doc_text(registry, rng_seed=4242):
    rng = random.Random(rng_seed)
    doc = random_document(rng, registry, n_shots=3)
    return dumps_document(doc), doc


def test_clean_parse_scores_zero(registry):
    text, _doc = complete_doc_text(registry)
    reg = regularize(text, None, registry, RegularizerConfig())
    assert tuple(reg) == (0.0, 0.0, 0.0, 0.0)


def test_omitting_one_dimension_gives_exactly_one_sixth(registry):
    text, _doc = complete_doc_text(registry)
    payload = json.loads(text)
    for shot in payload["shots"]:
        shot["labels"].pop("editing", None)
    reg = regularize(json.dumps(payload), None, registry, RegularizerConfig())
    assert reg.r_comp == 1.0 / 6.0


def test_out_of_vocabulary_label_increments_r_prof(registry):
    text, _doc = complete_doc_text(registry)
    payload = json.loads(text)
    payload["shots"][0]["labels"]["camera_language"]["shot_size"] = "medium close"
    n_labels = sum(
        len(v) if isinstance(v, list) else 1
        for shot in payload["shots"]
        for subs in shot["labels"].values()
        for v in subs.values()
    )
    reg = regularize(json.dumps(payload), None, registry, RegularizerConfig())
    assert reg.r_prof == pytest.approx(1.0 / n_labels, abs=1e-15)
    assert reg.r_prof > 0.0


def test_vocabulary_match_is_case_and_whitespace_insensitive(registry):
    text, _doc = complete_doc_text(registry)
    payload = json.loads(text)
    payload["shots"][0]["labels"]["camera_language"]["shot_size"] = "  Medium   Shot "
    reg = regularize(json.dumps(payload), None, registry, RegularizerConfig())
    assert reg.r_prof == 0.0


def test_unparseable_output_takes_worst_case(registry):
    reg = regularize("definitely { not json", None, registry, RegularizerConfig())
    assert tuple(reg)[:3] == (1.0, 1.0, 1.0)
    assert reg.l_reg == pytest.approx(1.0, abs=1e-15)


def test_format_checklist_counts_violations(registry):
    payload = {
        "meta": {"duration_s": "ten"},  # numeric_fields
        "skeleton_taxonomy": "dramatic_arc",
        "shots": [
            {
                "start_s": -1.0,  # timestamps_nonnegative
                "end_s": -0.5,
                "labels": {"camera_language": {"shot_size": "medium shot"}},
                "skeleton": "other",
            },
            {
                "start_s": 5.0,
                "end_s": 2.0,  # start_before_end
                "labels": {"camera_language": {"shot_size": "close-up"}},
                "skeleton": "other",
            },
        ],
    }
    inspection = inspect_document_text(json.dumps(payload))
    assert set(inspection.violated) == {
        "timestamps_nonnegative",
        "start_before_end",
        "numeric_fields",
    }
    assert inspection.r_form == pytest.approx(3.0 / 6.0, abs=1e-15)


def test_regularizer_config_bounds():
    with pytest.raises(ConfigError):
        RegularizerConfig(lambda_p=-0.1)
    with pytest.raises(ConfigError):
        RegularizerConfig(lambda_p=0.0, lambda_c=0.0, lambda_f=0.0)


# ---------------------------------------------------------------------------
# composite loss
# ---------------------------------------------------------------------------


def test_self_loss_is_zero_and_reward_one(registry):
    rng = random.Random(2)
    for _ in range(20):
        doc = random_document(rng, registry)
        breakdown = sv6d_loss(dumps_document(doc), doc, registry)
        assert breakdown.l_sv6d == 0.0
        assert breakdown.reward == 1.0


def test_unparseable_prediction_is_worst_case(toy_registry):
    truth = toy_doc([(0.0, 2.0), (2.0, 4.0), (4.0, 6.0)], [0, 1, 2], toy_registry)
    breakdown = sv6d_loss(
        "not a structural document",
        truth,
        toy_registry,
        AlignmentConfig(beta=0.5),
        RegularizerConfig(),
    )
    assert breakdown.l_align == pytest.approx(1.5, abs=1e-15)
    assert breakdown.l_struct == 1.0
    assert breakdown.l_reg == pytest.approx(1.0, abs=1e-15)
    assert breakdown.normalized_loss == pytest.approx(1.0, abs=1e-12)
    assert breakdown.reward == pytest.approx(0.0, abs=1e-12)


def test_mixed_fixture_matches_hand_computation(toy_registry):
    # Truth: two shots, every dimension at levels 1 then 3.
    truth = toy_doc([(0.0, 5.0), (5.0, 10.0)], [1, 3], toy_registry)

    # Prediction: perfect shots; editing off by one rank on the first shot;
    # dissemination omitted everywhere; one label under an unknown slot.
    payload = document_to_dict(truth)
    for shot in payload["shots"]:
        shot["labels"].pop("dissemination")
    payload["shots"][0]["labels"]["editing"]["editing_level"] = "editing level 2"
    payload["shots"][0]["labels"]["editing"]["bogus_slot"] = "weird tag"
    pred_text = json.dumps(payload)

    breakdown = sv6d_loss(
        pred_text, truth, toy_registry, AlignmentConfig(beta=0.5), RegularizerConfig()
    )

    # Hand arithmetic, kept deliberately explicit.
    d_editing_pair1 = abs(2 - 1) / 4.0
    l_struct = (1 / 6) * ((d_editing_pair1 + 0.0) / 2.0) + (1 / 6) * ((1.0 + 1.0) / 2.0)
    n_predicted_labels = 11  # 5 + 1 bogus on shot 1, 5 on shot 2
    r_prof = 1.0 / n_predicted_labels
    r_comp = 1.0 / 6.0
    l_reg = (1 / 3) * r_prof + (1 / 3) * r_comp
    l_align = 0.0
    expected_raw = l_align + l_struct + l_reg
    expected_norm = (l_align / 1.5 + l_struct + l_reg / 1.0) / 3.0

    assert breakdown.l_align == pytest.approx(l_align, abs=1e-12)
    assert breakdown.l_struct == pytest.approx(l_struct, abs=1e-12)
    assert breakdown.l_reg == pytest.approx(l_reg, abs=1e-12)
    assert breakdown.l_sv6d == pytest.approx(expected_raw, abs=1e-12)
    assert breakdown.normalized_loss == pytest.approx(expected_norm, abs=1e-12)
    assert breakdown.reward == pytest.approx(1.0 - expected_norm, abs=1e-12)


def test_normalized_loss_and_reward_stay_in_unit_interval(registry):
    rng = random.Random(31)
    garbage = [
        "",
        "null",
        "[]",
        '{"shots": []}',
        '{"shots": [{"start_s": 3, "end_s": 1}]}',
        '{"shots": [{"start_s": 0, "end_s": 1, "labels": {"editing": {"editing_logic": "montage"}}, "skeleton": "other"}]}',
    ]
    for _ in range(15):
        truth = random_document(rng, registry)
        for text in garbage:
            breakdown = sv6d_loss(text, truth, registry)
            assert 0.0 <= breakdown.normalized_loss <= 1.0
            assert 0.0 <= breakdown.reward <= 1.0


# ---------------------------------------------------------------------------
# task rewards
# ---------------------------------------------------------------------------


def oracle_edit_distance(a: str, b: str) -> int:
    @lru_cache(maxsize=None)
    def go(i: int, j: int) -> int:
        if i == 0:
            return j
        if j == 0:
            return i
        return min(
            go(i - 1, j) + 1,
            go(i, j - 1) + 1,
            go(i - 1, j - 1) + (a[i - 1] != b[j - 1]),
        )

    return go(len(a), len(b))


def test_edit_distance_against_recursive_oracle():
    rng = random.Random(13)
    alphabet = "abcde"
    for _ in range(200):
        a = "".join(rng.choice(alphabet) for _ in range(rng.randint(0, 8)))
        b = "".join(rng.choice(alphabet) for _ in range(rng.randint(0, 8)))
        assert edit_distance(a, b) == oracle_edit_distance(a, b)
        assert edit_similarity(a, b) == edit_similarity(b, a)


def test_ocr_reward_rows(registry):
    assert task_reward("ocr", "abc", {"text": "abc"}, registry).reward == 1.0
    value = task_reward("ocr", "abc", {"text": "abd"}, registry).reward
    assert value == pytest.approx(1.0 - 1.0 / 3.0, abs=1e-12)
    assert task_reward("ocr", "", {"text": ""}, registry).reward == 1.0


def test_grounding_perfect_parse_scores_one(registry):
    rng = random.Random(17)
    doc = random_document(rng, registry, n_shots=4)
    breakdown = task_reward("temporal_grounding", dumps_document(doc), doc, registry)
    assert breakdown.format_score == 1.0
    assert breakdown.iou_score == 1.0
    assert breakdown.label_score == 1.0
    assert breakdown.reward == pytest.approx(1.0, abs=1e-12)


def test_grounding_reward_is_weighted_sum_of_components(registry):
    rng = random.Random(23)
    for _ in range(10):
        truth = random_document(rng, registry, n_shots=3)
        pred = random_document(rng, registry, n_shots=rng.randint(1, 5))
        breakdown = task_reward(
            "temporal_grounding", dumps_document(pred), truth, registry
        )
        expected = (
            0.2 * breakdown.format_score
            + 0.4 * breakdown.iou_score
            + 0.4 * breakdown.label_score
        )
        assert breakdown.reward == pytest.approx(expected, abs=1e-12)
        assert 0.0 <= breakdown.reward <= 1.0


def test_grounding_accepts_bare_span_label_pairs(registry):
    # Reference and rollout as span/label pairs: shots without meta/skeleton.
    pairs = {
        "shots": [
            {"start_s": 0.0, "end_s": 2.0,
             "labels": {"camera_language": {"shot_size": "close-up"}}},
            {"start_s": 2.0, "end_s": 5.0,
             "labels": {"camera_language": {"shot_size": "long shot"}}},
        ]
    }
    breakdown = task_reward(
        "temporal_grounding", json.dumps(pairs), pairs, registry
    )
    assert breakdown.iou_score == 1.0
    assert breakdown.label_score == 1.0
    assert breakdown.reward == pytest.approx(1.0, abs=1e-12)

    shifted = {
        "shots": [
            {"start_s": 0.0, "end_s": 2.0,
             "labels": {"camera_language": {"shot_size": "medium shot"}}},
            {"start_s": 2.0, "end_s": 5.0,
             "labels": {"camera_language": {"shot_size": "long shot"}}},
        ]
    }
    worse = task_reward("temporal_grounding", json.dumps(shifted), pairs, registry)
    assert worse.reward < breakdown.reward


def test_localization_half_iou_scores_point_six(registry):
    rollout = json.dumps({"spans": [[0.0, 5.0]]})
    reference = {"spans": [[0.0, 10.0]]}
    breakdown = task_reward(
        "temporal_action_localization", rollout, reference, registry
    )
    assert breakdown.format_score == 1.0
    assert breakdown.iou_score == pytest.approx(0.5, abs=1e-15)
    assert breakdown.reward == pytest.approx(0.6, abs=1e-12)


def test_localization_unparseable_rollout_scores_zero(registry):
    breakdown = task_reward(
        "temporal_action_localization", "spaghetti", {"spans": [[0.0, 1.0]]}, registry
    )
    assert breakdown.format_score == 0.0
    assert breakdown.reward == 0.0


def test_chain_of_thought_requires_judge(registry):
    with pytest.raises(TaskInputError, match="judge"):
        task_reward("chain_of_thought", "reasoning...", {}, registry)
    breakdown = task_reward(
        "chain_of_thought", "reasoning...", {"judge_score": 1.0}, registry
    )
    assert breakdown.reward == pytest.approx(1.0, abs=1e-12)
    provided = task_reward(
        "chain_of_thought", "reasoning...", {}, registry, judge=lambda text, ref: 0.5
    )
    assert provided.reward == pytest.approx(0.3 + 0.7 * 0.5, abs=1e-12)


def test_unknown_task_type_rejected(registry):
    with pytest.raises(TaskInputError, match="unknown task type"):
        task_reward("poetry", "x", {}, registry)
