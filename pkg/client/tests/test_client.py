from __future__ import annotations

import json
import random

import pytest
import requests

from sv6d_train_client import (
    ClientConfig,
    RequestValidationError,
    RewardClient,
    RewardResult,
    SchemaMismatchError,
    TransportError,
)

# The engine package is used here only to fabricate realistic rollout data;
# every reward value asserted below comes from the HTTP service.
from sv6d.document import (
    SemanticShot,
    ShotLabelVector,
    StructuralDocument,
    VideoMeta,
    document_to_dict,
    dumps_document,
)
from sv6d.taxonomy import load_registry


def random_document(rng: random.Random, registry, n_shots: int) -> StructuralDocument:
    boundaries = [0.0]
    for _ in range(n_shots):
        boundaries.append(round(boundaries[-1] + rng.uniform(0.5, 6.0), 3))
    shots = tuple(
        SemanticShot(start_s=boundaries[i], end_s=boundaries[i + 1])
        for i in range(n_shots)
    )
    vectors = []
    for _ in range(n_shots):
        dims = {}
        for dim in registry.dimensions:
            sub = rng.choice(list(dim.sub_dimensions))
            label = rng.choice(list(sub.labels))
            dims[dim.id] = {sub.id: frozenset([label]) if sub.multi_valued else label}
        vectors.append(ShotLabelVector(dims=dims))
    arc = list(registry.skeleton_labels("dramatic_arc"))
    return StructuralDocument(
        meta=VideoMeta(duration_s=boundaries[-1]),
        skeleton_taxonomy="dramatic_arc",
        shots=shots,
        labels=tuple(vectors),
        skeleton_labels=tuple(rng.choice(arc) for _ in range(n_shots)),
    )


class RecordingSession(requests.Session):
    def __init__(self):
        super().__init__()
        self.calls: list[tuple[str, str]] = []

    def request(self, method, url, **kwargs):
        self.calls.append((method, url))
        return super().request(method, url, **kwargs)


class FlakySession(RecordingSession):
    """Fails the first `failures` requests at the transport level."""

    def __init__(self, failures: int):
        super().__init__()
        self.remaining_failures = failures

    def request(self, method, url, **kwargs):
        self.calls.append((method, url))
        if self.remaining_failures > 0:
            self.remaining_failures -= 1
            raise requests.ConnectionError("synthetic transport failure")
        return super(RecordingSession, self).request(method, url, **kwargs)


def make_rollouts(n: int) -> list[tuple[str, str, object]]:
    registry = load_registry()
    rng = random.Random(2468)
    rollouts: list[tuple[str, str, object]] = []
    for k in range(n):
        kind = k % 4
        if kind == 0:
            doc = random_document(rng, registry, n_shots=rng.randint(1, 4))
            rollouts.append(
                (
                    "temporal_grounding",
                    dumps_document(doc),
                    {"document": document_to_dict(doc)},
                )
            )
        elif kind == 1:
            truth = random_document(rng, registry, n_shots=rng.randint(2, 4))
            pred = random_document(rng, registry, n_shots=rng.randint(1, 5))
            rollouts.append(
                (
                    "temporal_grounding",
                    dumps_document(pred),
                    {"document": document_to_dict(truth)},
                )
            )
        elif kind == 2:
            a = "".join(rng.choice("abcdef ") for _ in range(rng.randint(0, 12)))
            b = "".join(rng.choice("abcdef ") for _ in range(rng.randint(0, 12)))
            rollouts.append(("ocr", a, {"text": b}))
        else:
            spans = [[i * 2.0, i * 2.0 + rng.uniform(0.5, 1.9)] for i in range(3)]
            rollouts.append(
                (
                    "temporal_action_localization",
                    json.dumps({"spans": spans[: rng.randint(1, 3)]}),
                    {"spans": [[0.0, 2.0], [2.0, 4.0], [4.0, 6.0]]},
                )
            )
    return rollouts


# ---------------------------------------------------------------------------
# live-service behaviour
# ---------------------------------------------------------------------------


def test_health_check(service_url):
    with RewardClient(ClientConfig(base_url=service_url)) as client:
        body = client.health()
    assert body["status"] == "ok"
    assert body["engine_version"]


def test_empty_batch_is_client_side_error(service_url):
    client = RewardClient(ClientConfig(base_url=service_url))
    with pytest.raises(ValueError, match="at least one rollout"):
        client.reward_batch([])


def test_perfect_grounding_rollout_scores_one(service_url):
    registry = load_registry()
    doc = random_document(random.Random(1), registry, n_shots=3)
    client = RewardClient(ClientConfig(base_url=service_url))
    result = client.reward_single(
        "temporal_grounding", dumps_document(doc), {"document": document_to_dict(doc)}
    )
    assert result.reward == 1.0
    assert result.request_digest.startswith("sha256:")


def test_seven_rollouts_with_batch_size_three_makes_three_calls(service_url):
    session = RecordingSession()
    client = RewardClient(
        ClientConfig(base_url=service_url, max_batch_size=3), session=session
    )
    rollouts = make_rollouts(7)
    results = client.reward_batch(rollouts)
    batch_calls = [c for c in session.calls if c[1].endswith("/reward/batch")]
    assert len(batch_calls) == 3
    assert len(results) == 7
    singles = [client.reward_single(*r) for r in rollouts]
    assert results == singles  # order preserved, values bit-identical


def test_hundred_mixed_rollouts_mirror_single_requests(service_url):
    rollouts = make_rollouts(100)
    client = RewardClient(ClientConfig(base_url=service_url, max_batch_size=16))
    batched = client.reward_batch(rollouts)
    assert len(batched) == 100
    singles = [client.reward_single(*r) for r in rollouts]
    for got, want in zip(batched, singles):
        assert got == want  # dataclass equality is field-by-field, bit-exact
    assert [r.request_digest for r in batched] == [
        s.request_digest for s in singles
    ]


def test_overrides_are_forwarded(service_url):
    registry = load_registry()
    rng = random.Random(9)
    truth = random_document(rng, registry, n_shots=4)
    pred = random_document(rng, registry, n_shots=2)
    client = RewardClient(ClientConfig(base_url=service_url))
    rollout = ("temporal_grounding", dumps_document(pred), {"document": document_to_dict(truth)})
    plain = client.reward_batch([rollout])[0]
    pushed = client.reward_batch([rollout], overrides={"beta": 2.0})[0]
    assert pushed.l_align > plain.l_align


def test_validation_error_is_not_retried(service_url):
    session = RecordingSession()
    client = RewardClient(ClientConfig(base_url=service_url), session=session)
    registry = load_registry()
    doc = random_document(random.Random(3), registry, n_shots=2)
    with pytest.raises(RequestValidationError) as err:
        client.reward_single(
            "temporal_grounding",
            dumps_document(doc),
            {"document": document_to_dict(doc)},
            overrides={"alpha": 1.5},
        )
    assert err.value.status_code == 422
    assert "alpha" in json.dumps(err.value.detail)
    assert len(session.calls) == 1


def test_transient_failures_are_retried_with_backoff(service_url):
    session = FlakySession(failures=2)
    client = RewardClient(
        ClientConfig(base_url=service_url, max_attempts=3, backoff_base_s=0.01),
        session=session,
    )
    assert client.health()["status"] == "ok"
    assert len(session.calls) == 3


def test_exhausted_retries_raise_transport_error(service_url):
    session = FlakySession(failures=5)
    client = RewardClient(
        ClientConfig(base_url=service_url, max_attempts=2, backoff_base_s=0.01),
        session=session,
    )
    with pytest.raises(TransportError, match="after 2 attempts"):
        client.health()


# ---------------------------------------------------------------------------
# schema mirror (no live service needed)
# ---------------------------------------------------------------------------


class CannedSession(requests.Session):
    def __init__(self, status_code: int, payload):
        super().__init__()
        self.status_code = status_code
        self.payload = payload
        self.calls = 0

    def request(self, method, url, **kwargs):
        self.calls += 1
        response = requests.Response()
        response.status_code = self.status_code
        response._content = json.dumps(self.payload).encode()
        response.headers["Content-Type"] = "application/json"
        return response


def test_version_skew_reports_both_versions():
    session = CannedSession(200, {"reward": 1.0, "engine_version": "9.9.9"})
    client = RewardClient(ClientConfig(base_url="http://fake"), session=session)
    with pytest.raises(SchemaMismatchError) as err:
        client.reward_single("ocr", "a", {"text": "a"})
    assert "9.9.9" in str(err.value)
    assert "task_type" in err.value.missing


def test_server_errors_are_retried_then_raised():
    session = CannedSession(503, {"detail": "overloaded"})
    client = RewardClient(
        ClientConfig(base_url="http://fake", max_attempts=3, backoff_base_s=0.0),
        session=session,
    )
    with pytest.raises(TransportError, match="503"):
        client.health()
    assert session.calls == 3


def test_mirrored_result_round_trip():
    payload = {name: 0.5 for name in RewardResult.__dataclass_fields__}
    payload.update(
        task_type="ocr",
        judge_score=None,
        engine_version="0.1.0",
        registry_version="1.0.0",
        request_digest="sha256:deadbeef",
    )
    result = RewardResult.from_wire(payload)
    assert result.reward == 0.5
    assert result.judge_score is None


def test_config_bounds():
    with pytest.raises(ValueError):
        ClientConfig(base_url="http://x", timeout_s=0)
    with pytest.raises(ValueError):
        ClientConfig(base_url="http://x", max_batch_size=0)
    with pytest.raises(ValueError):
        ClientConfig(base_url="http://x", max_attempts=0)
