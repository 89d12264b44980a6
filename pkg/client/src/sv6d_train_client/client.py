"""Batched reward requests against a running sv6d reward service.

The client is a transport shim: it never computes or adjusts rewards
locally, so every value a training loop sees is exactly what the service
returned. Rollout lists are split into service-sized batches (order
preserved), transient failures are retried with exponential backoff, and
validation failures surface immediately without retry.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Any, Mapping, Sequence

import requests

API_PREFIX = "/v1"

# Exact field set of a /v1 reward response; anything less is version skew.
MIRRORED_FIELDS = (
    "task_type",
    "reward",
    "format_score",
    "iou_score",
    "label_score",
    "r_prof",
    "r_comp",
    "r_form",
    "l_align",
    "l_struct",
    "l_reg",
    "l_sv6d",
    "normalized_loss",
    "judge_score",
    "engine_version",
    "registry_version",
    "request_digest",
)


class ClientError(Exception):
    """Base class for everything this client raises on purpose."""


class TransportError(ClientError):
    """Network failure that survived every retry attempt."""


class RequestValidationError(ClientError):
    """The service rejected the request (4xx); retrying would not help."""

    def __init__(self, status_code: int, detail: Any):
        super().__init__(f"service rejected request ({status_code}): {detail}")
        self.status_code = status_code
        self.detail = detail


class SchemaMismatchError(ClientError):
    """The response shape does not match the mirrored schema (version skew)."""

    def __init__(self, missing: Sequence[str], server_version: str | None):
        super().__init__(
            f"response is missing fields {sorted(missing)}; "
            f"client mirrors API {API_PREFIX}, server engine version "
            f"{server_version or 'unknown'}"
        )
        self.missing = tuple(missing)
        self.server_version = server_version


@dataclass(frozen=True)
class ClientConfig:
    base_url: str
    timeout_s: float = 10.0
    max_batch_size: int = 16
    max_attempts: int = 3
    backoff_base_s: float = 0.25

    def __post_init__(self) -> None:
        if self.timeout_s <= 0:
            raise ValueError("timeout_s must be > 0")
        if self.max_batch_size < 1:
            raise ValueError("max_batch_size must be >= 1")
        if self.max_attempts < 1:
            raise ValueError("max_attempts must be >= 1")
        if self.backoff_base_s < 0:
            raise ValueError("backoff_base_s must be >= 0")


@dataclass(frozen=True)
class RewardResult:
    """Mirror of one service reward response; values are never recomputed."""

    task_type: str
    reward: float
    format_score: float
    iou_score: float
    label_score: float
    r_prof: float
    r_comp: float
    r_form: float
    l_align: float
    l_struct: float
    l_reg: float
    l_sv6d: float
    normalized_loss: float
    judge_score: float | None
    engine_version: str
    registry_version: str
    request_digest: str

    @classmethod
    def from_wire(cls, payload: Mapping[str, Any]) -> "RewardResult":
        missing = [name for name in MIRRORED_FIELDS if name not in payload]
        if missing:
            raise SchemaMismatchError(missing, payload.get("engine_version"))
        return cls(**{name: payload[name] for name in MIRRORED_FIELDS})


class RewardClient:
    """Thread-compatible client; shared state is only the connection pool."""

    def __init__(self, config: ClientConfig, session: requests.Session | None = None):
        self._config = config
        self._session = session or requests.Session()
        self._base = config.base_url.rstrip("/")

    def close(self) -> None:
        self._session.close()

    def __enter__(self) -> "RewardClient":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()

    # -- transport ---------------------------------------------------------

    def _request(self, method: str, path: str, payload: Any = None) -> Any:
        url = f"{self._base}{API_PREFIX}{path}"
        last_error: Exception | None = None
        for attempt in range(self._config.max_attempts):
            if attempt:
                time.sleep(self._config.backoff_base_s * (2 ** (attempt - 1)))
            try:
                response = self._session.request(
                    method, url, json=payload, timeout=self._config.timeout_s
                )
            except (requests.ConnectionError, requests.Timeout) as exc:
                last_error = exc
                continue
            if response.status_code >= 500:
                last_error = TransportError(
                    f"{url} answered {response.status_code}: {response.text[:200]}"
                )
                continue
            if response.status_code >= 400:
                try:
                    detail = response.json()
                except ValueError:
                    detail = response.text
                raise RequestValidationError(response.status_code, detail)
            return response.json()
        raise TransportError(
            f"{method} {url} failed after {self._config.max_attempts} attempts: "
            f"{last_error}"
        )

    # -- api ----------------------------------------------------------------

    def health(self) -> dict[str, str]:
        return self._request("GET", "/health")

    def reward_single(
        self,
        task_type: str,
        rollout_text: str,
        reference: Any,
        overrides: Mapping[str, Any] | None = None,
    ) -> RewardResult:
        body = {
            "task_type": task_type,
            "rollout_text": rollout_text,
            "reference": reference,
        }
        if overrides:
            body["overrides"] = dict(overrides)
        return RewardResult.from_wire(self._request("POST", "/reward", body))

    def reward_batch(
        self,
        rollouts: Sequence[tuple[str, str, Any]],
        overrides: Mapping[str, Any] | None = None,
    ) -> list[RewardResult]:
        """Order-preserving rewards for (task_type, rollout_text, reference) triples.

        The list is split transparently into chunks of at most
        max_batch_size; each chunk is one idempotent service call.
        """
        if not rollouts:
            raise ValueError("reward_batch needs at least one rollout")
        results: list[RewardResult] = []
        size = self._config.max_batch_size
        for start in range(0, len(rollouts), size):
            chunk = rollouts[start : start + size]
            body = {
                "requests": [
                    {
                        "task_type": task_type,
                        "rollout_text": rollout_text,
                        "reference": reference,
                        **({"overrides": dict(overrides)} if overrides else {}),
                    }
                    for task_type, rollout_text, reference in chunk
                ]
            }
            payload = self._request("POST", "/reward/batch", body)
            responses = payload.get("responses")
            if not isinstance(responses, list) or len(responses) != len(chunk):
                raise SchemaMismatchError(
                    ["responses"], payload.get("engine_version")
                )
            results.extend(RewardResult.from_wire(entry) for entry in responses)
        return results
