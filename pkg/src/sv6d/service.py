"""Stateless HTTP reward service for RL training loops.

Routes live under a versioned prefix (/v1). Every response carries the
engine version, registry version, and a digest of the canonicalized request
body, so identical requests are verifiably answered identically. The only
shared state is the immutable registry and config loaded at startup.
"""

from __future__ import annotations

import hashlib
import json
from typing import Any, Callable, Mapping

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from . import __version__
from .alignment import AlignmentConfig, ConfigError
from .config import resolve_configs
from .objective import TASK_TYPES, RegularizerConfig, TaskInputError, task_reward
from .taxonomy import TaxonomyRegistry, load_registry

API_PREFIX = "/v1"


class Overrides(BaseModel):
    """Per-request config overrides; bounds mirror the engine config types."""

    alpha: float | None = Field(default=None, gt=0, lt=1)
    beta: float | None = Field(default=None, ge=0)
    weights: dict[str, float] | None = None
    lambda_p: float | None = Field(default=None, ge=0)
    lambda_c: float | None = Field(default=None, ge=0)
    lambda_f: float | None = Field(default=None, ge=0)


class RewardRequest(BaseModel):
    task_type: str
    rollout_text: str
    reference: Any = None
    overrides: Overrides | None = None


class BatchRewardRequest(BaseModel):
    requests: list[RewardRequest]


def request_digest(request: RewardRequest) -> str:
    canonical = json.dumps(
        request.model_dump(), sort_keys=True, ensure_ascii=False, separators=(",", ":")
    )
    return "sha256:" + hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def create_app(
    registry: TaxonomyRegistry | None = None,
    align_cfg: AlignmentConfig | None = None,
    reg_cfg: RegularizerConfig | None = None,
    judge: Callable[[str, Mapping[str, Any]], float] | None = None,
) -> FastAPI:
    """Build the service around an immutable registry/config snapshot."""
    registry = registry or load_registry()
    align_cfg = align_cfg or AlignmentConfig()
    reg_cfg = reg_cfg or RegularizerConfig()

    app = FastAPI(title="sv6d reward service", version=__version__)

    def versions() -> dict[str, str]:
        return {"engine_version": __version__, "registry_version": registry.version}

    def compute(request: RewardRequest) -> dict[str, Any]:
        if request.task_type not in TASK_TYPES:
            raise HTTPException(
                status_code=422,
                detail={
                    "field": "task_type",
                    "message": f"unknown task type {request.task_type!r}; "
                    f"expected one of {list(TASK_TYPES)}",
                },
            )
        req_align, req_reg = align_cfg, reg_cfg
        if request.overrides is not None:
            try:
                req_align, req_reg = resolve_configs(
                    {
                        "alpha": align_cfg.alpha,
                        "beta": align_cfg.beta,
                        "weights": align_cfg.weights,
                        "lambda_p": reg_cfg.lambda_p,
                        "lambda_c": reg_cfg.lambda_c,
                        "lambda_f": reg_cfg.lambda_f,
                    },
                    request.overrides.model_dump(),
                )
            except ConfigError as exc:
                raise HTTPException(
                    status_code=422, detail={"field": "overrides", "message": str(exc)}
                ) from exc
        try:
            breakdown = task_reward(
                request.task_type,
                request.rollout_text,
                request.reference,
                registry,
                req_align,
                req_reg,
                judge=judge,
            )
        except TaskInputError as exc:
            if "judge" in str(exc):
                raise HTTPException(
                    status_code=400,
                    detail={
                        "error": "unsupported_task",
                        "message": str(exc),
                    },
                ) from exc
            raise HTTPException(
                status_code=422,
                detail={"field": "reference", "message": str(exc)},
            ) from exc
        return {
            **breakdown.to_dict(),
            **versions(),
            "request_digest": request_digest(request),
        }

    @app.get(f"{API_PREFIX}/health")
    def health() -> dict[str, str]:
        return {"status": "ok", **versions()}

    @app.post(f"{API_PREFIX}/reward")
    def single_reward(request: RewardRequest) -> dict[str, Any]:
        return compute(request)

    @app.post(f"{API_PREFIX}/reward/batch")
    def batch_reward(batch: BatchRewardRequest) -> dict[str, Any]:
        return {
            "responses": [compute(request) for request in batch.requests],
            **versions(),
        }

    return app
