"""Engine configuration resolution: defaults < config file < explicit overrides."""

from __future__ import annotations

from pathlib import Path
from typing import Any, Mapping

import yaml

from .alignment import AlignmentConfig, ConfigError
from .objective import RegularizerConfig

ALIGNMENT_KEYS = ("alpha", "beta", "weights")
REGULARIZER_KEYS = ("lambda_p", "lambda_c", "lambda_f")


def load_config_file(path: str | Path | None) -> dict[str, Any]:
    if path is None:
        return {}
    with open(path, "r", encoding="utf-8") as fh:
        raw = yaml.safe_load(fh)
    if raw is None:
        return {}
    if not isinstance(raw, Mapping):
        raise ConfigError("engine config file must be a mapping")
    return dict(raw)


def resolve_configs(
    file_values: Mapping[str, Any] | None = None,
    overrides: Mapping[str, Any] | None = None,
) -> tuple[AlignmentConfig, RegularizerConfig]:
    """Merge defaults, config-file values, and per-call overrides, then validate."""
    merged: dict[str, Any] = {}
    for source in (file_values or {}, overrides or {}):
        for key, value in source.items():
            if value is not None:
                merged[key] = value
    unknown = set(merged) - set(ALIGNMENT_KEYS) - set(REGULARIZER_KEYS)
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")

    align_kwargs: dict[str, Any] = {
        k: merged[k] for k in ALIGNMENT_KEYS if k in merged
    }
    if "weights" in align_kwargs:
        align_kwargs["weights"] = {
            str(k): float(v) for k, v in dict(align_kwargs["weights"]).items()
        }
    reg_kwargs = {k: float(merged[k]) for k in REGULARIZER_KEYS if k in merged}
    return AlignmentConfig(**align_kwargs), RegularizerConfig(**reg_kwargs)
