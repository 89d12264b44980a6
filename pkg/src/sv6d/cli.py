"""Command-line surface for validation, alignment, loss, rewards, generation, scoring.

Exit codes form a closed set:
  0  success
  1  domain violations (invalid document, failed checks)
  2  unreadable, undecodable, or missing input (also CLI usage errors)
  3  configuration constraint violations
  4  unexpected internal error
"""

from __future__ import annotations

import json
import os
from pathlib import Path

import click

from . import __version__
from .alignment import ConfigError, align
from .benchgen import (
    ItemGenerationError,
    PlanError,
    generate_suite,
    load_plan,
    load_suite,
    suite_to_json,
    verify_item,
)
from .config import load_config_file, resolve_configs
from .document import DocumentError, load_document, validate_document
from .objective import TaskInputError, sv6d_loss, task_reward
from .scoring import ScoringError, load_answers, score_suite
from .taxonomy import TaxonomyError, load_registry

EXIT_OK = 0
EXIT_DOMAIN = 1
EXIT_INPUT = 2
EXIT_CONFIG = 3
EXIT_INTERNAL = 4

REGISTRY_ENV_VAR = "SV6D_REGISTRY"


def _registry(path: str | None):
    source = path or os.environ.get(REGISTRY_ENV_VAR) or None
    try:
        return load_registry(source)
    except FileNotFoundError as exc:
        raise click.exceptions.Exit(_fail(EXIT_INPUT, f"registry not readable: {exc}"))
    except TaxonomyError as exc:
        raise click.exceptions.Exit(_fail(EXIT_CONFIG, f"registry invalid: {exc}"))


def _fail(code: int, message: str) -> int:
    click.echo(f"error: {message}", err=True)
    return code


def _load_doc(path: str):
    try:
        return load_document(path)
    except FileNotFoundError as exc:
        raise click.exceptions.Exit(_fail(EXIT_INPUT, f"cannot read {path}: {exc}"))
    except DocumentError as exc:
        raise click.exceptions.Exit(_fail(EXIT_INPUT, f"cannot decode {path}: {exc}"))


def _configs(config_path: str | None, **overrides):
    try:
        return resolve_configs(load_config_file(config_path), overrides)
    except FileNotFoundError as exc:
        raise click.exceptions.Exit(_fail(EXIT_INPUT, f"config not readable: {exc}"))
    except (ConfigError, ValueError) as exc:
        raise click.exceptions.Exit(_fail(EXIT_CONFIG, str(exc)))


def _emit(payload, out: str | None, fmt: str, table_lines=None) -> None:
    text = json.dumps(payload, ensure_ascii=False, indent=2, sort_keys=True)
    if out:
        Path(out).write_text(text + "\n", encoding="utf-8")
    if fmt == "json" or table_lines is None:
        click.echo(text)
    else:
        for line in table_lines:
            click.echo(line)


@click.group()
@click.version_option(version=__version__, prog_name="sv6d")
def main() -> None:
    """Structural-video engine: validate, align, score, generate, serve."""


_registry_option = click.option(
    "--registry", "registry_path", default=None, help="Taxonomy config path."
)
_config_option = click.option(
    "--config", "config_path", default=None, help="Engine config file (YAML)."
)
_out_option = click.option("--out", default=None, help="Write JSON output to this file.")
_format_option = click.option(
    "--format", "fmt", type=click.Choice(["json", "table"]), default="table"
)


@main.command()
@click.argument("doc_path", type=click.Path())
@_registry_option
def validate(doc_path: str, registry_path: str | None) -> None:
    """Validate a structural document file; exit 0 only when clean."""
    registry = _registry(registry_path)
    doc = _load_doc(doc_path)
    issues = validate_document(doc, registry)
    if not issues:
        click.echo(f"{doc_path}: ok ({doc.n_shots} shots)")
        raise click.exceptions.Exit(EXIT_OK)
    for issue in issues:
        click.echo(str(issue))
    raise click.exceptions.Exit(EXIT_DOMAIN)


@main.command(name="align")
@click.argument("pred_path", type=click.Path())
@click.argument("truth_path", type=click.Path())
@_registry_option
@_config_option
@click.option("--alpha", type=float, default=None)
@click.option("--beta", type=float, default=None)
@_out_option
@_format_option
def align_cmd(pred_path, truth_path, registry_path, config_path, alpha, beta, out, fmt):
    """Hungarian-match two documents and report the alignment loss."""
    registry = _registry(registry_path)
    align_cfg, _ = _configs(config_path, alpha=alpha, beta=beta)
    pred, truth = _load_doc(pred_path), _load_doc(truth_path)
    result = align(pred, truth, align_cfg, registry)
    payload = {
        "matches": [list(m) for m in result.matches],
        "per_pair_iou": list(result.per_pair_iou),
        "per_pair_label_distance": list(result.per_pair_label_distance),
        "cardinality_penalty": result.cardinality_penalty,
        "l_align": result.l_align,
    }
    lines = [
        f"matches: {len(result.matches)} (pred {pred.n_shots} x truth {truth.n_shots})",
        *(
            f"  pred {i} <-> truth {j}  iou={iou:.4f}  label_dist={d:.4f}"
            for (i, j), iou, d in zip(
                result.matches, result.per_pair_iou, result.per_pair_label_distance
            )
        ),
        f"cardinality_penalty: {result.cardinality_penalty:.6f}",
        f"l_align: {result.l_align:.6f}",
    ]
    _emit(payload, out, fmt, lines)


@main.command()
@click.argument("pred_path", type=click.Path())
@click.argument("truth_path", type=click.Path())
@_registry_option
@_config_option
@_out_option
@_format_option
def loss(pred_path, truth_path, registry_path, config_path, out, fmt):
    """Composite structural loss of a predicted parse against a reference."""
    registry = _registry(registry_path)
    align_cfg, reg_cfg = _configs(config_path)
    truth = _load_doc(truth_path)
    try:
        pred_text = Path(pred_path).read_text(encoding="utf-8")
    except OSError as exc:
        raise click.exceptions.Exit(_fail(EXIT_INPUT, f"cannot read {pred_path}: {exc}"))
    breakdown = sv6d_loss(pred_text, truth, registry, align_cfg, reg_cfg)
    payload = breakdown.to_dict()
    lines = [
        f"l_align:  {breakdown.l_align:.6f}",
        f"l_struct: {breakdown.l_struct:.6f}",
        f"l_reg:    {breakdown.l_reg:.6f}",
        f"l_sv6d:   {breakdown.l_sv6d:.6f}",
        f"normalized_loss: {breakdown.normalized_loss:.6f}",
        f"reward:   {breakdown.reward:.6f}",
    ]
    _emit(payload, out, fmt, lines)


@main.command()
@click.option("--task-type", "task_type", required=True)
@click.option("--rollout", "rollout_path", required=True, type=click.Path())
@click.option("--reference", "reference_path", required=True, type=click.Path())
@_registry_option
@_config_option
@_out_option
@_format_option
def reward(task_type, rollout_path, reference_path, registry_path, config_path, out, fmt):
    """Task-type reward for one rollout against a reference payload."""
    registry = _registry(registry_path)
    align_cfg, reg_cfg = _configs(config_path)
    try:
        rollout_text = Path(rollout_path).read_text(encoding="utf-8")
        reference_text = Path(reference_path).read_text(encoding="utf-8")
    except OSError as exc:
        raise click.exceptions.Exit(_fail(EXIT_INPUT, f"cannot read input: {exc}"))
    try:
        reference = json.loads(reference_text)
    except json.JSONDecodeError as exc:
        raise click.exceptions.Exit(
            _fail(EXIT_INPUT, f"reference must be JSON: {exc}")
        )
    try:
        breakdown = task_reward(
            task_type, rollout_text, reference, registry, align_cfg, reg_cfg
        )
    except TaskInputError as exc:
        raise click.exceptions.Exit(_fail(EXIT_DOMAIN, str(exc)))
    payload = breakdown.to_dict()
    lines = [f"{k}: {v}" for k, v in payload.items() if v is not None]
    _emit(payload, out, fmt, lines)


@main.command()
@click.option("--plan", "plan_path", required=True, type=click.Path())
@click.option(
    "--docs", "doc_paths", multiple=True, required=True, type=click.Path()
)
@click.option("--seed", type=int, required=True, help="Suite seed; output is pure in it.")
@_registry_option
@_out_option
def gen(plan_path, doc_paths, seed, registry_path, out):
    """Generate a benchmark suite from documents and a plan file."""
    registry = _registry(registry_path)
    try:
        plan = load_plan(plan_path)
    except FileNotFoundError as exc:
        raise click.exceptions.Exit(_fail(EXIT_INPUT, f"cannot read plan: {exc}"))
    except PlanError as exc:
        raise click.exceptions.Exit(_fail(EXIT_CONFIG, str(exc)))
    docs = [_load_doc(p) for p in doc_paths]
    try:
        generated, manifest = generate_suite(docs, plan, registry, seed)
    except (PlanError, ItemGenerationError) as exc:
        raise click.exceptions.Exit(_fail(EXIT_DOMAIN, str(exc)))
    bad = [
        (item.item_id, problems)
        for item, cfg in generated
        if (problems := verify_item(item, cfg, registry))
    ]
    if bad:
        for item_id, problems in bad:
            click.echo(f"{item_id}: {problems}", err=True)
        raise click.exceptions.Exit(
            _fail(EXIT_INTERNAL, "generated items failed verification")
        )
    text = suite_to_json(generated, manifest)
    if out:
        Path(out).write_text(text + "\n", encoding="utf-8")
        click.echo(
            f"wrote {manifest['n_items']} items "
            f"({manifest['hard_count']} hard, {len(manifest['skipped'])} skipped) to {out}"
        )
    else:
        click.echo(text)


@main.command()
@click.option("--suite", "suite_path", required=True, type=click.Path())
@click.option("--answers", "answers_path", required=True, type=click.Path())
@_out_option
@_format_option
def score(suite_path, answers_path, out, fmt):
    """Score an answer file (JSONL of item_id/response) against a suite."""
    try:
        pairs, _manifest = load_suite(suite_path)
        answers = load_answers(answers_path)
    except FileNotFoundError as exc:
        raise click.exceptions.Exit(_fail(EXIT_INPUT, f"cannot read input: {exc}"))
    except (json.JSONDecodeError, KeyError) as exc:
        raise click.exceptions.Exit(_fail(EXIT_INPUT, f"cannot decode input: {exc}"))
    except ScoringError as exc:
        raise click.exceptions.Exit(_fail(EXIT_INPUT, str(exc)))
    items = [item for item, _cfg in pairs]
    try:
        report = score_suite(items, answers)
    except ScoringError as exc:
        raise click.exceptions.Exit(_fail(EXIT_DOMAIN, str(exc)))
    payload = report.to_dict()
    lines = [
        "per-dimension accuracy:",
        *(f"  {dim}: {acc:.4f}" for dim, acc in sorted(report.per_dimension.items())),
        f"macro: {report.macro:.4f}",
        f"hard:  {report.hard:.4f}",
        "per-answer-type accuracy:",
        *(
            f"  {atype}: {acc:.4f}"
            for atype, acc in sorted(report.per_answer_type.items())
        ),
        f"scored {report.n_scored} items, {report.n_correct} correct, "
        f"{report.n_unparsed} unparsed responses",
    ]
    _emit(payload, out, fmt, lines)


@main.command()
@click.option("--host", default="127.0.0.1")
@click.option("--port", type=int, default=8080)
@_registry_option
@_config_option
def serve(host, port, registry_path, config_path):
    """Run the reward service (stateless; config frozen at startup)."""
    import uvicorn

    from .service import create_app

    registry = _registry(registry_path)
    align_cfg, reg_cfg = _configs(config_path)
    app = create_app(registry=registry, align_cfg=align_cfg, reg_cfg=reg_cfg)
    uvicorn.run(app, host=host, port=port, log_level="info")


if __name__ == "__main__":
    main()
