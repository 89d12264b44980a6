"""Temporal alignment between predicted and reference shot sequences.

Builds the pairwise cost matrix (convex blend of temporal IoU cost and
aggregate label distance), solves the optimal partial bijection with a
deterministic Kuhn-Munkres solver, and reduces the matching to the
alignment loss: mean matched (1 - IoU) plus a cardinality-mismatch penalty.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .document import SemanticShot, StructuralDocument
from .taxonomy import DIMENSION_IDS, TaxonomyRegistry

# Padding cost for rectangular matrices: strictly above the [0, 1] range of
# real entries, so dummy pairs never displace a real pair.
DUMMY_COST = 2.0


class ConfigError(ValueError):
    """Raised when a loss/alignment configuration violates its bounds."""


def uniform_weights() -> dict[str, float]:
    return {dim: 1.0 / len(DIMENSION_IDS) for dim in DIMENSION_IDS}


@dataclass(frozen=True)
class AlignmentConfig:
    """Knobs shared by the alignment and structural losses.

    alpha balances temporal vs. label cost inside the cost matrix, beta
    scales the cardinality penalty, and weights (one per dimension, summing
    to 1) weight the per-dimension label distances.
    """

    alpha: float = 0.5
    beta: float = 0.5
    weights: dict[str, float] = field(default_factory=uniform_weights)

    def __post_init__(self) -> None:
        if not (0 < self.alpha < 1):
            raise ConfigError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.beta < 0:
            raise ConfigError(f"beta must be >= 0, got {self.beta}")
        if sorted(self.weights) != sorted(DIMENSION_IDS):
            raise ConfigError(
                f"weights must cover exactly the dimensions {DIMENSION_IDS}"
            )
        total = sum(self.weights.values())
        if abs(total - 1.0) > 1e-9:
            raise ConfigError(f"weights must sum to 1 (got {total!r})")
        if any(w <= 0 for w in self.weights.values()):
            raise ConfigError("every dimension weight must be > 0")


@dataclass(frozen=True)
class AlignmentResult:
    """Matched shot pairs plus the alignment loss and its ingredients."""

    matches: tuple[tuple[int, int], ...]
    per_pair_iou: tuple[float, ...]
    per_pair_label_distance: tuple[float, ...]
    cardinality_penalty: float
    l_align: float

    @property
    def mean_iou(self) -> float:
        if not self.per_pair_iou:
            return 0.0
        return sum(self.per_pair_iou) / len(self.per_pair_iou)


def temporal_iou(a: SemanticShot, b: SemanticShot) -> float:
    """Interval intersection-over-union; disjoint -> 0, identical -> 1."""
    inter = min(a.end_s, b.end_s) - max(a.start_s, b.start_s)
    if inter <= 0:
        return 0.0
    union = max(a.end_s, b.end_s) - min(a.start_s, b.start_s)
    return inter / union


def cost_matrix(
    pred: StructuralDocument,
    truth: StructuralDocument,
    cfg: AlignmentConfig,
    registry: TaxonomyRegistry,
) -> np.ndarray:
    """Pairwise cost alpha*(1 - IoU) + (1 - alpha)*label_distance, shape (N_pred, N_truth)."""
    from .objective import aggregate_label_distance  # deferred: objective builds on this module

    n_pred, n_truth = pred.n_shots, truth.n_shots
    costs = np.zeros((n_pred, n_truth), dtype=float)
    for i in range(n_pred):
        for j in range(n_truth):
            iou = temporal_iou(pred.shots[i], truth.shots[j])
            delta = aggregate_label_distance(pred.labels[i], truth.labels[j], cfg, registry)
            costs[i, j] = cfg.alpha * (1.0 - iou) + (1.0 - cfg.alpha) * delta
    return costs


# ---------------------------------------------------------------------------
# assignment solver
# ---------------------------------------------------------------------------


def hungarian_match(costs: np.ndarray | list[list[float]]) -> list[tuple[int, int]]:
    """Minimum-cost partial bijection of size min(rows, cols).

    Deterministic: rows are assigned in ascending index order and ties are
    resolved toward the lowest column index, so identical inputs always give
    identical matchings. Rectangular inputs are padded square with DUMMY_COST
    and dummy pairs dropped. Returns (row, col) pairs sorted by row.
    """
    matrix = np.asarray(costs, dtype=float)
    if matrix.ndim != 2:
        raise ValueError("cost matrix must be two-dimensional")
    n_rows, n_cols = matrix.shape
    if n_rows == 0 or n_cols == 0:
        return []
    if not np.isfinite(matrix).all():
        raise ValueError("cost matrix entries must be finite")
    if (matrix < 0).any():
        raise ValueError("cost matrix entries must be non-negative")

    n = max(n_rows, n_cols)
    padded = np.full((n, n), DUMMY_COST, dtype=float)
    padded[:n_rows, :n_cols] = matrix

    row_of_col = _solve_square(padded)
    pairs = [
        (row_of_col[j], j)
        for j in range(n)
        if row_of_col[j] < n_rows and j < n_cols
    ]
    pairs.sort()
    return pairs


def _solve_square(cost: np.ndarray) -> list[int]:
    """Shortest-augmenting-path assignment on a square matrix.

    Classic O(n^3) potentials formulation; returns column -> row. Scan order
    is ascending in both axes, which fixes tie-breaking deterministically.
    """
    n = cost.shape[0]
    inf = float("inf")
    u = [0.0] * (n + 1)
    v = [0.0] * (n + 1)
    p = [0] * (n + 1)  # p[j] = row (1-based) assigned to column j; 0 = free
    way = [0] * (n + 1)
    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        minv = [inf] * (n + 1)
        used = [False] * (n + 1)
        while True:
            used[j0] = True
            i0 = p[j0]
            delta = inf
            j1 = 0
            for j in range(1, n + 1):
                if used[j]:
                    continue
                cur = cost[i0 - 1, j - 1] - u[i0] - v[j]
                if cur < minv[j]:
                    minv[j] = cur
                    way[j] = j0
                if minv[j] < delta:
                    delta = minv[j]
                    j1 = j
            for j in range(n + 1):
                if used[j]:
                    u[p[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1
    return [p[j] - 1 for j in range(1, n + 1)]


# ---------------------------------------------------------------------------
# alignment loss
# ---------------------------------------------------------------------------


def cardinality_penalty_fraction(n_pred: int, n_truth: int) -> float:
    """|N_pred - N_truth| / max(N_pred, N_truth); 0 when both are empty."""
    if max(n_pred, n_truth) == 0:
        return 0.0
    return abs(n_pred - n_truth) / max(n_pred, n_truth)


def align(
    pred: StructuralDocument,
    truth: StructuralDocument,
    cfg: AlignmentConfig,
    registry: TaxonomyRegistry,
) -> AlignmentResult:
    """Hungarian-match the two shot sequences and compute the alignment loss.

    When one side is empty the matched mean term takes its worst-case value 1
    so the loss stays finite and maximal.
    """
    from .objective import aggregate_label_distance

    n_pred, n_truth = pred.n_shots, truth.n_shots
    card_frac = cardinality_penalty_fraction(n_pred, n_truth)
    penalty = cfg.beta * card_frac

    if n_pred == 0 or n_truth == 0:
        return AlignmentResult(
            matches=(),
            per_pair_iou=(),
            per_pair_label_distance=(),
            cardinality_penalty=penalty,
            l_align=1.0 + penalty,
        )

    costs = cost_matrix(pred, truth, cfg, registry)
    matches = hungarian_match(costs)
    ious = tuple(temporal_iou(pred.shots[i], truth.shots[j]) for i, j in matches)
    deltas = tuple(
        aggregate_label_distance(pred.labels[i], truth.labels[j], cfg, registry)
        for i, j in matches
    )
    mean_cost = sum(1.0 - x for x in ious) / len(matches)
    return AlignmentResult(
        matches=tuple(matches),
        per_pair_iou=ious,
        per_pair_label_distance=deltas,
        cardinality_penalty=penalty,
        l_align=mean_cost + penalty,
    )
