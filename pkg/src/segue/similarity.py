"""Candidate-ranking measures: cosine distance, Euclidean distance, and a
top-weighted DCG similarity, plus ranking of catalog start segments against a
predicted feature vector.

All comparisons happen in the original [0, 1] feature space: when a catalog is
standardized, both the prediction and the candidates' start segments are
mapped back through the catalog's stored statistics before scoring.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .catalog import Catalog

logger = logging.getLogger(__name__)

METRIC_NAMES = ("cosine", "l2", "dcg")


@dataclass(frozen=True)
class Metric:
    """A ranking measure plus its orientation.

    ``dcg_depth`` is how many top-ranked dimensions contribute to the DCG
    score; None means all of them (the catalog dimension).
    """

    kind: str
    dcg_depth: int | None = None

    def __post_init__(self) -> None:
        if self.kind not in METRIC_NAMES:
            raise ValueError(f"unknown metric '{self.kind}' (choose from {METRIC_NAMES})")
        if self.dcg_depth is not None and self.dcg_depth < 1:
            raise ValueError("dcg_depth must be >= 1")

    @property
    def higher_is_better(self) -> bool:
        return self.kind == "dcg"


@dataclass(frozen=True)
class RankedCandidates:
    """Candidate (track id, score) pairs, best first."""

    entries: list[tuple[str, float]]
    metric: Metric

    @property
    def best(self) -> tuple[str, float]:
        return self.entries[0]


@dataclass(frozen=True)
class NeighbourGap:
    """How close the best candidate is, and whether anything is close at all.

    ``margin`` is how much the best score beats the catalog-median score under
    the ranking metric. ``best_cosine_distance`` is metric-independent and
    drives no-near-neighbour detection.
    """

    best_id: str
    best_score: float
    median_score: float
    margin: float
    best_cosine_distance: float

    def no_near_neighbour(self, threshold: float = 0.5) -> bool:
        return self.best_cosine_distance > threshold


def cosine_distance(a: np.ndarray, b: np.ndarray) -> float:
    """1 - cos(a, b); in [0, 1] for nonnegative inputs, [0, 2] in general.

    A zero-norm argument compares as maximally dissimilar (distance 1).
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    norm_a = float(np.linalg.norm(a))
    norm_b = float(np.linalg.norm(b))
    if norm_a == 0.0 or norm_b == 0.0:
        logger.debug("cosine distance against a zero-norm vector; reporting 1.0")
        return 1.0
    return float(np.clip(1.0 - float(a @ b) / (norm_a * norm_b), 0.0, 2.0))


def l2_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Euclidean distance."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return float(np.linalg.norm(a - b))


def dcg_similarity(pred: np.ndarray, candidate: np.ndarray, depth: int | None = None) -> float:
    """Discount-weighted sum of candidate values over the prediction's top dimensions.

    The prediction ranks dimensions (descending value, ties to the lower
    index); the candidate contributes its value at rank i discounted by
    1 / log2(i + 1) for i = 1..depth. Only the prediction's ordering matters,
    so positive rescaling of the prediction never changes scores.
    """
    pred = np.asarray(pred, dtype=np.float64)
    candidate = np.asarray(candidate, dtype=np.float64)
    if pred.shape != candidate.shape:
        raise ValueError(f"dimension mismatch: {pred.shape} vs {candidate.shape}")
    dim = pred.shape[0]
    if depth is None:
        depth = dim
    if not 1 <= depth <= dim:
        raise ValueError(f"dcg depth {depth} outside [1, {dim}]")
    order = np.argsort(-pred, kind="stable")[:depth]
    discounts = 1.0 / np.log2(np.arange(1, depth + 1) + 1.0)
    return float(candidate[order] @ discounts)


def score(pred: np.ndarray, candidate: np.ndarray, metric: Metric) -> float:
    """Score one candidate under the metric (orientation per ``metric.higher_is_better``)."""
    if metric.kind == "cosine":
        return cosine_distance(pred, candidate)
    if metric.kind == "l2":
        return l2_distance(pred, candidate)
    return dcg_similarity(pred, candidate, metric.dcg_depth)


def rank_candidates(
    pred: np.ndarray,
    catalog: Catalog,
    metric: Metric,
    exclude: frozenset[str] | set[str] = frozenset(),
) -> RankedCandidates:
    """Rank all non-excluded tracks by comparing their start segments to ``pred``.

    ``pred`` must be in the catalog's segment-vector space; scoring happens in
    the original [0, 1] space. Ties break by ascending track id, so rankings
    are deterministic.
    """
    scored = _score_candidates(pred, catalog, metric, exclude)
    reverse = metric.higher_is_better
    ordered = sorted(scored, key=lambda item: (-item[1] if reverse else item[1], item[0]))
    return RankedCandidates(entries=ordered, metric=metric)


def nearest_neighbour_gap(
    pred: np.ndarray,
    catalog: Catalog,
    metric: Metric,
    exclude: frozenset[str] | set[str] = frozenset(),
) -> NeighbourGap:
    """Diagnose whether the prediction has a near neighbour among the candidates."""
    scored = _score_candidates(pred, catalog, metric, exclude)
    reverse = metric.higher_is_better
    ordered = sorted(scored, key=lambda item: (-item[1] if reverse else item[1], item[0]))
    best_id, best_score = ordered[0]
    median = float(np.median([s for _, s in scored]))
    margin = best_score - median if reverse else median - best_score
    pred_orig = catalog.to_original_space(np.asarray(pred, dtype=np.float64))
    best_cosine = min(
        cosine_distance(pred_orig, catalog.to_original_space(catalog.tracks[tid].start_segment()))
        for tid, _ in scored
    )
    return NeighbourGap(
        best_id=best_id,
        best_score=best_score,
        median_score=median,
        margin=margin,
        best_cosine_distance=best_cosine,
    )


def _score_candidates(
    pred: np.ndarray,
    catalog: Catalog,
    metric: Metric,
    exclude: frozenset[str] | set[str],
) -> list[tuple[str, float]]:
    candidates = [track for track in catalog if track.id not in exclude]
    if not candidates:
        raise ValueError("no candidate tracks remain")
    pred_orig = catalog.to_original_space(np.asarray(pred, dtype=np.float64))
    if metric.kind == "dcg" and metric.dcg_depth is not None and metric.dcg_depth > catalog.dimension:
        raise ValueError(f"dcg depth {metric.dcg_depth} exceeds catalog dimension {catalog.dimension}")
    return [
        (track.id, score(pred_orig, catalog.to_original_space(track.start_segment()), metric))
        for track in candidates
    ]
