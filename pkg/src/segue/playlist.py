"""Playlist generation and its diagnostics.

From a seed track, the engine repeatedly predicts the feature vector that
should come next from the segment history of everything chosen so far, then
appends the unused track whose start segment ranks best under the chosen
metric. Exports a stacked transition matrix (segment rows interleaved with
prediction rows) and a coherence report.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass

import numpy as np

from .catalog import Catalog
from .model import SequenceModel
from .rnn import predict_next
from .similarity import Metric, NeighbourGap, cosine_distance, nearest_neighbour_gap, rank_candidates

logger = logging.getLogger(__name__)

DEFAULT_NN_THRESHOLD = 0.5


@dataclass(frozen=True)
class PlaylistStep:
    """One selection: the prediction that drove it and what was chosen."""

    prediction: np.ndarray
    chosen_id: str
    chosen_score: float
    gap: NeighbourGap
    no_near_neighbour: bool


@dataclass
class Playlist:
    """An ordered track selection plus the per-step records behind it."""

    track_ids: list[str]
    steps: list[PlaylistStep]
    metric: Metric
    seed_id: str
    truncated: bool = False

    def __len__(self) -> int:
        return len(self.track_ids)

    def to_dict(self) -> dict:
        """JSON-ready representation (deterministic for identical playlists)."""
        return {
            "seed": self.seed_id,
            "metric": self.metric.kind,
            "dcg_depth": self.metric.dcg_depth,
            "tracks": list(self.track_ids),
            "truncated": self.truncated,
            "steps": [
                {
                    "prediction": step.prediction.tolist(),
                    "chosen": step.chosen_id,
                    "score": step.chosen_score,
                    "median_score": step.gap.median_score,
                    "margin": step.gap.margin,
                    "best_cosine_distance": step.gap.best_cosine_distance,
                    "no_near_neighbour": step.no_near_neighbour,
                }
                for step in self.steps
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Playlist":
        metric = Metric(kind=data["metric"], dcg_depth=data.get("dcg_depth"))
        steps = [
            PlaylistStep(
                prediction=np.asarray(entry["prediction"], dtype=np.float64),
                chosen_id=entry["chosen"],
                chosen_score=entry["score"],
                gap=NeighbourGap(
                    best_id=entry["chosen"],
                    best_score=entry["score"],
                    median_score=entry["median_score"],
                    margin=entry["margin"],
                    best_cosine_distance=entry["best_cosine_distance"],
                ),
                no_near_neighbour=entry["no_near_neighbour"],
            )
            for entry in data["steps"]
        ]
        return cls(
            track_ids=list(data["tracks"]),
            steps=steps,
            metric=metric,
            seed_id=data["seed"],
            truncated=data["truncated"],
        )


def generate(
    catalog: Catalog,
    model: SequenceModel,
    seed_id: str,
    length: int,
    metric: Metric,
    nn_threshold: float = DEFAULT_NN_THRESHOLD,
) -> Playlist:
    """Generate a playlist of up to ``length`` tracks starting from the seed.

    Each step predicts from the last N segment vectors of the tracks chosen so
    far (N being the model's context length) and appends the best-ranked
    unused track. Deterministic for identical inputs. If the catalog runs out
    before the target length, the playlist is returned truncated.
    """
    if length < 1:
        raise ValueError("length must be >= 1")
    if seed_id not in catalog:
        raise ValueError(f"seed track '{seed_id}' not in catalog")
    if not catalog.is_segmented:
        raise ValueError("catalog is not segmented")
    if model.dimension != catalog.dimension:
        raise ValueError(
            f"model dimension {model.dimension} != catalog dimension {catalog.dimension}"
        )
    chosen = [seed_id]
    history = [seg.features for seg in catalog.tracks[seed_id].segments]
    steps: list[PlaylistStep] = []
    truncated = False
    for _ in range(length - 1):
        if len(chosen) == len(catalog):
            truncated = True
            logger.warning(
                "catalog exhausted after %d of %d tracks; returning truncated playlist",
                len(chosen), length,
            )
            break
        prediction = predict_next(model, np.stack(history))
        exclude = frozenset(chosen)
        ranked = rank_candidates(prediction, catalog, metric, exclude=exclude)
        gap = nearest_neighbour_gap(prediction, catalog, metric, exclude=exclude)
        best_id, best_score = ranked.best
        event = gap.no_near_neighbour(nn_threshold)
        if event:
            logger.info(
                "no near neighbour for step %d: best cosine distance %.3f > %.3f",
                len(steps), gap.best_cosine_distance, nn_threshold,
            )
        steps.append(
            PlaylistStep(
                prediction=prediction,
                chosen_id=best_id,
                chosen_score=best_score,
                gap=gap,
                no_near_neighbour=event,
            )
        )
        chosen.append(best_id)
        history.extend(seg.features for seg in catalog.tracks[best_id].segments)
    return Playlist(track_ids=chosen, steps=steps, metric=metric, seed_id=seed_id, truncated=truncated)


@dataclass(frozen=True)
class TransitionMatrix:
    """Stacked segment vectors of the playlist's tracks with prediction rows between tracks.

    Row count is the total segment count plus (track count - 1) prediction
    rows. Labels are ``seg:<track_id>:<k>`` and ``pred:<step>``.
    """

    labels: list[str]
    rows: np.ndarray

    @property
    def row_count(self) -> int:
        return self.rows.shape[0]


def export_transition_matrix(playlist: Playlist, catalog: Catalog) -> TransitionMatrix:
    """Stack every chosen track's segment vectors, interleaving prediction rows."""
    labels: list[str] = []
    rows: list[np.ndarray] = []
    last = len(playlist.track_ids) - 1
    for index, track_id in enumerate(playlist.track_ids):
        if track_id not in catalog:
            raise ValueError(f"track '{track_id}' not in catalog")
        track = catalog.tracks[track_id]
        for k, seg in enumerate(track.segments):
            labels.append(f"seg:{track_id}:{k}")
            rows.append(seg.features)
        if index < last:
            labels.append(f"pred:{index}")
            rows.append(playlist.steps[index].prediction)
    return TransitionMatrix(labels=labels, rows=np.stack(rows))


def write_transition_csv(matrix: TransitionMatrix, path) -> None:
    """Write ``label,dim_0,...,dim_{D-1}`` rows."""
    dim = matrix.rows.shape[1]
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["label"] + [f"dim_{d}" for d in range(dim)])
        for label, row in zip(matrix.labels, matrix.rows):
            writer.writerow([label] + [repr(float(v)) for v in row])


def read_transition_csv(path) -> TransitionMatrix:
    """Parse a transition CSV back into labels and rows."""
    with open(path, "r", encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader)
        if not header or header[0] != "label":
            raise ValueError("not a transition matrix CSV")
        labels, rows = [], []
        for record in reader:
            labels.append(record[0])
            rows.append(np.array([float(v) for v in record[1:]]))
    return TransitionMatrix(labels=labels, rows=np.stack(rows))


def coherence_report(playlist: Playlist, catalog: Catalog) -> dict:
    """Quantify how coherent a playlist is.

    Reports the mean adjacent-track similarity (cosine of track-mean segment
    vectors), the seed-to-each-track similarity curve (drift), the count of
    no-near-neighbour events, and per-dimension variance pooled over all
    segment vectors in the playlist (fluctuation).
    """
    if len(playlist) < 2:
        raise ValueError("coherence report needs a playlist of at least 2 tracks")
    means = []
    for track_id in playlist.track_ids:
        if track_id not in catalog:
            raise ValueError(f"track '{track_id}' not in catalog")
        means.append(catalog.tracks[track_id].segment_matrix().mean(axis=0))
    adjacent = [
        1.0 - cosine_distance(means[i], means[i + 1]) for i in range(len(means) - 1)
    ]
    drift = [1.0 - cosine_distance(means[0], mean) for mean in means]
    pooled = np.vstack([catalog.tracks[tid].segment_matrix() for tid in playlist.track_ids])
    variance = pooled.var(axis=0)
    return {
        "metric": playlist.metric.kind,
        "track_count": len(playlist),
        "truncated": playlist.truncated,
        "mean_adjacent_similarity": float(np.mean(adjacent)),
        "adjacent_similarities": [float(v) for v in adjacent],
        "seed_similarity_curve": [float(v) for v in drift],
        "no_near_neighbour_events": int(sum(s.no_near_neighbour for s in playlist.steps)),
        "per_dimension_variance": [float(v) for v in variance],
        "mean_per_dimension_variance": float(variance.mean()),
    }
