"""Episode sampling: w-way, s-shot tasks with replayable randomness.

An evaluation over N episodes derives per-episode seeds from one master seed
with :func:`sinkshot.rng.derive_seed`, so any single episode can be re-drawn
in isolation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .bank import FeatureBank
from .errors import ValidationError
from .rng import SplitMix64


@dataclass(frozen=True)
class EpisodeSpec:
    """One episode's shape: ``w`` ways, ``s`` shots, and either a single
    per-class query count (balanced) or a length-w vector (imbalanced)."""

    w: int
    s: int
    q_per_class: int | Sequence[int]
    seed: int = 0

    def __post_init__(self):
        if self.w < 2:
            raise ValidationError("w must be >= 2")
        if self.s < 1:
            raise ValidationError("s must be >= 1")
        q = self.query_counts
        if (q < 0).any():
            raise ValidationError("query counts must be nonnegative")
        if q.sum() < 1:
            raise ValidationError("at least one query count must be positive")

    @property
    def query_counts(self) -> np.ndarray:
        if np.isscalar(self.q_per_class):
            return np.full(self.w, int(self.q_per_class), dtype=np.int64)
        q = np.asarray(self.q_per_class, dtype=np.int64)
        if q.shape != (self.w,):
            raise ValidationError(f"q_per_class has length {q.size}, expected w={self.w}")
        return q


@dataclass(frozen=True)
class EpisodeView:
    """The label-blind slice of an episode handed to classifiers: support
    features with labels, query features without."""

    support_feats: np.ndarray
    support_labels: np.ndarray
    query_feats: np.ndarray
    w: int

    @property
    def d(self) -> int:
        return self.support_feats.shape[1]


@dataclass(frozen=True)
class Episode:
    """A sampled task. ``query_labels`` are held out for scoring only;
    classifiers receive :meth:`view`. Labels are episode-local ids in [0, w);
    ``class_map[j]`` is the bank class behind local class j."""

    support_feats: np.ndarray
    support_labels: np.ndarray
    query_feats: np.ndarray
    query_labels: np.ndarray
    class_map: np.ndarray
    w: int

    def view(self) -> EpisodeView:
        return EpisodeView(self.support_feats, self.support_labels, self.query_feats, self.w)


def sample_episode(bank: FeatureBank, spec: EpisodeSpec) -> Episode:
    """Draw an episode from ``bank``: ``w`` classes uniformly without
    replacement, then ``s + q_j`` samples per class uniformly without
    replacement, the first ``s`` forming the support. Deterministic given
    ``spec.seed``; support and query index sets are disjoint by construction.
    """
    if bank.num_classes < spec.w:
        raise ValidationError(f"bank has {bank.num_classes} classes, episode needs {spec.w}")
    q_counts = spec.query_counts
    rng = SplitMix64(spec.seed)
    class_map = rng.choose(bank.num_classes, spec.w)
    sup_rows, qry_rows = [], []
    sup_labels, qry_labels = [], []
    for local_j, bank_class in enumerate(class_map):
        members = bank.class_indices(int(bank_class))
        need = spec.s + int(q_counts[local_j])
        if members.size < need:
            raise ValidationError(
                f"class {bank_class} has {members.size} samples, episode needs {need}"
            )
        picked = members[rng.choose(members.size, need)]
        sup_rows.append(bank.features[picked[: spec.s]])
        qry_rows.append(bank.features[picked[spec.s :]])
        sup_labels.append(np.full(spec.s, local_j, dtype=np.int64))
        qry_labels.append(np.full(int(q_counts[local_j]), local_j, dtype=np.int64))
    return Episode(
        support_feats=np.vstack(sup_rows),
        support_labels=np.concatenate(sup_labels),
        query_feats=np.vstack(qry_rows),
        query_labels=np.concatenate(qry_labels),
        class_map=np.asarray(class_map, dtype=np.int64),
        w=spec.w,
    )


def episode_accuracy(prediction, episode: Episode) -> float:
    """Fraction of queries whose predicted local class matches the held-out label."""
    labels = np.asarray(prediction.labels)
    if labels.shape != episode.query_labels.shape:
        raise ValidationError(
            f"prediction covers {labels.shape[0]} queries, episode has {episode.query_labels.shape[0]}"
        )
    return float(np.mean(labels == episode.query_labels))
