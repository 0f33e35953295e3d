"""Comparator methods: inductive nearest-class-mean and support-seeded K-Means."""

from __future__ import annotations

import numpy as np

from .episode import EpisodeView
from .mapclassify import Prediction, init_centers


def _squared_distances(query: np.ndarray, centers: np.ndarray) -> np.ndarray:
    q2 = (query**2).sum(axis=1)[:, None]
    c2 = (centers**2).sum(axis=1)[None, :]
    return np.maximum(q2 + c2 - 2.0 * (query @ centers.T), 0.0)


def _one_hot(labels: np.ndarray, w: int) -> np.ndarray:
    probs = np.zeros((labels.shape[0], w))
    probs[np.arange(labels.shape[0]), labels] = 1.0
    return probs


def classify_ncm(view: EpisodeView) -> Prediction:
    """Nearest class mean: each query takes the class of the closest support
    centroid in Euclidean distance, ties toward the lowest class id. Strictly
    inductive; no query influences another."""
    centers = init_centers(view.support_feats, view.support_labels, view.w)
    d2 = _squared_distances(view.query_feats, centers)
    labels = np.argmin(d2, axis=1)
    return Prediction(labels=labels, probabilities=_one_hot(labels, view.w))


def classify_kmeans(view: EpisodeView, n_steps: int = 30) -> Prediction:
    """Hard clustering seeded at the support means.

    Each step assigns every query to its nearest centroid, then recomputes
    each centroid as the mean of its assigned queries plus that class's
    support rows (supports are anchored: they contribute to their own class
    and are never reassigned, so a cluster that loses every query falls back
    to its support mean instead of degenerating). Labels are the last
    assignment.
    """
    w = view.w
    sup_counts = np.bincount(view.support_labels, minlength=w).astype(np.float64)
    sup_sums = np.zeros((w, view.d))
    np.add.at(sup_sums, view.support_labels, view.support_feats)
    centers = sup_sums / sup_counts[:, None]
    assign = np.zeros(view.query_feats.shape[0], dtype=np.int64)
    for _ in range(n_steps):
        d2 = _squared_distances(view.query_feats, centers)
        assign = np.argmin(d2, axis=1)
        counts = sup_counts + np.bincount(assign, minlength=w)
        sums = sup_sums.copy()
        np.add.at(sums, assign, view.query_feats)
        centers = sums / counts[:, None]
    return Prediction(labels=assign, probabilities=_one_hot(assign, w))


def kmeans_objective(view: EpisodeView, assign: np.ndarray, centers: np.ndarray) -> float:
    """Within-cluster squared distance including the anchored supports."""
    q_cost = ((view.query_feats - centers[assign]) ** 2).sum()
    s_cost = ((view.support_feats - centers[view.support_labels]) ** 2).sum()
    return float(q_cost + s_cost)
