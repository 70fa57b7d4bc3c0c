"""Two-dimensional layout of trees from their pairwise distances."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .consensus import DistanceCache, pairwise_distances


def classical_mds(d: np.ndarray, n_components: int = 2) -> tuple[np.ndarray, float]:
    """Torgerson scaling of a distance matrix.

    Returns the coordinates and Kruskal's stress-1 of the layout.
    """
    d = np.asarray(d, dtype=float)
    k = d.shape[0]
    if k == 0:
        return np.zeros((0, n_components)), 0.0
    j = np.eye(k) - np.full((k, k), 1.0 / k)
    b = -0.5 * j @ (d**2) @ j
    vals, vecs = np.linalg.eigh(b)
    order = np.argsort(vals)[::-1][:n_components]
    vals = np.clip(vals[order], 0.0, None)
    x = vecs[:, order] * np.sqrt(vals)
    if x.shape[1] < n_components:
        x = np.hstack([x, np.zeros((k, n_components - x.shape[1]))])
    fitted = np.sqrt(((x[:, None, :] - x[None, :, :]) ** 2).sum(-1))
    denom = float((d**2).sum())
    stress = float(np.sqrt(((d - fitted) ** 2).sum() / denom)) if denom > 0 else 0.0
    return x, stress


class TreeEmbedding(BaseEstimator, TransformerMixin):
    """Classical MDS of a tree collection under the move distance."""

    def __init__(self, n_components: int = 2):
        self.n_components = n_components

    def fit(self, X, y=None):
        self.dissimilarity_matrix_ = pairwise_distances(list(X), DistanceCache())
        self.embedding_, self.stress_ = classical_mds(self.dissimilarity_matrix_, self.n_components)
        return self

    def fit_transform(self, X, y=None):
        return self.fit(X).embedding_
