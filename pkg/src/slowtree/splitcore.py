"""Weighted node statistics and exhaustive best-split search."""
from dataclasses import dataclass

import numpy as np

from . import _kernels as K

SIMPLEX_TOL = 1e-12


def as_weights(w):
    """Validate and return w as a float array on the simplex."""
    w = np.asarray(w, dtype=float)
    if w.ndim != 1 or np.any(w < 0) or not np.all(np.isfinite(w)):
        raise ValueError("weights must be a finite nonnegative vector")
    s = w.sum()
    if not abs(s - 1.0) <= SIMPLEX_TOL * max(1, w.size):
        raise ValueError(f"weights must sum to 1 (got {s!r})")
    if not np.any(w > 0):
        raise ValueError("weights have empty support")
    return w


def uniform_weights(n):
    return np.full(n, 1.0 / n)


def normalize(w):
    w = np.asarray(w, dtype=float)
    return w / w.sum()


def herfindahl(w):
    """Concentration sum(w_i^2) of a simplex weight vector, in [1/N, 1]."""
    w = np.asarray(w, dtype=float)
    return float(np.dot(w, w))


def weighted_sse_stats(y, w):
    """(weighted mean, weighted SSE about it) for simplex weights."""
    y = np.asarray(y, dtype=float)
    w = np.asarray(w, dtype=float)
    mean = float(np.dot(w, y))
    d = y - mean
    return mean, float(np.dot(w, d * d))


@dataclass(frozen=True)
class SplitResult:
    feature: int
    threshold: float
    left_mean: float
    right_mean: float
    weighted_sse: float
    parent_sse: float


def presort(X):
    """Per-feature stable argsort, shape (K, N)."""
    X = np.asarray(X, dtype=float)
    return np.ascontiguousarray(np.argsort(X, axis=0, kind="stable").T).astype(np.int64)


def find_best_split(X, y, w, candidate_features=None, order=None,
                    min_mass=K.MIN_SIDE_MASS, rel_tol=K.REL_TOL):
    """Minimize the two-sided weighted SSE over features and midpoints.

    Only observations with positive weight define candidate thresholds.
    Ties go to the lowest feature index, then the smallest threshold.
    Returns None when no split improves on the parent by more than
    rel_tol times the parent SSE.
    """
    X = np.ascontiguousarray(X, dtype=float)
    y = np.ascontiguousarray(y, dtype=float)
    w = np.ascontiguousarray(w, dtype=float)
    if candidate_features is None:
        feats = np.arange(X.shape[1], dtype=np.int64)
    else:
        feats = np.unique(np.asarray(candidate_features, dtype=np.int64))
        if feats.size == 0:
            raise ValueError("candidate_features is empty")
    if order is None:
        order = presort(X)
    k, c, sse, tss, lm, rm = K.best_split_weighted(X, y, w, order, feats, min_mass, rel_tol)
    if k < 0:
        return None
    return SplitResult(int(k), float(c), float(lm), float(rm), float(sse), float(tss))


def n_features_for(mtry_fraction, k):
    """ceil(mtry * K), at least one feature."""
    if not 0.0 < mtry_fraction <= 1.0:
        raise ValueError("mtry_fraction must lie in (0, 1]")
    return max(1, min(k, int(np.ceil(mtry_fraction * k - 1e-12))))
