"""Datasets, CSV ingestion, holdout/fold plans and seed derivation."""
import logging
import math
import os
import zlib
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

log = logging.getLogger(__name__)

MISSING_MARKERS = ["", "NA", "N/A", "NaN", "nan", "null", "NULL", "?", "."]


class DataError(ValueError):
    pass


def _frozen(a, dtype=float):
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Dataset:
    """Feature matrix X (N x K), target y (N,) and feature names.

    Arrays are copied and made read-only on construction.
    """

    X: np.ndarray
    y: np.ndarray
    feature_names: tuple = None

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        y = np.asarray(self.y, dtype=float).ravel()
        if X.ndim != 2:
            raise DataError("X must be two-dimensional")
        if X.shape[0] != y.shape[0]:
            raise DataError(f"X has {X.shape[0]} rows but y has {y.shape[0]}")
        if not np.all(np.isfinite(X)) or not np.all(np.isfinite(y)):
            raise DataError("X and y must be finite")
        names = self.feature_names
        if names is None:
            names = tuple(f"x{j + 1}" for j in range(X.shape[1]))
        names = tuple(str(s) for s in names)
        if len(names) != X.shape[1]:
            raise DataError("feature_names length does not match X")
        object.__setattr__(self, "X", _frozen(X))
        object.__setattr__(self, "y", _frozen(y))
        object.__setattr__(self, "feature_names", names)

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def k(self):
        return self.X.shape[1]

    def subset(self, idx):
        idx = np.asarray(idx, dtype=np.int64)
        return Dataset(self.X[idx], self.y[idx], self.feature_names)

    def check_learnable(self):
        if self.n < 2 or self.k < 1:
            raise DataError(f"need N >= 2 and K >= 1, got N={self.n}, K={self.k}")


def load_csv(path, target_column):
    """Read a header-first, comma-separated numeric CSV into a Dataset.

    Rows holding a missing marker (NA, ?, empty, ...) or a non-finite value
    are dropped and the count is logged as a warning.
    """
    if not os.path.isfile(path):
        raise FileNotFoundError(f"no such data file: {path}")
    df = pd.read_csv(path, na_values=MISSING_MARKERS, keep_default_na=True,
                     skipinitialspace=True)
    df.columns = [str(c).strip() for c in df.columns]
    if target_column not in df.columns:
        raise DataError(f"target column '{target_column}' not found in {path}")
    for col in df.columns:
        if not pd.api.types.is_numeric_dtype(df[col]):
            bad = pd.to_numeric(df[col], errors="coerce").isna() & df[col].notna()
            if bad.any():
                raise DataError(f"column '{col}' is not numeric "
                                f"(e.g. {df[col][bad].iloc[0]!r})")
            df[col] = pd.to_numeric(df[col], errors="coerce")
    vals = df.to_numpy(dtype=float)
    ok = np.all(np.isfinite(vals), axis=1)
    dropped = int((~ok).sum())
    if dropped:
        log.warning("dropped %d row(s) with missing values from %s", dropped, path)
    df = df[ok]
    if len(df) == 0:
        raise DataError(f"no rows left in {path} after dropping missing values")
    feats = [c for c in df.columns if c != target_column]
    return Dataset(df[feats].to_numpy(dtype=float), df[target_column].to_numpy(dtype=float),
                   tuple(feats))


@dataclass(frozen=True)
class HoldoutPlan:
    mode: str = "random"
    train_fraction: float = 0.7
    seed: int = 0

    def __post_init__(self):
        if self.mode not in ("random", "temporal"):
            raise ValueError(f"unknown holdout mode {self.mode!r}")
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError("train_fraction must lie in (0, 1)")


def holdout_indices(n, plan):
    n_train = int(math.floor(plan.train_fraction * n))
    if n_train < 1 or n_train >= n:
        raise DataError(f"train fraction {plan.train_fraction} leaves an empty side for N={n}")
    if plan.mode == "temporal":
        return np.arange(n_train), np.arange(n_train, n)
    perm = np.random.default_rng(plan.seed).permutation(n)
    return np.sort(perm[:n_train]), np.sort(perm[n_train:])


def split_holdout(d, plan):
    tr, te = holdout_indices(d.n, plan)
    return d.subset(tr), d.subset(te)


@dataclass(frozen=True)
class FoldPlan:
    k_folds: int
    assignments: np.ndarray = field(repr=False)
    seed: int = 0

    def fold_indices(self, f):
        """(train_idx, valid_idx) for fold f."""
        a = self.assignments
        return np.flatnonzero(a != f), np.flatnonzero(a == f)

    def __iter__(self):
        for f in range(self.k_folds):
            yield self.fold_indices(f)


def make_folds(n, k_folds, seed=0):
    if k_folds < 2:
        raise ValueError("k_folds must be at least 2")
    if k_folds > n:
        raise ValueError(f"cannot make {k_folds} folds from {n} observations")
    perm = np.random.default_rng(seed).permutation(n)
    a = np.empty(n, dtype=np.int64)
    a[perm] = np.arange(n) % k_folds
    a.setflags(write=False)
    return FoldPlan(k_folds, a, seed)


# seeds ----------------------------------------------------------------------


def _key(part):
    if isinstance(part, (int, np.integer)):
        return int(part) & 0xFFFFFFFF
    return zlib.crc32(str(part).encode())


def child_seed(master, *path):
    """Stable 32-bit seed for a named sub-stream of a master seed.

    The same (master, path) always maps to the same seed, and unrelated paths
    do not interact, so adding a component never shifts another's draws.
    """
    ss = np.random.SeedSequence(int(master), spawn_key=tuple(_key(p) for p in path))
    return int(ss.generate_state(1, dtype=np.uint32)[0])


def child_rng(master, *path):
    return np.random.default_rng(child_seed(master, *path))
