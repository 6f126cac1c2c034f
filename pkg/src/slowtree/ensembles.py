"""Random forests, stochastic gradient boosting and Booging."""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import _kernels as K
from .cart import CartConfig, _check_k, fit_cart_arrays
from .splitcore import presort
from .tabular import Dataset, child_rng, child_seed


def _map(fn, items, n_jobs):
    """Ordered map, threaded when n_jobs > 1 (kernels release the GIL)."""
    items = list(items)
    if n_jobs is None or n_jobs <= 1 or len(items) <= 1:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=n_jobs) as ex:
        return list(ex.map(fn, items))


def _member_mean(preds):
    # members are stacked in a fixed order, so the mean does not depend on
    # which thread produced which row
    return np.mean(np.vstack(preds), axis=0)


# random forest ----------------------------------------------------------------


@dataclass(frozen=True)
class RfConfig:
    n_trees: int = 500
    mtry_fraction: float = 1 / 3
    min_node_size: int = 5
    bootstrap: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.n_trees < 1:
            raise ValueError("n_trees must be >= 1")


@dataclass(frozen=True, eq=False)
class ForestModel:
    trees: list
    n_features: int
    config: RfConfig = None

    def member_predictions(self, X):
        X = _check_k(X, self.n_features)
        return np.vstack([K.predict_tree(t.feature, t.threshold, t.left, t.right, t.value, X)
                          for t in self.trees])


def fit_rf(train, cfg=RfConfig(), n_jobs=1):
    """Bagged CART with per-split feature sampling; trees are grown until
    nodes hold min_node_size or fewer entries."""
    train.check_learnable()
    X = np.ascontiguousarray(train.X)
    y = np.ascontiguousarray(train.y)
    order = presort(X)
    n = train.n
    tcfg = CartConfig(max_depth=None, min_node_size=cfg.min_node_size,
                      mtry_fraction=cfg.mtry_fraction)

    def one(b):
        if cfg.bootstrap:
            rng = child_rng(cfg.seed, "rf-boot", b)
            cnt = np.bincount(rng.integers(0, n, n), minlength=n).astype(np.int64)
        else:
            cnt = np.ones(n, np.int64)
        return fit_cart_arrays(X, y, cnt, replace(tcfg, seed=child_seed(cfg.seed, "rf-tree", b)),
                               order)

    return ForestModel(_map(one, range(cfg.n_trees), n_jobs), train.k, cfg)


# boosting -------------------------------------------------------------------


@dataclass(frozen=True)
class BtConfig:
    """Squared-loss stochastic gradient boosting.

    Each step fits a tree of depth <= interaction_depth to the residuals of
    a subsample drawn without replacement; min_leaf_size applies to the
    subsample.
    """

    nu: float = 0.1
    n_steps: int = 500
    interaction_depth: int = 5
    subsample_fraction: float = 0.5
    min_leaf_size: int = 5
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.nu <= 1.0:
            raise ValueError("nu must lie in (0, 1]")
        if self.n_steps < 0:
            raise ValueError("n_steps must be >= 0")
        if not 0.0 < self.subsample_fraction <= 1.0:
            raise ValueError("subsample_fraction must lie in (0, 1]")
        if self.interaction_depth < 1 or self.min_leaf_size < 1:
            raise ValueError("interaction_depth and min_leaf_size must be >= 1")


@dataclass(frozen=True, eq=False)
class BoostModel:
    init: float
    nu: float
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    n_features: int
    config: BtConfig = None

    @property
    def n_steps(self):
        return self.feature.shape[0]

    def predict(self, X, n_steps=None):
        X = _check_k(X, self.n_features)
        s = self.n_steps if n_steps is None else min(int(n_steps), self.n_steps)
        return K.predict_boost(self.init, self.nu, self.feature, self.threshold, self.left,
                               self.right, self.value, s, X)

    def staged_predict(self, X, steps):
        """Predictions after each requested number of steps (sorted ascending)."""
        X = _check_k(X, self.n_features)
        out = {}
        F = np.full(X.shape[0], self.init)
        done = 0
        for s in sorted(steps):
            s = min(int(s), self.n_steps)
            if s > done:
                F = F + (K.predict_boost(0.0, self.nu, self.feature[done:s], self.threshold[done:s],
                                         self.left[done:s], self.right[done:s],
                                         self.value[done:s], s - done, X))
                done = s
            out[s] = F.copy()
        return out


def _boost_arrays(X, y, cfg, order=None):
    X = np.ascontiguousarray(X, dtype=float)
    y = np.ascontiguousarray(y, dtype=float)
    if order is None:
        order = presort(X)
    min_node = 2 * cfg.min_leaf_size - 1
    init, f, t, l, r, v, _ = K.boost(X, y, order, cfg.nu, cfg.n_steps, cfg.interaction_depth,
                                     cfg.subsample_fraction, min_node, cfg.min_leaf_size,
                                     int(cfg.seed) & 0xFFFFFFFF, K.REL_TOL)
    return BoostModel(init, cfg.nu, f, t, l, r, v, X.shape[1], cfg)


def fit_bt(train, cfg=BtConfig()):
    train.check_learnable()
    return _boost_arrays(train.X, train.y, cfg)


# booging --------------------------------------------------------------------


@dataclass(frozen=True)
class BoogingConfig:
    n_bags: int = 100
    bt: BtConfig = field(default_factory=lambda: BtConfig(nu=0.25, n_steps=500))
    augment_copies: int = 1
    augment_noise_scale: float = 0.33
    bootstrap: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.n_bags < 1:
            raise ValueError("n_bags must be >= 1")
        if self.augment_copies < 0:
            raise ValueError("augment_copies must be >= 0")


@dataclass(frozen=True)
class Augmentation:
    """Noisy copies of each feature; sd holds the training column sd."""

    copies: int
    noise_scale: float
    sd: np.ndarray
    seed: int

    def apply(self, X, stream="train"):
        X = np.asarray(X, dtype=float)
        if self.copies == 0:
            return np.ascontiguousarray(X)
        n, k = X.shape
        if k != self.sd.shape[0]:
            raise ValueError(f"expected {self.sd.shape[0]} features, got {k}")
        rng = child_rng(self.seed, "augment", stream, n)
        blocks = [X]
        for _ in range(self.copies):
            blocks.append(X + rng.standard_normal((n, k)) * (self.noise_scale * self.sd))
        return np.ascontiguousarray(np.hstack(blocks))


def make_augmentation(X, copies, noise_scale, seed):
    X = np.asarray(X, dtype=float)
    sd = X.std(axis=0, ddof=1) if X.shape[0] > 1 else np.zeros(X.shape[1])
    return Augmentation(int(copies), float(noise_scale), sd, int(seed))


def augment_features(d, copies, noise_scale, seed):
    """Append `copies` noisy duplicates of every column (noise sd =
    noise_scale times the column's sample sd)."""
    if copies < 0:
        raise ValueError("copies must be >= 0")
    aug = make_augmentation(d.X, copies, noise_scale, seed)
    names = list(d.feature_names)
    for c in range(copies):
        names += [f"{s}~{c + 1}" for s in d.feature_names]
    return Dataset(aug.apply(d.X), d.y, tuple(names))


@dataclass(frozen=True, eq=False)
class BoogingModel:
    members: list
    augmentation: Augmentation
    n_features: int
    config: BoogingConfig = None

    def member_predictions(self, X, stream="test"):
        X = _check_k(X, self.n_features)
        Xa = self.augmentation.apply(X, stream)
        return np.vstack([m.predict(Xa) for m in self.members])


def fit_booging(train, cfg=BoogingConfig(), n_jobs=1):
    """Bag high-learning-rate boosting runs over bootstrap resamples of a
    once-augmented training set."""
    train.check_learnable()
    aug = make_augmentation(train.X, cfg.augment_copies, cfg.augment_noise_scale,
                            child_seed(cfg.seed, "augment"))
    Xa = aug.apply(train.X, "train")
    y = np.ascontiguousarray(train.y)
    n = train.n

    def one(b):
        bt = replace(cfg.bt, seed=child_seed(cfg.seed, "bt", b))
        if cfg.bootstrap:
            idx = np.sort(child_rng(cfg.seed, "boog-boot", b).integers(0, n, n))
            return _boost_arrays(Xa[idx], y[idx], bt)
        return _boost_arrays(Xa, y, bt)

    return BoogingModel(_map(one, range(cfg.n_bags), n_jobs), aug, train.k, cfg)


def predict_ensemble(model, X):
    if isinstance(model, ForestModel):
        return _member_mean(model.member_predictions(X))
    if isinstance(model, BoogingModel):
        return _member_mean(model.member_predictions(X))
    if isinstance(model, BoostModel):
        return model.predict(X)
    raise TypeError(f"not an ensemble model: {type(model).__name__}")
