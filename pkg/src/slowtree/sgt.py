"""Slow-Growing Trees.

Instead of sending each observation to one child, a split keeps the full
weight of the chosen side and multiplies the rest by (1 - eta); weights are
renormalized to the simplex at every node. A node stops growing once its
Herfindahl index sum(w_i^2) reaches h_bar. Prediction mixes all leaf values
with weights given by the product of filter factors along each leaf's path.
"""
import logging
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .splitcore import n_features_for, presort

log = logging.getLogger(__name__)

LEQ, GT = "leq", "gt"
SIDES = (LEQ, GT)
NODE_STATUS = {K.ST_SPLIT: "split", K.ST_LEAF: "leaf", K.ST_CAPPED: "capped",
               K.ST_DEAD_FLAT: "dead_flat", K.ST_DEAD_CONTRA: "dead_contra"}
H_TOL = 1e-12


@dataclass(frozen=True)
class SgtConfig:
    """Learning rate, stopping and randomization settings.

    trim_contradictions also trims a child whose kept side lies entirely in
    a region already rejected by an ancestor split on the same feature.
    Such a child can only pull weights back towards flat, and without the
    trim deep trees with small eta blow up combinatorially.
    max_nodes bounds the visited-node count as a last-resort guard.
    """

    eta0: float = 0.1
    eta_increment: float = 0.01
    eta_plateau: float = 0.5
    schedule_enabled: bool = True
    h_bar: float = 0.25
    mtry_fraction: float = 0.75
    max_depth_cap: int = 64
    dead_branch_tol: float = 1e-10
    trim_contradictions: bool = True
    max_nodes: int = 5_000_000
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.eta0 <= 1.0:
            raise ValueError("eta0 must lie in (0, 1]")
        if self.eta_increment < 0:
            raise ValueError("eta_increment must be >= 0")
        if not 0.0 < self.h_bar <= 1.0:
            raise ValueError("h_bar must lie in (0, 1]")
        if self.max_depth_cap < 0:
            raise ValueError("max_depth_cap must be >= 0")
        n_features_for(self.mtry_fraction, 1)


def eta_at_depth(cfg, depth):
    if depth < 0:
        raise ValueError("depth must be >= 0")
    return float(K.eta_schedule(cfg.eta0, cfg.eta_increment, cfg.eta_plateau,
                                cfg.schedule_enabled, depth))


@dataclass(frozen=True)
class PathFilter:
    feature: int
    threshold: float
    kept_side: str
    eta_used: float

    def __post_init__(self):
        if self.kept_side not in SIDES:
            raise ValueError(f"kept_side must be one of {SIDES}")
        if not 0.0 < self.eta_used <= 1.0:
            raise ValueError("eta_used must lie in (0, 1]")

    def keeps(self, X):
        X = np.atleast_2d(X)
        left = X[:, self.feature] <= self.threshold
        return left if self.kept_side == LEQ else ~left

    def factor(self, X):
        return np.where(self.keeps(X), 1.0, 1.0 - self.eta_used)


@dataclass(frozen=True)
class SgtLeaf:
    path: tuple
    value: float
    train_h: float
    capped: bool = False


def child_weights(w, filt, X):
    """Down-weight the rejected side by (1 - eta) and renormalize."""
    w = np.asarray(w, dtype=float)
    cw = w * filt.factor(X)
    tot = cw.sum()
    if tot < 1e-12:
        raise ValueError("no weight left on the kept side")
    return cw / tot


def is_dead_branch(w_child, tol=1e-10):
    """True when the weights are back to the flat initial distribution."""
    w = np.asarray(w_child, dtype=float)
    return bool(np.max(np.abs(w - 1.0 / w.size)) <= tol)


@dataclass(frozen=True, eq=False)
class SgtModel:
    """Leaves stored in flat arrays; leaf l owns filter rows
    leaf_off[l]:leaf_off[l+1] of (filt_feature, filt_threshold, filt_side,
    filt_eta) where side 0 = leq kept and 1 = gt kept."""

    config: SgtConfig
    n_features: int
    leaf_off: np.ndarray
    filt_feature: np.ndarray
    filt_threshold: np.ndarray
    filt_side: np.ndarray
    filt_eta: np.ndarray
    leaf_value: np.ndarray
    leaf_h: np.ndarray
    leaf_capped: np.ndarray
    trace: dict = field(default=None, repr=False)

    @property
    def n_leaves(self):
        return self.leaf_value.shape[0]

    @property
    def leaves(self):
        out = []
        for l in range(self.n_leaves):
            a, b = self.leaf_off[l], self.leaf_off[l + 1]
            path = tuple(PathFilter(int(self.filt_feature[q]), float(self.filt_threshold[q]),
                                    SIDES[self.filt_side[q]], float(self.filt_eta[q]))
                         for q in range(a, b))
            out.append(SgtLeaf(path, float(self.leaf_value[l]), float(self.leaf_h[l]),
                               bool(self.leaf_capped[l])))
        return out

    @classmethod
    def from_leaves(cls, leaves, n_features, config=None):
        off = [0]
        fk, fc, fs, fe = [], [], [], []
        for leaf in leaves:
            for p in leaf.path:
                fk.append(p.feature)
                fc.append(p.threshold)
                fs.append(SIDES.index(p.kept_side))
                fe.append(p.eta_used)
            off.append(len(fk))
        if not leaves:
            raise ValueError("model needs at least one leaf")
        return cls(config or SgtConfig(), int(n_features), np.array(off, np.int64),
                   np.array(fk, np.int64), np.array(fc, float), np.array(fs, np.int64),
                   np.array(fe, float), np.array([l.value for l in leaves], float),
                   np.array([l.train_h for l in leaves], float),
                   np.array([l.capped for l in leaves], np.int64))

    @property
    def depths(self):
        return np.diff(self.leaf_off)


def fit_sgt(train, cfg=SgtConfig(), keep_trace=False):
    """Grow a slow tree depth-first from uniform weights.

    With keep_trace the model carries every visited node (parent, depth,
    side, status, split, Herfindahl) for inspection.
    """
    train.check_learnable()
    X = np.ascontiguousarray(train.X)
    y = np.ascontiguousarray(train.y)
    m = n_features_for(cfg.mtry_fraction, train.k)
    out = K.grow_sgt(X, y, presort(X), cfg.eta0, cfg.eta_increment, cfg.eta_plateau,
                     cfg.schedule_enabled, cfg.h_bar, m, cfg.max_depth_cap,
                     cfg.dead_branch_tol, cfg.trim_contradictions,
                     int(cfg.seed) & 0xFFFFFFFF, K.MIN_SIDE_MASS, K.REL_TOL, H_TOL,
                     cfg.max_nodes)
    overflow = out[0]
    if overflow:
        raise RuntimeError(f"slow tree exceeded max_nodes={cfg.max_nodes}; "
                           "raise h_bar or eta, or lower max_depth_cap")
    off, fk, fc, fs, fe, val, lh, cap, lnode = out[1:10]
    if cap.any():
        log.debug("%d of %d leaves stopped at the depth cap", int(cap.sum()), len(val))
    trace = None
    if keep_trace:
        par, dep, side, st, nk, nc, nh = out[10:]
        trace = dict(parent=par, depth=dep, side=side, status=st, feature=nk,
                     threshold=nc, h=nh, leaf_node=lnode)
    return SgtModel(cfg, train.k, off, fk, fc, fs, fe, val, lh, cap, trace)


def _rows(model, X):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    if X.shape[1] != model.n_features:
        raise ValueError(f"expected {model.n_features} features, got {X.shape[1]}")
    return np.ascontiguousarray(X)


def leaf_membership_weights(model, x):
    """Normalized per-leaf weights for one feature row."""
    x = _rows(model, x)[0]
    raw = K.sgt_raw_memberships(model.leaf_off, model.filt_feature, model.filt_threshold,
                                model.filt_side, model.filt_eta, x)
    return raw / raw.sum()


def predict_sgt(model, X):
    X = _rows(model, X)
    return K.sgt_predict(model.leaf_off, model.filt_feature, model.filt_threshold,
                         model.filt_side, model.filt_eta, model.leaf_value, X)
