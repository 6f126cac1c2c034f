"""Hard-threshold regression trees and the depth-2 basis expansion."""
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .splitcore import n_features_for, presort
from .tabular import DataError

UNLIMITED = 10**6


@dataclass(frozen=True)
class CartConfig:
    """max_depth=None grows without a depth limit. A node is split only
    when it holds more than min_node_size observations; each child keeps at
    least min_leaf_size."""

    max_depth: int = None
    min_node_size: int = 5
    min_leaf_size: int = 1
    mtry_fraction: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.min_node_size < 1 or self.min_leaf_size < 1:
            raise ValueError("min_node_size and min_leaf_size must be >= 1")
        if self.max_depth is not None and self.max_depth < 0:
            raise ValueError("max_depth must be >= 0")
        n_features_for(self.mtry_fraction, 1)


@dataclass(frozen=True)
class CartTree:
    """Array-backed binary tree; leaves have feature == -1."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    n_node: np.ndarray = field(repr=False)
    n_features: int

    @property
    def n_nodes(self):
        return self.feature.shape[0]

    @property
    def n_leaves(self):
        return int(np.sum(self.feature < 0))

    def depth(self, node=0):
        if self.feature[node] < 0:
            return 0
        return 1 + max(self.depth(self.left[node]), self.depth(self.right[node]))


def _depth_arg(max_depth):
    return UNLIMITED if max_depth is None else int(max_depth)


def fit_cart_arrays(X, y, cnt, cfg, order=None):
    """Fit on rows weighted by integer multiplicities cnt (0 = not drawn)."""
    X = np.ascontiguousarray(X, dtype=float)
    y = np.ascontiguousarray(y, dtype=float)
    if order is None:
        order = presort(X)
    m = n_features_for(cfg.mtry_fraction, X.shape[1])
    f, t, l, r, v, ne, nn = K.build_tree(
        X, y, np.ascontiguousarray(cnt, dtype=np.int64), order, _depth_arg(cfg.max_depth),
        cfg.min_node_size, cfg.min_leaf_size, m, int(cfg.seed) & 0xFFFFFFFF, K.REL_TOL)
    return CartTree(f[:nn].copy(), t[:nn].copy(), l[:nn].copy(), r[:nn].copy(),
                    v[:nn].copy(), ne[:nn].copy(), X.shape[1])


def fit_cart(train, cfg=CartConfig()):
    train.check_learnable()
    if train.n < cfg.min_node_size:
        raise DataError(f"N={train.n} is below min_node_size={cfg.min_node_size}")
    return fit_cart_arrays(train.X, train.y, np.ones(train.n, np.int64), cfg)


def _check_k(X, k):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    if X.shape[1] != k:
        raise ValueError(f"expected {k} features, got {X.shape[1]}")
    return np.ascontiguousarray(X)


def predict_cart(tree, X):
    X = _check_k(X, tree.n_features)
    return K.predict_tree(tree.feature, tree.threshold, tree.left, tree.right, tree.value, X)


# basis expansion ------------------------------------------------------------


@dataclass(frozen=True)
class BasisExpansion:
    """Two equivalent additive forms of a depth-2 tree.

    Split indicators: d_x+ = 1(x_kx > c_x) at the root, d_z+ on the d_x+
    branch and d_q+ on the d_x- branch (d- = 1 - d+).
    theta weights the four cells (d_x+ d_z+, d_x+ d_z-, d_x- d_q+, d_x- d_q-);
    beta weights (d_x+, d_x+ d_z+, d_x-, d_x- d_q+).
    """

    root: tuple
    z_split: tuple
    q_split: tuple
    theta: np.ndarray
    beta: np.ndarray

    def indicators(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        dx = (X[:, self.root[0]] > self.root[1]).astype(float)
        dz = (X[:, self.z_split[0]] > self.z_split[1]).astype(float) if self.z_split else np.ones(len(X))
        dq = (X[:, self.q_split[0]] > self.q_split[1]).astype(float) if self.q_split else np.ones(len(X))
        return dx, dz, dq

    def predict_theta(self, X):
        dx, dz, dq = self.indicators(X)
        t = self.theta
        return t[0] * dx * dz + t[1] * dx * (1 - dz) + t[2] * (1 - dx) * dq + t[3] * (1 - dx) * (1 - dq)

    def predict_beta(self, X):
        dx, dz, dq = self.indicators(X)
        b = self.beta
        return b[0] * dx + b[1] * dx * dz + b[2] * (1 - dx) + b[3] * (1 - dx) * dq


def beta_from_theta(theta):
    a1, a2, g1, g2 = theta
    return np.array([a2, a1 - a2, g2, g1 - g2], dtype=float)


def to_basis_expansion(tree):
    """Rewrite a tree of depth <= 2 in both additive parameterizations.

    A depth-1 tree is the sub-case where each root child is a leaf, so both
    of its cells carry that leaf's value. Trees deeper than 2, or with one
    root child split and the other not, are rejected.
    """
    f, t, l, r, v = tree.feature, tree.threshold, tree.left, tree.right, tree.value
    if f[0] < 0:
        raise ValueError("tree has no split; nothing to expand")
    if tree.depth() > 2:
        raise ValueError("basis expansion needs a tree of depth at most 2")
    hi, lo = r[0], l[0]  # hi is the x > c branch (d_x+)

    def cell(node):
        if f[node] < 0:
            return None, v[node], v[node]
        if f[l[node]] >= 0 or f[r[node]] >= 0:
            raise ValueError("asymmetric tree")
        return (int(f[node]), float(t[node])), v[r[node]], v[l[node]]

    if (f[hi] < 0) != (f[lo] < 0):
        raise ValueError("asymmetric tree")
    zs, a1, a2 = cell(hi)
    qs, g1, g2 = cell(lo)
    theta = np.array([a1, a2, g1, g2], dtype=float)
    return BasisExpansion((int(f[0]), float(t[0])), zs, qs, theta, beta_from_theta(theta))
