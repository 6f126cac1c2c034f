"""JSON model files.

Layout: {"format_version": 1, "kind": <kind>, "feature_names": [...],
"payload": {...}}. Floats are written with repr precision so a reloaded
model predicts bit-for-bit like the original.
"""
import json
from dataclasses import asdict, fields

import numpy as np

from .cart import CartTree
from .ensembles import (Augmentation, BoogingConfig, BoogingModel, BoostModel, BtConfig,
                        ForestModel, RfConfig)
from .lasso import LassoModel
from .models import kind_of
from .sgt import SgtConfig, SgtModel

FORMAT_VERSION = 1


class ModelFormatError(ValueError):
    pass


def _tree_to_nested(feature, threshold, left, right, value, node=0):
    if feature[node] < 0:
        return {"value": float(value[node])}
    return {"feature": int(feature[node]), "threshold": float(threshold[node]),
            "left": _tree_to_nested(feature, threshold, left, right, value, left[node]),
            "right": _tree_to_nested(feature, threshold, left, right, value, right[node])}


def _nested_to_arrays(root):
    feat, thr, lft, rgt, val = [], [], [], [], []
    stack = [(root, -1, 0)]
    while stack:
        node, parent, side = stack.pop()
        i = len(feat)
        if parent >= 0:
            (lft if side == 0 else rgt)[parent] = i
        if "value" in node and "feature" not in node:
            feat.append(-1); thr.append(0.0); val.append(float(node["value"]))
            lft.append(-1); rgt.append(-1)
        else:
            feat.append(int(node["feature"])); thr.append(float(node["threshold"]))
            val.append(float(node.get("value", 0.0))); lft.append(-1); rgt.append(-1)
            stack.append((node["right"], i, 1))
            stack.append((node["left"], i, 0))
    return (np.array(feat, np.int64), np.array(thr, float), np.array(lft, np.int64),
            np.array(rgt, np.int64), np.array(val, float))


def _cart_payload(t):
    return _tree_to_nested(t.feature, t.threshold, t.left, t.right, t.value)


def _cart_from(p, k):
    f, t, l, r, v = _nested_to_arrays(p)
    return CartTree(f, t, l, r, v, np.zeros(len(f), np.int64), k)


def _bt_payload(m):
    trees = []
    for s in range(m.n_steps):
        trees.append(_tree_to_nested(m.feature[s], m.threshold[s], m.left[s], m.right[s],
                                     m.value[s]))
    return {"init": float(m.init), "nu": float(m.nu), "trees": trees,
            "config": asdict(m.config) if m.config else None}


def _bt_from(p, k):
    arrs = [_nested_to_arrays(t) for t in p["trees"]]
    S = len(arrs)
    width = max([len(a[0]) for a in arrs], default=1)
    F = np.full((S, width), -1, np.int64)
    T = np.zeros((S, width))
    L = np.full((S, width), -1, np.int64)
    R = np.full((S, width), -1, np.int64)
    V = np.zeros((S, width))
    for s, (f, t, l, r, v) in enumerate(arrs):
        n = len(f)
        F[s, :n], T[s, :n], L[s, :n], R[s, :n], V[s, :n] = f, t, l, r, v
    cfg = BtConfig(**p["config"]) if p.get("config") else None
    return BoostModel(float(p["init"]), float(p["nu"]), F, T, L, R, V, k, cfg)


def to_dict(model, feature_names=None):
    kind = kind_of(model)
    if kind == "cart":
        payload = {"tree": _cart_payload(model)}
        k = model.n_features
    elif kind == "sgt":
        leaves = [{"path": [[p.feature, p.threshold, p.kept_side, p.eta_used] for p in lf.path],
                   "value": lf.value, "train_h": lf.train_h, "capped": lf.capped}
                  for lf in model.leaves]
        payload = {"config": asdict(model.config), "leaves": leaves}
        k = model.n_features
    elif kind == "rf":
        payload = {"config": asdict(model.config) if model.config else None,
                   "members": [_cart_payload(t) for t in model.trees]}
        k = model.n_features
    elif kind == "bt":
        payload = _bt_payload(model)
        k = model.n_features
    elif kind == "booging":
        a = model.augmentation
        cfg = asdict(model.config) if model.config else None
        payload = {"config": cfg,
                   "augmentation": {"copies": a.copies, "noise_scale": a.noise_scale,
                                    "sd": [float(x) for x in a.sd], "seed": a.seed},
                   "members": [_bt_payload(m) for m in model.members]}
        k = model.n_features
    else:
        k = model.coef.shape[0]
        payload = {"intercept": model.intercept, "lambda": model.lam,
                   "coefficients": [{"index": j, "coef": float(model.coef[j]),
                                     "mean": float(model.x_mean[j]), "sd": float(model.x_sd[j])}
                                    for j in range(k)]}
    return {"format_version": FORMAT_VERSION, "kind": kind, "n_features": int(k),
            "feature_names": list(feature_names) if feature_names is not None else None,
            "payload": payload}


def from_dict(doc):
    if not isinstance(doc, dict) or "kind" not in doc or "payload" not in doc:
        raise ModelFormatError("not a model document")
    if doc.get("format_version") != FORMAT_VERSION:
        raise ModelFormatError(f"unsupported format_version {doc.get('format_version')!r}")
    kind, p, k = doc["kind"], doc["payload"], int(doc["n_features"])
    if kind == "cart":
        return _cart_from(p["tree"], k)
    if kind == "sgt":
        from .sgt import PathFilter, SgtLeaf

        leaves = [SgtLeaf(tuple(PathFilter(int(f), float(c), s, float(e))
                                for f, c, s, e in lf["path"]),
                          float(lf["value"]), float(lf["train_h"]), bool(lf["capped"]))
                  for lf in p["leaves"]]
        return SgtModel.from_leaves(leaves, k, _cfg(SgtConfig, p.get("config")))
    if kind == "rf":
        return ForestModel([_cart_from(t, k) for t in p["members"]], k,
                           _cfg(RfConfig, p.get("config")))
    if kind == "bt":
        return _bt_from(p, k)
    if kind == "booging":
        a = p["augmentation"]
        aug = Augmentation(int(a["copies"]), float(a["noise_scale"]), np.array(a["sd"], float),
                           int(a["seed"]))
        kk = k * (1 + aug.copies)
        cfg = None
        if p.get("config"):
            c = dict(p["config"])
            c["bt"] = BtConfig(**c["bt"])
            cfg = BoogingConfig(**c)
        return BoogingModel([_bt_from(m, kk) for m in p["members"]], aug, k, cfg)
    if kind == "lasso":
        rec = sorted(p["coefficients"], key=lambda r: r["index"])
        return LassoModel(np.array([r["coef"] for r in rec], float), float(p["intercept"]),
                          float(p["lambda"]), np.array([r["mean"] for r in rec], float),
                          np.array([r["sd"] for r in rec], float))
    raise ModelFormatError(f"unknown model kind {kind!r}")


def _cfg(cls, d):
    if not d:
        return None
    names = {f.name for f in fields(cls)}
    return cls(**{k: v for k, v in d.items() if k in names})


def save_model(model, path, feature_names=None):
    with open(path, "w") as fh:
        json.dump(to_dict(model, feature_names), fh)


def load_model(path):
    """Returns (model, feature_names or None)."""
    with open(path) as fh:
        doc = json.load(fh)
    return from_dict(doc), doc.get("feature_names")
