"""Uniform fit/predict entry points keyed by model kind."""
from dataclasses import fields, replace

from .cart import CartConfig, CartTree, fit_cart, predict_cart
from .ensembles import (BoogingConfig, BoogingModel, BoostModel, BtConfig, ForestModel,
                        RfConfig, fit_bt, fit_booging, fit_rf, predict_ensemble)
from .lasso import LassoModel, fit_lasso, predict_lasso
from .sgt import SgtConfig, SgtModel, fit_sgt, predict_sgt

KINDS = ("cart", "rf", "bt", "booging", "sgt", "lasso")
BT_KEYS = {f.name for f in fields(BtConfig)} - {"seed"}


def _plain(cls, params, seed):
    names = {f.name for f in fields(cls)}
    bad = set(params) - names
    if bad:
        raise ValueError(f"unknown {cls.__name__} parameter(s): {sorted(bad)}")
    return cls(**{**params, "seed": seed})


def make_config(kind, params=None, seed=0):
    """Build the config object for `kind` from a flat parameter dict.

    Booging accepts the boosting keys (nu, n_steps, ...) at top level.
    """
    params = dict(params or {})
    if kind == "cart":
        return _plain(CartConfig, params, seed)
    if kind == "rf":
        return _plain(RfConfig, params, seed)
    if kind == "bt":
        return _plain(BtConfig, params, seed)
    if kind == "sgt":
        return _plain(SgtConfig, params, seed)
    if kind == "booging":
        bt = {k: params.pop(k) for k in list(params) if k in BT_KEYS}
        cfg = _plain(BoogingConfig, params, seed)
        return replace(cfg, bt=replace(cfg.bt, **bt))
    if kind == "lasso":
        if params:
            raise ValueError(f"lasso takes no parameters, got {sorted(params)}")
        return {"seed": seed}
    raise ValueError(f"unknown model kind {kind!r}; expected one of {KINDS}")


def fit_model(kind, train, params=None, seed=0, n_jobs=1):
    cfg = make_config(kind, params, seed)
    if kind == "cart":
        return fit_cart(train, cfg)
    if kind == "rf":
        return fit_rf(train, cfg, n_jobs=n_jobs)
    if kind == "bt":
        return fit_bt(train, cfg)
    if kind == "booging":
        return fit_booging(train, cfg, n_jobs=n_jobs)
    if kind == "sgt":
        return fit_sgt(train, cfg)
    return fit_lasso(train, seed=seed)


def predict(model, X):
    if isinstance(model, CartTree):
        return predict_cart(model, X)
    if isinstance(model, SgtModel):
        return predict_sgt(model, X)
    if isinstance(model, LassoModel):
        return predict_lasso(model, X)
    if isinstance(model, (ForestModel, BoostModel, BoogingModel)):
        return predict_ensemble(model, X)
    raise TypeError(f"unsupported model type {type(model).__name__}")


def kind_of(model):
    for k, cls in (("cart", CartTree), ("sgt", SgtModel), ("lasso", LassoModel),
                   ("rf", ForestModel), ("bt", BoostModel), ("booging", BoogingModel)):
        if isinstance(model, cls):
            return k
    raise TypeError(f"unsupported model type {type(model).__name__}")
