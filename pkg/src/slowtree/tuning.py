"""k-fold cross-validated grid search."""
import itertools
import logging
from dataclasses import dataclass, field

import numpy as np

from .ensembles import BoostModel
from .models import fit_model, predict
from .tabular import child_seed, make_folds

log = logging.getLogger(__name__)

DEFAULT_GRIDS = {
    "rf": {"mtry_fraction": [0.25, 0.33, 0.5, 0.75, 1.0], "min_node_size": [1, 3, 5, 10]},
    "cart": {"max_depth": list(range(1, 13))},
    "bt": {"nu": [0.25, 0.1, 0.01], "n_steps": [50, 150, 500, 1500]},
}

# forests inside the CV loop use fewer trees than the final refit
CV_PARAMS = {"rf": {"n_trees": 100}}


@dataclass(frozen=True)
class TuneGrid:
    """Ordered hyperparameter lists; candidates enumerate the product with
    the first key varying slowest."""

    params: dict = field(default_factory=dict)

    def candidates(self):
        keys = list(self.params)
        if not keys:
            return [{}]
        for k in keys:
            if len(self.params[k]) == 0:
                raise ValueError(f"empty grid for {k}")
        return [dict(zip(keys, vals)) for vals in itertools.product(*(self.params[k] for k in keys))]


def default_grid(kind):
    return TuneGrid(DEFAULT_GRIDS.get(kind, {}))


@dataclass
class TuneResult:
    best: dict
    best_mse: float
    log: list  # (params, mean cv mse or nan, error message or None)


def _mse(a, b):
    e = np.asarray(a) - np.asarray(b)
    return float(np.mean(e * e))


def tune_cv(train, grid, folds=None, model_kind="rf", base_params=None, seed=0,
            cv_params=None, n_jobs=1):
    """Return the candidate with the lowest mean fold MSE (first wins ties).

    Only rows of `train` are ever touched. Boosting candidates that differ
    only in n_steps share one fit per fold and are scored from staged
    predictions.
    """
    base = dict(base_params or {})
    cvp = dict(CV_PARAMS.get(model_kind, {}) if cv_params is None else cv_params)
    cands = grid.candidates()
    if folds is None:
        folds = make_folds(train.n, min(5, train.n), seed)
    sse = np.zeros(len(cands))
    err = [None] * len(cands)
    staged = model_kind in ("bt", "booging") and "n_steps" in grid.params
    for f, (tr, va) in enumerate(folds):
        dtr, dva = train.subset(tr), train.subset(va)
        fseed = child_seed(seed, "cv", model_kind, f)
        if staged:
            groups = {}
            for i, c in enumerate(cands):
                key = tuple(sorted((k, v) for k, v in c.items() if k != "n_steps"))
                groups.setdefault(key, []).append(i)
            for key, idx in groups.items():
                p = {**base, **dict(key), **cvp, "n_steps": max(cands[i]["n_steps"] for i in idx)}
                try:
                    m = fit_model(model_kind, dtr, p, fseed, n_jobs)
                    if isinstance(m, BoostModel):
                        preds = m.staged_predict(dva.X, [cands[i]["n_steps"] for i in idx])
                    else:
                        preds = {cands[i]["n_steps"]: predict(m, dva.X) for i in idx}
                    for i in idx:
                        sse[i] += _mse(dva.y, preds[cands[i]["n_steps"]]) / folds.k_folds
                except Exception as e:  # keep searching, report below
                    for i in idx:
                        err[i] = err[i] or repr(e)
            continue
        for i, c in enumerate(cands):
            if err[i]:
                continue
            try:
                m = fit_model(model_kind, dtr, {**base, **c, **cvp}, fseed, n_jobs)
                sse[i] += _mse(dva.y, predict(m, dva.X)) / folds.k_folds
            except Exception as e:
                err[i] = repr(e)
    rows = []
    best = None
    for i, c in enumerate(cands):
        score = np.nan if err[i] else float(sse[i])
        rows.append((c, score, err[i]))
        log.debug("cv %s %s -> %s", model_kind, c, err[i] or f"{score:.6g}")
        if err[i] is None and (best is None or score < rows[best][1]):
            best = i
    if best is None:
        detail = "; ".join(f"{c}: {e}" for c, _, e in rows)
        raise RuntimeError(f"every {model_kind} candidate failed: {detail}")
    return TuneResult(dict(cands[best]), rows[best][1], rows)
