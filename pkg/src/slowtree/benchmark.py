"""Holdout benchmark: tune on the training part, score on the rest."""
import csv
import json
import logging
from dataclasses import dataclass, field

import numpy as np

from .metrics import compute_metrics, loss_differential_test, r2_score, stars
from .models import fit_model, predict
from .simlab import fmt
from .tabular import Dataset, HoldoutPlan, child_seed, load_csv, make_folds, split_holdout
from .tuning import DEFAULT_GRIDS, TuneGrid, tune_cv

log = logging.getLogger(__name__)

BENCH_MODELS = ("rf", "sgt", "bt", "booging", "cart", "lasso")
FIXED_PARAMS = {"sgt": {"eta0": 0.1, "h_bar": 0.25}}
# (reference, challenger) pairs tested on squared-error loss
PAIRS = (("rf", "sgt"), ("bt", "booging"))
REPORT_COLUMNS = ("model", "test_r2", "oos_r2", "rmse", "mae", "best", "vs_model", "test_kind",
                  "statistic", "p_value", "stars", "params", "error")
N_FOLDS = 5


@dataclass
class ModelResult:
    name: str
    params: dict = field(default_factory=dict)
    pred: np.ndarray = None
    test_r2: float = float("nan")
    oos_r2: float = float("nan")
    rmse: float = float("nan")
    mae: float = float("nan")
    error: str = ""


@dataclass
class EvalReport:
    models: list
    tests: dict  # challenger -> (reference, TestResult)
    split_mode: str
    n_train: int
    n_test: int

    def best_model(self):
        ok = [m for m in self.models if np.isfinite(m.test_r2)]
        return max(ok, key=lambda m: m.test_r2).name if ok else None

    def rows(self):
        best = self.best_model()
        out = []
        for m in self.models:
            ref, t = self.tests.get(m.name, (None, None))
            out.append((m.name, m.test_r2, m.oos_r2, m.rmse, m.mae, int(m.name == best),
                        ref or "", t.kind if t else "", t.statistic if t else float("nan"),
                        t.p_value if t else float("nan"), stars(t.p_value) if t else "",
                        json.dumps(m.params, sort_keys=True), m.error))
        return out

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(REPORT_COLUMNS)
            for r in self.rows():
                w.writerow([fmt(x) for x in r])

    def table(self):
        best = self.best_model()
        lines = [f"split={self.split_mode} n_train={self.n_train} n_test={self.n_test}",
                 f"{'model':<9} {'test R2':>9} {'oos R2':>9} {'RMSE':>10} {'MAE':>10}  test"]
        for m in self.models:
            ref, t = self.tests.get(m.name, (None, None))
            mark = "*best*" if m.name == best else ""
            tt = ""
            if t:
                tt = f"vs {ref}: {t.statistic:+.2f} (p={t.p_value:.3f}){stars(t.p_value)}"
            if m.error:
                lines.append(f"{m.name:<9} failed: {m.error}")
                continue
            lines.append(f"{m.name:<9} {m.test_r2:9.4f} {m.oos_r2:9.4f} {m.rmse:10.4g} "
                         f"{m.mae:10.4g}  {tt} {mark}".rstrip())
        return "\n".join(lines)


def fit_tuned(kind, train, seed, grids=None, n_jobs=1):
    """CV-tune (where a grid exists) on train only, then refit."""
    grids = DEFAULT_GRIDS if grids is None else grids
    params = dict(FIXED_PARAMS.get(kind, {}))
    g = grids.get(kind)
    if g:
        folds = make_folds(train.n, min(N_FOLDS, train.n), child_seed(seed, "folds", kind))
        res = tune_cv(train, g if isinstance(g, TuneGrid) else TuneGrid(dict(g)), folds, kind,
                      params, child_seed(seed, "tune", kind), n_jobs=n_jobs)
        params.update(res.best)
    return fit_model(kind, train, params, child_seed(seed, "fit", kind), n_jobs), params


def run_benchmark(data, target=None, split=None, models=BENCH_MODELS, grids=None, seed=0,
                  n_jobs=1):
    """data is a Dataset or a CSV path (then target names the y column)."""
    d = data if isinstance(data, Dataset) else load_csv(data, target)
    split = split or HoldoutPlan("random", 0.7, seed)
    train, test = split_holdout(d, split)
    ybar_train = float(train.y.mean())
    results = {}
    for name in models:
        if name not in BENCH_MODELS:
            raise ValueError(f"unknown model {name!r}; expected some of {BENCH_MODELS}")
        r = ModelResult(name)
        try:
            model, r.params = fit_tuned(name, train, seed, grids, n_jobs)
            r.pred = predict(model, test.X)
            met = compute_metrics(test.y, r.pred)
            r.test_r2, r.rmse, r.mae = met.r2, met.rmse, met.mae
            r.oos_r2 = r2_score(test.y, r.pred, ybar_train)
        except Exception as e:
            log.warning("%s failed: %r", name, e)
            r.error = repr(e)
        results[name] = r
    kind = "diebold_mariano" if split.mode == "temporal" else "paired_t"
    tests = {}
    for ref, alt in PAIRS:
        a, b = results.get(ref), results.get(alt)
        if a is None or b is None or a.pred is None or b.pred is None:
            continue
        tests[alt] = (ref, loss_differential_test(test.y - a.pred, test.y - b.pred, kind))
    return EvalReport([results[m] for m in models], tests, split.mode, train.n, test.n)
