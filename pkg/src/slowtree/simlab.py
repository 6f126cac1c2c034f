"""Synthetic data generators and the simulation grid.

Friedman DGPs (inactive columns are U(0, 1)):
    friedman1: x1..x5 ~ U(0,1),
               m = 10 sin(pi x1 x2) + 20 (x3 - 0.5)^2 + 10 x4 + 5 x5
    friedman2: x1 ~ U(0,100), x2 ~ U(40 pi, 560 pi), x3 ~ U(0,1), x4 ~ U(1,11),
               m = sqrt(x1^2 + (x2 x3 - 1 / (x2 x4))^2)
    friedman3: same inputs, m = arctan((x2 x3 - 1 / (x2 x4)) / x1)
linear: all columns N(0,1), m = x1 + ... + x5.
tree: a CART fit (with about 8 leaves) to a noise-free Friedman-1 sample of
    size TREE_BASE_N drawn from the DgpSpec seed; m is that tree's prediction.
    Columns the tree splits on are U(0,1), the others N(0,1).
"""
import csv
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .cart import CartConfig, fit_cart_arrays, predict_cart
from .metrics import r2_score
from .models import fit_model, predict
from .tabular import Dataset, child_rng, child_seed
from .tuning import TuneGrid, default_grid, tune_cv

log = logging.getLogger(__name__)

DGP_KINDS = ("tree", "friedman1", "friedman2", "friedman3", "linear")
ACTIVE = {"tree": 5, "friedman1": 5, "friedman2": 4, "friedman3": 4, "linear": 5}
TREE_BASE_N = 100
DEFAULT_R2_GRID = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 0.99)


@dataclass(frozen=True)
class DgpSpec:
    kind: str
    n_features: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.kind not in DGP_KINDS:
            raise ValueError(f"unknown DGP {self.kind!r}; expected one of {DGP_KINDS}")
        if self.n_features < ACTIVE[self.kind]:
            raise ValueError(f"{self.kind} needs at least {ACTIVE[self.kind]} features")


def friedman1_mean(X):
    return (10 * np.sin(np.pi * X[:, 0] * X[:, 1]) + 20 * (X[:, 2] - 0.5) ** 2
            + 10 * X[:, 3] + 5 * X[:, 4])


def _f23_inputs(rng, n, k):
    X = rng.uniform(size=(n, k))
    X[:, 0] *= 100
    X[:, 1] = 40 * np.pi + X[:, 1] * 520 * np.pi
    X[:, 3] = 1 + 10 * X[:, 3]
    return X


def friedman2_mean(X):
    return np.sqrt(X[:, 0] ** 2 + (X[:, 1] * X[:, 2] - 1 / (X[:, 1] * X[:, 3])) ** 2)


def friedman3_mean(X):
    return np.arctan((X[:, 1] * X[:, 2] - 1 / (X[:, 1] * X[:, 3])) / X[:, 0])


def linear_mean(X):
    return X[:, :5].sum(axis=1)


_tree_cache = {}


def tree_generator(spec):
    """The CART that defines the tree DGP for this DgpSpec (cached).

    min_node_size is scanned so the mean leaf size is closest to
    TREE_BASE_N / 8 (smallest size wins ties).
    """
    key = (spec.n_features, spec.seed)
    if key in _tree_cache:
        return _tree_cache[key]
    rng = child_rng(spec.seed, "tree-dgp-base")
    X = rng.uniform(size=(TREE_BASE_N, spec.n_features))
    y = friedman1_mean(X)
    cnt = np.ones(TREE_BASE_N, np.int64)
    target = TREE_BASE_N / 8
    best = None
    for size in range(1, TREE_BASE_N):
        t = fit_cart_arrays(X, y, cnt, CartConfig(min_node_size=size))
        gap = abs(TREE_BASE_N / t.n_leaves - target)
        if best is None or gap < best[0]:
            best = (gap, t, size)
    tree = best[1]
    _tree_cache[key] = tree
    return tree


def gen_dgp(spec, n, seed):
    """Draw n rows; returns (X, m) with m the conditional mean."""
    rng = np.random.default_rng(seed)
    k = spec.n_features
    if spec.kind == "friedman1":
        X = rng.uniform(size=(n, k))
        return X, friedman1_mean(X)
    if spec.kind in ("friedman2", "friedman3"):
        X = _f23_inputs(rng, n, k)
        return X, (friedman2_mean(X) if spec.kind == "friedman2" else friedman3_mean(X))
    if spec.kind == "linear":
        X = rng.standard_normal((n, k))
        return X, linear_mean(X)
    tree = tree_generator(spec)
    used = np.zeros(k, bool)
    used[tree.feature[tree.feature >= 0]] = True
    X = np.where(used, rng.uniform(size=(n, k)), rng.standard_normal((n, k)))
    return X, predict_cart(tree, X)


def noise_sd(m, target_r2):
    """sd of Gaussian noise giving Var(m) / (Var(m) + s^2) = target_r2."""
    if not 0.0 < target_r2 < 1.0:
        raise ValueError("target R^2 must lie in (0, 1)")
    v = float(np.var(m))
    if v <= 0.0:
        raise ValueError("conditional mean is constant; cannot calibrate noise")
    return math.sqrt(v * (1.0 - target_r2) / target_r2)


def scale_noise_to_r2(m, target_r2, seed, sd=None):
    """y = m + N(0, s^2) with s from noise_sd unless sd is given."""
    m = np.asarray(m, dtype=float)
    s = noise_sd(m, target_r2) if sd is None else float(sd)
    return m + s * np.random.default_rng(seed).standard_normal(m.shape[0])


# model variants ---------------------------------------------------------------


@dataclass(frozen=True)
class ModelVariant:
    """A named model: fixed params, plus an optional CV grid for the rest."""

    name: str
    kind: str
    params: dict = field(default_factory=dict)
    tune: dict = None


def default_variants(schedule=True):
    sgt = dict(schedule_enabled=schedule)
    bt = dict(interaction_depth=5, subsample_fraction=0.5)
    rf_grid = default_grid("rf").params
    return [
        ModelVariant("RF", "rf", {}, rf_grid),
        ModelVariant("CART", "cart", {}, default_grid("cart").params),
        ModelVariant("SGT(0.5,0.25)", "sgt", dict(eta0=0.5, h_bar=0.25, **sgt)),
        ModelVariant("SGT(0.1,0.25)", "sgt", dict(eta0=0.1, h_bar=0.25, **sgt)),
        ModelVariant("SGT(0.1,0.05)", "sgt", dict(eta0=0.1, h_bar=0.05, **sgt)),
        ModelVariant("Booging", "booging", {}),
        # S tuned over every count up to 1500, scored from one staged fit per fold
        ModelVariant("BT(0.25,tuned)", "bt", dict(nu=0.25, **bt), {"n_steps": list(range(1, 1501))}),
        ModelVariant("BT(0.1,1500)", "bt", dict(nu=0.1, n_steps=1500, **bt)),
        ModelVariant("BT(0.001,1500)", "bt", dict(nu=0.001, n_steps=1500, **bt)),
        ModelVariant("BT(0.001,750)", "bt", dict(nu=0.001, n_steps=750, **bt)),
    ]


def variants_by_name(names, schedule=True):
    table = {v.name: v for v in default_variants(schedule)}
    missing = [n for n in names if n not in table]
    if missing:
        raise ValueError(f"unknown model variant(s) {missing}; known: {list(table)}")
    return [table[n] for n in names]


def fit_variant(v, train, seed, n_jobs=1):
    params = dict(v.params)
    chosen = {}
    if v.tune:
        res = tune_cv(train, TuneGrid(dict(v.tune)), model_kind=v.kind, base_params=params,
                      seed=child_seed(seed, "tune"), n_jobs=n_jobs)
        chosen = res.best
        params.update(chosen)
    return fit_model(v.kind, train, params, seed, n_jobs), chosen


# grid runner ----------------------------------------------------------------


@dataclass(frozen=True)
class SimulationPlan:
    dgps: tuple = DGP_KINDS
    true_r2_grid: tuple = DEFAULT_R2_GRID
    n_train: int = 100
    n_test: int = 100
    n_replications: int = 30
    model_variants: tuple = None  # None = default_variants(schedule)
    schedule: bool = True
    n_features: int = 10
    seed: int = 0

    def __post_init__(self):
        for r in self.true_r2_grid:
            if not 0.0 < r < 1.0:
                raise ValueError("every true R^2 must lie in (0, 1)")
        if self.n_replications < 1:
            raise ValueError("n_replications must be >= 1")

    def variants(self):
        if self.model_variants is None:
            return default_variants(self.schedule)
        return [v if isinstance(v, ModelVariant) else variants_by_name([v], self.schedule)[0]
                for v in self.model_variants]


RESULT_COLUMNS = ("dgp", "true_r2", "model", "replication", "oracle_r2", "test_r2", "error")
TIMING_COLUMNS = ("dgp", "true_r2", "model", "replication", "seconds")
SUMMARY_COLUMNS = ("dgp", "true_r2", "model", "n_ok", "mean_oracle_r2", "sd_oracle_r2",
                   "mean_test_r2")


def fmt(x):
    if isinstance(x, float):
        return "nan" if math.isnan(x) else format(x, ".17g")
    return str(x)


def draw_cell(plan, dgp, r2, rep):
    """Train and test data for one grid cell; also returns the test mean."""
    spec = DgpSpec(dgp, plan.n_features, child_seed(plan.seed, "dgp", dgp))
    Xtr, mtr = gen_dgp(spec, plan.n_train, child_seed(plan.seed, "xtr", dgp, r2, rep))
    Xte, mte = gen_dgp(spec, plan.n_test, child_seed(plan.seed, "xte", dgp, r2, rep))
    sd = noise_sd(mtr, r2)
    ytr = scale_noise_to_r2(mtr, r2, child_seed(plan.seed, "etr", dgp, r2, rep), sd)
    yte = scale_noise_to_r2(mte, r2, child_seed(plan.seed, "ete", dgp, r2, rep), sd)
    return Dataset(Xtr, ytr), Xte, yte, mte


def run_cell(plan, variants, dgp, r2, rep):
    train, Xte, yte, mte = draw_cell(plan, dgp, r2, rep)
    rows, times = [], []
    for v in variants:
        t0 = time.perf_counter()
        try:
            model, _ = fit_variant(v, train, child_seed(plan.seed, "model", v.name, dgp, r2, rep))
            p = predict(model, Xte)
            row = (dgp, r2, v.name, rep, r2_score(mte, p), r2_score(yte, p), "")
        except Exception as e:  # recorded, grid continues
            log.warning("%s failed on %s r2=%s rep=%d: %r", v.name, dgp, r2, rep, e)
            row = (dgp, r2, v.name, rep, float("nan"), float("nan"), repr(e).replace(",", ";"))
        rows.append(row)
        times.append((dgp, r2, v.name, rep, time.perf_counter() - t0))
    return rows, times


def run_simulation_grid(plan, out_csv=None, timing_csv=None, n_jobs=1, progress=None):
    """Run every (dgp, r2, replication) cell and return the result rows.

    Rows are appended to out_csv in a fixed order as cells finish, so equal
    plans give byte-identical files; wall-clock times go to timing_csv.
    """
    variants = plan.variants()
    cells = [(d, r, k) for d in plan.dgps for r in plan.true_r2_grid
             for k in range(plan.n_replications)]
    rows = []
    fh = th = None
    try:
        if out_csv:
            fh = open(out_csv, "w", newline="")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(RESULT_COLUMNS)
        if timing_csv:
            th = open(timing_csv, "w", newline="")
            tw = csv.writer(th, lineterminator="\n")
            tw.writerow(TIMING_COLUMNS)
        job = lambda c: run_cell(plan, variants, *c)
        if n_jobs and n_jobs > 1:
            ex = ThreadPoolExecutor(max_workers=n_jobs)
            results = ex.map(job, cells)
        else:
            ex = None
            results = map(job, cells)
        for i, (cr, ct) in enumerate(results):
            rows.extend(cr)
            if fh:
                w.writerows([[fmt(x) for x in r] for r in cr])
                fh.flush()
            if th:
                tw.writerows([[fmt(x) for x in r] for r in ct])
                th.flush()
            if progress:
                progress(i + 1, len(cells))
        if ex:
            ex.shutdown()
    finally:
        if fh:
            fh.close()
        if th:
            th.close()
    return rows


def summarize(rows):
    """Mean oracle R^2 per (dgp, true_r2, model), in first-seen order."""
    groups = {}
    for r in rows:
        groups.setdefault((r[0], r[1], r[2]), []).append(r)
    out = []
    for (d, r2, m), g in groups.items():
        o = np.array([x[4] for x in g], float)
        t = np.array([x[5] for x in g], float)
        ok = np.isfinite(o)
        n_ok = int(ok.sum())
        out.append((d, r2, m, n_ok,
                    float(o[ok].mean()) if n_ok else float("nan"),
                    float(o[ok].std(ddof=1)) if n_ok > 1 else float("nan"),
                    float(t[ok].mean()) if n_ok else float("nan")))
    return out


def write_summary(summary, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_COLUMNS)
        w.writerows([[fmt(x) for x in r] for r in summary])


def summary_table(summary):
    """Wide text table: one line per (dgp, r2), one column per model."""
    models = list(dict.fromkeys(r[2] for r in summary))
    cells = {(r[0], r[1], r[2]): r[4] for r in summary}
    keys = list(dict.fromkeys((r[0], r[1]) for r in summary))
    wid = max(8, *(len(m) for m in models))
    lines = ["dgp        r2    " + " ".join(m.rjust(wid) for m in models)]
    for d, r2 in keys:
        vals = [cells.get((d, r2, m), float("nan")) for m in models]
        lines.append(f"{d:<10} {r2:<5} " + " ".join(f"{v:{wid}.3f}" for v in vals))
    return "\n".join(lines)
