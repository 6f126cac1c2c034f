"""Command-line entry point: simulate, benchmark, fit, predict."""
import argparse
import csv
import logging
import sys


from .benchmark import BENCH_MODELS, fit_tuned, run_benchmark
from .models import KINDS, fit_model, predict
from .simlab import (DGP_KINDS, DEFAULT_R2_GRID, SimulationPlan, fmt, run_simulation_grid,
                     summarize, summary_table, write_summary)
from .serialize import load_model, save_model
from .tabular import HoldoutPlan, load_csv

log = logging.getLogger("slowtree")


def read_kv(path):
    """Flat `key = value` file; blank lines and # comments are ignored."""
    out = {}
    with open(path) as fh:
        for n, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{n}: expected key = value")
            k, v = line.split("=", 1)
            out[k.strip().replace("-", "_")] = v.strip()
    return out


def _bool(s):
    if isinstance(s, bool):
        return s
    v = str(s).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _list(s, sep=","):
    if isinstance(s, (list, tuple)):
        return list(s)
    return [x.strip() for x in str(s).split(sep) if x.strip()]


def _number(v):
    for cast in (int, float):
        try:
            return cast(v)
        except ValueError:
            pass
    if v.lower() in ("true", "false"):
        return v.lower() == "true"
    if v.lower() in ("none", "null"):
        return None
    return v


def plan_from_kv(kv):
    known = {"dgps", "r2_grid", "n_train", "n_test", "replications", "models", "schedule",
             "n_features", "seed"}
    bad = set(kv) - known
    if bad:
        raise ValueError(f"unknown plan key(s): {sorted(bad)}")
    models = None
    if "models" in kv:
        models = tuple(_list(kv["models"], ";"))
    return SimulationPlan(
        dgps=tuple(_list(kv.get("dgps", ",".join(DGP_KINDS)))),
        true_r2_grid=tuple(float(x) for x in _list(kv.get("r2_grid", ",".join(map(str, DEFAULT_R2_GRID))))),
        n_train=int(kv.get("n_train", 100)), n_test=int(kv.get("n_test", 100)),
        n_replications=int(kv.get("replications", 30)), model_variants=models,
        schedule=_bool(kv.get("schedule", True)), n_features=int(kv.get("n_features", 10)),
        seed=int(kv.get("seed", 0)))


def cmd_simulate(a):
    if not a.plan:
        raise SystemExit("simulate needs --plan")
    plan = plan_from_kv(read_kv(a.plan))

    def progress(i, n):
        log.info("cell %d/%d done", i, n)

    rows = run_simulation_grid(plan, a.out, a.timing, n_jobs=int(a.jobs), progress=progress)
    summ = summarize(rows)
    if a.summary:
        write_summary(summ, a.summary)
    print(summary_table(summ))
    return 0


def cmd_benchmark(a):
    if not a.data or not a.target:
        raise SystemExit("benchmark needs --data and --target")
    split = HoldoutPlan("temporal" if _bool(a.temporal) else "random", float(a.train_fraction),
                        int(a.seed))
    rep = run_benchmark(a.data, a.target, split, tuple(_list(a.models)), seed=int(a.seed),
                        n_jobs=int(a.jobs))
    if a.out:
        rep.write_csv(a.out)
    print(rep.table())
    return 0


def cmd_fit(a):
    if not a.data or not a.target or not a.out or not a.model:
        raise SystemExit("fit needs --model, --data, --target and --out")
    d = load_csv(a.data, a.target)
    params = {k: _number(v) for k, v in (p.split("=", 1) for p in _list(a.param or []))}
    if _bool(a.tune) and not params and a.model in BENCH_MODELS:
        model, params = fit_tuned(a.model, d, int(a.seed), n_jobs=int(a.jobs))
    else:
        model = fit_model(a.model, d, params, int(a.seed), int(a.jobs))
    save_model(model, a.out, d.feature_names)
    print(f"wrote {a.model} model ({d.n} rows, {d.k} features) to {a.out}")
    if params:
        print("params: " + ", ".join(f"{k}={v}" for k, v in sorted(params.items())))
    return 0


def cmd_predict(a):
    if not a.model or not a.data or not a.out:
        raise SystemExit("predict needs --model, --data and --out")
    import pandas as pd

    model, names = load_model(a.model)
    df = pd.read_csv(a.data, skipinitialspace=True)
    df.columns = [str(c).strip() for c in df.columns]
    if names:
        missing = [c for c in names if c not in df.columns]
        if missing:
            raise SystemExit(f"data lacks feature column(s) {missing}")
        X = df[names].to_numpy(dtype=float)
    else:
        X = df.to_numpy(dtype=float)
    p = predict(model, X)
    with open(a.out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["prediction"])
        w.writerows([[fmt(float(v))] for v in p])
    print(f"wrote {len(p)} predictions to {a.out}")
    return 0


DEFAULTS = {
    "simulate": dict(plan=None, out="simulation.csv", summary="simulation_summary.csv",
                     timing="simulation_timing.csv", jobs=1),
    "benchmark": dict(data=None, target=None, temporal=False, models=",".join(BENCH_MODELS),
                      seed=0, train_fraction=0.7, out="report.csv", jobs=1),
    "fit": dict(model=None, data=None, target=None, out=None, seed=0, param=None, tune=True,
                jobs=1),
    "predict": dict(model=None, data=None, out=None),
}


def build_parser():
    p = argparse.ArgumentParser(prog="slowtree", description=__doc__)
    p.add_argument("--config", help="flat key = value file; command-line flags win")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="run a simulation grid")
    s.add_argument("--plan", help="plan file (dgps, r2_grid, replications, models, ...)")
    s.add_argument("--out", help="per-replication results CSV")
    s.add_argument("--summary", help="mean oracle R^2 per cell CSV")
    s.add_argument("--timing", help="wall-clock sidecar CSV")
    s.add_argument("--jobs", type=int)

    b = sub.add_parser("benchmark", help="holdout benchmark on a CSV")
    b.add_argument("--data")
    b.add_argument("--target")
    b.add_argument("--temporal", action="store_const", const=True,
                   help="train on the first rows, test on the rest")
    b.add_argument("--models", help=f"comma list from {','.join(BENCH_MODELS)}")
    b.add_argument("--seed", type=int)
    b.add_argument("--train-fraction", dest="train_fraction", type=float)
    b.add_argument("--out", help="report CSV")
    b.add_argument("--jobs", type=int)

    f = sub.add_parser("fit", help="fit one model and save it as JSON")
    f.add_argument("--model", choices=KINDS)
    f.add_argument("--data")
    f.add_argument("--target")
    f.add_argument("--out")
    f.add_argument("--seed", type=int)
    f.add_argument("--param", action="append",
                   help="key=value model parameter (repeatable); disables tuning")
    f.add_argument("--no-tune", dest="tune", action="store_const", const=False)
    f.add_argument("--jobs", type=int)

    q = sub.add_parser("predict", help="predict with a saved model")
    q.add_argument("--model")
    q.add_argument("--data")
    q.add_argument("--out")
    return p


def parse(argv):
    p = build_parser()
    a = p.parse_args(argv)
    merged = dict(DEFAULTS[a.command])
    if a.config:
        for k, v in read_kv(a.config).items():
            if k not in merged:
                raise SystemExit(f"unknown key {k!r} for {a.command} in {a.config}")
            merged[k] = v
    for k in DEFAULTS[a.command]:
        v = getattr(a, k, None)
        if v is not None:
            merged[k] = v
    for k, v in merged.items():
        setattr(a, k, v)
    if isinstance(a.__dict__.get("param"), str):
        a.param = _list(a.param)
    return a


def main(argv=None):
    a = parse(sys.argv[1:] if argv is None else argv)
    logging.basicConfig(level=logging.INFO if a.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    cmd = {"simulate": cmd_simulate, "benchmark": cmd_benchmark, "fit": cmd_fit,
           "predict": cmd_predict}[a.command]
    try:
        return cmd(a)
    except (OSError, ValueError) as e:
        print(f"slowtree {a.command}: error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
