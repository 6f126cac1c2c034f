import subprocess
import sys

import numpy as np
import pandas as pd
import pytest

from slowtree.cli import main, parse, plan_from_kv, read_kv


@pytest.fixture
def csv_data(tmp_path):
    rng = np.random.default_rng(0)
    X = rng.uniform(size=(80, 3))
    df = pd.DataFrame(X, columns=["a", "b", "c"])
    df["y"] = 3 * df.a + np.sin(5 * df.b) + 0.1 * rng.normal(size=80)
    p = tmp_path / "data.csv"
    df.to_csv(p, index=False)
    return p


def test_fit_predict_round_trip(csv_data, tmp_path, capsys):
    model = tmp_path / "m.json"
    out = tmp_path / "pred.csv"
    assert main(["fit", "--model", "cart", "--data", str(csv_data), "--target", "y",
                 "--out", str(model), "--param", "max_depth=3"]) == 0
    # columns in a different order and the target present are fine
    df = pd.read_csv(csv_data)[["y", "c", "b", "a"]]
    df.to_csv(tmp_path / "new.csv", index=False)
    assert main(["predict", "--model", str(model), "--data", str(tmp_path / "new.csv"),
                 "--out", str(out)]) == 0
    pred = pd.read_csv(out)["prediction"].to_numpy()
    assert pred.shape == (80,) and len(np.unique(pred)) <= 8
    assert "wrote 80 predictions" in capsys.readouterr().out


def test_benchmark_writes_report(csv_data, tmp_path, capsys):
    out = tmp_path / "rep.csv"
    rc = main(["benchmark", "--data", str(csv_data), "--target", "y", "--models", "cart,lasso",
               "--out", str(out), "--seed", "2"])
    assert rc == 0
    rep = pd.read_csv(out)
    assert list(rep.model) == ["cart", "lasso"]
    assert "split=random" in capsys.readouterr().out


def test_simulate_with_plan_and_config(tmp_path, capsys):
    plan = tmp_path / "plan.txt"
    plan.write_text("# tiny grid\ndgps = linear\nr2_grid = 0.5\nn_train = 40\nn_test = 20\n"
                    "replications = 2\nmodels = SGT(0.1,0.25); CART\n")
    cfg = tmp_path / "run.cfg"
    cfg.write_text(f"plan = {plan}\nout = {tmp_path / 'ignored.csv'}\n"
                   f"summary = {tmp_path / 's.csv'}\ntiming = {tmp_path / 't.csv'}\n")
    out = tmp_path / "res.csv"
    assert main(["--config", str(cfg), "simulate", "--out", str(out)]) == 0
    assert not (tmp_path / "ignored.csv").exists()
    assert len(pd.read_csv(out)) == 4
    s = pd.read_csv(tmp_path / "s.csv")
    assert list(s.model) == ["SGT(0.1,0.25)", "CART"]
    assert "SGT(0.1,0.25)" in capsys.readouterr().out


def test_config_parsing_and_errors(tmp_path):
    p = tmp_path / "c.cfg"
    p.write_text("a = 1\n\n# comment\ntrain-fraction = 0.6 # trailing\n")
    assert read_kv(p) == {"a": "1", "train_fraction": "0.6"}
    p.write_text("seed = 4\n")
    a = parse(["--config", str(p), "benchmark", "--data", "x.csv", "--target", "y"])
    assert a.seed == "4" and a.train_fraction == 0.7
    a = parse(["--config", str(p), "benchmark", "--seed", "9"])
    assert a.seed == 9
    p.write_text("bogus = 1\n")
    with pytest.raises(SystemExit):
        parse(["--config", str(p), "predict"])
    with pytest.raises(ValueError, match="unknown plan key"):
        plan_from_kv({"dgp": "tree"})
    plan = plan_from_kv({"dgps": "tree, linear", "r2_grid": "0.3,0.9", "schedule": "off"})
    assert plan.dgps == ("tree", "linear") and plan.true_r2_grid == (0.3, 0.9)
    assert plan.schedule is False


def test_bad_input_exits_with_code_2(tmp_path, capsys):
    p = tmp_path / "bad.csv"
    p.write_text("a,y\n1,2\nfoo,3\n")
    rc = main(["fit", "--model", "cart", "--data", str(p), "--target", "y",
               "--out", str(tmp_path / "m.json")])
    assert rc == 2
    assert "error" in capsys.readouterr().err
    assert main(["predict", "--model", str(tmp_path / "missing.json"), "--data", str(p),
                 "--out", str(tmp_path / "o.csv")]) == 2


def test_console_entry_point_help():
    r = subprocess.run([sys.executable, "-m", "slowtree.cli", "--help"], capture_output=True,
                       text=True)
    assert r.returncode == 0
    for cmd in ("simulate", "benchmark", "fit", "predict"):
        assert cmd in r.stdout
