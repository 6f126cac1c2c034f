import math

import numpy as np
import pytest

from slowtree.cart import predict_cart
from slowtree.metrics import r2_score
from slowtree.simlab import (DGP_KINDS, DgpSpec, ModelVariant, SimulationPlan, default_variants,
                             friedman1_mean, friedman2_mean, friedman3_mean, gen_dgp, linear_mean,
                             noise_sd, run_simulation_grid, scale_noise_to_r2, summarize,
                             tree_generator, variants_by_name)

# evaluated by hand from the textbook formula: 10 sin(pi/4) + 0 + 5 + 2.5
F1_AT_HALF = 14.571067811865476


def test_friedman1_formula_oracle():
    assert friedman1_mean(np.full((1, 10), 0.5))[0] == pytest.approx(F1_AT_HALF, rel=1e-15)
    assert F1_AT_HALF == pytest.approx(10 * math.sin(math.pi / 4) + 7.5, rel=1e-15)


def test_linear_all_ones():
    assert linear_mean(np.ones((1, 10)))[0] == 5.0
    X, m = gen_dgp(DgpSpec("linear"), 50, 1)
    np.testing.assert_allclose(m, X[:, :5].sum(axis=1))


def test_friedman23_ranges_and_values():
    X, m2 = gen_dgp(DgpSpec("friedman2"), 2000, 2)
    assert X[:, 0].min() >= 0 and X[:, 0].max() <= 100
    assert X[:, 1].min() >= 40 * math.pi and X[:, 1].max() <= 560 * math.pi
    assert X[:, 3].min() >= 1 and X[:, 3].max() <= 11
    assert np.all((X[:, 4:] >= 0) & (X[:, 4:] <= 1))
    x = X[0]
    inner = x[1] * x[2] - 1 / (x[1] * x[3])
    assert m2[0] == pytest.approx(math.hypot(x[0], inner), rel=1e-14)
    _, m3 = gen_dgp(DgpSpec("friedman3"), 2000, 2)
    assert m3[0] == pytest.approx(math.atan(inner / x[0]), rel=1e-14)


def test_tree_dgp_is_piecewise_constant_with_about_eight_leaves():
    spec = DgpSpec("tree", seed=5)
    tree = tree_generator(spec)
    assert 6 <= tree.n_leaves <= 10
    X, m = gen_dgp(spec, 20000, 3)
    assert len(np.unique(m)) == tree.n_leaves
    assert tree_generator(spec) is tree


@pytest.mark.parametrize("kind", DGP_KINDS)
def test_permuting_inactive_columns_leaves_m(kind):
    spec = DgpSpec(kind, seed=1)
    X, m = gen_dgp(spec, 200, 4)
    rng = np.random.default_rng(0)
    if kind == "tree":
        t = tree_generator(spec)
        inactive = [j for j in range(10) if j not in set(t.feature[t.feature >= 0])]
    else:
        inactive = range({"friedman2": 4, "friedman3": 4}.get(kind, 5), 10)
    f = {"friedman1": friedman1_mean, "friedman2": friedman2_mean,
         "friedman3": friedman3_mean, "linear": linear_mean,
         "tree": lambda Z: predict_cart(tree_generator(spec), Z)}[kind]
    np.testing.assert_allclose(f(X), m, rtol=1e-15)
    Xp = X.copy()
    for j in inactive:
        Xp[:, j] = rng.permutation(Xp[:, j])
    np.testing.assert_array_equal(f(Xp), m)


def test_noise_calibration_algebra():
    m = np.array([-2.0, 2.0] * 5)  # population variance 4
    assert noise_sd(m, 0.8) ** 2 == pytest.approx(1.0)
    assert noise_sd(m, 0.5) ** 2 == pytest.approx(4.0)
    with pytest.raises(ValueError):
        noise_sd(m, 1.0)
    with pytest.raises(ValueError):
        noise_sd(np.ones(5), 0.5)


@pytest.mark.parametrize("target", [0.1, 0.5, 0.9, 0.99])
def test_noise_calibration_monte_carlo(target):
    _, m = gen_dgp(DgpSpec("friedman1"), 100_000, 7)
    y = scale_noise_to_r2(m, target, 8)
    emp = np.var(m) / np.var(y)
    assert abs(emp - target) <= 0.01


def test_oracle_predictor_scores_one():
    for kind in DGP_KINDS:
        _, m = gen_dgp(DgpSpec(kind), 100, 9)
        assert r2_score(m, m) == 1.0


def test_default_variants():
    names = [v.name for v in default_variants()]
    assert names == ["RF", "CART", "SGT(0.5,0.25)", "SGT(0.1,0.25)", "SGT(0.1,0.05)", "Booging",
                     "BT(0.25,tuned)", "BT(0.1,1500)", "BT(0.001,1500)", "BT(0.001,750)"]
    bt = variants_by_name(["BT(0.25,tuned)"])[0]
    assert bt.params["nu"] == 0.25 and bt.tune == {"n_steps": list(range(1, 1501))}
    assert all(v.params["schedule_enabled"] is False
               for v in default_variants(False) if v.kind == "sgt")
    with pytest.raises(ValueError, match="unknown model variant"):
        variants_by_name(["XGB"])


def small_plan(**kw):
    base = dict(dgps=("friedman1",), true_r2_grid=(0.5,), n_train=40, n_test=30,
                n_replications=3, model_variants=("SGT(0.1,0.25)", "CART"), seed=11)
    base.update(kw)
    return SimulationPlan(**base)


def test_grid_row_count_and_byte_identical_files(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    rows = run_simulation_grid(small_plan(), a, tmp_path / "ta.csv")
    assert len(rows) == 6
    run_simulation_grid(small_plan(), b, n_jobs=3)
    assert a.read_bytes() == b.read_bytes()
    lines = a.read_text().splitlines()
    assert lines[0] == "dgp,true_r2,model,replication,oracle_r2,test_r2,error"
    assert len(lines) == 7
    assert len((tmp_path / "ta.csv").read_text().splitlines()) == 7
    s = summarize(rows)
    assert [(r[2], r[3]) for r in s] == [("SGT(0.1,0.25)", 3), ("CART", 3)]
    other = run_simulation_grid(small_plan(seed=12))
    assert [r[4] for r in other] != [r[4] for r in rows]


def test_failing_variant_is_recorded_not_fatal():
    bad = ModelVariant("bad", "cart", {"min_node_size": 10**6})
    rows = run_simulation_grid(small_plan(model_variants=(bad, "CART"), n_replications=1))
    assert math.isnan(rows[0][4]) and "DataError" in rows[0][6]
    assert np.isfinite(rows[1][4])


def test_plan_validation():
    with pytest.raises(ValueError):
        SimulationPlan(true_r2_grid=(1.0,))
    with pytest.raises(ValueError):
        DgpSpec("friedman1", n_features=3)
    with pytest.raises(ValueError):
        DgpSpec("sine")
