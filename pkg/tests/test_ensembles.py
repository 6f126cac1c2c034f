from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from slowtree.cart import CartConfig, fit_cart, predict_cart
from slowtree.ensembles import (BoogingConfig, BtConfig, ForestModel, RfConfig,
                                augment_features, fit_booging, fit_bt, fit_rf, predict_ensemble)
from slowtree.tabular import Dataset


def data(seed=0, n=60, k=4):
    rng = np.random.default_rng(seed)
    X = rng.uniform(size=(n, k))
    return Dataset(X, 3 * X[:, 0] + np.sin(4 * X[:, 1]) + rng.normal(scale=0.3, size=n)), rng


def test_rf_single_tree_no_bootstrap_is_cart():
    d, rng = data()
    rf = fit_rf(d, RfConfig(n_trees=1, bootstrap=False, mtry_fraction=1.0, min_node_size=3))
    t = fit_cart(d, CartConfig(min_node_size=3, mtry_fraction=1.0))
    Xt = rng.uniform(size=(50, 4))
    np.testing.assert_array_equal(predict_ensemble(rf, Xt), predict_cart(t, Xt))


def test_rf_constant_target():
    d, rng = data()
    d = Dataset(d.X, np.full(d.n, 1.5))
    rf = fit_rf(d, RfConfig(n_trees=20))
    np.testing.assert_allclose(predict_ensemble(rf, rng.uniform(size=(10, 4))), 1.5)


def test_rf_of_identical_trees():
    d, rng = data()
    t = fit_cart(d, CartConfig(min_node_size=2))
    rf = ForestModel([t, t, t], d.k)
    Xt = rng.uniform(size=(30, 4))
    np.testing.assert_allclose(predict_ensemble(rf, Xt), predict_cart(t, Xt), rtol=1e-15)


def test_rf_matches_member_loop_and_hull():
    d, rng = data(1)
    rf = fit_rf(d, RfConfig(n_trees=25, mtry_fraction=0.5, seed=4))
    Xt = rng.uniform(size=(40, 4))
    members = np.array([predict_cart(t, Xt) for t in rf.trees])
    p = predict_ensemble(rf, Xt)
    np.testing.assert_allclose(p, members.mean(axis=0), rtol=1e-13)
    assert np.all(p >= members.min(0) - 1e-12) and np.all(p <= members.max(0) + 1e-12)


def test_rf_is_seeded_and_thread_count_free():
    d, rng = data(2)
    Xt = rng.uniform(size=(30, 4))
    cfg = RfConfig(n_trees=40, mtry_fraction=0.5, seed=9)
    a = predict_ensemble(fit_rf(d, cfg, n_jobs=1), Xt)
    b = predict_ensemble(fit_rf(d, cfg, n_jobs=4), Xt)
    np.testing.assert_array_equal(a, b)
    c = predict_ensemble(fit_rf(d, replace(cfg, seed=10)), Xt)
    assert not np.array_equal(a, c)


def test_bt_zero_steps_is_mean():
    d, rng = data()
    m = fit_bt(d, BtConfig(n_steps=0))
    np.testing.assert_allclose(predict_ensemble(m, rng.uniform(size=(5, 4))), d.y.mean())


def test_bt_single_full_stump():
    X = np.array([[1.0], [2], [3], [4], [5], [6]])
    y = np.array([0, 0, 1, 1, 1, 5.0])
    d = Dataset(X, y)
    m = fit_bt(d, BtConfig(nu=1.0, n_steps=1, interaction_depth=1, subsample_fraction=1.0,
                           min_leaf_size=1))
    # best stump on the residuals splits at 5.5: means 0.6 and 5
    np.testing.assert_allclose(m.predict(X), [0.6] * 5 + [5.0], rtol=1e-12)
    resid = y - m.predict(X)
    assert np.sum(resid ** 2) == pytest.approx(np.sum((y[:5] - 0.6) ** 2))


@given(st.integers(0, 10**6))
@settings(max_examples=15)
def test_bt_full_sample_training_mse_non_increasing(seed):
    d, _ = data(seed % 1000, n=40)
    m = fit_bt(d, BtConfig(nu=0.3, n_steps=30, subsample_fraction=1.0, interaction_depth=3,
                           min_leaf_size=2, seed=seed))
    staged = m.staged_predict(d.X, range(0, 31))
    mse = [np.mean((d.y - staged[s]) ** 2) for s in range(31)]
    assert all(b <= a + 1e-12 for a, b in zip(mse, mse[1:]))


def test_bt_staged_equals_truncated():
    d, rng = data(3)
    m = fit_bt(d, BtConfig(nu=0.2, n_steps=50, seed=1))
    Xt = rng.uniform(size=(20, 4))
    st_ = m.staged_predict(Xt, [10, 50])
    np.testing.assert_allclose(st_[10], m.predict(Xt, 10), rtol=1e-13)
    np.testing.assert_allclose(st_[50], m.predict(Xt), rtol=1e-13)


def test_augment_features():
    d, _ = data()
    assert augment_features(d, 0, 0.33, 1).k == d.k
    a = augment_features(d, 1, 0.33, 1)
    assert a.k == 2 * d.k
    dup = augment_features(d, 2, 0.0, 1)
    np.testing.assert_array_equal(dup.X[:, d.k:2 * d.k], d.X)
    np.testing.assert_array_equal(dup.X[:, 2 * d.k:], d.X)
    noise = a.X[:, d.k:] - d.X
    assert np.all(np.abs(noise.std(axis=0) / (0.33 * d.X.std(axis=0, ddof=1)) - 1) < 0.5)


def test_booging_degenerate_bag_is_bt():
    d, rng = data(4)
    bt = BtConfig(nu=0.25, n_steps=40, seed=77)
    cfg = BoogingConfig(n_bags=1, bt=bt, augment_copies=0, bootstrap=False)
    bg = fit_booging(d, cfg)
    Xt = rng.uniform(size=(20, 4))
    direct = fit_bt(d, replace(bt, seed=bg.members[0].config.seed))
    np.testing.assert_array_equal(predict_ensemble(bg, Xt), direct.predict(Xt))
    assert BoogingConfig().bt.nu == 0.25


def test_booging_hull_threads_and_test_columns():
    d, rng = data(5)
    cfg = BoogingConfig(n_bags=8, bt=BtConfig(nu=0.25, n_steps=30), seed=3)
    a = fit_booging(d, cfg, n_jobs=1)
    b = fit_booging(d, cfg, n_jobs=4)
    Xt = rng.uniform(size=(25, 4))
    pa = predict_ensemble(a, Xt)
    np.testing.assert_array_equal(pa, predict_ensemble(b, Xt))
    np.testing.assert_array_equal(pa, predict_ensemble(a, Xt))  # noise columns regenerate
    mem = a.member_predictions(Xt)
    assert np.all(pa >= mem.min(0) - 1e-12) and np.all(pa <= mem.max(0) + 1e-12)
    with pytest.raises(ValueError):
        predict_ensemble(a, np.zeros((3, 8)))


def test_booging_variance_shrinks_with_bags():
    d, rng = data(6)
    Xt = rng.uniform(size=(15, 4))
    spread = {}
    for B in (2, 16):
        preds = [predict_ensemble(fit_booging(d, BoogingConfig(
            n_bags=B, bt=BtConfig(nu=0.25, n_steps=40), seed=s)), Xt) for s in range(8)]
        spread[B] = np.mean(np.var(preds, axis=0))
    assert spread[16] < spread[2]
