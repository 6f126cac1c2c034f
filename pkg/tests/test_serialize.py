import json

import numpy as np
import pytest

from slowtree.models import KINDS, fit_model, predict
from slowtree.serialize import ModelFormatError, from_dict, load_model, save_model, to_dict
from slowtree.tabular import Dataset

PARAMS = {
    "cart": {"max_depth": 4},
    "rf": {"n_trees": 5},
    "bt": {"n_steps": 20},
    "booging": {"n_bags": 3, "n_steps": 15},
    "sgt": {"eta0": 0.3, "h_bar": 0.2},
    "lasso": {},
}


@pytest.fixture(scope="module")
def data():
    rng = np.random.default_rng(0)
    X = rng.uniform(size=(60, 3))
    return Dataset(X, X[:, 0] * 2 + np.sin(5 * X[:, 1]) + 0.1 * rng.normal(size=60),
                   feature_names=("a", "b", "c")), rng.uniform(size=(40, 3))


@pytest.mark.parametrize("kind", KINDS)
def test_round_trip_is_prediction_exact(kind, data, tmp_path):
    d, Xt = data
    m = fit_model(kind, d, PARAMS[kind], seed=3)
    path = tmp_path / f"{kind}.json"
    save_model(m, path, d.feature_names)
    m2, names = load_model(path)
    assert names == ["a", "b", "c"]
    np.testing.assert_array_equal(predict(m2, Xt), predict(m, Xt))
    doc = json.loads(path.read_text())
    assert doc["format_version"] == 1 and doc["kind"] == kind and doc["n_features"] == 3
    # a second save of the reloaded model is the same document
    assert to_dict(m2, names) == doc


def test_nested_tree_layout(data):
    d, _ = data
    doc = to_dict(fit_model("cart", d, {"max_depth": 1}))
    t = doc["payload"]["tree"]
    assert set(t) == {"feature", "threshold", "left", "right"}
    assert set(t["left"]) == {"value"}


def test_bad_documents():
    with pytest.raises(ModelFormatError):
        from_dict({"x": 1})
    with pytest.raises(ModelFormatError, match="format_version"):
        from_dict({"format_version": 99, "kind": "cart", "payload": {}, "n_features": 1})
    with pytest.raises(ModelFormatError, match="kind"):
        from_dict({"format_version": 1, "kind": "svm", "payload": {}, "n_features": 1})
