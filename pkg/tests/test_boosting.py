import numpy as np
import pytest

from beamtrain.boosting import (TrainConfig, Tree, kfold_tune, load_model, param_count,
                                save_model, train, training_loss_curve)


def _grid_data(n=64, d=4, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.uniform(0, 100, size=(n, 2))
    Y = np.stack([np.sin(X[:, 0] / 20 + k) * 0.3 + 0.5 for k in range(d)], axis=1)
    return X, Y


def test_constant_targets_use_base_only():
    X, _ = _grid_data()
    Y = np.full((len(X), 3), 0.7)
    model = train(X, Y, TrainConfig(tree_count=10))
    assert len(model.trees) == 0
    assert np.allclose(model.predict_batch(X), 0.7)
    assert param_count(model) == 3


def test_memorizes_small_dataset():
    X, Y = _grid_data(n=24, d=2)
    cfg = TrainConfig(tree_count=400, max_depth=4, learning_rate=0.5,
                      budget_parameters=100000)
    model = train(X, Y, cfg)
    mse = np.mean((model.predict_batch(X) - Y) ** 2)
    assert mse < 1e-3


def test_budget_enforced_during_training():
    X, Y = _grid_data(n=80, d=1024, seed=1)
    cfg = TrainConfig(tree_count=50, max_depth=3, learning_rate=0.5,
                      budget_parameters=2048)
    model = train(X, Y, cfg)
    assert param_count(model) <= 2048


def test_budget_below_outputs_raises():
    X, Y = _grid_data(d=8)
    with pytest.raises(ValueError):
        train(X, Y, TrainConfig(budget_parameters=4))
    with pytest.raises(ValueError):
        train(np.zeros((0, 2)), np.zeros((0, 2)), TrainConfig())


def test_param_count_examples():
    # a single stump: 1 internal node (2 params) + 2 leaves = 4
    stump = Tree(feature=[0, -1, -1], threshold=[0.5, 0, 0],
                 left=[1, -1, -1], right=[2, -1, -1], value=[0, 0.2, 0.8])
    assert stump.param_cost == 4
    assert stump.depth == 1
    X = np.array([[0.0, 0.0], [1.0, 0.0]])
    model = train(X, np.array([[0.0], [1.0]]),
                  TrainConfig(tree_count=1, max_depth=1, learning_rate=1.0,
                              min_samples_leaf=1))
    assert len(model.trees) == 1
    assert param_count(model) == 1 + 4  # base + stump


def test_tree_predict_routing():
    stump = Tree(feature=[1, -1, -1], threshold=[10.0, 0, 0],
                 left=[1, -1, -1], right=[2, -1, -1], value=[0, -1.0, 1.0])
    X = np.array([[0.0, 5.0], [0.0, 10.0], [0.0, 10.5]])
    assert np.array_equal(stump.predict(X), [-1.0, -1.0, 1.0])


def test_training_loss_monotone():
    X, Y = _grid_data(n=40, d=1, seed=2)
    losses = training_loss_curve(X, Y, TrainConfig(tree_count=8, learning_rate=0.3,
                                                   budget_parameters=10000))
    assert all(b <= a + 1e-12 for a, b in zip(losses, losses[1:]))


def test_row_permutation_invariance():
    X, Y = _grid_data(n=50, d=2, seed=3)
    cfg = TrainConfig(tree_count=5, budget_parameters=10000)
    base = train(X, Y, cfg)
    perm = np.random.default_rng(4).permutation(len(X))
    shuffled = train(X[perm], Y[perm], cfg)
    probe = np.random.default_rng(5).uniform(0, 100, size=(20, 2))
    assert np.array_equal(base.predict_batch(probe), shuffled.predict_batch(probe))


def test_predictions_clipped_to_unit_interval():
    X = np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [3.0, 0.0]])
    Y = np.array([[0.0], [0.0], [1.0], [1.0]])
    model = train(X, Y, TrainConfig(tree_count=30, learning_rate=1.0,
                                    min_samples_leaf=1, budget_parameters=10000))
    pred = model.predict_batch(np.array([[-50.0, 0.0], [50.0, 0.0]]))
    assert np.all(pred >= 0.0) and np.all(pred <= 1.0)


def test_kfold_single_point_short_circuits():
    cfg = TrainConfig(tree_count=3)
    assert kfold_tune(None, None, [cfg], None) is cfg
    with pytest.raises(ValueError):
        kfold_tune(None, None, [], None)


def test_kfold_prefers_richer_model_when_underfitting():
    X, Y = _grid_data(n=120, d=1, seed=6)
    folds = np.arange(len(X)) % 4
    weak = TrainConfig(tree_count=1, max_depth=1, budget_parameters=10000)
    strong = TrainConfig(tree_count=60, max_depth=3, learning_rate=0.3,
                         budget_parameters=10000)
    assert kfold_tune(X, Y, [weak, strong], folds) == strong


def test_kfold_deterministic():
    X, Y = _grid_data(n=60, d=2, seed=7)
    folds = np.arange(len(X)) % 3
    grid = [TrainConfig(tree_count=t, budget_parameters=10000) for t in (2, 8)]
    assert kfold_tune(X, Y, grid, folds) == kfold_tune(X, Y, grid, folds)


def test_model_roundtrip(tmp_path):
    X, Y = _grid_data(n=40, d=3, seed=8)
    model = train(X, Y, TrainConfig(tree_count=6, budget_parameters=10000),
                  role="decoupled_ue")
    path = str(tmp_path / "m.npz")
    save_model(model, path)
    loaded = load_model(path)
    assert loaded.role == "decoupled_ue"
    assert loaded.output_dimension == 3
    assert param_count(loaded) == param_count(model)
    probe = np.random.default_rng(9).uniform(0, 100, size=(10, 2))
    assert np.array_equal(loaded.predict_batch(probe), model.predict_batch(probe))


def test_model_bad_file(tmp_path):
    bad = tmp_path / "bad.npz"
    bad.write_bytes(b"garbage")
    with pytest.raises(ValueError):
        load_model(str(bad))


def test_invalid_config_rejected():
    with pytest.raises(ValueError):
        TrainConfig(max_depth=0)
    with pytest.raises(ValueError):
        TrainConfig(learning_rate=0.0)
