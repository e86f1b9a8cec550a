"""Multi-output gradient-boosted regression trees on (x, y) locations.

Each output dimension gets its own sequence of depth-limited trees fitted
to squared-error residuals; all outputs share one hyperparameter set and
one global parameter budget. The budget is what keeps the UE-side models
lightweight, so it is enforced during training, not checked after.

Counting rule (frozen): 2 parameters per internal node (feature id +
threshold), 1 per leaf, 1 per output base prediction.
"""

import logging
import os
import tempfile
from dataclasses import dataclass, field

import numpy as np

log = logging.getLogger(__name__)

MODEL_FORMAT_VERSION = 1


@dataclass(frozen=True)
class TrainConfig:
    tree_count: int = 50
    max_depth: int = 3
    learning_rate: float = 0.3
    min_samples_leaf: int = 2
    budget_parameters: int = 2048

    def __post_init__(self):
        if self.tree_count < 0 or self.max_depth < 1:
            raise ValueError("tree_count must be >= 0 and max_depth >= 1")
        if not (0.0 < self.learning_rate <= 1.0):
            raise ValueError("learning_rate must be in (0, 1]")


class Tree:
    """One regression tree stored as flat node arrays.

    Node n: feature[n] >= 0 means internal with threshold[n] and children
    left[n]/right[n] (x[feature] <= threshold goes left); feature[n] == -1
    means leaf with value[n].
    """

    __slots__ = ("feature", "threshold", "left", "right", "value")

    def __init__(self, feature, threshold, left, right, value):
        self.feature = np.asarray(feature, dtype=int)
        self.threshold = np.asarray(threshold, dtype=float)
        self.left = np.asarray(left, dtype=int)
        self.right = np.asarray(right, dtype=int)
        self.value = np.asarray(value, dtype=float)

    @property
    def num_internal(self) -> int:
        return int(np.sum(self.feature >= 0))

    @property
    def num_leaves(self) -> int:
        return int(np.sum(self.feature < 0))

    @property
    def param_cost(self) -> int:
        return 2 * self.num_internal + self.num_leaves

    @property
    def depth(self) -> int:
        def walk(n):
            if self.feature[n] < 0:
                return 0
            return 1 + max(walk(self.left[n]), walk(self.right[n]))
        return walk(0)

    def predict(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(X.shape[0], dtype=int)
        active = self.feature[node] >= 0
        while np.any(active):
            idx = np.nonzero(active)[0]
            n = node[idx]
            go_left = X[idx, self.feature[n]] <= self.threshold[n]
            node[idx] = np.where(go_left, self.left[n], self.right[n])
            active = self.feature[node] >= 0
        return self.value[node]


def _best_split(X, residual, order, min_leaf):
    """Best (feature, threshold, sse) over midpoint thresholds; ties go to
    the lower feature index, then the lower threshold."""
    n = order[0].shape[0]
    best = None
    for f in range(X.shape[1]):
        o = order[f]
        v = X[o, f]
        r = residual[o]
        cs = np.cumsum(r)
        cs2 = np.cumsum(r * r)
        total, total2 = cs[-1], cs2[-1]
        i = np.arange(1, n)          # left sizes
        valid = (v[:-1] < v[1:]) & (i >= min_leaf) & (n - i >= min_leaf)
        if not np.any(valid):
            continue
        left_sse = cs2[:-1] - cs[:-1] ** 2 / i
        right_sse = (total2 - cs2[:-1]) - (total - cs[:-1]) ** 2 / (n - i)
        sse = np.where(valid, left_sse + right_sse, np.inf)
        pos = int(np.argmin(sse))
        if best is None or sse[pos] < best[2] - 1e-15:
            best = (f, (v[pos] + v[pos + 1]) / 2.0, float(sse[pos]))
    return best


def _fit_tree(X, residual, order, config: TrainConfig) -> Tree:
    feature, threshold, left, right, value = [], [], [], [], []

    def build(order_node, depth):
        node_id = len(feature)
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        r = residual[order_node[0]]
        value.append(float(np.mean(r)))
        n = r.shape[0]
        if depth >= config.max_depth or n < 2 * config.min_samples_leaf:
            return node_id
        parent_sse = float(np.sum((r - np.mean(r)) ** 2))
        split = _best_split(X, residual, order_node, config.min_samples_leaf)
        if split is None or split[2] >= parent_sse - 1e-12 * max(1.0, parent_sse):
            return node_id
        f, thr, _ = split
        go_left = X[:, f] <= thr
        left_orders = [o[go_left[o]] for o in order_node]
        right_orders = [o[~go_left[o]] for o in order_node]
        feature[node_id] = f
        threshold[node_id] = thr
        left[node_id] = build(left_orders, depth + 1)
        right[node_id] = build(right_orders, depth + 1)
        return node_id

    build(order, 0)
    return Tree(feature, threshold, left, right, value)


@dataclass
class TreeEnsembleModel:
    """Per-output boosted tree ensembles with a shared global budget."""

    base_prediction: np.ndarray           # (d,)
    trees: list = field(default_factory=list)  # list of (output index, Tree)
    learning_rate: float = 0.3
    output_dimension: int = 1
    role: str = "coupled"                 # coupled | decoupled_bs | decoupled_ue

    def predict(self, location) -> np.ndarray:
        return self.predict_batch(np.asarray(location, dtype=float).reshape(1, -1))[0]

    def predict_batch(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        out = np.tile(self.base_prediction, (X.shape[0], 1))
        for dim, tree in self.trees:
            out[:, dim] += self.learning_rate * tree.predict(X)
        return np.clip(out, 0.0, 1.0)

    def depth_histogram(self) -> dict[int, int]:
        hist: dict[int, int] = {}
        for _, tree in self.trees:
            d = tree.depth
            hist[d] = hist.get(d, 0) + 1
        return hist


def param_count(model: TreeEnsembleModel) -> int:
    return model.output_dimension + sum(t.param_cost for _, t in model.trees)


def train(X, Y, config: TrainConfig, role: str = "coupled") -> TreeEnsembleModel:
    """Greedy per-output boosting under a global parameter budget.

    Rounds fit one tree per output on the current residuals; training stops
    the moment the next tree would push the parameter count past the budget.
    Rows are lexicographically sorted by location first, so the fit does not
    depend on input row order.
    """
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if Y.ndim == 1:
        Y = Y[:, None]
    if len(X) == 0:
        raise ValueError("empty training data")
    if len(X) != len(Y):
        raise ValueError("inputs and targets must have the same length")
    d = Y.shape[1]
    if config.budget_parameters < d:
        raise ValueError(f"budget {config.budget_parameters} cannot hold {d} base predictions")

    sort = np.lexsort((X[:, 1], X[:, 0]))
    X, Y = X[sort], Y[sort]
    order = [np.argsort(X[:, f], kind="stable") for f in range(X.shape[1])]

    model = TreeEnsembleModel(base_prediction=Y.mean(axis=0), learning_rate=config.learning_rate,
                              output_dimension=d, role=role)
    pred = np.tile(model.base_prediction, (len(X), 1))
    used = d
    for _ in range(config.tree_count):
        for dim in range(d):
            residual = Y[:, dim] - pred[:, dim]
            if np.max(np.abs(residual)) < 1e-12:
                continue
            tree = _fit_tree(X, residual, order, config)
            if tree.num_internal == 0:
                continue  # no useful split left for this output
            if used + tree.param_cost > config.budget_parameters:
                return model
            model.trees.append((dim, tree))
            used += tree.param_cost
            pred[:, dim] += config.learning_rate * tree.predict(X)
    return model


def training_loss_curve(X, Y, config: TrainConfig) -> np.ndarray:
    """Per-round training MSE (diagnostic; mirrors train())."""
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if Y.ndim == 1:
        Y = Y[:, None]
    losses = []
    model = TreeEnsembleModel(base_prediction=Y.mean(axis=0), learning_rate=config.learning_rate,
                              output_dimension=Y.shape[1])
    for rounds in range(1, config.tree_count + 1):
        cfg = TrainConfig(tree_count=rounds, max_depth=config.max_depth,
                          learning_rate=config.learning_rate,
                          min_samples_leaf=config.min_samples_leaf,
                          budget_parameters=config.budget_parameters)
        m = train(X, Y, cfg)
        losses.append(float(np.mean((m.predict_batch(X) - Y) ** 2)))
    return np.array(losses)


def kfold_tune(X, Y, grid: list[TrainConfig], fold_assignments: np.ndarray) -> TrainConfig:
    """Grid point with the lowest mean validation MSE over folds; ties break
    toward smaller parameter count, then earlier grid position."""
    if not grid:
        raise ValueError("hyperparameter grid must be nonempty")
    if len(grid) == 1:
        return grid[0]
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    folds = np.unique(fold_assignments)
    best = None
    for gi, cfg in enumerate(grid):
        mses, params = [], []
        for f in folds:
            val = fold_assignments == f
            model = train(X[~val], Y[~val], cfg)
            mses.append(float(np.mean((model.predict_batch(X[val]) - Y[val]) ** 2)))
            params.append(param_count(model))
        key = (float(np.mean(mses)), float(np.mean(params)), gi)
        if best is None or key < best[0]:
            best = (key, cfg)
        log.debug("grid point %d: val MSE %.6g, mean params %.1f", gi, key[0], key[1])
    return best[1]


def save_model(model: TreeEnsembleModel, path: str) -> None:
    arrays = {
        "format_version": np.array([MODEL_FORMAT_VERSION]),
        "base_prediction": model.base_prediction,
        "learning_rate": np.array([model.learning_rate]),
        "output_dimension": np.array([model.output_dimension]),
        "role": np.array([model.role]),
        "tree_outputs": np.array([dim for dim, _ in model.trees], dtype=int),
        "tree_sizes": np.array([len(t.feature) for _, t in model.trees], dtype=int),
    }
    for name in ("feature", "threshold", "left", "right", "value"):
        parts = [getattr(t, name) for _, t in model.trees]
        arrays["node_" + name] = np.concatenate(parts) if parts else np.array([])
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".npz.tmp")
    os.close(fd)
    try:
        with open(tmp, "wb") as fh:
            np.savez_compressed(fh, **arrays)
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)


def load_model(path: str) -> TreeEnsembleModel:
    try:
        data = np.load(path)
    except Exception as exc:
        raise ValueError(f"cannot read model file {path!r}: {exc}") from exc
    if "format_version" not in data.files or data["format_version"][0] != MODEL_FORMAT_VERSION:
        raise ValueError(f"unsupported model file version in {path!r}")
    model = TreeEnsembleModel(base_prediction=data["base_prediction"],
                              learning_rate=float(data["learning_rate"][0]),
                              output_dimension=int(data["output_dimension"][0]),
                              role=str(data["role"][0]))
    offset = 0
    for dim, size in zip(data["tree_outputs"], data["tree_sizes"]):
        sl = slice(offset, offset + size)
        model.trees.append((int(dim), Tree(data["node_feature"][sl], data["node_threshold"][sl],
                                           data["node_left"][sl], data["node_right"][sl],
                                           data["node_value"][sl])))
        offset += size
    return model
