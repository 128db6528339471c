"""Lightweight spoofing classifiers and the majority-vote ensemble.

Members: logistic regression trained by full-batch gradient descent on
binary cross-entropy, a CART-style Gini decision tree, bagged trees
("forest"), and an optional tiny MLP (one hidden layer, 8 sigmoid units)
trained by the same BCE objective.

Decision threshold is 0.5 everywhere, with boundary cases and voting ties
resolving to 1 (spoof): fail-closed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

N_FEATURES = 5
MODEL_FORMAT_VERSION = 1
PROB_CLAMP = 1e-12

HIDDEN_UNITS = 8


class ModelError(Exception):
    pass


@dataclass(frozen=True)
class TrainConfig:
    seed: int
    learning_rate: float = 0.1
    epochs: int = 500
    max_depth: int = 4
    forest_size: int = 5
    val_split: float = 0.0

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ModelError("learning rate must be > 0")
        if self.epochs < 1:
            raise ModelError("epochs must be >= 1")
        if not 0.0 <= self.val_split < 1.0:
            raise ModelError("validation split must be in [0, 1)")


# ---------------------------------------------------------------------------
# Shared numerics


def sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z, dtype=float)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def bce_loss(probs: np.ndarray, labels: np.ndarray) -> float:
    """Mean binary cross-entropy with probability clamping."""
    p = np.clip(probs, PROB_CLAMP, 1.0 - PROB_CLAMP)
    return float(-np.mean(labels * np.log(p) + (1 - labels) * np.log(1 - p)))


def _validate_training_data(
    features: Sequence[Sequence[float]], labels: Sequence[int]
) -> tuple[np.ndarray, np.ndarray]:
    X = np.asarray(features, dtype=float)
    y = np.asarray(labels, dtype=float)
    if X.ndim != 2 or X.shape[1] != N_FEATURES:
        raise ModelError(f"features must be n x {N_FEATURES}")
    if len(y) != len(X):
        raise ModelError("feature/label length mismatch")
    if not np.all(np.isfinite(X)):
        raise ModelError("non-finite feature value")
    if not np.all((y == 0) | (y == 1)):
        raise ModelError("labels must be 0 or 1")
    if y.min() == y.max():
        raise ModelError("degenerate labels: training set contains one class")
    return X, y


def _fit_scaling(X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    std = np.where(std > 0, std, 1.0)  # constant feature: leave centered only
    return mean, std


# ---------------------------------------------------------------------------
# Logistic regression


@dataclass
class LogisticModel:
    weights: np.ndarray  # shape (5,)
    bias: float
    mean: np.ndarray
    std: np.ndarray
    epochs: int
    final_loss: float

    kind = "logistic"

    def predict_proba(self, x: Sequence[float]) -> float:
        z = self._scale(x) @ self.weights + self.bias
        return float(sigmoid(np.asarray([z]))[0])

    def predict(self, x: Sequence[float]) -> tuple[int, float]:
        p = self.predict_proba(x)
        return (1 if p >= 0.5 else 0), p

    def _scale(self, x: Sequence[float]) -> np.ndarray:
        arr = np.asarray(x, dtype=float)
        if arr.shape != (N_FEATURES,):
            raise ModelError(f"feature vector must have length {N_FEATURES}")
        if not np.all(np.isfinite(arr)):
            raise ModelError("non-finite feature value")
        return (arr - self.mean) / self.std

    def training_loss(self, X: np.ndarray, y: np.ndarray) -> float:
        Z = (X - self.mean) / self.std
        return bce_loss(sigmoid(Z @ self.weights + self.bias), y)


def bce_gradient(
    X: np.ndarray, y: np.ndarray, weights: np.ndarray, bias: float
) -> tuple[np.ndarray, float]:
    """Analytic gradient of mean BCE for a sigmoid-linear model."""
    p = sigmoid(X @ weights + bias)
    err = p - y
    return X.T @ err / len(y), float(err.mean())


def train_logistic(
    features: Sequence[Sequence[float]],
    labels: Sequence[int],
    config: TrainConfig,
) -> LogisticModel:
    X, y = _validate_training_data(features, labels)
    mean, std = _fit_scaling(X)
    Z = (X - mean) / std
    w = np.zeros(N_FEATURES)
    b = 0.0
    for _ in range(config.epochs):
        gw, gb = bce_gradient(Z, y, w, b)
        w -= config.learning_rate * gw
        b -= config.learning_rate * gb
    loss = bce_loss(sigmoid(Z @ w + b), y)
    return LogisticModel(
        weights=w, bias=b, mean=mean, std=std, epochs=config.epochs,
        final_loss=loss,
    )


# ---------------------------------------------------------------------------
# Decision tree (CART, Gini)


@dataclass
class TreeNode:
    feature: Optional[int] = None
    threshold: Optional[float] = None
    left: Optional["TreeNode"] = None
    right: Optional["TreeNode"] = None
    p1: Optional[float] = None  # leaf: fraction of spoof-labeled samples

    @property
    def is_leaf(self) -> bool:
        return self.p1 is not None


@dataclass
class DecisionTree:
    root: TreeNode
    max_depth: int

    kind = "tree"

    def predict(self, x: Sequence[float]) -> tuple[int, float]:
        arr = np.asarray(x, dtype=float)
        if arr.shape != (N_FEATURES,):
            raise ModelError(f"feature vector must have length {N_FEATURES}")
        node = self.root
        while not node.is_leaf:
            node = node.left if arr[node.feature] <= node.threshold else node.right
        return (1 if node.p1 >= 0.5 else 0), node.p1


def _gini(pos: np.ndarray, n: np.ndarray) -> np.ndarray:
    q = pos / n
    return 1.0 - q * q - (1.0 - q) * (1.0 - q)


def _best_split(X: np.ndarray, y: np.ndarray) -> Optional[tuple[int, float]]:
    """Best (feature, midpoint threshold) by weighted Gini.

    Ties break to the lowest feature index, then lowest threshold; returns
    None when no split improves on the parent node's impurity.
    """
    n = len(y)
    total_pos = y.sum()
    parent = 1.0 - (total_pos / n) ** 2 - ((n - total_pos) / n) ** 2
    best: Optional[tuple[float, int, float]] = None
    for f in range(X.shape[1]):
        order = np.argsort(X[:, f], kind="stable")
        v = X[order, f]
        cum_pos = np.cumsum(y[order])
        boundary = np.nonzero(v[1:] > v[:-1])[0]  # split after index i
        if boundary.size == 0:
            continue
        n_left = boundary + 1.0
        n_right = n - n_left
        pos_left = cum_pos[boundary]
        pos_right = total_pos - pos_left
        weighted = (
            n_left * _gini(pos_left, n_left) + n_right * _gini(pos_right, n_right)
        ) / n
        thresholds = (v[boundary] + v[boundary + 1]) / 2.0
        for impurity, thr in zip(weighted, thresholds):
            if best is None or impurity < best[0] - 1e-15:
                best = (impurity, f, float(thr))
    if best is None or best[0] >= parent - 1e-12:
        return None
    return best[1], best[2]


def _grow_tree(X: np.ndarray, y: np.ndarray, depth: int, max_depth: int) -> TreeNode:
    p1 = float(y.mean())
    if depth >= max_depth or p1 in (0.0, 1.0):
        return TreeNode(p1=p1)
    split = _best_split(X, y)
    if split is None:
        return TreeNode(p1=p1)
    f, thr = split
    mask = X[:, f] <= thr
    return TreeNode(
        feature=f,
        threshold=thr,
        left=_grow_tree(X[mask], y[mask], depth + 1, max_depth),
        right=_grow_tree(X[~mask], y[~mask], depth + 1, max_depth),
    )


def train_tree(
    features: Sequence[Sequence[float]],
    labels: Sequence[int],
    config: TrainConfig,
) -> DecisionTree:
    X, y = _validate_training_data(features, labels)
    return DecisionTree(root=_grow_tree(X, y, 0, config.max_depth),
                        max_depth=config.max_depth)


# ---------------------------------------------------------------------------
# Bagged forest


@dataclass
class Forest:
    trees: list[DecisionTree]
    max_depth: int

    kind = "forest"

    def predict(self, x: Sequence[float]) -> tuple[int, float]:
        votes = [tree.predict(x)[0] for tree in self.trees]
        p = sum(votes) / len(votes)
        return (1 if p >= 0.5 else 0), p


def train_forest(
    features: Sequence[Sequence[float]],
    labels: Sequence[int],
    config: TrainConfig,
) -> Forest:
    X, y = _validate_training_data(features, labels)
    rng = np.random.default_rng(config.seed)
    trees = []
    for _ in range(config.forest_size):
        # resample until the bootstrap carries both classes
        while True:
            idx = rng.integers(0, len(y), size=len(y))
            if y[idx].min() != y[idx].max():
                break
        trees.append(
            DecisionTree(root=_grow_tree(X[idx], y[idx], 0, config.max_depth),
                         max_depth=config.max_depth)
        )
    return Forest(trees=trees, max_depth=config.max_depth)


# ---------------------------------------------------------------------------
# Tiny MLP


@dataclass
class MlpModel:
    w1: np.ndarray  # (5, 8)
    b1: np.ndarray  # (8,)
    w2: np.ndarray  # (8,)
    b2: float
    mean: np.ndarray
    std: np.ndarray
    epochs: int
    final_loss: float

    kind = "mlp"

    def _forward(self, Z: np.ndarray) -> np.ndarray:
        hidden = sigmoid(Z @ self.w1 + self.b1)
        return sigmoid(hidden @ self.w2 + self.b2)

    def predict_proba(self, x: Sequence[float]) -> float:
        arr = np.asarray(x, dtype=float)
        if arr.shape != (N_FEATURES,):
            raise ModelError(f"feature vector must have length {N_FEATURES}")
        Z = (arr - self.mean) / self.std
        return float(self._forward(Z[None, :])[0])

    def predict(self, x: Sequence[float]) -> tuple[int, float]:
        p = self.predict_proba(x)
        return (1 if p >= 0.5 else 0), p


def train_mlp(
    features: Sequence[Sequence[float]],
    labels: Sequence[int],
    config: TrainConfig,
) -> MlpModel:
    X, y = _validate_training_data(features, labels)
    mean, std = _fit_scaling(X)
    Z = (X - mean) / std
    rng = np.random.default_rng(config.seed)
    w1 = rng.normal(0.0, 0.5, size=(N_FEATURES, HIDDEN_UNITS))
    b1 = np.zeros(HIDDEN_UNITS)
    w2 = rng.normal(0.0, 0.5, size=HIDDEN_UNITS)
    b2 = 0.0
    n = len(y)
    for _ in range(config.epochs):
        hidden = sigmoid(Z @ w1 + b1)
        p = sigmoid(hidden @ w2 + b2)
        d_out = (p - y) / n
        gw2 = hidden.T @ d_out
        gb2 = d_out.sum()
        d_hidden = np.outer(d_out, w2) * hidden * (1.0 - hidden)
        gw1 = Z.T @ d_hidden
        gb1 = d_hidden.sum(axis=0)
        w1 -= config.learning_rate * gw1
        b1 -= config.learning_rate * gb1
        w2 -= config.learning_rate * gw2
        b2 -= config.learning_rate * gb2
    hidden = sigmoid(Z @ w1 + b1)
    loss = bce_loss(sigmoid(hidden @ w2 + b2), y)
    return MlpModel(w1=w1, b1=b1, w2=w2, b2=float(b2), mean=mean, std=std,
                    epochs=config.epochs, final_loss=loss)


# ---------------------------------------------------------------------------
# Ensemble


@dataclass
class Ensemble:
    members: list

    kind = "ensemble"

    def __post_init__(self):
        if not self.members:
            raise ModelError("ensemble requires at least one member")

    def predict(self, x: Sequence[float]) -> tuple[int, float]:
        label = majority_vote(self, x)
        return label, confidence(self, x, label)


def majority_vote(ensemble: Ensemble, x: Sequence[float]) -> int:
    """Majority label across members; exact ties resolve to 1 (spoof)."""
    votes = [m.predict(x)[0] for m in ensemble.members]
    ones = sum(votes)
    zeros = len(votes) - ones
    return 1 if ones >= zeros else 0


def confidence(ensemble: Ensemble, x: Sequence[float], reference_label: int) -> float:
    """Fraction of members whose vote equals the reference label."""
    votes = [m.predict(x)[0] for m in ensemble.members]
    return sum(1 for v in votes if v == reference_label) / len(votes)


# ---------------------------------------------------------------------------
# Persistence (versioned JSON)


def _tree_node_to_obj(node: TreeNode) -> dict:
    if node.is_leaf:
        return {"p1": node.p1}
    return {
        "feature": node.feature,
        "threshold": node.threshold,
        "left": _tree_node_to_obj(node.left),
        "right": _tree_node_to_obj(node.right),
    }


def _tree_node_from_obj(obj: dict) -> TreeNode:
    if "p1" in obj:
        return TreeNode(p1=obj["p1"])
    return TreeNode(
        feature=obj["feature"],
        threshold=obj["threshold"],
        left=_tree_node_from_obj(obj["left"]),
        right=_tree_node_from_obj(obj["right"]),
    )


def model_to_document(model) -> dict:
    doc = {"version": MODEL_FORMAT_VERSION, "kind": model.kind, "scaling": None}
    if model.kind == "logistic":
        doc["scaling"] = {"mean": model.mean.tolist(), "std": model.std.tolist()}
        doc["parameters"] = {
            "weights": model.weights.tolist(),
            "bias": model.bias,
            "epochs": model.epochs,
            "final_loss": model.final_loss,
        }
    elif model.kind == "tree":
        doc["parameters"] = {
            "max_depth": model.max_depth,
            "root": _tree_node_to_obj(model.root),
        }
    elif model.kind == "forest":
        doc["parameters"] = {
            "max_depth": model.max_depth,
            "trees": [_tree_node_to_obj(t.root) for t in model.trees],
        }
    elif model.kind == "mlp":
        doc["scaling"] = {"mean": model.mean.tolist(), "std": model.std.tolist()}
        doc["parameters"] = {
            "w1": model.w1.tolist(),
            "b1": model.b1.tolist(),
            "w2": model.w2.tolist(),
            "b2": model.b2,
            "epochs": model.epochs,
            "final_loss": model.final_loss,
        }
    elif model.kind == "ensemble":
        doc["members"] = [model_to_document(m) for m in model.members]
    else:
        raise ModelError(f"unsupported model kind: {model.kind!r}")
    return doc


def model_from_document(doc: dict):
    if not isinstance(doc, dict) or "kind" not in doc:
        raise ModelError("corrupt model document")
    if doc.get("version") != MODEL_FORMAT_VERSION:
        raise ModelError(f"unsupported model file version: {doc.get('version')!r}")
    kind = doc["kind"]
    params = doc.get("parameters", {})
    if kind == "logistic":
        scaling = doc["scaling"]
        return LogisticModel(
            weights=np.asarray(params["weights"], dtype=float),
            bias=float(params["bias"]),
            mean=np.asarray(scaling["mean"], dtype=float),
            std=np.asarray(scaling["std"], dtype=float),
            epochs=int(params["epochs"]),
            final_loss=float(params["final_loss"]),
        )
    if kind == "tree":
        return DecisionTree(root=_tree_node_from_obj(params["root"]),
                            max_depth=int(params["max_depth"]))
    if kind == "forest":
        depth = int(params["max_depth"])
        return Forest(
            trees=[DecisionTree(root=_tree_node_from_obj(t), max_depth=depth)
                   for t in params["trees"]],
            max_depth=depth,
        )
    if kind == "mlp":
        scaling = doc["scaling"]
        return MlpModel(
            w1=np.asarray(params["w1"], dtype=float),
            b1=np.asarray(params["b1"], dtype=float),
            w2=np.asarray(params["w2"], dtype=float),
            b2=float(params["b2"]),
            mean=np.asarray(scaling["mean"], dtype=float),
            std=np.asarray(scaling["std"], dtype=float),
            epochs=int(params["epochs"]),
            final_loss=float(params["final_loss"]),
        )
    if kind == "ensemble":
        return Ensemble(members=[model_from_document(m) for m in doc["members"]])
    raise ModelError(f"unsupported model kind: {kind!r}")


def save_model(model, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_document(model), fh, separators=(",", ":"))
        fh.write("\n")


def load_model(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ModelError(f"corrupt model file: {exc}") from exc
    return model_from_document(doc)
