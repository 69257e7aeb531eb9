"""Deterministic gradient-boosted decision trees for binary classification.

Logistic loss, second-order split gains, exact greedy split enumeration over
sorted feature values, no row or column subsampling.  Determinism: given the
same inputs, parameters, and row order, training and prediction are
bit-identical (fixed traversal order, single-threaded kernels, split ties
broken by lowest feature index then lowest threshold).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numba import njit
from scipy.special import expit


@dataclass(frozen=True)
class GBDTParams:
    """Boosting hyperparameters; defaults match the common reference values."""

    n_rounds: int = 100
    learning_rate: float = 0.3
    max_depth: int = 6
    min_child_weight: float = 1.0
    reg_lambda: float = 1.0
    gamma: float = 0.0
    base_score: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.n_rounds < 1:
            raise ValueError("n_rounds must be >= 1")
        if not 0 < self.learning_rate <= 1:
            raise ValueError("learning_rate must be in (0, 1]")
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        if not 0 < self.base_score < 1:
            raise ValueError("base_score must be in (0, 1)")

    def to_dict(self) -> dict:
        return {
            "n_rounds": self.n_rounds,
            "learning_rate": self.learning_rate,
            "max_depth": self.max_depth,
            "min_child_weight": self.min_child_weight,
            "reg_lambda": self.reg_lambda,
            "gamma": self.gamma,
            "base_score": self.base_score,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GBDTParams":
        return cls(**d)


@dataclass(eq=False)
class Tree:
    """Flat-array regression tree: feature < 0 marks a leaf."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    weight: np.ndarray
    gain: np.ndarray

    @property
    def n_nodes(self) -> int:
        return self.feature.size

    def used_features(self) -> set[int]:
        return {int(f) for f in self.feature if f >= 0}

    def to_json_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "weight": self.weight.tolist(),
            "gain": self.gain.tolist(),
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "Tree":
        return cls(
            feature=np.asarray(d["feature"], dtype=np.int64),
            threshold=np.asarray(d["threshold"], dtype=np.float64),
            left=np.asarray(d["left"], dtype=np.int64),
            right=np.asarray(d["right"], dtype=np.int64),
            weight=np.asarray(d["weight"], dtype=np.float64),
            gain=np.asarray(d["gain"], dtype=np.float64),
        )


@njit(cache=True)
def _grow_tree(X, sorted_idx, g, h, max_depth, lam, gamma, min_child_weight):
    """One level-wise exact-greedy tree fit.

    Returns the node arrays plus the raw (unshrunken) tree output per
    training row.
    """
    n, d = X.shape
    max_nodes = 2 * n + 8
    feature = np.full(max_nodes, -1, np.int64)
    threshold = np.zeros(max_nodes)
    left = np.full(max_nodes, -1, np.int64)
    right = np.full(max_nodes, -1, np.int64)
    weight = np.zeros(max_nodes)
    gain_arr = np.zeros(max_nodes)
    node_g = np.zeros(max_nodes)
    node_h = np.zeros(max_nodes)

    node_of_row = np.zeros(n, np.int64)
    tree_out = np.zeros(n)

    g_tot = 0.0
    h_tot = 0.0
    for i in range(n):
        g_tot += g[i]
        h_tot += h[i]
    node_g[0] = g_tot
    node_h[0] = h_tot
    n_nodes = 1
    level_start = 0
    level_end = 1

    for depth in range(max_depth + 1):
        n_level = level_end - level_start
        if n_level <= 0:
            break
        if depth == max_depth:
            for nd in range(level_start, level_end):
                weight[nd] = -node_g[nd] / (node_h[nd] + lam)
            for i in range(n):
                nd = node_of_row[i]
                if nd >= level_start:
                    tree_out[i] = weight[nd]
            break

        best_gain = np.full(n_level, -np.inf)
        best_feat = np.full(n_level, -1, np.int64)
        best_thr = np.zeros(n_level)
        run_g = np.zeros(n_level)
        run_h = np.zeros(n_level)
        prev_val = np.zeros(n_level)
        seen = np.zeros(n_level, np.uint8)

        for j in range(d):
            for k in range(n_level):
                run_g[k] = 0.0
                run_h[k] = 0.0
                seen[k] = 0
            for s in range(n):
                row = sorted_idx[j, s]
                nd = node_of_row[row]
                if nd < level_start:
                    continue
                k = nd - level_start
                v = X[row, j]
                if seen[k] == 1 and v > prev_val[k]:
                    gl = run_g[k]
                    hl = run_h[k]
                    gr = node_g[nd] - gl
                    hr = node_h[nd] - hl
                    if hl >= min_child_weight and hr >= min_child_weight:
                        gn = 0.5 * (gl * gl / (hl + lam) + gr * gr / (hr + lam)
                                    - node_g[nd] * node_g[nd] / (node_h[nd] + lam)) - gamma
                        if gn > best_gain[k]:
                            best_gain[k] = gn
                            best_feat[k] = j
                            best_thr[k] = 0.5 * (prev_val[k] + v)
                run_g[k] += g[row]
                run_h[k] += h[row]
                prev_val[k] = v
                seen[k] = 1

        next_start = n_nodes
        for k in range(n_level):
            nd = level_start + k
            if best_feat[k] >= 0 and best_gain[k] > 0.0:
                feature[nd] = best_feat[k]
                threshold[nd] = best_thr[k]
                gain_arr[nd] = best_gain[k]
                left[nd] = n_nodes
                right[nd] = n_nodes + 1
                n_nodes += 2
            else:
                weight[nd] = -node_g[nd] / (node_h[nd] + lam)

        for i in range(n):
            nd = node_of_row[i]
            if nd < level_start:
                continue
            if feature[nd] >= 0:
                if X[i, feature[nd]] < threshold[nd]:
                    child = left[nd]
                else:
                    child = right[nd]
                node_of_row[i] = child
                node_g[child] += g[i]
                node_h[child] += h[i]
            else:
                tree_out[i] = weight[nd]
                node_of_row[i] = -1

        level_start = next_start
        level_end = n_nodes

    return (feature[:n_nodes], threshold[:n_nodes], left[:n_nodes],
            right[:n_nodes], weight[:n_nodes], gain_arr[:n_nodes], tree_out)


@njit(cache=True)
def _add_tree_output(feature, threshold, left, right, weight, X, out):
    for i in range(X.shape[0]):
        nd = 0
        while feature[nd] >= 0:
            if X[i, feature[nd]] < threshold[nd]:
                nd = left[nd]
            else:
                nd = right[nd]
        out[i] += weight[nd]


def _sigmoid(m: np.ndarray) -> np.ndarray:
    return expit(m)


def _logit(p: float) -> float:
    return float(np.log(p / (1.0 - p)))


def _log_loss(y: np.ndarray, margin: np.ndarray) -> float:
    # mean logistic loss, computed in the stable log1p(exp) form
    pos = np.logaddexp(0.0, -margin[y == 1])
    neg = np.logaddexp(0.0, margin[y == 0])
    return float((pos.sum() + neg.sum()) / y.size)


@dataclass(eq=False)
class GBDTModel:
    """Fitted boosted-tree ensemble."""

    trees: list[Tree]
    params: GBDTParams
    n_features: int
    train_loss: list[float] = field(default_factory=list)

    def predict_margin(self, X) -> np.ndarray:
        X = np.ascontiguousarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise ValueError(f"expected {self.n_features} features, got {X.shape}")
        margin = np.full(X.shape[0], _logit(self.params.base_score))
        raw = np.zeros(X.shape[0])
        for tree in self.trees:
            raw[:] = 0.0
            _add_tree_output(tree.feature, tree.threshold, tree.left, tree.right,
                             tree.weight, X, raw)
            margin += self.params.learning_rate * raw
        return margin

    def predict_proba(self, X) -> np.ndarray:
        return _sigmoid(self.predict_margin(X))

    def to_json_dict(self) -> dict:
        return {
            "params": self.params.to_dict(),
            "n_features": self.n_features,
            "train_loss": self.train_loss,
            "trees": [t.to_json_dict() for t in self.trees],
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "GBDTModel":
        return cls(
            trees=[Tree.from_json_dict(t) for t in d["trees"]],
            params=GBDTParams.from_dict(d["params"]),
            n_features=int(d["n_features"]),
            train_loss=list(d.get("train_loss", [])),
        )


def train(X, y, params: GBDTParams = GBDTParams()) -> GBDTModel:
    """Fit a boosted ensemble with logistic loss.

    Gradients g = p - y and hessians h = p (1 - p) are refreshed each round;
    each tree is grown by exact greedy enumeration of the second-order gain
    0.5 * [GL^2/(HL+lambda) + GR^2/(HR+lambda) - (GL+GR)^2/(HL+HR+lambda)] - gamma
    and leaves carry -G/(H+lambda).
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).ravel()
    if X.ndim != 2 or X.shape[0] != y.size:
        raise ValueError("X rows must match y length")
    if X.shape[0] < 2:
        raise ValueError("need at least 2 rows")
    if not np.all(np.isfinite(X)):
        raise ValueError("non-finite features")
    if not np.all((y == 0) | (y == 1)):
        raise ValueError("labels must be binary 0/1")
    if y.min() == y.max():
        raise ValueError("training labels contain a single class")

    # presorted row order per feature (stable, so ties keep row order)
    sorted_idx = np.argsort(X, axis=0, kind="stable").T.astype(np.int64)
    sorted_idx = np.ascontiguousarray(sorted_idx)

    margin = np.full(X.shape[0], _logit(params.base_score))
    trees: list[Tree] = []
    losses: list[float] = []
    for _ in range(params.n_rounds):
        p = _sigmoid(margin)
        g = p - y
        h = p * (1.0 - p)
        feature, threshold, left, right, weight, gain, tree_out = _grow_tree(
            X, sorted_idx, g, h,
            params.max_depth, params.reg_lambda, params.gamma, params.min_child_weight,
        )
        trees.append(Tree(feature=feature.copy(), threshold=threshold.copy(),
                          left=left.copy(), right=right.copy(),
                          weight=weight.copy(), gain=gain.copy()))
        margin = margin + params.learning_rate * tree_out
        losses.append(_log_loss(y, margin))
    return GBDTModel(trees=trees, params=params, n_features=X.shape[1], train_loss=losses)
