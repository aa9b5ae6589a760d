"""Isolation Forest built from scratch on numpy arrays."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import digamma

from .datagen import ConfigError, Dataset
from .seeding import derive_seed

EULER_GAMMA = 0.5772156649015329


@dataclass(frozen=True)
class IForestConfig:
    n_trees: int = 100
    subsample: int = 256
    seed: int = 0

    def validate(self, n: int) -> None:
        if self.n_trees < 1:
            raise ConfigError(f"n_trees must be >= 1, got {self.n_trees}")
        if self.subsample < 2:
            raise ConfigError(f"subsample must be >= 2, got {self.subsample}")
        if n < 2:
            raise ConfigError("isolation forest needs at least two rows")


def harmonic(i):
    """Exact harmonic number H(i) = 1 + 1/2 + ... + 1/i (H(0) = 0)."""
    i = np.asarray(i, dtype=float)
    return np.where(i > 0, digamma(i + 1.0) + EULER_GAMMA, 0.0)


def average_path_length(n):
    """c(n) = 2 H(n-1) - 2 (n-1) / n, the mean unsuccessful-search path in a BST.

    ``c(0) = c(1) = 0``.
    """
    n = np.asarray(n, dtype=float)
    safe = np.maximum(n, 1.0)
    out = 2.0 * harmonic(safe - 1.0) - 2.0 * (safe - 1.0) / safe
    out = np.where(n > 1, out, 0.0)
    return out if out.ndim else float(out)


def draw_threshold(rng: np.random.Generator, lo: float, hi: float) -> float:
    """Uniform split point on the open interval (lo, hi)."""
    while True:
        t = rng.uniform(lo, hi)
        if lo < t < hi:
            return t


@dataclass
class ITree:
    feature: np.ndarray    # -1 marks a leaf
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    size: np.ndarray       # training points that reached the node
    depth: np.ndarray

    def path_length(self, X: np.ndarray) -> np.ndarray:
        """Edges traversed to reach a leaf, plus c(leaf size) for unresolved leaves."""
        node = np.zeros(X.shape[0], dtype=np.int64)
        rows = np.arange(X.shape[0])
        while True:
            feat = self.feature[node]
            active = feat >= 0
            if not active.any():
                break
            idx = rows[active]
            nd = node[idx]
            go_left = X[idx, feat[active]] < self.threshold[nd]
            node[idx] = np.where(go_left, self.left[nd], self.right[nd])
        return self.depth[node] + average_path_length(self.size[node])


def build_tree(X: np.ndarray, rng: np.random.Generator, height_limit: int) -> ITree:
    d = X.shape[1]
    feature, threshold, left, right, size, depth = [], [], [], [], [], []

    def new_node(count, level):
        for arr, val in ((feature, -1), (threshold, np.nan), (left, -1), (right, -1), (size, count), (depth, level)):
            arr.append(val)
        return len(feature) - 1

    stack = [(new_node(X.shape[0], 0), np.arange(X.shape[0]))]
    while stack:
        node, idx = stack.pop()
        level = depth[node]
        if len(idx) <= 1 or level >= height_limit:
            continue
        for _ in range(d):
            f = int(rng.integers(d))
            col = X[idx, f]
            lo, hi = col.min(), col.max()
            if hi > lo:
                break
        else:
            continue
        t = draw_threshold(rng, lo, hi)
        mask = col < t
        feature[node] = f
        threshold[node] = t
        left_id = new_node(int(mask.sum()), level + 1)
        right_id = new_node(int((~mask).sum()), level + 1)
        left[node], right[node] = left_id, right_id
        stack.append((right_id, idx[~mask]))
        stack.append((left_id, idx[mask]))
    return ITree(
        feature=np.asarray(feature, dtype=np.int64),
        threshold=np.asarray(threshold, dtype=float),
        left=np.asarray(left, dtype=np.int64),
        right=np.asarray(right, dtype=np.int64),
        size=np.asarray(size, dtype=float),
        depth=np.asarray(depth, dtype=float),
    )


class IsolationForest:
    """Ensemble of iTrees, each grown on its own uniform subsample.

    Tree ``t`` draws everything from a generator seeded by
    ``derive_seed(seed, "itree", t)``, so trees can be grown in any order.
    """

    def __init__(self, cfg: IForestConfig):
        self.cfg = cfg
        self.trees: list[ITree] = []
        self.psi = 0

    def fit(self, X: np.ndarray) -> "IsolationForest":
        X = np.asarray(X, dtype=float)
        n = X.shape[0]
        self.cfg.validate(n)
        self.psi = min(self.cfg.subsample, n)
        limit = math.ceil(math.log2(self.psi))
        self.trees = []
        for t in range(self.cfg.n_trees):
            rng = np.random.default_rng(derive_seed(self.cfg.seed, "itree", t))
            sample = rng.choice(n, size=self.psi, replace=False)
            self.trees.append(build_tree(X[sample], rng, limit))
        return self

    def mean_path_length(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        return np.mean([tree.path_length(X) for tree in self.trees], axis=0)

    def score(self, X: np.ndarray) -> np.ndarray:
        """Anomaly score 2^(-E[h(x)] / c(psi)) in (0, 1); higher is more anomalous."""
        return np.power(2.0, -self.mean_path_length(X) / average_path_length(self.psi))


def iforest_score(ds: Dataset | np.ndarray, cfg: IForestConfig) -> np.ndarray:
    X = ds.features if isinstance(ds, Dataset) else np.asarray(ds, dtype=float)
    return IsolationForest(cfg).fit(X).score(X)
