"""Gini decision-tree classifier over numeric features."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Hashable, Optional, Sequence

import numpy as np

from .. import kernels

DEFAULT_MAX_DEPTH = 8


@dataclass
class Node:
    feature: int = -1
    threshold: float = 0.0
    left: Optional["Node"] = None
    right: Optional["Node"] = None
    label: Any = None

    @property
    def is_leaf(self) -> bool:
        return self.left is None


def _majority(labels: Sequence[Hashable]) -> Any:
    counts: dict = {}
    for y in labels:
        counts[y] = counts.get(y, 0) + 1
    best = max(counts.values())
    return min(k for k, v in counts.items() if v == best)


class DecisionTree:
    """Axis-aligned splits ``x[f] <= t`` chosen by weighted Gini impurity.

    Leaves predict the majority training label (smallest on ties), so every
    prediction is a label seen in training.
    """

    def __init__(self, max_depth: int = DEFAULT_MAX_DEPTH, min_leaf: int = 1):
        self.max_depth = max_depth
        self.min_leaf = min_leaf
        self.root: Optional[Node] = None
        self.classes: list = []

    def fit(self, X: Sequence[Sequence[float]], y: Sequence[Hashable]) -> "DecisionTree":
        if len(X) != len(y) or not y:
            raise ValueError("need matching, nonempty X and y")
        self.classes = sorted(set(y))
        index = {c: k for k, c in enumerate(self.classes)}
        Xa = np.asarray(X, dtype=float).reshape(len(y), -1)
        ya = np.array([index[c] for c in y], dtype=np.int64)
        self.root = self._grow(Xa, ya, 0)
        return self

    def _grow(self, X: np.ndarray, y: np.ndarray, depth: int) -> Node:
        labels = [self.classes[k] for k in y]
        leaf = Node(label=_majority(labels))
        if depth >= self.max_depth or len(set(y.tolist())) == 1 or X.shape[1] == 0:
            return leaf
        f, thr, score = kernels.gini_best_split(X, y, len(self.classes))
        if f < 0:
            return leaf
        mask = X[:, f] <= thr
        if mask.sum() < self.min_leaf or (~mask).sum() < self.min_leaf:
            return leaf
        leaf.feature, leaf.threshold = int(f), float(thr)
        leaf.left = self._grow(X[mask], y[mask], depth + 1)
        leaf.right = self._grow(X[~mask], y[~mask], depth + 1)
        return leaf

    def predict_one(self, x: Sequence[float]) -> Any:
        node = self.root
        if node is None:
            raise RuntimeError("tree is not fitted")
        while not node.is_leaf:
            node = node.left if x[node.feature] <= node.threshold else node.right
        return node.label

    def predict(self, X: Sequence[Sequence[float]]) -> list:
        return [self.predict_one(x) for x in X]

    @property
    def depth(self) -> int:
        def d(n: Optional[Node]) -> int:
            return 0 if n is None or n.is_leaf else 1 + max(d(n.left), d(n.right))
        return d(self.root)

    def to_json(self) -> dict:
        def enc(n: Node) -> dict:
            if n.is_leaf:
                return {"label": list(n.label) if isinstance(n.label, tuple) else n.label}
            return {"feature": n.feature, "threshold": n.threshold,
                    "left": enc(n.left), "right": enc(n.right)}
        assert self.root is not None
        return {"max_depth": self.max_depth, "min_leaf": self.min_leaf, "root": enc(self.root)}

    @classmethod
    def from_json(cls, d: dict) -> "DecisionTree":
        t = cls(d["max_depth"], d["min_leaf"])

        def dec(x: dict) -> Node:
            if "label" in x:
                lab = x["label"]
                return Node(label=tuple(lab) if isinstance(lab, list) else lab)
            return Node(x["feature"], x["threshold"], dec(x["left"]), dec(x["right"]))

        t.root = dec(d["root"])
        labels = []

        def collect(n: Node) -> None:
            if n.is_leaf:
                labels.append(n.label)
            else:
                collect(n.left)
                collect(n.right)

        collect(t.root)
        t.classes = sorted(set(labels))
        return t
