"""Loop timing regression: T = c_0 + c_1 N_1 + c_2 N_1 N_2 + ... (clamped at 0)."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

RIDGE_LAMBDA = 1e-6


@dataclass(frozen=True)
class TimingModel:
    coefficients: tuple[float, ...]
    mse: float = 0.0
    rank_deficient: bool = False

    @property
    def depth(self) -> int:
        return len(self.coefficients) - 1

    def predict(self, trips: Sequence[float]) -> float:
        return predict_time(self, trips)

    def to_json(self) -> dict:
        return {"coefficients": list(self.coefficients), "mse": self.mse,
                "rank_deficient": self.rank_deficient}

    @classmethod
    def from_json(cls, d: dict) -> "TimingModel":
        return cls(tuple(float(c) for c in d["coefficients"]), float(d["mse"]),
                   bool(d["rank_deficient"]))


def prefix_features(trips: Sequence[float]) -> list[float]:
    """(1, N_1, N_1*N_2, ..., N_1*...*N_n)."""
    out = [1.0]
    acc = 1.0
    for n in trips:
        acc *= float(n)
        out.append(acc)
    return out


def fit_timing(rows: Sequence[tuple[Sequence[float], float]], depth: int) -> TimingModel:
    """Least squares over prefix-product features.

    ``rows`` are ``(trips, elapsed)`` pairs. A rank-deficient design falls
    back to ridge regression and sets ``rank_deficient``.
    """
    if not rows:
        raise ValueError("no timing rows")
    for trips, _ in rows:
        if len(trips) != depth:
            raise ValueError(f"trip vector of length {len(trips)} for depth {depth}")
    X = np.array([prefix_features(t) for t, _ in rows], dtype=float)
    y = np.array([float(e) for _, e in rows], dtype=float)
    rank = np.linalg.matrix_rank(X)
    deficient = rank < X.shape[1]
    if deficient:
        A = X.T @ X + RIDGE_LAMBDA * np.eye(X.shape[1])
        c = np.linalg.solve(A, X.T @ y)
    else:
        c, *_ = np.linalg.lstsq(X, y, rcond=None)
    resid = y - X @ c
    mse = float(np.mean(resid ** 2))
    return TimingModel(tuple(float(v) for v in c), mse, bool(deficient))


def predict_time(m: TimingModel, trips: Sequence[float]) -> float:
    if len(trips) != m.depth:
        raise ValueError(f"expected {m.depth} trip counts, got {len(trips)}")
    feats = prefix_features(trips)
    return max(0.0, sum(c * f for c, f in zip(m.coefficients, feats)))
