"""Rule-based trip-count model: exact-match patterns with a pooled fallback."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence


@dataclass
class RuleModel:
    """Per-level pooled mean and population std plus a pattern table.

    Every prediction is clamped into ``[mean - std, mean + std]`` per level.
    """

    mean: tuple[float, ...]
    std: tuple[float, ...]
    table: dict[tuple, tuple[float, ...]] = field(default_factory=dict)

    @classmethod
    def fit(cls, patterns: Sequence[tuple], targets: Sequence[Sequence[float]]) -> "RuleModel":
        if not targets:
            raise ValueError("no rows")
        depth = len(targets[0])
        cols = [[float(t[k]) for t in targets] for k in range(depth)]
        mean = tuple(sum(c) / len(c) for c in cols)
        std = tuple(math.sqrt(sum((x - m) ** 2 for x in c) / len(c)) for c, m in zip(cols, mean))
        groups: dict[tuple, list] = {}
        for p, t in zip(patterns, targets):
            groups.setdefault(tuple(p), []).append(t)
        table = {p: tuple(sum(float(t[k]) for t in ts) / len(ts) for k in range(depth))
                 for p, ts in groups.items()}
        return cls(mean, std, table)

    def clamp(self, v: Sequence[float]) -> tuple[float, ...]:
        return tuple(min(max(x, m - s), m + s) for x, m, s in zip(v, self.mean, self.std))

    def predict(self, pattern: tuple) -> tuple[float, ...]:
        return self.clamp(self.table.get(tuple(pattern), self.mean))

    def to_json(self) -> dict:
        return {"mean": list(self.mean), "std": list(self.std),
                "table": [[list(p), list(v)] for p, v in sorted(self.table.items())]}

    @classmethod
    def from_json(cls, d: dict) -> "RuleModel":
        return cls(tuple(d["mean"]), tuple(d["std"]),
                   {tuple(p): tuple(v) for p, v in d["table"]})
