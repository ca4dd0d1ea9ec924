"""Per-predicate triple counts and distinct-subject counts used by the planner."""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .storage import as_array


@dataclass(frozen=True)
class PredicateStats:
    tuples: int
    distinct_subjects: int


@dataclass
class Stats:
    per_predicate: dict[int, PredicateStats] = field(default_factory=dict)

    def __contains__(self, pid: int) -> bool:
        return pid in self.per_predicate

    def __getitem__(self, pid: int) -> PredicateStats:
        return self.per_predicate[pid]

    def __len__(self) -> int:
        return len(self.per_predicate)

    def tuples(self, pid: int) -> int:
        return self.per_predicate[pid].tuples

    def distinct_subjects(self, pid: int) -> int:
        return self.per_predicate[pid].distinct_subjects

    @property
    def total_triples(self) -> int:
        return sum(ps.tuples for ps in self.per_predicate.values())

    def to_tsv(self) -> str:
        return "".join(f"{pid}\t{ps.tuples}\t{ps.distinct_subjects}\n"
                       for pid, ps in sorted(self.per_predicate.items()))

    @classmethod
    def from_tsv(cls, text: str) -> "Stats":
        out = {}
        for n, line in enumerate(text.splitlines(), 1):
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise ValueError(f"stats line {n}: expected 3 fields")
            pid, t, d = map(int, parts)
            out[pid] = PredicateStats(t, d)
        return cls(out)

    def save(self, path: Path) -> None:
        Path(path).write_text(self.to_tsv(), encoding="utf-8")


def compute_stats(triples) -> Stats:
    """Exact T_p and D_p for every predicate present in ``triples``."""
    arr = as_array(triples)
    if not len(arr):
        return Stats()
    preds, tuples = np.unique(arr[:, 1], return_counts=True)
    pairs = np.unique(arr[:, :2], axis=0)
    dp, distinct = np.unique(pairs[:, 1], return_counts=True)
    assert (dp == preds).all()
    return Stats({int(p): PredicateStats(int(t), int(d))
                  for p, t, d in zip(preds.tolist(), tuples.tolist(), distinct.tolist())})
