"""Timing harness comparing strategies on a shaped workload."""
from __future__ import annotations

import csv
import hashlib
import statistics
import time
from dataclasses import astuple, dataclass, field, fields
from pathlib import Path
from typing import Sequence

from .dataset import Dataset
from .executor import BindingTable, ExecTrace, execute, same_bag
from .oracle import nested_loop_eval
from .planner import Strategy, explain, plan
from .sparql import BgpQuery, parse_query
from .workload import SHAPE_ORDER


class StrategyDisagreement(RuntimeError):
    pass


@dataclass
class BenchRecord:
    query_id: str
    shape: str
    strategy: str
    run_index: int  # number of timed runs averaged into wall_ms
    wall_ms: float
    joins: int
    rows: int
    plan_hash: str


CSV_COLUMNS = [f.name for f in fields(BenchRecord)]


@dataclass
class BenchReport:
    records: list[BenchRecord] = field(default_factory=list)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as f:
            w = csv.writer(f)
            w.writerow(CSV_COLUMNS)
            for r in self.records:
                w.writerow(astuple(r))

    def shapes(self) -> list[str]:
        present = {r.shape for r in self.records}
        return [s for s in SHAPE_ORDER if s in present] + sorted(present - set(SHAPE_ORDER))

    def shape_means(self) -> dict[tuple[str, str], float]:
        groups: dict[tuple[str, str], list[float]] = {}
        for r in self.records:
            groups.setdefault((r.shape, r.strategy), []).append(r.wall_ms)
        return {k: statistics.fmean(v) for k, v in groups.items()}

    def summary(self) -> str:
        means = self.shape_means()
        strategies = list(dict.fromkeys(r.strategy for r in self.records))
        lines = ["shape\t" + "\t".join(f"{s}_ms" for s in strategies)]
        for shape in self.shapes():
            cells = [f"{means[(shape, s)]:.3f}" if (shape, s) in means else "-" for s in strategies]
            lines.append(shape + "\t" + "\t".join(cells))
        return "\n".join(lines) + "\n"


def shape_of(query_id: str) -> str:
    return query_id[:1] if query_id[:1] in SHAPE_ORDER else "-"


def plan_hash(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]


def run_once(ds: Dataset, query: BgpQuery, strategy: str, triples=None) -> tuple[BindingTable, int, str, float]:
    """Plan and execute once; returns (result, joins, plan text, wall ms)."""
    t0 = time.perf_counter()
    if strategy == "oracle":
        result = nested_loop_eval(query, ds.triples() if triples is None else triples, ds.dictionary)
        joins = max(0, len(query.patterns) - 1)
        text = "ORACLE nested-loop\n"
    else:
        tree = plan(query, ds.dictionary, ds.stats, Strategy(strategy))
        trace = ExecTrace()
        result = execute(tree, ds, trace)
        joins = trace.joins
        text = explain(tree)
    return result, joins, text, (time.perf_counter() - t0) * 1000.0


def run_bench(ds: Dataset, queries: Sequence[tuple[str, BgpQuery]], strategies: Sequence[str] = ("mixed", "vp"),
              repeat: int = 3) -> BenchReport:
    """Run each query ``repeat`` times per strategy; the first run is a warm-up when ``repeat >= 2``.

    Raises :class:`StrategyDisagreement` before reporting any timing if the
    strategies return different solution bags for a query.
    """
    if repeat < 1:
        raise ValueError("repeat must be >= 1")
    triples = ds.triples() if "oracle" in strategies else None
    report = BenchReport()
    for qid, query in queries:
        pending = []
        reference: BindingTable | None = None
        for strategy in strategies:
            times = []
            for _ in range(repeat):
                result, joins, text, ms = run_once(ds, query, strategy, triples)
                times.append(ms)
            if reference is None:
                reference = result
            elif len(result) != len(reference) or not same_bag(result, reference):
                raise StrategyDisagreement(
                    f"{qid}: {strategy} returned {len(result)} rows, {strategies[0]} returned {len(reference)}")
            timed = times[1:] if repeat >= 2 else times
            pending.append(BenchRecord(qid, shape_of(qid), strategy, len(timed), statistics.fmean(timed),
                                       joins, len(result), plan_hash(text)))
        report.records.extend(pending)
    return report


def load_queries(queries_dir) -> list[tuple[str, BgpQuery]]:
    paths = sorted(Path(queries_dir).glob("*.rq"))
    return [(p.stem, parse_query(p.read_text(encoding="utf-8"))) for p in paths]
