"""Bottom-up evaluation of a Join Tree over the VP tables and the Property Table."""
from __future__ import annotations

from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import IO, Sequence

import numpy as np

from .dataset import Dataset
from .planner import EncodedPattern, JoinTree, NodeKind, NodeSpec
from .sparql import Variable
from .storage import PropertyTable, PtPartition, VpTable
from .terms import Dictionary

_EMPTY = np.zeros(0, dtype=np.int64)


@dataclass
class BindingTable:
    schema: tuple[Variable, ...]
    rows: np.ndarray  # (n, len(schema)) int64

    def __post_init__(self) -> None:
        if len(set(self.schema)) != len(self.schema):
            raise ValueError("duplicate variable in schema")
        rows = np.asarray(self.rows, dtype=np.int64)
        if rows.ndim != 2:
            rows = rows.reshape(-1, len(self.schema)) if self.schema else rows.reshape(0, 0)
        self.rows = rows

    @classmethod
    def empty(cls, schema: Sequence[Variable]) -> "BindingTable":
        return cls(tuple(schema), np.zeros((0, len(schema)), dtype=np.int64))

    @classmethod
    def from_columns(cls, schema: Sequence[Variable], columns: Sequence[np.ndarray], n: int) -> "BindingTable":
        if columns:
            return cls(tuple(schema), np.column_stack(columns))
        return cls(tuple(schema), np.zeros((n, 0), dtype=np.int64))

    def __len__(self) -> int:
        return len(self.rows)

    def column(self, var: Variable) -> np.ndarray:
        return self.rows[:, self.schema.index(var)]

    def as_bag(self) -> Counter:
        return Counter(map(tuple, self.rows.tolist()))

    def reorder(self, schema: Sequence[Variable]) -> "BindingTable":
        idx = [self.schema.index(v) for v in schema]
        return BindingTable(tuple(schema), self.rows[:, idx])


@dataclass
class ExecTrace:
    """Counters filled in by :func:`execute`."""

    joins: int = 0
    node_rows: list[int] = field(default_factory=list)
    join_rows: list[int] = field(default_factory=list)


def same_bag(a: BindingTable, b: BindingTable) -> bool:
    """Multiset equality, insensitive to row order and column order."""
    if set(a.schema) != set(b.schema):
        return False
    return a.as_bag() == b.reorder(a.schema).as_bag()


# ----------------------------------------------------------------- VP nodes


def eval_vp_node(tp: EncodedPattern, vp: VpTable | None) -> BindingTable:
    schema = tuple(tp.variables())
    if vp is None:
        return BindingTable.empty(schema)
    subs, objs = vp.subjects, vp.objects
    if not isinstance(tp.subject, Variable):
        lo, hi = np.searchsorted(subs, [tp.subject, tp.subject + 1])
        subs, objs = subs[lo:hi], objs[lo:hi]
    if not isinstance(tp.object, Variable):
        keep = objs == tp.object
        subs, objs = subs[keep], objs[keep]
    elif tp.object == tp.subject:
        keep = subs == objs
        subs, objs = subs[keep], objs[keep]
    cols = []
    if isinstance(tp.subject, Variable):
        cols.append(subs)
    if isinstance(tp.object, Variable) and tp.object != tp.subject:
        cols.append(objs)
    return BindingTable.from_columns(schema, cols, len(subs))


# ----------------------------------------------------------------- PT nodes


def _expand(rows: np.ndarray, offsets: np.ndarray, values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """For each row, one entry per cell value: returns (index into rows, value)."""
    starts = offsets[rows]
    lens = offsets[rows + 1] - starts
    total = int(lens.sum())
    rep = np.repeat(np.arange(len(rows)), lens)
    pos = np.repeat(starts - (np.cumsum(lens) - lens), lens) + np.arange(total)
    return rep, values[pos]


def eval_pt_partition(spec: NodeSpec, part: PtPartition) -> BindingTable:
    subject = spec.patterns[0].subject
    schema = _pt_schema(spec)
    if isinstance(subject, Variable):
        rows = np.arange(len(part), dtype=np.int64)
    else:
        r = part.row_of(subject)
        rows = _EMPTY if r is None else np.array([r], dtype=np.int64)
    columns = []
    for tp in spec.patterns:
        col = part.columns.get(tp.predicate)
        if col is None:
            return BindingTable.empty(schema)
        columns.append(col)
    for col in columns:  # NULL in any required cell disqualifies the row
        rows = rows[col.offsets[rows + 1] > col.offsets[rows]]
    # constant objects first so they filter early
    order = sorted(range(len(spec.patterns)), key=lambda i: isinstance(spec.patterns[i].object, Variable))
    bound: dict[Variable, np.ndarray] = {}
    for i in order:
        tp, col = spec.patterns[i], columns[i]
        rep, vals = _expand(rows, col.offsets, col.values)
        obj = tp.object
        if not isinstance(obj, Variable):
            keep = vals == obj
        elif obj == subject:
            keep = vals == part.subjects[rows[rep]]
        elif obj in bound:
            keep = vals == bound[obj][rep]
        else:
            keep = None
        if keep is not None:
            rep, vals = rep[keep], vals[keep]
        rows = rows[rep]
        bound = {v: a[rep] for v, a in bound.items()}
        if isinstance(obj, Variable) and obj != subject and obj not in bound:
            bound[obj] = vals
    if isinstance(subject, Variable):
        bound[subject] = part.subjects[rows]
    return BindingTable.from_columns(schema, [bound[v] for v in schema], len(rows))


def _pt_schema(spec: NodeSpec) -> tuple[Variable, ...]:
    out: list[Variable] = []
    for tp in spec.patterns:
        for v in tp.variables():
            if v not in out:
                out.append(v)
    return tuple(out)


def _concat(schema: tuple[Variable, ...], parts: Sequence[BindingTable]) -> BindingTable:
    if not parts:
        return BindingTable.empty(schema)
    return BindingTable(schema, np.concatenate([p.rows for p in parts]))


def eval_pt_node(spec: NodeSpec, pt: PropertyTable, workers: int | None = None) -> BindingTable:
    """Select from the Property Table, flattening multi-valued cells.

    Partitions are evaluated independently (optionally on a thread pool) and
    concatenated in partition order.
    """
    schema = _pt_schema(spec)
    if workers and workers > 1 and pt.k > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(lambda p: eval_pt_partition(spec, p), pt.partitions))
    else:
        parts = [eval_pt_partition(spec, p) for p in pt.partitions]
    return _concat(schema, parts)


# -------------------------------------------------------------------- joins


def _key_ids(left: np.ndarray, right: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Map multi-column join keys of both sides to shared compact integer ids."""
    if left.shape[1] == 1:
        return left[:, 0], right[:, 0]
    both = np.concatenate([left, right])
    _, inv = np.unique(both, axis=0, return_inverse=True)
    inv = inv.ravel()
    return inv[:len(left)], inv[len(left):]


def hash_join(left: BindingTable, right: BindingTable) -> BindingTable:
    """Natural join under bag semantics.

    Output schema is the left schema followed by right-only variables.  The
    smaller input is the build side; the output follows probe-side order.
    """
    join_vars = [v for v in left.schema if v in right.schema]
    right_only = [v for v in right.schema if v not in left.schema]
    schema = left.schema + tuple(right_only)
    r_extra = [right.schema.index(v) for v in right_only]
    nl, nr = len(left), len(right)
    if not nl or not nr:
        return BindingTable.empty(schema)
    if not join_vars:
        li = np.repeat(np.arange(nl), nr)
        ri = np.tile(np.arange(nr), nl)
    else:
        lk, rk = _key_ids(left.rows[:, [left.schema.index(v) for v in join_vars]],
                          right.rows[:, [right.schema.index(v) for v in join_vars]])
        build_left = nl < nr
        bkeys, pkeys = (lk, rk) if build_left else (rk, lk)
        border = np.argsort(bkeys, kind="stable")
        sorted_keys = bkeys[border]
        lo = np.searchsorted(sorted_keys, pkeys, "left")
        hi = np.searchsorted(sorted_keys, pkeys, "right")
        counts = hi - lo
        total = int(counts.sum())
        pi = np.repeat(np.arange(len(pkeys)), counts)
        bi = border[np.repeat(lo - (np.cumsum(counts) - counts), counts) + np.arange(total)]
        li, ri = (bi, pi) if build_left else (pi, bi)
    rows = np.concatenate([left.rows[li], right.rows[ri][:, r_extra]], axis=1)
    return BindingTable(schema, rows)


# ---------------------------------------------------------------- execution


def eval_node(spec: NodeSpec, ds: Dataset, workers: int | None = None) -> BindingTable:
    if spec.kind is NodeKind.VP:
        tp = spec.patterns[0]
        return eval_vp_node(tp, ds.vp.get(tp.predicate))
    return eval_pt_node(spec, ds.pt, workers)


def project(table: BindingTable, projection: Sequence[Variable], distinct: bool = False) -> BindingTable:
    out = table.reorder(projection)
    if distinct:
        if out.rows.shape[1]:
            out = BindingTable(out.schema, np.unique(out.rows, axis=0))
        else:
            out = BindingTable(out.schema, out.rows[:min(1, len(out))])
    return out


def execute(tree: JoinTree, ds: Dataset, trace: ExecTrace | None = None,
            workers: int | None = None) -> BindingTable:
    """Evaluate leaves first, fold with :func:`hash_join`, then project."""
    if tree.root is None:
        return BindingTable.empty(tree.projection)
    acc: BindingTable | None = None
    for node in tree.order():
        part = eval_node(node.spec, ds, workers)
        if trace is not None:
            trace.node_rows.append(len(part))
        if acc is None:
            acc = part
            continue
        acc = hash_join(acc, part)
        if trace is not None:
            trace.joins += 1
            trace.join_rows.append(len(acc))
    return project(acc, tree.projection, tree.distinct)


def write_tsv(table: BindingTable, dictionary: Dictionary, stream: IO[str], limit: int | None = None) -> int:
    """Header of ``?var`` names, then one line per solution in N-Triples term syntax."""
    stream.write("\t".join(str(v) for v in table.schema) + "\n")
    rows = table.rows if limit is None else table.rows[:max(0, limit)]
    rev = dictionary.reverse
    for row in rows.tolist():
        stream.write("\t".join(rev[x].n3() for x in row) + "\n")
    return len(rows)
