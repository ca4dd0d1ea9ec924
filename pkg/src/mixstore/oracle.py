"""Reference BGP evaluator over the raw triple list.

No statistics and no indexes: patterns are matched in query order, and each
pattern is joined to the partial solutions by comparing every candidate
triple against every partial solution (a nested-loop join, chunked through
numpy broadcasting so it stays usable on tens of thousands of triples).
"""
from __future__ import annotations

import numpy as np

from .executor import BindingTable, project
from .sparql import BgpQuery, Variable
from .terms import Dictionary

_CHUNK = 1 << 22  # comparisons per broadcast block


def _const(x, dictionary: Dictionary) -> int:
    tid = dictionary.lookup(x)
    return -1 if tid is None else tid


def nested_loop_eval(query: BgpQuery, triples, dictionary: Dictionary) -> BindingTable:
    arr = np.asarray(triples, dtype=np.int64).reshape(-1, 3)
    schema: list[Variable] = []
    partial = np.zeros((1, 0), dtype=np.int64)  # one empty solution
    for tp in query.patterns:
        # candidate triples: scan for this pattern's constants
        mask = arr[:, 1] == _const(tp.predicate, dictionary)
        if not isinstance(tp.subject, Variable):
            mask &= arr[:, 0] == _const(tp.subject, dictionary)
        if not isinstance(tp.object, Variable):
            mask &= arr[:, 2] == _const(tp.object, dictionary)
        if tp.subject == tp.object:
            mask &= arr[:, 0] == arr[:, 2]
        cand = arr[mask]

        checks = []  # (partial column, candidate column) pairs that must agree
        new_vars = []
        for pos, x in ((0, tp.subject), (2, tp.object)):
            if not isinstance(x, Variable):
                continue
            if x in schema:
                checks.append((schema.index(x), pos))
            elif all(x != v for v, _ in new_vars):
                new_vars.append((x, pos))

        out_p, out_c = [], []
        step = max(1, _CHUNK // max(1, len(cand)))
        for lo in range(0, len(partial), step):
            block = partial[lo:lo + step]
            ok = np.ones((len(block), len(cand)), dtype=bool)
            for pc, cc in checks:
                ok &= block[:, pc][:, None] == cand[:, cc][None, :]
            pi, ci = np.nonzero(ok)
            out_p.append(pi + lo)
            out_c.append(ci)
        pi = np.concatenate(out_p) if out_p else np.zeros(0, dtype=np.int64)
        ci = np.concatenate(out_c) if out_c else np.zeros(0, dtype=np.int64)
        extra = cand[ci][:, [pos for _, pos in new_vars]] if new_vars else np.zeros((len(ci), 0), dtype=np.int64)
        partial = np.concatenate([partial[pi], extra], axis=1)
        schema += [v for v, _ in new_vars]
    return project(BindingTable(tuple(schema), partial), query.projection, query.distinct)
