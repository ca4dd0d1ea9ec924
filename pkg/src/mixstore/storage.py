"""Physical layouts: per-predicate VP tables and the subject-partitioned Property Table.

Property Table cells are kept in memory as CSR-style list columns
(``offsets``/``values``); a row whose list is empty is NULL.  On disk each
column is run-length encoded over its NULL/present pattern.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Any, Iterable, Iterator, Sequence

import numpy as np

from .terms import Dictionary, Term, Triple

DEFAULT_PARTITIONS = 8


class InvalidPartitionCount(ValueError):
    pass


class CorruptColumn(ValueError):
    pass


def as_array(triples: Iterable[Triple] | np.ndarray) -> np.ndarray:
    """Triples as an ``(n, 3)`` int64 array."""
    if isinstance(triples, np.ndarray):
        return triples.reshape(-1, 3).astype(np.int64, copy=False)
    arr = np.array(triples if isinstance(triples, (list, tuple)) else list(triples), dtype=np.int64)
    return arr.reshape(-1, 3)


def subject_hash(term: Term) -> int:
    """Stable 64-bit hash of a term's kind and lexical form."""
    h = hashlib.blake2b(term.kind.value.encode() + b"\x00" + term.lexical.encode("utf-8"), digest_size=8)
    return int.from_bytes(h.digest(), "little")


def partition_of(term: Term, k: int) -> int:
    return subject_hash(term) % k


# --------------------------------------------------------------------------- VP


@dataclass
class VpTable:
    predicate: int
    subjects: np.ndarray
    objects: np.ndarray

    @property
    def rows(self) -> list[tuple[int, int]]:
        return list(zip(self.subjects.tolist(), self.objects.tolist()))

    def __len__(self) -> int:
        return len(self.subjects)


def build_vp(triples) -> dict[int, VpTable]:
    """One (subject, object) table per distinct predicate, rows in (s, o) order."""
    arr = as_array(triples)
    out: dict[int, VpTable] = {}
    if not len(arr):
        return out
    order = np.lexsort((arr[:, 2], arr[:, 0], arr[:, 1]))
    arr = arr[order]
    preds, starts = np.unique(arr[:, 1], return_index=True)
    bounds = np.append(starts, len(arr))
    for i, pid in enumerate(preds.tolist()):
        lo, hi = bounds[i], bounds[i + 1]
        out[pid] = VpTable(pid, arr[lo:hi, 0].copy(), arr[lo:hi, 2].copy())
    return out


# --------------------------------------------------------------------------- PT


@dataclass
class ListColumn:
    """A column of NULL-or-list cells. Row ``r`` holds ``values[offsets[r]:offsets[r+1]]``."""

    offsets: np.ndarray
    values: np.ndarray

    @property
    def lengths(self) -> np.ndarray:
        return np.diff(self.offsets)

    @property
    def present(self) -> np.ndarray:
        return self.offsets[1:] > self.offsets[:-1]

    def __len__(self) -> int:
        return len(self.offsets) - 1

    def cell(self, row: int) -> tuple[int, ...] | None:
        lo, hi = self.offsets[row], self.offsets[row + 1]
        return tuple(self.values[lo:hi].tolist()) if hi > lo else None

    def cells(self) -> list[tuple[int, ...] | None]:
        off = self.offsets.tolist()
        vals = self.values.tolist()
        return [tuple(vals[a:b]) if b > a else None for a, b in zip(off, off[1:])]

    @classmethod
    def from_cells(cls, cells: Sequence[Sequence[int] | None]) -> "ListColumn":
        lens = [0 if c is None else len(c) for c in cells]
        if any(c is not None and len(c) == 0 for c in cells):
            raise ValueError("empty list cell; use None for NULL")
        offsets = np.zeros(len(cells) + 1, dtype=np.int64)
        np.cumsum(lens, out=offsets[1:])
        values = np.fromiter((v for c in cells if c is not None for v in c), dtype=np.int64, count=int(offsets[-1]))
        return cls(offsets, values)

    @classmethod
    def empty(cls, nrows: int) -> "ListColumn":
        return cls(np.zeros(nrows + 1, dtype=np.int64), np.zeros(0, dtype=np.int64))


@dataclass
class PtPartition:
    partition_index: int
    subjects: np.ndarray
    columns: dict[int, ListColumn] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.subjects)

    def row_of(self, subject: int) -> int | None:
        i = int(np.searchsorted(self.subjects, subject))
        if i < len(self.subjects) and self.subjects[i] == subject:
            return i
        return None


@dataclass
class PropertyTable:
    predicates: list[int]
    partitions: list[PtPartition]

    @property
    def k(self) -> int:
        return len(self.partitions)

    @property
    def num_rows(self) -> int:
        return sum(len(p) for p in self.partitions)

    def row(self, subject: int) -> dict[int, tuple[int, ...] | None] | None:
        for part in self.partitions:
            r = part.row_of(subject)
            if r is not None:
                return {p: part.columns[p].cell(r) for p in self.predicates}
        return None

    def flatten(self) -> Iterator[Triple]:
        """Emit one (s, p, v) triple per cell value."""
        for part in self.partitions:
            subs = part.subjects
            for pid in self.predicates:
                col = part.columns[pid]
                rows = np.repeat(np.arange(len(subs)), col.lengths)
                for s, o in zip(subs[rows].tolist(), col.values.tolist()):
                    yield Triple(s, pid, o)


def build_pt(triples, k: int = DEFAULT_PARTITIONS, dictionary: Dictionary | None = None) -> PropertyTable:
    """One row per distinct subject, hash-routed to ``k`` partitions.

    Routing hashes the subject's resolved term, so ``dictionary`` is needed;
    without it the raw id is hashed (tests only).
    """
    if k < 1:
        raise InvalidPartitionCount(f"partition count must be >= 1, got {k}")
    arr = as_array(triples)
    s, p, o = arr[:, 0], arr[:, 1], arr[:, 2]
    subjects = np.unique(s)
    if dictionary is not None:
        hashes = [subject_hash(dictionary.resolve(x)) for x in subjects.tolist()]
    else:
        hashes = [int.from_bytes(hashlib.blake2b(x.to_bytes(8, "little"), digest_size=8).digest(), "little")
                  for x in subjects.tolist()]
    parts = np.array([h % k for h in hashes], dtype=np.int64)
    order = np.argsort(parts, kind="stable")
    part_bounds = np.searchsorted(parts[order], np.arange(k + 1))
    # global row index, partition-major with ascending subject id inside each partition
    global_row = np.empty(len(subjects), dtype=np.int64)
    global_row[order] = np.arange(len(subjects))
    trow = global_row[np.searchsorted(subjects, s)]

    schema = np.unique(p).tolist()
    partitions = [PtPartition(i, subjects[order[part_bounds[i]:part_bounds[i + 1]]]) for i in range(k)]
    for pid in schema:
        idx = np.flatnonzero(p == pid)
        rows = trow[idx]
        srt = np.argsort(rows, kind="stable")  # keeps first-seen order inside a cell
        rows, vals = rows[srt], o[idx][srt]
        counts = np.bincount(rows, minlength=len(subjects))
        for i, part in enumerate(partitions):
            lo, hi = part_bounds[i], part_bounds[i + 1]
            offsets = np.zeros(hi - lo + 1, dtype=np.int64)
            np.cumsum(counts[lo:hi], out=offsets[1:])
            vlo, vhi = np.searchsorted(rows, [lo, hi])
            part.columns[pid] = ListColumn(offsets, vals[vlo:vhi].copy())
    return PropertyTable(schema, partitions)


# ----------------------------------------------------------------- RLE codec


@dataclass
class RleColumn:
    """Maximal runs of NULL/present rows plus the payloads of present rows."""

    runs: list[tuple[int, bool]]
    values: list[Any]

    @property
    def row_count(self) -> int:
        return sum(n for n, _ in self.runs)


def rle_encode(cells: Sequence[Any]) -> RleColumn:
    runs: list[tuple[int, bool]] = []
    values: list[Any] = []
    for cell in cells:
        present = cell is not None
        if present:
            if isinstance(cell, (tuple, list)) and len(cell) == 0:
                raise ValueError("empty list cell; use None for NULL")
            values.append(cell)
        if runs and runs[-1][1] == present:
            runs[-1] = (runs[-1][0] + 1, present)
        else:
            runs.append((1, present))
    return RleColumn(runs, values)


def rle_decode(col: RleColumn, row_count: int | None = None) -> list[Any]:
    if row_count is not None and col.row_count != row_count:
        raise CorruptColumn(f"runs cover {col.row_count} rows, expected {row_count}")
    out: list[Any] = []
    it = iter(col.values)
    prev = None
    for length, present in col.runs:
        if length <= 0:
            raise CorruptColumn(f"non-positive run length {length}")
        if prev is not None and prev == present:
            raise CorruptColumn("adjacent runs with equal flags")
        prev = present
        if present:
            chunk = [next(it, _MISSING) for _ in range(length)]
            if _MISSING in chunk:
                raise CorruptColumn("fewer values than present rows")
            out.extend(chunk)
        else:
            out.extend([None] * length)
    if next(it, _MISSING) is not _MISSING:
        raise CorruptColumn("more values than present rows")
    return out


_MISSING = object()

# Each run is one little-endian 64-bit word: (length << 1) | present.
# A payload of one id is written inline; a longer list as -len followed by the ids.


def _payload_words(cell: Sequence[int]) -> list[int]:
    cell = (cell,) if isinstance(cell, (int, np.integer)) else tuple(cell)
    return list(cell) if len(cell) == 1 else [-len(cell), *cell]


def rle_to_bytes(col: RleColumn) -> bytes:
    words = [len(col.runs)]
    words += [(n << 1) | int(present) for n, present in col.runs]
    for cell in col.values:
        words += _payload_words(cell)
    return np.asarray(words, dtype="<i8").tobytes()


def dense_to_bytes(cells: Sequence[Any]) -> bytes:
    """Reference layout with one 64-bit presence flag per row; used for size comparisons."""
    words = [len(cells)]
    words += [int(c is not None) for c in cells]
    for cell in cells:
        if cell is not None:
            words += _payload_words(cell)
    return np.asarray(words, dtype="<i8").tobytes()


def column_runs(col: ListColumn) -> tuple[np.ndarray, np.ndarray]:
    present = col.present
    n = len(present)
    if n == 0:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=bool)
    change = np.flatnonzero(present[1:] != present[:-1]) + 1
    starts = np.concatenate(([0], change))
    lengths = np.diff(np.append(starts, n))
    return lengths, present[starts]


def column_to_bytes(col: ListColumn) -> bytes:
    """Vectorised equivalent of ``rle_to_bytes(rle_encode(col.cells()))``."""
    lengths, flags = column_runs(col)
    lens = col.lengths
    cl = lens[lens > 0]
    multi = cl > 1
    emit = cl + multi
    payload = np.empty(int(emit.sum()), dtype=np.int64)
    starts = np.cumsum(emit) - emit
    payload[starts[multi]] = -cl[multi]
    vstart = starts + multi
    within = np.arange(len(col.values)) - np.repeat(np.cumsum(cl) - cl, cl)
    payload[np.repeat(vstart, cl) + within] = col.values
    header = np.concatenate(([len(lengths)], (lengths << 1) | flags.astype(np.int64)))
    return header.astype("<i8").tobytes() + payload.astype("<i8").tobytes()


def column_from_words(words: np.ndarray, pos: int, nrows: int) -> tuple[ListColumn, int]:
    """Decode one serialised column from ``words`` starting at ``pos``."""
    if pos >= len(words):
        raise CorruptColumn("truncated column header")
    nruns = int(words[pos])
    pos += 1
    if nruns < 0 or pos + nruns > len(words):
        raise CorruptColumn("truncated run list")
    rw = words[pos:pos + nruns]
    pos += nruns
    run_len = rw >> 1
    flags = (rw & 1).astype(bool)
    if (run_len <= 0).any():
        raise CorruptColumn("non-positive run length")
    if nruns > 1 and (flags[1:] == flags[:-1]).any():
        raise CorruptColumn("runs are not maximal")
    if int(run_len.sum()) != nrows:
        raise CorruptColumn(f"runs cover {int(run_len.sum())} rows, expected {nrows}")
    present = np.repeat(flags, run_len)
    npresent = int(present.sum())
    lens = np.zeros(nrows, dtype=np.int64)
    rest = words[pos:]
    if npresent and len(rest) >= npresent and not (rest[:npresent] < 0).any():
        # all single-valued
        lens[present] = 1
        values = rest[:npresent].copy()
        pos += npresent
    else:
        cell_lens = []
        chunks = []
        i = 0
        wl = rest.tolist() if npresent else []
        try:
            for _ in range(npresent):
                w = wl[i]
                if w >= 0:
                    cell_lens.append(1)
                    chunks.append(w)
                    i += 1
                else:
                    n = -w
                    if n < 2:
                        raise CorruptColumn("bad list header")
                    vals = wl[i + 1:i + 1 + n]
                    if len(vals) != n:
                        raise IndexError
                    cell_lens.append(n)
                    chunks.extend(vals)
                    i += 1 + n
        except IndexError:
            raise CorruptColumn("truncated payload") from None
        lens[present] = cell_lens
        values = np.asarray(chunks, dtype=np.int64)
        pos += i
    offsets = np.zeros(nrows + 1, dtype=np.int64)
    np.cumsum(lens, out=offsets[1:])
    return ListColumn(offsets, values), pos
