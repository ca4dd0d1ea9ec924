"""A loaded dataset: dictionary, both layouts and statistics, plus on-disk persistence.

Directory layout::

    manifest            b"PRSTL" + version byte, then int64 LE: k, |schema|, schema ids, |dictionary|
    dict.tsv            <id> TAB <kind-tag> TAB <escaped lexical>
    vp/<pid>.bin        row count, then (subject, object) pairs
    pt/part-<i>.bin     subject count, subject ids, then one RLE column per schema predicate
    stats.tsv           <pid> TAB <T_p> TAB <D_p>
"""
from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .stats import Stats, compute_stats
from .storage import (DEFAULT_PARTITIONS, CorruptColumn, PropertyTable, PtPartition, VpTable, as_array,
                      build_pt, build_vp, column_from_words, column_to_bytes)
from .terms import Dictionary, Term, TermKind

MAGIC = b"PRSTL"
FORMAT_VERSION = ord("1")


class FormatVersionMismatch(ValueError):
    pass


class CorruptFile(ValueError):
    def __init__(self, path, reason: str):
        super().__init__(f"{path}: {reason}")
        self.path = str(path)
        self.reason = reason


@dataclass
class Dataset:
    dictionary: Dictionary
    vp: dict[int, VpTable]
    pt: PropertyTable
    stats: Stats

    @classmethod
    def build(cls, triples, dictionary: Dictionary, k: int = DEFAULT_PARTITIONS) -> "Dataset":
        arr = as_array(triples)
        return cls(dictionary, build_vp(arr), build_pt(arr, k, dictionary), compute_stats(arr))

    @property
    def num_triples(self) -> int:
        return sum(len(t) for t in self.vp.values())

    def triples(self) -> np.ndarray:
        """All triples, reassembled from the VP tables."""
        if not self.vp:
            return np.zeros((0, 3), dtype=np.int64)
        return np.concatenate([
            np.column_stack([t.subjects, np.full(len(t), pid, dtype=np.int64), t.objects])
            for pid, t in sorted(self.vp.items())
        ])

    def lookup(self, term: Term) -> int | None:
        return self.dictionary.lookup(term)


# ------------------------------------------------------------------ persistence

_ESC = {"\\": "\\\\", "\t": "\\t", "\n": "\\n"}
_UNESC = {"\\": "\\", "t": "\t", "n": "\n"}


def _escape(text: str) -> str:
    return "".join(_ESC.get(c, c) for c in text)


def _unescape(text: str) -> str:
    if "\\" not in text:
        return text
    out = []
    it = iter(text)
    for c in it:
        if c == "\\":
            nxt = next(it, "")
            if nxt not in _UNESC:
                raise ValueError(f"bad escape \\{nxt}")
            out.append(_UNESC[nxt])
        else:
            out.append(c)
    return "".join(out)


def _words(*parts) -> bytes:
    return np.concatenate([np.asarray(p, dtype=np.int64).ravel() for p in parts]).astype("<i8").tobytes()


def save_dataset(ds: Dataset, directory) -> int:
    """Write ``ds`` under ``directory``; returns total bytes written."""
    root = Path(directory)
    (root / "vp").mkdir(parents=True, exist_ok=True)
    (root / "pt").mkdir(parents=True, exist_ok=True)
    schema = ds.pt.predicates
    manifest = MAGIC + bytes([FORMAT_VERSION]) + _words([ds.pt.k, len(schema)], schema, [len(ds.dictionary)])
    (root / "manifest").write_bytes(manifest)
    with open(root / "dict.tsv", "w", encoding="utf-8", newline="\n") as f:
        for i, t in enumerate(ds.dictionary.reverse):
            f.write(f"{i}\t{t.kind.value}\t{_escape(t.lexical)}\n")
    for pid, table in ds.vp.items():
        pairs = np.column_stack([table.subjects, table.objects])
        (root / "vp" / f"{pid}.bin").write_bytes(_words([len(table)], pairs))
    for part in ds.pt.partitions:
        chunks = [_words([len(part)], part.subjects)]
        chunks += [column_to_bytes(part.columns[pid]) for pid in schema]
        (root / "pt" / f"part-{part.partition_index}.bin").write_bytes(b"".join(chunks))
    ds.stats.save(root / "stats.tsv")
    return dataset_size(root)


def dataset_size(directory) -> int:
    return sum(f.stat().st_size for f in Path(directory).rglob("*") if f.is_file())


def _read_words(path: Path) -> np.ndarray:
    try:
        raw = path.read_bytes()
    except FileNotFoundError:
        raise CorruptFile(path, "missing") from None
    if len(raw) % 8:
        raise CorruptFile(path, "size is not a multiple of 8")
    return np.frombuffer(raw, dtype="<i8").astype(np.int64)


def load_dataset(directory) -> Dataset:
    root = Path(directory)
    mpath = root / "manifest"
    if not mpath.is_file():
        raise CorruptFile(mpath, "missing manifest")
    raw = mpath.read_bytes()
    if raw[:5] != MAGIC or len(raw) < 6:
        raise CorruptFile(mpath, "bad magic")
    if raw[5] != FORMAT_VERSION:
        raise FormatVersionMismatch(f"format version {chr(raw[5])!r}, expected {chr(FORMAT_VERSION)!r}")
    body = raw[6:]
    if len(body) % 8 or len(body) < 24:
        raise CorruptFile(mpath, "truncated")
    words = np.frombuffer(body, dtype="<i8").astype(np.int64)
    k, nschema = int(words[0]), int(words[1])
    if k < 1 or nschema < 0 or len(words) != 3 + nschema:
        raise CorruptFile(mpath, "inconsistent header")
    schema = words[2:2 + nschema].tolist()
    dict_size = int(words[2 + nschema])

    dictionary = Dictionary()
    dpath = root / "dict.tsv"
    try:
        with open(dpath, encoding="utf-8", newline="\n") as f:
            for n, line in enumerate(f):
                fields = line.rstrip("\n").split("\t")
                if len(fields) != 3 or int(fields[0]) != n:
                    raise CorruptFile(dpath, f"bad entry on line {n + 1}")
                term = Term(TermKind(fields[1]), _unescape(fields[2]))
                if dictionary.intern(term) != n:
                    raise CorruptFile(dpath, f"duplicate term on line {n + 1}")
    except FileNotFoundError:
        raise CorruptFile(dpath, "missing") from None
    except ValueError as exc:
        if isinstance(exc, CorruptFile):
            raise
        raise CorruptFile(dpath, str(exc)) from None
    if len(dictionary) != dict_size:
        raise CorruptFile(dpath, f"{len(dictionary)} terms, manifest says {dict_size}")

    vp = {}
    for pid in schema:
        path = root / "vp" / f"{pid}.bin"
        w = _read_words(path)
        if not len(w) or len(w) != 1 + 2 * w[0]:
            raise CorruptFile(path, "row count disagrees with file size")
        pairs = w[1:].reshape(-1, 2)
        vp[pid] = VpTable(pid, pairs[:, 0].copy(), pairs[:, 1].copy())

    partitions = []
    for i in range(k):
        path = root / "pt" / f"part-{i}.bin"
        w = _read_words(path)
        if not len(w) or len(w) < 1 + w[0]:
            raise CorruptFile(path, "truncated subject list")
        nrows = int(w[0])
        part = PtPartition(i, w[1:1 + nrows].copy())
        pos = 1 + nrows
        try:
            for pid in schema:
                part.columns[pid], pos = column_from_words(w, pos, nrows)
        except CorruptColumn as exc:
            raise CorruptFile(path, str(exc)) from None
        if pos != len(w):
            raise CorruptFile(path, "trailing data")
        partitions.append(part)

    spath = root / "stats.tsv"
    try:
        stats = Stats.from_tsv(spath.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise CorruptFile(spath, "missing") from None
    except ValueError as exc:
        raise CorruptFile(spath, str(exc)) from None
    return Dataset(dictionary, vp, PropertyTable(schema, partitions), stats)


def load_ntriples_dataset(path: str | os.PathLike, k: int = DEFAULT_PARTITIONS) -> Dataset:
    from .ntriples import load_file
    triples, d = load_file(path)
    return Dataset.build(triples, d, k)
