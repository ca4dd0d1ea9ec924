"""Synthetic shaped workloads in the style of WatDiv: typed entities and S/L/F/C queries.

Every generated query is planted on a witness drawn from the generated data,
so it has at least one solution.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from pathlib import Path

from .ntriples import write_ntriples
from .terms import RDF_TYPE, XSD, Dictionary, Term, Triple

NS = "http://example.org/wd/"

SHAPES = {"star": "S", "linear": "L", "snowflake": "F", "complex": "C"}
SHAPE_ORDER = "CFLS"


@dataclass
class GeneratorConfig:
    subjects: int = 1000
    predicates: int = 16
    seed: int = 0
    classes: int | None = None
    queries: int = 10
    star_size: int = 4
    chain_length: int = 3
    literal_pool: int = 40
    constant_rate: float = 0.5

    def __post_init__(self) -> None:
        if self.subjects < 1 or self.predicates < 1:
            raise ValueError("subjects and predicates must be >= 1")
        if self.classes is None:
            self.classes = max(1, self.predicates // 8)
        self.classes = min(self.classes, self.predicates)


@dataclass
class _Predicate:
    index: int
    term: Term
    domain: int
    range: int | None  # entity class, or None for literal-valued
    presence: float
    multi: float


@dataclass
class Workload:
    config: GeneratorConfig
    dictionary: Dictionary
    triples: list[Triple]
    # subject id -> predicate id -> object ids (first-seen order)
    cells: dict[int, dict[int, list[int]]] = field(repr=False)
    queries: list[tuple[str, str, str]] = field(default_factory=list)  # (query id, shape tag, text)


def _entity(i: int) -> Term:
    return Term.iri(f"{NS}e{i}")


def generate_dataset(cfg: GeneratorConfig) -> Workload:
    rng = random.Random(cfg.seed)
    d = Dictionary()
    type_pid = d.intern(Term.iri(RDF_TYPE))
    nclass = cfg.classes
    members: list[list[int]] = [[] for _ in range(nclass)]
    for i in range(cfg.subjects):
        members[rng.randrange(nclass)].append(i)
    for c in range(nclass):  # no class left empty
        if not members[c]:
            members[c].append(rng.randrange(cfg.subjects))
    klass = {}
    for c in range(nclass):
        for i in members[c]:
            klass.setdefault(i, c)

    preds = []
    for j in range(cfg.predicates):
        rng_kind = rng.random()
        preds.append(_Predicate(
            j, Term.iri(f"{NS}p{j}"), domain=j % nclass,
            range=rng.randrange(nclass) if rng_kind < 0.5 else None,
            presence=rng.uniform(0.35, 0.95),
            multi=rng.choice((0.0, 0.0, 0.1, 0.3)),
        ))
    by_class = [[p for p in preds if p.domain == c] for c in range(nclass)]
    pids = [d.intern(p.term) for p in preds]
    class_ids = [d.intern(Term.iri(f"{NS}Class{c}")) for c in range(nclass)]

    def literal(p: _Predicate, k: int) -> Term:
        style = p.index % 3
        if style == 0:
            return Term.literal(f"v{p.index}_{k}")
        if style == 1:
            return Term.literal(str(k), datatype=XSD + "integer")
        return Term.literal(f"w{k}", lang="en")

    lit_ids = [[d.intern(literal(p, k)) for k in range(cfg.literal_pool)] if p.range is None else []
               for p in preds]
    ent_ids = [d.intern(_entity(i)) for i in range(cfg.subjects)]

    triples: list[Triple] = []
    cells: dict[int, dict[int, list[int]]] = {}
    for i in range(cfg.subjects):
        s = ent_ids[i]
        c = klass[i]
        row: dict[int, list[int]] = {type_pid: [class_ids[c]]}
        triples.append(Triple(s, type_pid, class_ids[c]))
        for p in by_class[c]:
            if rng.random() >= p.presence:
                continue
            count = rng.choice((2, 3)) if rng.random() < p.multi else 1
            pool = lit_ids[p.index] if p.range is None else members[p.range]
            picks = rng.sample(range(len(pool)), min(count, len(pool)))
            objs = [pool[x] if p.range is None else ent_ids[pool[x]] for x in picks]
            row[pids[p.index]] = objs
            for o in objs:
                triples.append(Triple(s, pids[p.index], o))
        cells[s] = row
    return Workload(cfg, d, triples, cells)


# ------------------------------------------------------------------- queries


class _QueryBuilder:
    def __init__(self, wl: Workload, rng: random.Random):
        self.wl = wl
        self.rng = rng
        self.subjects = list(wl.cells)
        self.entity_ids = set(self.subjects)
        self.patterns: list[tuple[str, int, str]] = []
        self.nvars = 0

    def var(self) -> str:
        self.nvars += 1
        return f"?v{self.nvars - 1}"

    def links(self, s: int) -> list[tuple[int, int]]:
        """(predicate, object) pairs from ``s`` that lead to another subject."""
        return [(p, o) for p, objs in self.wl.cells.get(s, {}).items() for o in objs if o in self.entity_ids]

    def plant_constant(self, witness: dict[str, int]) -> None:
        """Replace one variable object by the value it takes in the witness."""
        if self.rng.random() >= self.wl.config.constant_rate:
            return
        subj_vars = {s for s, _, _ in self.patterns}
        cands = [i for i, (_, _, o) in enumerate(self.patterns) if o.startswith("?") and o not in subj_vars]
        if not cands:
            return
        i = self.rng.choice(cands)
        s, p, o = self.patterns[i]
        self.patterns[i] = (s, p, witness[o])


def _star_query(b: _QueryBuilder, size: int, witness: dict) -> bool:
    s = b.rng.choice(b.subjects)
    v0 = b.var()
    witness[v0] = s
    return _star_witness(b, s, v0, size, set(), witness)


def _chain(b: _QueryBuilder, start: int, svar: str, length: int, witness: dict) -> tuple[int, str] | None:
    cur, cvar = start, svar
    for _ in range(length):
        nxt = b.links(cur)
        if not nxt:
            return None
        p, o = b.rng.choice(nxt)
        ovar = b.var()
        b.patterns.append((cvar, p, ovar))
        witness[ovar] = o
        cur, cvar = o, ovar
    return cur, cvar


def _linear_query(b: _QueryBuilder, length: int, witness: dict) -> bool:
    s = b.rng.choice(b.subjects)
    v0 = b.var()
    witness[v0] = s
    return _chain(b, s, v0, length, witness) is not None


def _snowflake_query(b: _QueryBuilder, witness: dict, arms: int = 2) -> list[tuple[int, str]] | None:
    """Stars around ``arms`` subjects, the first linked to each of the others."""
    s0 = b.rng.choice(b.subjects)
    v0 = b.var()
    witness[v0] = s0
    hubs = [(s0, v0)]
    for _ in range(arms - 1):
        hop = _chain(b, s0, v0, 1, witness)
        if hop is None:
            return None
        hubs.append(hop)
    for s, svar in hubs:
        used = {p for (sv, p, _) in b.patterns if sv == svar}
        n = b.rng.choice((1, 2)) if svar == v0 else 2
        if not _star_witness(b, s, svar, n, used, witness):
            return None
    return hubs


def _star_witness(b: _QueryBuilder, s: int, svar: str, n: int, used: set, witness: dict) -> bool:
    row = b.wl.cells[s]
    avail = [p for p in row if p not in used]
    if len(avail) < n:
        return False
    for p in b.rng.sample(avail, n):
        ovar = b.var()
        b.patterns.append((svar, p, ovar))
        witness[ovar] = b.rng.choice(row[p])
    return True


def _complex_query(b: _QueryBuilder, witness: dict) -> bool:
    hubs = _snowflake_query(b, witness, arms=3)
    if hubs is None:
        return False
    s, svar = hubs[-1]
    return _chain(b, s, svar, 2, witness) is not None


def _render(b: _QueryBuilder) -> str:
    rev = b.wl.dictionary.reverse

    def term(x) -> str:
        if isinstance(x, str):
            return x
        t = rev[x]
        if t.lexical == RDF_TYPE:
            return "rdf:type"
        if t.kind.value == "I" and t.lexical.startswith(NS):
            return "wd:" + t.lexical[len(NS):]
        return t.n3()

    body = "".join(f"  {term(s)} {term(p)} {term(o)} .\n" for s, p, o in b.patterns)
    return (f"PREFIX wd: <{NS}>\nPREFIX rdf: <{RDF_TYPE[:-4]}>\n"
            f"SELECT * WHERE {{\n{body}}}\n")


def generate_queries(wl: Workload, shapes, count: int | None = None, seed: int | None = None) -> list[tuple[str, str, str]]:
    """``count`` queries for each shape in ``shapes`` (names or tags)."""
    cfg = wl.config
    count = cfg.queries if count is None else count
    rng = random.Random((cfg.seed if seed is None else seed) * 7919 + 1)
    out = []
    for shape in shapes:
        tag = SHAPES.get(shape, shape)
        if tag not in SHAPE_ORDER:
            raise ValueError(f"unknown shape {shape!r}")
        made = 0
        attempts = 0
        while made < count:
            attempts += 1
            if attempts > 2000 * count:
                raise ValueError(f"cannot plant {tag} queries on this dataset")
            b = _QueryBuilder(wl, rng)
            witness: dict[str, int] = {}
            if tag == "S":
                ok = _star_query(b, cfg.star_size, witness)
            elif tag == "L":
                ok = _linear_query(b, cfg.chain_length, witness)
            elif tag == "F":
                ok = _snowflake_query(b, witness) is not None
            else:
                ok = _complex_query(b, witness)
            if not ok:
                continue
            b.plant_constant(witness)
            out.append((f"{tag}{made:03d}", tag, _render(b)))
            made += 1
    return out


def write_workload(wl: Workload, out_dir) -> tuple[Path, list[Path]]:
    root = Path(out_dir)
    (root / "queries").mkdir(parents=True, exist_ok=True)
    data = root / "data.nt"
    with open(data, "w", encoding="utf-8", newline="\n") as f:
        write_ntriples(wl.triples, wl.dictionary, f)
    paths = []
    for qid, _, text in wl.queries:
        p = root / "queries" / f"{qid}.rq"
        p.write_text(text, encoding="utf-8")
        paths.append(p)
    return data, paths


def generate(shapes, cfg: GeneratorConfig) -> Workload:
    wl = generate_dataset(cfg)
    wl.queries = generate_queries(wl, shapes)
    return wl
