"""Join Tree construction for the MIXED and VP_ONLY strategies.

Patterns sharing a subject expression are grouped into one Property Table
node (MIXED only); everything else becomes a VP node.  Nodes are scored from
the per-predicate statistics and placed greedily: lowest priority value first,
preferring nodes connected to what is already placed.  The last node placed
is the root of a left-deep chain.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Generic, Sequence, TypeVar, Union

from .sparql import BgpQuery, PatternTerm, TriplePattern, Variable
from .stats import Stats
from .terms import Dictionary

LITERAL_WEIGHT = 0.1
MISSING = -1  # id for a constant absent from the dictionary: matches nothing


class Strategy(enum.Enum):
    MIXED = "mixed"
    VP_ONLY = "vp"


class NodeKind(enum.Enum):
    PT = "PT"
    VP = "VP"


class UnknownPredicate(LookupError):
    def __init__(self, iri: str):
        super().__init__(f"predicate <{iri}> has no data")
        self.iri = iri


@dataclass(frozen=True)
class EncodedPattern:
    """A triple pattern with constants replaced by dictionary ids."""

    subject: Union[Variable, int]
    predicate: int
    object: Union[Variable, int]
    source: TriplePattern

    def variables(self) -> list[Variable]:
        return self.source.variables()

    def __str__(self) -> str:
        return str(self.source)


P = TypeVar("P", TriplePattern, EncodedPattern)


@dataclass(frozen=True)
class NodeSpec(Generic[P]):
    kind: NodeKind
    patterns: tuple[P, ...]

    def __post_init__(self) -> None:
        if not self.patterns:
            raise ValueError("empty node")
        if self.kind is NodeKind.VP and len(self.patterns) != 1:
            raise ValueError("a VP node holds exactly one pattern")
        if self.kind is NodeKind.PT:
            if len(self.patterns) < 2:
                raise ValueError("a PT node groups at least two patterns")
            if len({tp.subject for tp in self.patterns}) != 1:
                raise ValueError("PT patterns must share their subject")

    @property
    def out_vars(self) -> frozenset[Variable]:
        return frozenset(v for tp in self.patterns for v in tp.variables())

    @property
    def has_constant_object(self) -> bool:
        return any(not isinstance(tp.object, Variable) for tp in self.patterns)

    def render(self) -> str:
        return " . ".join(str(tp) for tp in self.patterns)


@dataclass
class JoinNode:
    spec: NodeSpec
    score: float
    children: list["JoinNode"] = field(default_factory=list)
    join_vars: tuple[Variable, ...] = ()
    cartesian: bool = False


@dataclass
class JoinTree:
    root: JoinNode | None
    projection: tuple[Variable, ...] = ()
    distinct: bool = False
    strategy: Strategy = Strategy.MIXED
    unknown_predicate: str | None = None

    def order(self) -> list[JoinNode]:
        """Nodes in evaluation order, leaves first, root last."""
        out = []
        node = self.root
        while node is not None:
            out.append(node)
            node = node.children[0] if node.children else None
        return out[::-1]

    @property
    def num_joins(self) -> int:
        return max(0, len(self.order()) - 1)


# ------------------------------------------------------------------ grouping


def group_patterns(patterns: BgpQuery | Sequence[P], strategy: Strategy) -> list[NodeSpec]:
    """Split patterns into PT groups (same subject, size >= 2) and VP singletons."""
    if isinstance(patterns, BgpQuery):
        patterns = patterns.patterns
    if not patterns:
        raise ValueError("no patterns")
    if strategy is Strategy.VP_ONLY:
        return [NodeSpec(NodeKind.VP, (tp,)) for tp in patterns]
    groups: dict[object, list] = {}
    for tp in patterns:
        groups.setdefault(tp.subject, []).append(tp)
    return [NodeSpec(NodeKind.PT if len(g) > 1 else NodeKind.VP, tuple(g)) for g in groups.values()]


# ------------------------------------------------------------------- scoring


def _predicate_id(tp, stats: Stats) -> int:
    pid = tp.predicate
    if not isinstance(pid, int) or pid not in stats:
        iri = tp.source.predicate.lexical if isinstance(tp, EncodedPattern) else str(pid)
        raise UnknownPredicate(iri)
    return pid


def _base_score(tp, stats: Stats) -> float:
    pid = _predicate_id(tp, stats)
    ps = stats[pid]
    if not isinstance(tp.subject, Variable):
        return max(1.0, ps.tuples / ps.distinct_subjects)
    return float(ps.tuples)


def pattern_score(tp, stats: Stats) -> float:
    """Score of one pattern evaluated on its own (VP node)."""
    if not isinstance(tp.object, Variable):
        _predicate_id(tp, stats)
        return 1.0
    return _base_score(tp, stats)


def score_node(spec: NodeSpec, stats: Stats) -> float:
    """Priority value of a node; lower is evaluated earlier.

    Patterns must be encoded (integer predicates) against ``stats``.
    """
    if spec.kind is NodeKind.VP:
        return pattern_score(spec.patterns[0], stats)
    total = sum(_base_score(tp, stats) for tp in spec.patterns)
    return total * LITERAL_WEIGHT if spec.has_constant_object else total


# --------------------------------------------------------------- tree build


def _min_predicate(spec: NodeSpec) -> int:
    return min(tp.predicate if isinstance(tp.predicate, int) else 0 for tp in spec.patterns)


def priority_key(spec: NodeSpec, score: float) -> tuple:
    # literal-bearing nodes form the highest-priority tier
    return (0 if spec.has_constant_object else 1, score, _min_predicate(spec), spec.render())


def build_join_tree(nodes: Sequence[NodeSpec], stats: Stats, projection: Sequence[Variable] = (),
                    distinct: bool = False, strategy: Strategy = Strategy.MIXED) -> JoinTree:
    if not nodes:
        raise ValueError("no nodes")
    scored = [(spec, score_node(spec, stats)) for spec in nodes]
    remaining = sorted(scored, key=lambda x: priority_key(*x))
    placed: list[JoinNode] = []
    bound: set[Variable] = set()
    while remaining:
        pick = 0
        if placed:
            for i, (spec, _) in enumerate(remaining):
                if spec.out_vars & bound:
                    pick = i
                    break
        spec, score = remaining.pop(pick)
        shared = tuple(sorted(spec.out_vars & bound, key=lambda v: v.name))
        node = JoinNode(spec, score, [placed[-1]] if placed else [], shared, bool(placed) and not shared)
        placed.append(node)
        bound |= spec.out_vars
    return JoinTree(placed[-1], tuple(projection), distinct, strategy)


def encode_pattern(tp: TriplePattern, dictionary: Dictionary) -> EncodedPattern:
    def enc(x: PatternTerm):
        if isinstance(x, Variable):
            return x
        tid = dictionary.lookup(x)
        return MISSING if tid is None else tid

    return EncodedPattern(enc(tp.subject), enc(tp.predicate), enc(tp.object), tp)


def plan(query: BgpQuery, dictionary: Dictionary, stats: Stats,
         strategy: Strategy = Strategy.MIXED) -> JoinTree:
    """Encode, group, score and order ``query``.

    A predicate without data yields a tree with no root: the answer is empty.
    """
    encoded = [encode_pattern(tp, dictionary) for tp in query.patterns]
    nodes = group_patterns(encoded, strategy)
    try:
        return build_join_tree(nodes, stats, query.projection, query.distinct, strategy)
    except UnknownPredicate as exc:
        return JoinTree(None, query.projection, query.distinct, strategy, unknown_predicate=exc.iri)


def _fmt_score(score: float) -> str:
    return f"{score:g}"


def explain(tree: JoinTree) -> str:
    """Indented rendering, root first; each child is the subtree its parent joins."""
    if tree.root is None:
        return f"EMPTY unknown predicate <{tree.unknown_predicate}>\n"
    lines = []
    node, depth = tree.root, 0
    while node is not None:
        line = f"{'  ' * depth}{node.spec.kind.value} score={_fmt_score(node.score)} {{{node.spec.render()}}}"
        if node.children:
            if node.cartesian:
                line += " CARTESIAN"
            else:
                line += " join=" + ",".join(str(v) for v in node.join_vars)
        lines.append(line)
        node = node.children[0] if node.children else None
        depth += 1
    return "\n".join(lines) + "\n"
