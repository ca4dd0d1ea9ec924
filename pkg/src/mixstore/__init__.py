"""Single-node RDF store mixing Vertical Partitioning tables with a columnar Property Table."""
from .dataset import Dataset, load_dataset, save_dataset
from .executor import BindingTable, ExecTrace, execute, hash_join, same_bag
from .ntriples import MalformedLine, parse_ntriples
from .oracle import nested_loop_eval
from .planner import JoinTree, NodeKind, NodeSpec, Strategy, explain, plan
from .sparql import BgpQuery, TriplePattern, Variable, parse_query
from .stats import Stats, compute_stats
from .terms import Dictionary, Term, TermKind, Triple

__all__ = [
    "BgpQuery", "BindingTable", "Dataset", "Dictionary", "ExecTrace", "JoinTree", "MalformedLine",
    "NodeKind", "NodeSpec", "Stats", "Strategy", "Term", "TermKind", "Triple", "TriplePattern",
    "Variable", "compute_stats", "execute", "explain", "hash_join", "load_dataset",
    "nested_loop_eval", "parse_ntriples", "parse_query", "plan", "same_bag", "save_dataset",
]
