"""Command-line entry point: ``load``, ``query``, ``generate``, ``bench``."""
from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path

from .bench import StrategyDisagreement, load_queries, run_bench
from .dataset import CorruptFile, Dataset, FormatVersionMismatch, load_dataset, save_dataset
from .executor import ExecTrace, execute, write_tsv
from .ntriples import MalformedLine, load_file
from .oracle import nested_loop_eval
from .planner import Strategy, explain, plan
from .sparql import QueryError, parse_query
from .storage import DEFAULT_PARTITIONS, InvalidPartitionCount
from .workload import SHAPES, GeneratorConfig, generate, write_workload

log = logging.getLogger("mixstore")

EXIT_OK, EXIT_INPUT, EXIT_INVARIANT = 0, 1, 2


def cmd_load(args) -> int:
    t0 = time.perf_counter()
    triples, d = load_file(args.input)
    ds = Dataset.build(triples, d, args.partitions)
    nbytes = save_dataset(ds, args.out_dir)
    elapsed = time.perf_counter() - t0
    print(f"triples\t{len(triples)}")
    print(f"terms\t{len(d)}")
    print(f"predicates\t{len(ds.vp)}")
    print(f"partitions\t{ds.pt.k}")
    print(f"bytes\t{nbytes}")
    print(f"seconds\t{elapsed:.3f}")
    return EXIT_OK


def cmd_query(args) -> int:
    ds = load_dataset(args.dir)
    text = sys.stdin.read() if args.query_file == "-" else Path(args.query_file).read_text(encoding="utf-8")
    query = parse_query(text)
    if args.strategy == "oracle":
        if args.explain:
            sys.stderr.write("ORACLE nested-loop\n")
        result = nested_loop_eval(query, ds.triples(), ds.dictionary)
    else:
        tree = plan(query, ds.dictionary, ds.stats, Strategy(args.strategy))
        if args.explain:
            sys.stderr.write(explain(tree))
            sys.stderr.flush()
        trace = ExecTrace()
        result = execute(tree, ds, trace)
        log.info("joins=%d rows=%d", trace.joins, len(result))
    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="\n") as f:
            write_tsv(result, ds.dictionary, f, args.limit)
    else:
        write_tsv(result, ds.dictionary, sys.stdout, args.limit)
    return EXIT_OK


def _shapes(spec: str) -> list[str]:
    if spec == "all":
        return list(SHAPES)
    names = [s.strip() for s in spec.split(",") if s.strip()]
    for n in names:
        if n not in SHAPES:
            raise ValueError(f"unknown shape {n!r}; choose from {', '.join(SHAPES)}")
    return names


def cmd_generate(args) -> int:
    cfg = GeneratorConfig(subjects=args.subjects, predicates=args.predicates, seed=args.seed,
                          queries=args.queries, star_size=args.star_size, chain_length=args.chain_length,
                          classes=args.classes)
    wl = generate(_shapes(args.shape), cfg)
    data, paths = write_workload(wl, args.out_dir)
    print(f"triples\t{len(wl.triples)}\t{data}")
    print(f"queries\t{len(paths)}\t{Path(args.out_dir) / 'queries'}")
    return EXIT_OK


def cmd_bench(args) -> int:
    ds = load_dataset(args.dir)
    queries = load_queries(args.queries_dir)
    if not queries:
        raise FileNotFoundError(f"no .rq files in {args.queries_dir}")
    strategies = [s.strip() for s in args.strategies.split(",") if s.strip()]
    for s in strategies:
        if s not in ("mixed", "vp", "oracle"):
            raise ValueError(f"unknown strategy {s!r}")
    report = run_bench(ds, queries, strategies, args.repeat)
    if args.report:
        report.write_csv(args.report)
    sys.stdout.write(report.summary())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mixstore", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("load", help="parse N-Triples and write a dataset directory")
    p.add_argument("input")
    p.add_argument("out_dir")
    p.add_argument("--partitions", "-k", type=int, default=DEFAULT_PARTITIONS)
    p.set_defaults(func=cmd_load)

    p = sub.add_parser("query", help="run a SPARQL BGP query, TSV to stdout")
    p.add_argument("dir")
    p.add_argument("query_file", help="query file, or - for stdin")
    p.add_argument("--strategy", choices=["mixed", "vp", "oracle"], default="mixed")
    p.add_argument("--explain", action="store_true", help="print the join tree to stderr")
    p.add_argument("--limit", type=int, default=None)
    p.add_argument("--output", "-o", default=None)
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("generate", help="write a shaped synthetic dataset and queries")
    p.add_argument("shape", help="star|linear|snowflake|complex, a comma list, or all")
    p.add_argument("out_dir")
    p.add_argument("--subjects", type=int, default=1000)
    p.add_argument("--predicates", type=int, default=16)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--queries", type=int, default=10, help="queries per shape")
    p.add_argument("--star-size", type=int, default=4)
    p.add_argument("--chain-length", type=int, default=3)
    p.add_argument("--classes", type=int, default=None)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("bench", help="time strategies on a query directory")
    p.add_argument("dir")
    p.add_argument("queries_dir")
    p.add_argument("--strategies", default="mixed,vp")
    p.add_argument("--repeat", type=int, default=3)
    p.add_argument("--report", default=None, help="CSV output path")
    p.set_defaults(func=cmd_bench)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except StrategyDisagreement as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except (MalformedLine, QueryError, CorruptFile, FormatVersionMismatch, InvalidPartitionCount,
            FileNotFoundError, IsADirectoryError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
