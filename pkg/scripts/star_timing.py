"""Desk-scale timing of MIXED versus VP_ONLY per query shape.

    python3 scripts/star_timing.py --subjects 150000 --repeat 6
"""
import argparse
import time

from mixstore.bench import run_bench
from mixstore.dataset import Dataset
from mixstore.sparql import parse_query
from mixstore.workload import GeneratorConfig, generate


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--subjects", type=int, default=50_000)
    ap.add_argument("--predicates", type=int, default=16)
    ap.add_argument("--queries", type=int, default=10)
    ap.add_argument("--shapes", default="star,linear,snowflake,complex")
    ap.add_argument("--partitions", type=int, default=8)
    ap.add_argument("--repeat", type=int, default=6)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--report", default=None)
    args = ap.parse_args()

    t0 = time.perf_counter()
    cfg = GeneratorConfig(subjects=args.subjects, predicates=args.predicates, seed=args.seed, queries=args.queries)
    wl = generate(args.shapes.split(","), cfg)
    ds = Dataset.build(wl.triples, wl.dictionary, args.partitions)
    print(f"{len(wl.triples)} triples, {len(wl.queries)} queries, built in {time.perf_counter() - t0:.1f}s")

    queries = [(qid, parse_query(text)) for qid, _, text in wl.queries]
    report = run_bench(ds, queries, ("mixed", "vp"), args.repeat)
    if args.report:
        report.write_csv(args.report)
    means = report.shape_means()
    print("shape\tmixed_ms\tvp_ms\tratio")
    for shape in report.shapes():
        m, v = means[(shape, "mixed")], means[(shape, "vp")]
        print(f"{shape}\t{m:.3f}\t{v:.3f}\t{m / v:.2f}")


if __name__ == "__main__":
    main()
