"""End-to-end acceptance checks; each one records a PASS/FAIL line in the terminal summary."""
import random
import re
from collections import Counter
from contextlib import contextmanager

import pytest

from _support import naive_stats, random_cells, random_query, random_triples, sorted_rows
from mixstore.bench import run_bench
from mixstore.dataset import Dataset, load_dataset, save_dataset
from mixstore.executor import ExecTrace, execute, same_bag
from mixstore.oracle import nested_loop_eval
from mixstore.planner import Strategy, explain, group_patterns, plan
from mixstore.sparql import BgpQuery, TriplePattern, Variable, parse_query
from mixstore.stats import compute_stats
from mixstore.storage import ListColumn, column_to_bytes, dense_to_bytes, rle_encode, rle_to_bytes
from mixstore.workload import GeneratorConfig, generate


@contextmanager
def criterion(log, key):
    info = {"detail": ""}
    try:
        yield info
    except Exception as exc:
        log[key] = (False, f"{type(exc).__name__}: {exc}"[:300])
        raise
    log[key] = (True, info["detail"])


def _joins(ds, query, strategy):
    trace = ExecTrace()
    result = execute(plan(query, ds.dictionary, ds.stats, strategy), ds, trace)
    return result, trace.joins


@pytest.fixture(scope="module")
def suite():
    """Five seed-fixed workloads between 10k and 100k triples, 3 queries per shape each."""
    out = []
    for i, subjects in enumerate((1500, 3000, 6000, 10000, 13500)):
        wl = generate(["star", "linear", "snowflake", "complex"],
                      GeneratorConfig(subjects=subjects, predicates=16, seed=100 + i, queries=3))
        ds = Dataset.build(wl.triples, wl.dictionary, 8)
        queries = [(qid, tag, parse_query(text)) for qid, tag, text in wl.queries]
        out.append((wl, ds, queries))
    return out


def test_ac1_oracle_equivalence(suite, acceptance_log):
    with criterion(acceptance_log, "AC1 oracle equivalence") as info:
        sizes = [len(wl.triples) for wl, _, _ in suite]
        assert all(10_000 <= n <= 100_000 for n in sizes), sizes
        shapes, checked, bad = Counter(), 0, []
        for wl, ds, queries in suite:
            triples = ds.triples()
            for qid, tag, q in queries:
                expect = nested_loop_eval(q, triples, ds.dictionary)
                for s in Strategy:
                    if not same_bag(_joins(ds, q, s)[0], expect):
                        bad.append((qid, s.value))
                shapes[tag] += 1
                checked += 1
        assert checked >= 40 and set(shapes) == set("CFLS")
        assert not bad, bad
        info["detail"] = f"{checked} queries on {len(sizes)} datasets ({min(sizes)}..{max(sizes)} triples), all three agree"


def test_ac2_star_collapse(suite, acceptance_log):
    with criterion(acceptance_log, "AC2 star collapse") as info:
        wl = generate(["star"], GeneratorConfig(subjects=3000, predicates=32, seed=7, queries=5, star_size=2))
        extra = []
        for n in (3, 5, 6):
            wl_n = generate(["star"], GeneratorConfig(subjects=3000, predicates=32, seed=7, queries=5, star_size=n))
            extra.append(wl_n)
        ds = Dataset.build(wl.triples, wl.dictionary, 8)
        stars = [parse_query(t) for w in [wl, *extra] for _, _, t in w.queries]
        stars += [q for _, _, queries in suite for _, tag, q in queries if tag == "S"]
        for q in stars[:20]:
            n = len(q.patterns)
            assert n >= 2
            assert _joins(ds, q, Strategy.MIXED)[1] == 0
            assert _joins(ds, q, Strategy.VP_ONLY)[1] == n - 1
        for _, sds, queries in suite:
            for _, tag, q in queries:
                if tag == "S":
                    assert _joins(sds, q, Strategy.MIXED)[1] == 0
                    assert _joins(sds, q, Strategy.VP_ONLY)[1] == len(q.patterns) - 1
        info["detail"] = f"{len(stars)} star queries, sizes {sorted({len(q.patterns) for q in stars})}"


def test_ac3_join_dominance(suite, acceptance_log):
    with criterion(acceptance_log, "AC3 join-count dominance") as info:
        n = strict = 0
        for _, ds, queries in suite:
            for qid, _, q in queries:
                jm, jv = _joins(ds, q, Strategy.MIXED)[1], _joins(ds, q, Strategy.VP_ONLY)[1]
                assert jm <= jv, qid
                if any(len(g.patterns) >= 2 for g in group_patterns(q, Strategy.MIXED)):
                    assert jm < jv, qid
                    strict += 1
                n += 1
        info["detail"] = f"{n} queries, {strict} with a multi-pattern subject group (all strictly fewer joins)"


_LINE = re.compile(r"^(\s*)(PT|VP) score=(\S+) \{(.*)\}")


def _explained_nodes(text):
    """(score, has constant object) per node in evaluation order, read back from explain output."""
    nodes = []
    for line in text.splitlines():
        m = _LINE.match(line)
        assert m, line
        objs = [p.split(" ", 2)[2] for p in m.group(4).split(" . ")]
        nodes.append((float(m.group(3)), any(not o.startswith("?") for o in objs)))
    return nodes[::-1]  # root is printed first


def _clique_query(rng, ds, preds, groups, literal_rate=0.5):
    """Subject groups ?s0..?sk that pairwise share a variable; some carry a constant object."""
    vp = ds.vp
    rev = ds.dictionary.reverse
    pats = []
    for i in range(groups):
        si = Variable(f"s{i}")
        for j in range(i + 1, groups):
            pats.append(TriplePattern(si, rev[rng.choice(preds)], Variable(f"s{j}")))
        if rng.random() < literal_rate or i == groups - 1:
            p = rng.choice(preds)
            pats.append(TriplePattern(si, rev[p], rev[int(rng.choice(vp[p].objects))]))
        if rng.random() < 0.5:
            pats.append(TriplePattern(si, rev[rng.choice(preds)], Variable(f"o{i}")))
    return BgpQuery.of(pats)


def test_ac4_literal_first(suite, acceptance_log):
    with criterion(acceptance_log, "AC4 literal-first ordering") as info:
        _, ds, _ = suite[2]
        preds = [p for p in ds.vp if ds.stats.tuples(p) >= 2]
        rng = random.Random(44)
        cases = []
        for _ in range(150):  # VP_ONLY: all patterns on one subject variable form a clique
            n = rng.randint(2, 6)
            pats = []
            for i in range(n):
                p = rng.choice(preds)
                obj = ds.dictionary.reverse[int(rng.choice(ds.vp[p].objects))] if rng.random() < 0.4 else Variable(f"o{i}")
                pats.append(TriplePattern(Variable("x"), ds.dictionary.reverse[p], obj))
            cases.append((BgpQuery.of(pats), Strategy.VP_ONLY))
        for _ in range(150):
            cases.append((_clique_query(rng, ds, preds, rng.randint(2, 4)), Strategy.MIXED))
        unsat = checked_root = 0
        for q, s in cases:
            nodes = _explained_nodes(explain(plan(q, ds.dictionary, ds.stats, s)))
            flags = [c for _, c in nodes]
            assert flags == sorted(flags, reverse=True), (q, nodes)
            top = max(sc for sc, _ in nodes)
            if any(c and sc == top for sc, c in nodes) and not all(flags) and not any(
                    not c and sc == top for sc, c in nodes):
                unsat += 1  # the only maximal nodes carry a literal, so they cannot also be last
                continue
            assert nodes[-1][0] == top, (q, nodes)
            checked_root += 1
        info["detail"] = f"{len(cases)} fully-connected plans, literal-first and maximal root in all {checked_root}"
        if unsat:
            # A literal node that outscores every literal-free node cannot be both first and the root.
            msg = (f"literal-first held in all {len(cases)} plans; root maximal in {checked_root}; "
                   f"{unsat} plan(s) admit no order satisfying both")
            acceptance_log["AC4 literal-first ordering"] = (False, msg)
            pytest.xfail(msg)


@pytest.mark.slow
def test_ac5_mixed_not_slower_on_stars(acceptance_log):
    with criterion(acceptance_log, "AC5 MIXED <= 1.10 x VP on stars (1M triples)") as info:
        wl = generate(["star"], GeneratorConfig(subjects=150_000, predicates=16, seed=2026, queries=12, star_size=4))
        assert len(wl.triples) >= 1_000_000
        ds = Dataset.build(wl.triples, wl.dictionary, 8)
        queries = [(qid, parse_query(text)) for qid, _, text in wl.queries]
        assert all(len(q.patterns) >= 3 for _, q in queries)
        report = run_bench(ds, queries, ("mixed", "vp"), repeat=6)
        means = report.shape_means()
        mixed, vp = means[("S", "mixed")], means[("S", "vp")]
        assert all(r.run_index == 5 for r in report.records)
        assert mixed <= 1.10 * vp, f"mixed {mixed:.2f} ms vs vp {vp:.2f} ms"
        info["detail"] = (f"{len(wl.triples)} triples, {len(queries)} stars: mixed {mixed:.2f} ms, "
                          f"vp {vp:.2f} ms (ratio {mixed / vp:.2f})")


def test_ac6_rle_beats_dense(acceptance_log):
    with criterion(acceptance_log, "AC6 RLE smaller than dense at >=50% NULL") as info:
        rng = random.Random(66)
        columns = []
        for i in range(200):
            density = 0.5 + 0.5 * rng.random()
            columns.append(random_cells(rng, rng.randint(1, 3000), density))
        wl = generate(["star"], GeneratorConfig(subjects=4000, predicates=32, seed=6, queries=1))
        ds = Dataset.build(wl.triples, wl.dictionary, 4)
        real = 0
        for part in ds.pt.partitions:
            for col in part.columns.values():
                if len(col) and 1 - col.present.mean() >= 0.5:
                    columns.append(col.cells())
                    real += 1
        worst = 0.0
        for cells in columns:
            nulls = sum(c is None for c in cells)
            if nulls * 2 < len(cells):
                continue
            rle = rle_to_bytes(rle_encode(cells))
            assert rle == column_to_bytes(ListColumn.from_cells(cells))
            dense = dense_to_bytes(cells)
            assert len(rle) < len(dense), (len(cells), nulls)
            worst = max(worst, len(rle) / len(dense))
        assert len(columns) - real >= 100 and real > 0
        info["detail"] = f"{len(columns)} columns ({real} from a real Property Table), worst ratio {worst:.3f}"


def test_ac7_reconstruction_and_persistence(tmp_path, acceptance_log):
    with criterion(acceptance_log, "AC7 reconstruction and persistence") as info:
        rng = random.Random(77)
        triples, d = random_triples(rng, 3000, subjects=200, predicates=8, objects=200)
        ds = Dataset.build(triples, d, 8)
        expect = Counter(map(tuple, triples))
        assert Counter(map(tuple, ds.pt.flatten())) == expect
        vp_union = Counter((s, p, o) for p, t in ds.vp.items() for s, o in t.rows)
        assert vp_union == expect
        save_dataset(ds, tmp_path)
        back = load_dataset(tmp_path)
        for _ in range(20):
            q = random_query(rng, triples, d, rng.randint(1, 4))
            for s in Strategy:
                assert sorted_rows(execute(plan(q, d, ds.stats, s), ds)) == \
                    sorted_rows(execute(plan(q, back.dictionary, back.stats, s), back))
        info["detail"] = f"{len(triples)} triples rebuilt from both layouts, 20 queries identical after reload"


def test_ac8_statistics(acceptance_log):
    with criterion(acceptance_log, "AC8 statistics correctness") as info:
        rng = random.Random(88)
        for _ in range(100):
            triples, _ = random_triples(rng, rng.randint(0, 400), subjects=rng.randint(1, 40),
                                        predicates=rng.randint(1, 8))
            st = compute_stats(triples)
            assert {p: (s.tuples, s.distinct_subjects) for p, s in st.per_predicate.items()} == naive_stats(triples)
            assert all(1 <= s.distinct_subjects <= s.tuples for s in st.per_predicate.values())
            assert st.total_triples == len(triples)
        info["detail"] = "100 random datasets match naive counting"


def test_ac9_partition_independence(acceptance_log):
    with criterion(acceptance_log, "AC9 partition independence") as info:
        wl = generate(["star", "linear", "snowflake", "complex"],
                      GeneratorConfig(subjects=2000, predicates=16, seed=9, queries=3))
        queries = [parse_query(t) for _, _, t in wl.queries][:10]
        results = {}
        for k in (1, 2, 8, 17):
            ds = Dataset.build(wl.triples, wl.dictionary, k)
            results[k] = [sorted_rows(execute(plan(q, ds.dictionary, ds.stats, Strategy.MIXED), ds)) for q in queries]
        assert all(results[k] == results[1] for k in results)
        info["detail"] = f"k in (1, 2, 8, 17), {len(queries)} queries, {sum(map(len, results[1]))} rows each"


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
