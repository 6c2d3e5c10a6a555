"""``mgm`` command line.

Exit codes: 0 success, 1 internal error, 2 usage error, 3 query error
(syntax, semantics or evaluation), 4 graph or snapshot load error,
5 timeout, 6 configuration error.
"""

from __future__ import annotations

import csv
import json
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import click

from .cypher.evaluate import QueryEvaluationError
from .cypher.parser import CypherError, parse
from .engine import PHASES, EngineOptions, run_query
from .graph import GraphLoadError, load_graph, write_graph
from .index import SnapshotError, TargetIndex, build_target_index
from .ordering import ORDERING_KINDS, OrderingConfigError
from .symmetry import SymmetryConfigError
from .synth import ExtractionError, GenConfig, QueryExtractConfig, SynthConfigError, extract_query, generate_ba

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_QUERY = 3
EXIT_LOAD = 4
EXIT_TIMEOUT = 5
EXIT_CONFIG = 6

# bench variant name -> engine switches
VARIANTS = {
    "full": {},
    "nobm": {"bitmatrix": False},
    "random": {"ordering": "random"},
    "domain": {"ordering": "domain"},
    "edgelabel": {"ordering": "edgelabel"},
    "degree": {"ordering": "degree"},
    "nobm-random": {"bitmatrix": False, "ordering": "random"},
}


def _fail(tag: str, exc: BaseException, code: int):
    click.echo(f"error[{tag}]: {exc}", err=True)
    sys.exit(code)


def _guard(fn):
    """Translate known exceptions into tagged messages and exit codes."""
    try:
        return fn()
    except CypherError as exc:
        _fail("parse", exc, EXIT_QUERY)
    except QueryEvaluationError as exc:
        _fail("where", exc, EXIT_QUERY)
    except (GraphLoadError, SnapshotError, FileNotFoundError) as exc:
        _fail("load", exc, EXIT_LOAD)
    except (SymmetryConfigError, OrderingConfigError, SynthConfigError, ExtractionError) as exc:
        _fail("config", exc, EXIT_CONFIG)


def _load_target(nodes, edges, index):
    t0 = time.perf_counter()
    if index:
        idx = TargetIndex.load(index)
        read = time.perf_counter() - t0
        return idx, read, 0.0
    if not (nodes and edges):
        raise click.UsageError("give --nodes and --edges, or --index")
    g = load_graph(nodes, edges)
    t1 = time.perf_counter()
    idx = build_target_index(g)
    return idx, t1 - t0, time.perf_counter() - t1


def _query_text(query, query_file) -> str:
    if query_file:
        return Path(query_file).read_text(encoding="utf-8")
    if query is None:
        raise click.UsageError("give --query or --query-file")
    return query


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (list, dict)):
        return json.dumps(v, sort_keys=True)
    return str(v)


target_options = [
    click.option("--nodes", type=click.Path(dir_okay=False), help="nodes CSV"),
    click.option("--edges", type=click.Path(dir_okay=False), help="edges CSV"),
    click.option("--index", "index", type=click.Path(dir_okay=False), help="index snapshot from `mgm load`"),
]


def with_target(fn):
    for opt in reversed(target_options):
        fn = opt(fn)
    return fn


@click.group()
@click.version_option(package_name="artifact")
def main():
    """Sub-multigraph matching with a Cypher subset."""


@main.command()
@click.option("--nodes", required=True, type=click.Path(dir_okay=False))
@click.option("--edges", required=True, type=click.Path(dir_okay=False))
@click.option("--out", required=True, type=click.Path(dir_okay=False), help="snapshot file to write")
def load(nodes, edges, out):
    """Load a graph, build its index and write a snapshot."""

    def go():
        idx, read, build = _load_target(nodes, edges, None)
        idx.save(out)
        g = idx.graph
        click.echo(f"{g.n_nodes} nodes, {g.n_edges} edges, {idx.n_rows} signature rows "
                   f"(read {read:.3f}s, index {build:.3f}s)")

    _guard(go)


@main.command()
@with_target
@click.option("--query", "-q", help="query text")
@click.option("--query-file", type=click.Path(exists=True, dir_okay=False))
@click.option("--timeout", type=float, default=60.0, show_default=True, help="seconds; 0 disables")
@click.option("--limit", type=click.IntRange(min=1), help="stop after k occurrences")
@click.option("--ordering", type=click.Choice(ORDERING_KINDS), default="full", show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--no-symmetry", is_flag=True, help="do not emit symmetry-breaking conditions")
@click.option("--no-bitmatrix", is_flag=True, help="skip signature containment when building domains")
@click.option("--paper-strict-domains", is_flag=True, help="use node properties only at candidate time")
@click.option("--count-only", is_flag=True, help="print the occurrence count even for projections")
@click.option("--distinct-occurrences", is_flag=True, help="merge OR branches by edge image, not by mapping")
@click.option("--format", "fmt", type=click.Choice(["text", "json"]), default="text", show_default=True)
@click.option("--stats", is_flag=True, help="print phase timings to stderr")
def query(nodes, edges, index, query, query_file, timeout, limit, ordering, seed, no_symmetry,
          no_bitmatrix, paper_strict_domains, count_only, distinct_occurrences, fmt, stats):
    """Run a query and print the count or the projected rows."""

    def go():
        text = _query_text(query, query_file)
        parse(text)  # report syntax errors before the (possibly slow) load
        idx, read, build = _load_target(nodes, edges, index)
        opts = EngineOptions(
            ordering=ordering, seed=seed, symmetry=not no_symmetry, bitmatrix=not no_bitmatrix,
            paper_strict_domains=paper_strict_domains, limit=limit,
            timeout=timeout if timeout and timeout > 0 else None,
            distinct_occurrences=distinct_occurrences,
        )
        return run_query(idx, text, opts, count_only, read, build)

    report = _guard(go)
    if fmt == "json":
        click.echo(json.dumps(report.to_json(), default=str))
    elif report.rows is not None and not count_only:
        click.echo("\t".join(report.rows.headers))
        for row in report.rows.rows:
            click.echo("\t".join(_cell(v) for v in row))
    else:
        click.echo(report.count)
    if stats:
        for p in PHASES:
            click.echo(f"{p}\t{report.phases[p]:.6f}", err=True)
    if report.status == "timeout":
        click.echo("status: timeout (partial result)", err=True)
        sys.exit(EXIT_TIMEOUT)


@main.command()
@click.option("--nodes", required=True, type=click.Path(dir_okay=False))
@click.option("--edges", required=True, type=click.Path(dir_okay=False))
@click.option("--query", "-q")
@click.option("--query-file", type=click.Path(exists=True, dir_okay=False))
def oracle(nodes, edges, query, query_file):
    """Brute-force mapping and occurrence counts (small graphs only)."""
    from .oracle import OracleCapError, oracle_query

    def go():
        ast = parse(_query_text(query, query_file))
        g = load_graph(nodes, edges)
        try:
            return oracle_query(ast, g)
        except OracleCapError as exc:
            _fail("config", exc, EXIT_CONFIG)

    res = _guard(go)
    click.echo(f"mappings\t{res.n_mappings}")
    click.echo(f"occurrences\t{res.n_classes}")


@main.command()
@click.option("--n-nodes", type=click.IntRange(min=1), required=True)
@click.option("--n-edges", type=click.IntRange(min=0), required=True)
@click.option("--labels", "n_labels", type=click.IntRange(min=1), default=1, show_default=True)
@click.option("--types", "n_types", type=click.IntRange(min=1), default=1, show_default=True)
@click.option("--node-dist", type=click.Choice(["uniform", "powerlaw"]), default="uniform")
@click.option("--edge-dist", type=click.Choice(["uniform", "powerlaw"]), default="uniform")
@click.option("--exponent", type=float, default=-1.2, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--nodes-out", required=True, type=click.Path(dir_okay=False))
@click.option("--edges-out", required=True, type=click.Path(dir_okay=False))
def generate(n_nodes, n_edges, n_labels, n_types, node_dist, edge_dist, exponent, seed, nodes_out, edges_out):
    """Generate a preferential-attachment target graph as CSV."""

    def go():
        cfg = GenConfig(n_nodes, n_edges, n_labels, n_types, node_dist, edge_dist, exponent, seed)
        g = generate_ba(cfg)
        write_graph(g, nodes_out, edges_out)
        click.echo(f"{g.n_nodes} nodes, {g.n_edges} edges")

    _guard(go)


@main.command("extract-query")
@click.option("--nodes", required=True, type=click.Path(dir_okay=False))
@click.option("--edges", required=True, type=click.Path(dir_okay=False))
@click.option("--k", "k_nodes", type=click.IntRange(min=2, max=12), default=4, show_default=True)
@click.option("--density", type=float, default=0.5, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--count", "n_queries", type=click.IntRange(min=1), default=1, show_default=True,
              help="number of queries (seeds seed, seed+1, ...)")
@click.option("--out-dir", type=click.Path(file_okay=False), help="write one .cypher file per query")
def extract_query_cmd(nodes, edges, k_nodes, density, seed, n_queries, out_dir):
    """Extract queries from a target by random walks; prints Cypher text."""

    def go():
        g = load_graph(nodes, edges)
        texts = []
        for i in range(n_queries):
            q = extract_query(g, QueryExtractConfig(k_nodes, density, seed + i))
            texts.append(q.to_cypher())
        return texts

    texts = _guard(go)
    if out_dir:
        Path(out_dir).mkdir(parents=True, exist_ok=True)
        for i, text in enumerate(texts):
            Path(out_dir, f"q{seed + i:04d}.cypher").write_text(text + "\n", encoding="utf-8")
    for text in texts:
        click.echo(text)


BENCH_FIELDS = ["query", "variant", "status", "count", *PHASES, "total", "consistency", "error"]


def bench_rows(idx, queries: list, variants: list, timeout: float, jobs: int = 1,
               read: float = 0.0, build: float = 0.0) -> list[dict]:
    """Detail rows for every (query, variant) plus one aggregate row per variant.

    Runs that time out are charged the full timeout in the aggregate mean.
    """
    for v in variants:
        if v not in VARIANTS:
            raise OrderingConfigError(f"unknown variant {v!r}; choose from {', '.join(VARIANTS)}")

    def one(task):
        name, text, variant = task
        row = {"query": name, "variant": variant, "error": ""}
        opts = EngineOptions(timeout=timeout, **VARIANTS[variant])
        try:
            rep = run_query(idx, text, opts, True, read, build)
            row.update(status=rep.status, count=rep.count, total=round(rep.total, 6))
            row.update({p: round(rep.phases[p], 6) for p in PHASES})
        except Exception as exc:  # recorded, the run continues
            row.update(status="error", count="", total="", error=f"{type(exc).__name__}: {exc}")
            row.update({p: "" for p in PHASES})
        return row

    tasks = [(name, text, v) for name, text in queries for v in variants]
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(one, tasks))
    else:
        rows = [one(t) for t in tasks]

    by_query: dict[str, list] = {}
    for r in rows:
        by_query.setdefault(r["query"], []).append(r)
    for rs in by_query.values():
        counts = {r["count"] for r in rs if r["status"] == "completed"}
        verdict = "ok" if len(counts) <= 1 else "mismatch"
        for r in rs:
            r["consistency"] = verdict
    for v in variants:
        rs = [r for r in rows if r["variant"] == v]
        done = [r for r in rs if r["status"] == "completed"]
        capped = [r["total"] if r["status"] == "completed" else timeout for r in rs]
        agg = {k: "" for k in BENCH_FIELDS}
        agg.update(query="*", variant=v, status=f"completed={len(done)}/{len(rs)}",
                   total=round(sum(capped) / len(capped), 6) if capped else "",
                   consistency="ok" if all(r["consistency"] == "ok" for r in rs) else "mismatch")
        for p in PHASES:
            vals = [r[p] for r in done]
            agg[p] = round(sum(vals) / len(vals), 6) if vals else ""
        rows.append(agg)
    return rows


@main.command()
@with_target
@click.option("--corpus", required=True, type=click.Path(exists=True, file_okay=False),
              help="directory of .cypher files")
@click.option("--variants", default="full,nobm,random,domain,edgelabel,degree", show_default=True,
              help=f"comma-separated subset of {','.join(VARIANTS)}")
@click.option("--timeout", type=float, default=60.0, show_default=True)
@click.option("--jobs", type=click.IntRange(min=1), default=1, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), help="CSV path (default stdout)")
def bench(nodes, edges, index, corpus, variants, timeout, jobs, out):
    """Run every corpus query under every variant and write a CSV report."""

    def go():
        idx, read, build = _load_target(nodes, edges, index)
        files = sorted(Path(corpus).glob("*.cypher"))
        queries = [(f.stem, f.read_text(encoding="utf-8")) for f in files]
        return bench_rows(idx, queries, [v.strip() for v in variants.split(",") if v.strip()],
                          timeout, jobs, read, build)

    rows = _guard(go)
    fh = open(out, "w", newline="", encoding="utf-8") if out else sys.stdout
    try:
        w = csv.DictWriter(fh, fieldnames=BENCH_FIELDS)
        w.writeheader()
        w.writerows(rows)
    finally:
        if out:
            fh.close()


if __name__ == "__main__":  # pragma: no cover
    main()
