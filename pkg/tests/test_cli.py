import csv
import io
import json

import pytest
from click.testing import CliRunner

import helpers
from mgm.cli import bench_rows, main
from mgm.graph import write_graph
from mgm.index import build_target_index
from mgm.synth import GenConfig, generate_ba


@pytest.fixture
def files(tmp_path):
    write_graph(helpers.toy_target(), tmp_path / "n.csv", tmp_path / "e.csv")
    return str(tmp_path / "n.csv"), str(tmp_path / "e.csv")


def run(*args):
    return CliRunner().invoke(main, list(args))


def test_count_only(files):
    n, e = files
    res = run("query", "--nodes", n, "--edges", e, "-q", "MATCH (a)-[:red]->(b) RETURN count()")
    assert res.exit_code == 0
    assert res.output.strip() == "3"


def test_json_report(files):
    n, e = files
    res = run("query", "--nodes", n, "--edges", e, "-q", "MATCH (a)-[:red]->(b) RETURN count()",
              "--format", "json")
    rep = json.loads(res.output)
    assert rep["status"] == "completed" and rep["count"] == 3
    assert set(rep["phases"]) == {"read", "index", "breaking_conditions", "domains", "ordering", "matching"}
    assert rep["schema_version"] == 1


def test_rows_text_and_json(files):
    n, e = files
    q = "MATCH (a:green)-[r:red]->(b) RETURN a.name, r.year LIMIT 2"
    res = run("query", "--nodes", n, "--edges", e, "-q", q)
    assert res.exit_code == 0
    assert "a.name" in res.output
    rep = json.loads(run("query", "--nodes", n, "--edges", e, "-q", q, "--format", "json").output)
    assert rep["columns"] == ["a.name", "r.year"] and len(rep["rows"]) == 2
    res = run("query", "--nodes", n, "--edges", e, "-q", q, "--count-only")
    assert res.output.strip() == "2"


def test_flags_do_not_change_results(files):
    n, e = files
    q = "MATCH (a)-[:blue]->(b), (a)-[:blue]->(c) RETURN count()"
    base = run("query", "--nodes", n, "--edges", e, "-q", q).output
    for extra in (["--ordering", "random", "--seed", "3"], ["--no-bitmatrix"], ["--paper-strict-domains"],
                  ["--ordering", "degree"]):
        assert run("query", "--nodes", n, "--edges", e, "-q", q, *extra).output == base
    no_sym = run("query", "--nodes", n, "--edges", e, "-q", q, "--no-symmetry").output
    assert int(no_sym) == 2 * int(base)


def test_index_snapshot(files, tmp_path):
    n, e = files
    snap = str(tmp_path / "toy.idx")
    assert run("load", "--nodes", n, "--edges", e, "--out", snap).exit_code == 0
    res = run("query", "--index", snap, "-q", "MATCH (a)-[:red]->(b) RETURN count()")
    assert res.exit_code == 0 and res.output.strip() == "3"


def test_query_file(files, tmp_path):
    n, e = files
    qf = tmp_path / "q.cypher"
    qf.write_text("MATCH (a)-[:red]->(b) RETURN count()")
    assert run("query", "--nodes", n, "--edges", e, "--query-file", str(qf)).output.strip() == "3"


@pytest.mark.parametrize("query,code", [
    ("MATCH (a)-[r]->(b", 3),
    ("MATCH (a)-[r]->(b) RETURN z.name", 3),
    ("MATCH (a) RETURN a", 3),
])
def test_query_errors(files, query, code):
    n, e = files
    res = run("query", "--nodes", n, "--edges", e, "-q", query)
    assert res.exit_code == code
    assert "error[" in res.output


def test_load_error(tmp_path):
    bad = tmp_path / "n.csv"
    bad.write_text("nope\n")
    res = run("query", "--nodes", str(bad), "--edges", str(bad), "-q", "MATCH (a)-[]->(b) RETURN count()")
    assert res.exit_code == 4


def test_usage_errors(files):
    n, e = files
    assert run("query", "--nodes", n, "--edges", e).exit_code == 2
    assert run("query", "--nodes", n, "--edges", e, "-q", "x", "--ordering", "sideways").exit_code == 2


def test_timeout_status(tmp_path):
    g = generate_ba(GenConfig(2000, 20000, 1, 1, seed=5))
    write_graph(g, tmp_path / "n.csv", tmp_path / "e.csv")
    res = run("query", "--nodes", str(tmp_path / "n.csv"), "--edges", str(tmp_path / "e.csv"),
              "-q", "MATCH (a)-[]-(b)-[]-(c)-[]-(d)-[]-(e) RETURN count()",
              "--timeout", "0.001", "--format", "json")
    assert res.exit_code == 5
    assert json.loads(res.output.strip().splitlines()[0])["status"] == "timeout"


def test_oracle_command(files):
    n, e = files
    res = run("oracle", "--nodes", n, "--edges", e, "-q", helpers.NODE_SYMMETRIC_QUERY)
    assert res.exit_code == 0
    assert "2" in res.output


def test_generate_and_extract(tmp_path):
    n, e = str(tmp_path / "n.csv"), str(tmp_path / "e.csv")
    res = run("generate", "--n-nodes", "50", "--n-edges", "150", "--labels", "2", "--types", "2",
              "--seed", "1", "--nodes-out", n, "--edges-out", e)
    assert res.exit_code == 0
    out = tmp_path / "queries"
    res = run("extract-query", "--nodes", n, "--edges", e, "--k", "3", "--count", "3", "--out-dir", str(out))
    assert res.exit_code == 0
    files = sorted(out.glob("*.cypher"))
    assert len(files) == 3
    for f in files:
        res = run("query", "--nodes", n, "--edges", e, "--query-file", str(f))
        assert res.exit_code == 0 and int(res.output) >= 1


def test_generate_bad_config(tmp_path):
    res = run("generate", "--n-nodes", "5", "--n-edges", "2", "--nodes-out", str(tmp_path / "a"),
              "--edges-out", str(tmp_path / "b"))
    assert res.exit_code == 6


def test_bench_rows(toy):
    _, idx = toy
    queries = [("q1", helpers.NODE_SYMMETRIC_QUERY), ("q2", helpers.TOY_QUERY)]
    rows = bench_rows(idx, queries, ["full", "random"], timeout=10)
    detail = [r for r in rows if r["query"] != "*"]
    agg = [r for r in rows if r["query"] == "*"]
    assert len(detail) == 4 and len(agg) == 2
    assert all(r["consistency"] == "ok" for r in rows)
    assert agg[0]["status"] == "completed=2/2"


def test_bench_timeout_capped_mean():
    g = generate_ba(GenConfig(2000, 20000, 1, 1, seed=5))
    idx = build_target_index(g)
    heavy = "MATCH (a)-[]-(b)-[]-(c)-[]-(d)-[]-(e)-[]-(f) RETURN count()"
    light = "MATCH (a)-[]->(b) RETURN count()"
    rows = bench_rows(idx, [("heavy", heavy), ("light", light)], ["full"], timeout=0.3)
    by = {r["query"]: r for r in rows}
    assert by["heavy"]["status"] == "timeout" and by["light"]["status"] == "completed"
    assert by["*"]["status"] == "completed=1/2"
    assert by["*"]["total"] == pytest.approx((0.3 + by["light"]["total"]) / 2, abs=1e-5)


def test_bench_command(files, tmp_path):
    n, e = files
    corpus = tmp_path / "corpus"
    corpus.mkdir()
    (corpus / "a.cypher").write_text(helpers.NODE_SYMMETRIC_QUERY)
    (corpus / "b.cypher").write_text(helpers.EDGE_SYMMETRIC_QUERY)
    res = run("bench", "--nodes", n, "--edges", e, "--corpus", str(corpus), "--variants", "full,nobm")
    assert res.exit_code == 0
    rows = list(csv.DictReader(io.StringIO(res.output)))
    assert len(rows) == 6
    assert {r["consistency"] for r in rows} == {"ok"}
