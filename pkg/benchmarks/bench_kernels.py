"""Compiled kernels vs the numpy fallback.

Times signature-row construction and the domain scan with both
implementations on one preferential-attachment graph, checks they agree,
then runs a full query in a subprocess per backend (the backend is chosen
at import time from MGM_DISABLE_NUMBA).

    python benchmarks/bench_kernels.py --edges 100000
"""

import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np

from mgm import kernels
from mgm.domains import build_query_bit_matrix, node_filter_mask, query_degree_table
from mgm.index import build_target_index
from mgm.query import QueryEdge, QueryGraph, QueryNode
from mgm.synth import GenConfig, generate_ba


def best_of(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def path_query():
    nodes = [QueryNode(i, frozenset(["L0"])) for i in range(3)]
    edges = [QueryEdge(0, 0, 1, "T0"), QueryEdge(1, 1, 2, "T1")]
    return QueryGraph(nodes, edges)


END_TO_END = """
import json, sys, time
from mgm import kernels
from mgm.engine import EngineOptions, run_query
from mgm.index import build_target_index
from mgm.synth import GenConfig, generate_ba
g = generate_ba(GenConfig(int(sys.argv[1]) // 4, int(sys.argv[1]), 2, 2, seed=7))
idx = build_target_index(g)
text = "MATCH (a:L0)-[:T0]->(b:L1)-[:T1]->(c:L0) RETURN count()"
run_query(idx, text)  # warm-up (compilation or cache load)
t0 = time.perf_counter()
rep = run_query(idx, text)
print(json.dumps({"backend": kernels.backend_name(), "count": rep.count,
                  "seconds": time.perf_counter() - t0}))
"""


def end_to_end(n_edges, disable):
    env = dict(os.environ)
    if disable:
        env["MGM_DISABLE_NUMBA"] = "1"
    else:
        env.pop("MGM_DISABLE_NUMBA", None)
    out = subprocess.run([sys.executable, "-c", END_TO_END, str(n_edges)], env=env,
                         capture_output=True, text=True, check=True)
    return json.loads(out.stdout.strip().splitlines()[-1])


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--edges", type=int, default=100_000)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--skip-end-to-end", action="store_true")
    args = ap.parse_args()

    g = generate_ba(GenConfig(args.edges // 4, args.edges, 4, 4, seed=7))
    idx = build_target_index(g)
    args_rows = (g.src, g.dst, g.etype_idx, idx.label_first_words, idx.label_second_words,
                 g.n_nodes, idx.h, idx.p)
    if kernels.USE_NUMBA:
        kernels.build_pair_rows_nb(*args_rows)  # compile outside the timing

    t_np, rows_np = best_of(lambda: kernels.build_pair_rows_np(*args_rows), args.repeat)
    t_nb, rows_nb = best_of(lambda: kernels.build_pair_rows_nb(*args_rows), args.repeat)
    same_rows = all(np.array_equal(a, b) for a, b in zip(rows_np, rows_nb))

    q = path_query()
    qrows = build_query_bit_matrix(q, idx)[(0, 1)]
    qtypes = np.asarray(sorted({g.type_index[t] for t in q.types()}), dtype=np.int64)
    mask = node_filter_mask(q, 0, idx)
    scan_args = (idx.row_first, idx.row_second, idx.bits, qrows.forward, qrows.reverse, True, False,
                 idx.type_degree, query_degree_table(q, 0, idx), query_degree_table(q, 1, idx),
                 qtypes, mask, mask)
    if kernels.USE_NUMBA:
        kernels.filter_pairs_nb(*scan_args)
    s_np, dom_np = best_of(lambda: kernels.filter_pairs_np(*scan_args), args.repeat)
    s_nb, dom_nb = best_of(lambda: kernels.filter_pairs_nb(*scan_args), args.repeat)
    same_dom = all(np.array_equal(a, b) for a, b in zip(dom_np, dom_nb))

    print(f"graph: {g.n_nodes} nodes, {g.n_edges} edges, {idx.n_rows} signature rows")
    print(f"{'kernel':<22}{'numpy s':>12}{'numba s':>12}{'speedup':>10}  agree")
    print(f"{'build_pair_rows':<22}{t_np:>12.5f}{t_nb:>12.5f}{t_np / t_nb:>10.1f}  {same_rows}")
    print(f"{'filter_pairs':<22}{s_np:>12.5f}{s_nb:>12.5f}{s_np / s_nb:>10.1f}  {same_dom}")

    if not args.skip_end_to_end:
        fast = end_to_end(args.edges, disable=False)
        slow = end_to_end(args.edges, disable=True)
        print(f"{'query (end to end)':<22}{slow['seconds']:>12.5f}{fast['seconds']:>12.5f}"
              f"{slow['seconds'] / fast['seconds']:>10.1f}  {slow['count'] == fast['count']}")


if __name__ == "__main__":
    main()
