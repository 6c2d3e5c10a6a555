"""Hot numeric kernels.

Every kernel exists in a numba-compiled form.  Setting ``MGM_DISABLE_NUMBA=1``
before import switches the module to its fallback path: vectorised numpy for
the bit-matrix construction and the domain scan, and the interpreted body of
the same function for the search kernel (it is pointer-chasing and has no
vectorised form).  Both implementations of the vectorisable kernels are
always importable under their ``_nb``/``_np`` names so they can be compared.
"""

from __future__ import annotations

import os

import numpy as np

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False

_DISABLED = os.environ.get("MGM_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes", "on"}
USE_NUMBA = HAVE_NUMBA and not _DISABLED


def njit(fn):
    if USE_NUMBA:
        return numba.njit(cache=True, nogil=True)(fn)
    fn.py_func = fn
    return fn


def backend_name() -> str:
    return "numba" if USE_NUMBA else "numpy"


# ---------------------------------------------------------------------------
# bit signature rows


def signature_width(n_labels: int, n_types: int) -> tuple[int, int]:
    """Bit width ``2h + 2p`` and the number of 64-bit words holding it."""
    width = 2 * n_labels + 2 * n_types
    return width, max(1, (width + 63) // 64)


def set_bit(words: np.ndarray, bit: int) -> None:
    words[..., bit >> 6] |= np.uint64(1) << np.uint64(bit & 63)


def _pair_keys(src, dst, n):
    lo = np.minimum(src, dst)
    hi = np.maximum(src, dst)
    return lo, hi, lo * np.int64(n) + hi


def build_pair_rows_np(src, dst, etype, first_words, second_words, n, h, p):
    """One signature row per connected unordered pair (``first <= second``).

    ``first_words``/``second_words`` hold each node's label bits already
    placed in the L_first / L_second field.  Returns ``(first, second, bits)``
    with rows sorted by ``(first, second)``.
    """
    n_words = first_words.shape[1]
    if len(src) == 0:
        return (
            np.zeros(0, np.int64),
            np.zeros(0, np.int64),
            np.zeros((0, n_words), np.uint64),
        )
    lo, hi, keys = _pair_keys(src, dst, n)
    ukeys, inv = np.unique(keys, return_inverse=True)
    first = ukeys // n
    second = ukeys % n
    bits = first_words[first] | second_words[second]
    loop = src == dst
    forward = (src == lo) & ~loop
    # T_out: an edge first -> second; T_in: second -> first; loops set both
    out_bit = h + p + etype
    in_bit = h + etype
    for sel, bit in ((forward | loop, out_bit), (~forward | loop, in_bit)):
        rows = inv[sel]
        b = bit[sel]
        np.bitwise_or.at(
            bits,
            (rows, b >> 6),
            np.left_shift(np.uint64(1), (b & 63).astype(np.uint64)),
        )
    return first.astype(np.int64), second.astype(np.int64), bits


@njit
def _counting_order(key, order, n):
    """Stable reorder of ``order`` by ``key[order]``, keys in [0, n)."""
    count = np.zeros(n + 1, np.int64)
    for i in order:
        count[key[i] + 1] += 1
    for v in range(n):
        count[v + 1] += count[v]
    out = np.empty(order.shape[0], np.int64)
    for i in order:
        out[count[key[i]]] = i
        count[key[i]] += 1
    return out


@njit
def build_pair_rows_nb(src, dst, etype, first_words, second_words, n, h, p):
    m = src.shape[0]
    n_words = first_words.shape[1]
    keys = np.empty(m, np.int64)
    lo = np.empty(m, np.int64)
    hi = np.empty(m, np.int64)
    for i in range(m):
        a, b = src[i], dst[i]
        if a > b:
            a, b = b, a
        lo[i] = a
        hi[i] = b
        keys[i] = a * n + b
    # two stable counting-sort passes (hi, then lo) keep this linear
    order = _counting_order(hi, np.arange(m), n)
    order = _counting_order(lo, order, n)
    n_rows = 0
    for j in range(m):
        if j == 0 or keys[order[j]] != keys[order[j - 1]]:
            n_rows += 1
    first = np.empty(n_rows, np.int64)
    second = np.empty(n_rows, np.int64)
    bits = np.zeros((n_rows, n_words), np.uint64)
    r = -1
    one = np.uint64(1)
    for j in range(m):
        i = order[j]
        if j == 0 or keys[i] != keys[order[j - 1]]:
            r += 1
            a = keys[i] // n
            b = keys[i] % n
            first[r] = a
            second[r] = b
            for w in range(n_words):
                bits[r, w] = first_words[a, w] | second_words[b, w]
        s = src[i]
        d = dst[i]
        t = etype[i]
        if s == d or s < d:
            bit = h + p + t
            bits[r, bit >> 6] |= one << np.uint64(bit & 63)
        if s == d or s > d:
            bit = h + t
            bits[r, bit >> 6] |= one << np.uint64(bit & 63)
    return first, second, bits


# ---------------------------------------------------------------------------
# signature containment and domain filtering


@njit
def contains_nb(container, contained):
    for w in range(contained.shape[0]):
        if container[w] & contained[w] != contained[w]:
            return False
    return True


def scan_rows_np(bits, query_row):
    """Mask of target rows containing every set bit of ``query_row``."""
    return np.all((bits & query_row) == query_row, axis=1)


@njit
def scan_rows_nb(bits, query_row):
    out = np.empty(bits.shape[0], np.bool_)
    for r in range(bits.shape[0]):
        out[r] = contains_nb(bits[r], query_row)
    return out


@njit
def _degree_ok_nb(tdeg, t, qdeg, qtypes):
    for k in range(qtypes.shape[0]):
        ty = qtypes[k]
        if qdeg[ty, 0] > tdeg[t, ty, 0] or qdeg[ty, 1] > tdeg[t, ty, 1]:
            return False
    return True


@njit
def filter_pairs_nb(
    first, second, bits, row_fwd, row_rev, use_bits, loop_pair,
    tdeg, qdeg_i, qdeg_j, qtypes, ok_i, ok_j,
):
    """Oriented domain entries ``(t_for_qi, t_for_qj)`` of one query pair.

    ``row_fwd`` is the query row of ``(qi, qj)``, ``row_rev`` the row of
    ``(qj, qi)``.  A target row ``(ta, tb)`` yields ``(ta, tb)`` when it
    contains ``row_fwd`` and ``(tb, ta)`` when it contains ``row_rev``, each
    subject to the type-dependent degree conditions and the node masks.
    """
    R = first.shape[0]
    out_a = np.empty(2 * R, np.int64)
    out_b = np.empty(2 * R, np.int64)
    k = 0
    for r in range(R):
        ta = first[r]
        tb = second[r]
        if loop_pair != (ta == tb):
            continue
        if not use_bits or contains_nb(bits[r], row_fwd):
            if ok_i[ta] and ok_j[tb]:
                if _degree_ok_nb(tdeg, ta, qdeg_i, qtypes) and _degree_ok_nb(tdeg, tb, qdeg_j, qtypes):
                    out_a[k] = ta
                    out_b[k] = tb
                    k += 1
        if loop_pair:
            continue
        if not use_bits or contains_nb(bits[r], row_rev):
            if ok_i[tb] and ok_j[ta]:
                if _degree_ok_nb(tdeg, tb, qdeg_i, qtypes) and _degree_ok_nb(tdeg, ta, qdeg_j, qtypes):
                    out_a[k] = tb
                    out_b[k] = ta
                    k += 1
    return out_a[:k], out_b[:k]


def filter_pairs_np(
    first, second, bits, row_fwd, row_rev, use_bits, loop_pair,
    tdeg, qdeg_i, qdeg_j, qtypes, ok_i, ok_j,
):
    keep = (first == second) if loop_pair else (first != second)
    if qtypes.shape[0]:
        need_i = qdeg_i[qtypes]
        need_j = qdeg_j[qtypes]
        deg = tdeg[:, qtypes, :]
        node_i = np.all(deg >= need_i, axis=(1, 2))
        node_j = np.all(deg >= need_j, axis=(1, 2))
    else:
        node_i = np.ones(tdeg.shape[0], bool)
        node_j = node_i
    node_i = node_i & ok_i
    node_j = node_j & ok_j

    fwd = keep & node_i[first] & node_j[second]
    if use_bits:
        fwd &= scan_rows_np(bits, row_fwd)
    if loop_pair:
        return first[fwd], second[fwd]
    rev = keep & node_i[second] & node_j[first]
    if use_bits:
        rev &= scan_rows_np(bits, row_rev)
    # interleave in row order, forward orientation first, like the loop version
    idx = np.concatenate([np.nonzero(fwd)[0] * 2, np.nonzero(rev)[0] * 2 + 1])
    a = np.concatenate([first[fwd], second[rev]])
    b = np.concatenate([second[fwd], first[rev]])
    order = np.argsort(idx, kind="stable")
    return a[order], b[order]


# ---------------------------------------------------------------------------
# backtracking search over flat arrays

CASE_FREE = 0  # neither endpoint bound
CASE_BOTH = 1
CASE_SRC = 2  # only the query edge's source bound
CASE_DST = 3


@njit
def _lower_bound(arr, lo, hi, value):
    while lo < hi:
        mid = (lo + hi) >> 1
        if arr[mid] < value:
            lo = mid + 1
        else:
            hi = mid
    return lo


@njit
def _node_conds_ok(q, t, f, node_conds):
    for c in range(node_conds.shape[0]):
        a = node_conds[c, 0]
        b = node_conds[c, 1]
        if a == q and f[b] >= 0 and not t < f[b]:
            return False
        if b == q and f[a] >= 0 and not f[a] < t:
            return False
    return True


@njit
def _edge_conds_ok(e, te, g, edge_conds):
    for c in range(edge_conds.shape[0]):
        a = edge_conds[c, 0]
        b = edge_conds[c, 1]
        if a == e and g[b] >= 0 and not te < g[b]:
            return False
        if b == e and g[a] >= 0 and not g[a] < te:
            return False
    return True


@njit
def _push_between(e, tu, tv, undirected, out_ptr, out_dst_sorted, out_eid, edge_ok,
                  g, edge_conds, buf, pos):
    """Append target edges joining ``tu`` to ``tv`` that may host query edge ``e``."""
    for rep in range(2):
        if rep == 0:
            s, d = tu, tv
        else:
            if not undirected or tu == tv:
                break
            s, d = tv, tu
        lo = out_ptr[s]
        hi = out_ptr[s + 1]
        j = _lower_bound(out_dst_sorted, lo, hi, d)
        while j < hi and out_dst_sorted[j] == d:
            te = out_eid[j]
            if edge_ok[e, te] and _edge_conds_ok(e, te, g, edge_conds):
                buf[pos, 0] = te
                buf[pos, 1] = tu
                buf[pos, 2] = tv
                pos += 1
            j += 1
    return pos


@njit
def fill_candidates(
    e, qe_src, qe_dst, qe_undirected, qe_pair, qe_flip,
    dom_off, dom_a, dom_b, dom2_a, dom2_b,
    out_ptr, out_dst_sorted, out_eid,
    node_ok, edge_ok, node_conds, edge_conds,
    f, g, used_t, buf, pos,
):
    """Candidate generation for query edge ``e`` given the partial mapping.

    Writes ``(target edge, image of src, image of dst)`` triples into
    ``buf`` from ``pos`` on and returns the new end position.
    """
    u = qe_src[e]
    v = qe_dst[e]
    und = qe_undirected[e]
    fu = f[u]
    fv = f[v]
    p = qe_pair[e]
    flip = qe_flip[e]
    lo = dom_off[p]
    hi = dom_off[p + 1]
    if fu >= 0 and fv >= 0:
        return _push_between(e, fu, fv, und, out_ptr, out_dst_sorted, out_eid, edge_ok,
                             g, edge_conds, buf, pos)
    if fu < 0 and fv < 0:
        for k in range(lo, hi):
            if flip:
                tu = dom_b[k]
                tv = dom_a[k]
            else:
                tu = dom_a[k]
                tv = dom_b[k]
            if used_t[tu] or used_t[tv]:
                continue
            if not node_ok[u, tu] or not node_ok[v, tv]:
                continue
            if not _node_conds_ok(u, tu, f, node_conds):
                continue
            f[u] = tu
            ok = _node_conds_ok(v, tv, f, node_conds)
            f[u] = -1
            if not ok:
                continue
            pos = _push_between(e, tu, tv, und, out_ptr, out_dst_sorted, out_eid, edge_ok,
                                g, edge_conds, buf, pos)
        return pos
    if fu >= 0:
        bound, free = fu, v
        # entries whose element for u equals f(u); u is the pair's first unless flipped
        use_first = not flip
    else:
        bound, free = fv, u
        use_first = flip
    if use_first:
        k = _lower_bound(dom_a, lo, hi, bound)
        while k < hi and dom_a[k] == bound:
            t = dom_b[k]
            k += 1
            if used_t[t] or not node_ok[free, t] or not _node_conds_ok(free, t, f, node_conds):
                continue
            if fu >= 0:
                pos = _push_between(e, fu, t, und, out_ptr, out_dst_sorted, out_eid, edge_ok,
                                    g, edge_conds, buf, pos)
            else:
                pos = _push_between(e, t, fv, und, out_ptr, out_dst_sorted, out_eid, edge_ok,
                                    g, edge_conds, buf, pos)
    else:
        k = _lower_bound(dom2_b, lo, hi, bound)
        while k < hi and dom2_b[k] == bound:
            t = dom2_a[k]
            k += 1
            if used_t[t] or not node_ok[free, t] or not _node_conds_ok(free, t, f, node_conds):
                continue
            if fu >= 0:
                pos = _push_between(e, fu, t, und, out_ptr, out_dst_sorted, out_eid, edge_ok,
                                    g, edge_conds, buf, pos)
            else:
                pos = _push_between(e, t, fv, und, out_ptr, out_dst_sorted, out_eid, edge_ok,
                                    g, edge_conds, buf, pos)
    return pos


def new_search_state(n_query_nodes, n_query_edges, n_target_nodes, n_target_edges, buf_rows):
    """Arrays carried between calls of :func:`search_subtrees`.

    ``ctl`` holds the next root index and the current depth (0 when no root
    is bound); the rest is the binding stack.
    """
    return (
        np.zeros(2, np.int64),
        np.full(n_query_nodes, -1, np.int64),
        np.full(n_query_edges, -1, np.int64),
        np.zeros(n_target_nodes, np.bool_),
        np.zeros(n_target_edges, np.bool_),
        np.zeros(n_query_edges, np.bool_),
        np.zeros(n_query_edges, np.bool_),
        np.zeros(n_query_edges, np.int64),
        np.zeros(n_query_edges, np.int64),
        np.empty((max(buf_rows, 1), 3), np.int64),
    )


@njit
def _unbind(e, fresh_u, fresh_v, qe_src, qe_dst, f, g, used_t, used_e):
    used_e[g[e]] = False
    g[e] = -1
    if fresh_u:
        used_t[f[qe_src[e]]] = False
        f[qe_src[e]] = -1
    if fresh_v:
        used_t[f[qe_dst[e]]] = False
        f[qe_dst[e]] = -1


@njit
def search_subtrees(
    root_hi, roots, order, depth_start, limit, step_budget, out_f, out_g,
    ctl, f, g, used_t, used_e, fresh_u, fresh_v, end, cursor, buf,
    qe_src, qe_dst, qe_undirected, qe_pair, qe_flip,
    dom_off, dom_a, dom_b, dom2_a, dom2_b,
    out_ptr, out_dst_sorted, out_eid,
    node_ok, edge_ok, node_conds, edge_conds,
):
    """Resumable depth-first search below the root candidates ``roots[ctl[0]:root_hi]``.

    ``order`` is the edge processing order, ``depth_start[d]`` the first
    buffer slot reserved for depth ``d`` (depth 0 is the root list and is
    not stored in ``buf``).  The call returns the number of occurrences
    found, and suspends (keeping its place in the state arrays) once
    ``step_budget`` candidates have been tried, once ``out_f`` is full, or
    after ``limit`` occurrences; negative budget or limit means none.  The
    search is finished when ``ctl[1] == 0`` and ``ctl[0] >= root_hi``.
    """
    k_e = order.shape[0]
    n_out = out_f.shape[0]
    e0 = order[0]
    count = 0
    steps = 0
    r = ctl[0]
    depth = ctl[1]
    while True:
        if limit >= 0 and count >= limit:
            break
        if step_budget >= 0 and steps >= step_budget:
            break
        if n_out > 0 and count >= n_out:
            break
        steps += 1
        if depth == 0:
            if r >= root_hi:
                break
            te = roots[r, 0]
            f[qe_src[e0]] = roots[r, 1]
            used_t[roots[r, 1]] = True
            fresh_v[0] = f[qe_dst[e0]] < 0
            if fresh_v[0]:
                f[qe_dst[e0]] = roots[r, 2]
                used_t[roots[r, 2]] = True
            g[e0] = te
            used_e[te] = True
            r += 1
            if k_e == 1:
                if count < n_out:
                    out_f[count, :] = f
                    out_g[count, :] = g
                count += 1
                _unbind(e0, True, fresh_v[0], qe_src, qe_dst, f, g, used_t, used_e)
                continue
            depth = 1
            end[1] = fill_candidates(
                order[1], qe_src, qe_dst, qe_undirected, qe_pair, qe_flip,
                dom_off, dom_a, dom_b, dom2_a, dom2_b, out_ptr, out_dst_sorted, out_eid,
                node_ok, edge_ok, node_conds, edge_conds, f, g, used_t, buf, depth_start[1],
            )
            cursor[1] = depth_start[1]
            continue
        if cursor[depth] >= end[depth]:
            depth -= 1
            if depth == 0:
                _unbind(e0, True, fresh_v[0], qe_src, qe_dst, f, g, used_t, used_e)
            else:
                _unbind(order[depth], fresh_u[depth], fresh_v[depth], qe_src, qe_dst, f, g, used_t, used_e)
                cursor[depth] += 1
            continue
        c = cursor[depth]
        te = buf[c, 0]
        if used_e[te]:
            cursor[depth] += 1
            continue
        e = order[depth]
        u = qe_src[e]
        v = qe_dst[e]
        fresh_u[depth] = f[u] < 0
        if fresh_u[depth]:
            f[u] = buf[c, 1]
            used_t[buf[c, 1]] = True
        fresh_v[depth] = f[v] < 0
        if fresh_v[depth]:
            f[v] = buf[c, 2]
            used_t[buf[c, 2]] = True
        g[e] = te
        used_e[te] = True
        if depth == k_e - 1:
            if count < n_out:
                out_f[count, :] = f
                out_g[count, :] = g
            count += 1
            _unbind(e, fresh_u[depth], fresh_v[depth], qe_src, qe_dst, f, g, used_t, used_e)
            cursor[depth] += 1
            if limit >= 0 and count >= limit:
                # unwind the whole stack, root included
                while depth > 1:
                    depth -= 1
                    _unbind(order[depth], fresh_u[depth], fresh_v[depth], qe_src, qe_dst,
                            f, g, used_t, used_e)
                _unbind(e0, True, fresh_v[0], qe_src, qe_dst, f, g, used_t, used_e)
                depth = 0
        else:
            depth += 1
            end[depth] = fill_candidates(
                order[depth], qe_src, qe_dst, qe_undirected, qe_pair, qe_flip,
                dom_off, dom_a, dom_b, dom2_a, dom2_b, out_ptr, out_dst_sorted,
                out_eid, node_ok, edge_ok, node_conds, edge_conds, f, g, used_t,
                buf, depth_start[depth],
            )
            cursor[depth] = depth_start[depth]
    ctl[0] = r
    ctl[1] = depth
    return count


@njit
def root_candidates(
    e, qe_src, qe_dst, qe_undirected, qe_pair, qe_flip,
    dom_off, dom_a, dom_b, dom2_a, dom2_b,
    out_ptr, out_dst_sorted, out_eid,
    node_ok, edge_ok, node_conds, edge_conds, capacity, n_target_nodes,
):
    f = np.full(node_ok.shape[0], -1, np.int64)
    g = np.full(edge_ok.shape[0], -1, np.int64)
    used_t = np.zeros(n_target_nodes, np.bool_)
    buf = np.empty((max(capacity, 1), 3), np.int64)
    n = fill_candidates(
        e, qe_src, qe_dst, qe_undirected, qe_pair, qe_flip,
        dom_off, dom_a, dom_b, dom2_a, dom2_b, out_ptr, out_dst_sorted, out_eid,
        node_ok, edge_ok, node_conds, edge_conds, f, g, used_t, buf, 0,
    )
    return buf[:n].copy()


if USE_NUMBA:
    build_pair_rows = build_pair_rows_nb
    scan_rows = scan_rows_nb
    filter_pairs = filter_pairs_nb
else:
    build_pair_rows = build_pair_rows_np
    scan_rows = scan_rows_np
    filter_pairs = filter_pairs_np
