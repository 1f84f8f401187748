"""Numba kernels for Vietoris-Rips persistence over Z/2.

H0 comes from a dense-graph minimum spanning tree (Prim). H1 pairs come from
reducing the filtration boundary matrix through its anti-transpose: columns
are edges in reverse filtration order, rows their triangle cofacets, with the
first-cofacet shortcut claiming zero-persistence pivots without any column
arithmetic. The resulting pairing is identical to the direct column reduction
of the boundary matrix (see tests against the naive reduction oracle).

Triangles are identified by packed int64 keys (max_edge_rank, vertex triple),
whose ascending order is exactly the filtration order, so no triangle array
is ever materialized.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def prim_mst_weights(D):
    """Edge weights of the MST of a dense symmetric distance matrix."""
    n = D.shape[0]
    in_tree = np.zeros(n, np.bool_)
    best = np.full(n, np.inf)
    weights = np.empty(n - 1, np.float64)
    in_tree[0] = True
    for j in range(1, n):
        best[j] = D[0, j]
    for it in range(n - 1):
        w = np.inf
        v = -1
        for j in range(n):
            if not in_tree[j] and best[j] < w:
                w = best[j]
                v = j
        in_tree[v] = True
        weights[it] = w
        for j in range(n):
            if not in_tree[j] and D[v, j] < best[j]:
                best[j] = D[v, j]
    return weights


@njit(cache=True)
def count_edges(D, r):
    n = D.shape[0]
    cnt = 0
    for i in range(n):
        for j in range(i + 1, n):
            if D[i, j] <= r:
                cnt += 1
    return cnt


@njit(cache=True)
def fill_edges(D, r, ei, ej, ew):
    n = D.shape[0]
    c = 0
    for i in range(n):
        for j in range(i + 1, n):
            if D[i, j] <= r:
                ei[c] = i
                ej[c] = j
                ew[c] = D[i, j]
                c += 1


@njit(cache=True)
def _find(parent, x):
    root = x
    while parent[root] != root:
        root = parent[root]
    while parent[x] != root:
        nxt = parent[x]
        parent[x] = root
        x = nxt
    return root


@njit(cache=True)
def mark_tree_edges(ei, ej, n):
    """Flag edges (in filtration order) that merge two components."""
    parent = np.arange(n)
    is_tree = np.zeros(ei.shape[0], np.bool_)
    for e in range(ei.shape[0]):
        ra = _find(parent, ei[e])
        rb = _find(parent, ej[e])
        if ra != rb:
            parent[ra] = rb
            is_tree[e] = True
    return is_tree


@njit(cache=True, inline="always")
def _triangle_key(e_rank, r1, r2, v, i, j, n, n3):
    m = e_rank
    if r1 > m:
        m = r1
    if r2 > m:
        m = r2
    a, b = (v, i) if v < i else (i, v)
    if b > j:
        c = b
        b = j
        if a > b:
            a, b = b, a
    else:
        c = j
    return np.int64(m) * n3 + np.int64(a) * n * n + np.int64(b) * n + c


@njit(cache=True)
def _cofacet_column(e, ei, ej, erank, n, n3, out):
    """All cofacet keys of edge rank e, ascending. Returns the count."""
    i = ei[e]
    j = ej[e]
    c = 0
    for v in range(n):
        if v == i or v == j:
            continue
        r1 = erank[v, i]
        r2 = erank[v, j]
        if r1 < 0 or r2 < 0:
            continue
        out[c] = _triangle_key(e, r1, r2, v, i, j, n, n3)
        c += 1
    out[:c].sort()
    return c


@njit(cache=True)
def h1_pairs(ei, ej, ew, erank, is_tree, n):
    """H1 persistence pairs of the truncated Rips filtration.

    Returns (births, deaths, essential_births); zero-persistence pairs are
    dropped, essential classes are cycles unkilled within the threshold.
    """
    ne = ei.shape[0]
    n3 = np.int64(n) * n * n
    births = np.empty(ne, np.float64)
    deaths = np.empty(ne, np.float64)
    npairs = 0
    ess = np.empty(ne, np.float64)
    ness = 0
    # pivot -> claim slot; slot holds the claiming edge and (optionally) its
    # stored reduced column in the pool (start < 0 -> recompute raw coboundary)
    claimed = {np.int64(-1): np.int64(-1)}
    claim_edge = np.empty(ne, np.int64)
    claim_start = np.empty(ne, np.int64)
    claim_len = np.empty(ne, np.int64)
    nclaims = 0
    pool = np.empty(1 << 16, np.int64)
    pool_used = 0
    cur = np.empty(4 * n, np.int64)
    tmp = np.empty(4 * n, np.int64)
    cof = np.empty(n, np.int64)
    for e in range(ne - 1, -1, -1):
        if is_tree[e]:
            continue  # cleared: this edge is a death in dimension 0
        i = ei[e]
        j = ej[e]
        # shortcut: the first cofacet sharing the filtration value of e is the
        # column pivot; claiming it lazily skips the whole reduction
        pivot = np.int64(-1)
        for v in range(n):
            if v == i or v == j:
                continue
            r1 = erank[v, i]
            r2 = erank[v, j]
            if r1 < 0 or r2 < 0:
                continue
            if r1 < e and r2 < e:
                pivot = _triangle_key(e, r1, r2, v, i, j, n, n3)
                break
        if pivot >= 0 and pivot not in claimed:
            slot = nclaims
            claim_edge[slot] = e
            claim_start[slot] = -1
            claim_len[slot] = 0
            nclaims += 1
            claimed[pivot] = np.int64(slot)
            continue  # birth == death
        # full reduction of this column
        clen = _cofacet_column(e, ei, ej, erank, n, n3, cof)
        if clen > cur.shape[0]:
            cur = np.empty(2 * clen, np.int64)
        cur[:clen] = cof[:clen]
        while True:
            if clen == 0:
                ess[ness] = ew[e]
                ness += 1
                break
            p = cur[0]
            if p not in claimed:
                slot = nclaims
                claim_edge[slot] = e
                while pool_used + clen > pool.shape[0]:
                    grown = np.empty(2 * pool.shape[0], np.int64)
                    grown[:pool_used] = pool[:pool_used]
                    pool = grown
                claim_start[slot] = pool_used
                claim_len[slot] = clen
                pool[pool_used : pool_used + clen] = cur[:clen]
                pool_used += clen
                nclaims += 1
                claimed[p] = np.int64(slot)
                mrank = p // n3
                if ew[mrank] > ew[e]:
                    births[npairs] = ew[e]
                    deaths[npairs] = ew[mrank]
                    npairs += 1
                break
            slot = claimed[p]
            st = claim_start[slot]
            if st < 0:
                olen = _cofacet_column(claim_edge[slot], ei, ej, erank, n, n3, cof)
                other = cof
            else:
                olen = claim_len[slot]
                other = pool[st : st + olen]
            if clen + olen > tmp.shape[0]:
                tmp = np.empty(2 * (clen + olen), np.int64)
            ia = 0
            ib = 0
            oc = 0
            while ia < clen and ib < olen:
                a = cur[ia]
                b = other[ib]
                if a < b:
                    tmp[oc] = a
                    oc += 1
                    ia += 1
                elif b < a:
                    tmp[oc] = b
                    oc += 1
                    ib += 1
                else:
                    ia += 1
                    ib += 1
            while ia < clen:
                tmp[oc] = cur[ia]
                oc += 1
                ia += 1
            while ib < olen:
                tmp[oc] = other[ib]
                oc += 1
                ib += 1
            if oc > cur.shape[0]:
                cur = np.empty(2 * oc, np.int64)
            cur[:oc] = tmp[:oc]
            clen = oc
    return births[:npairs], deaths[:npairs], ess[:ness]
