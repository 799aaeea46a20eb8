"""Primal network simplex for uncapacitated bipartite transportation problems.

Nodes ``0..n-1`` are sources, ``n..n+m-1`` are sinks and node ``n+m`` is an
artificial root. Every node starts attached to the root through an artificial
arc (big-M cost), which gives a strongly feasible initial spanning tree.
Leaving-arc ties are broken as in LEMON's implementation so the tree stays
strongly feasible and degenerate pivots cannot cycle.

Artificial arcs occupy indices ``0..n+m-1``; real arcs follow and may be
appended while the tree is live, which is how column generation warm-starts.
"""

import numpy as np
from numba import njit

OPTIMAL = 0
UNBOUNDED = 1
MAX_ITER = 2


@njit(cache=True)
def _remove_child(first_child, next_sib, prev_sib, p, u):
    ps = prev_sib[u]
    ns = next_sib[u]
    if ps >= 0:
        next_sib[ps] = ns
    else:
        first_child[p] = ns
    if ns >= 0:
        prev_sib[ns] = ps
    next_sib[u] = -1
    prev_sib[u] = -1


@njit(cache=True)
def _add_child(first_child, next_sib, prev_sib, p, u):
    f = first_child[p]
    next_sib[u] = f
    prev_sib[u] = -1
    if f >= 0:
        prev_sib[f] = u
    first_child[p] = u


@njit(cache=True)
def _recompute_potentials(root, first_child, next_sib, pred, up, cost, pi, stack):
    pi[root] = 0.0
    stack[0] = root
    top = 1
    while top > 0:
        top -= 1
        p = stack[top]
        c = first_child[p]
        while c >= 0:
            if up[c]:
                pi[c] = pi[p] - cost[pred[c]]
            else:
                pi[c] = pi[p] + cost[pred[c]]
            stack[top] = c
            top += 1
            c = next_sib[c]


@njit(cache=True)
def _grow(a, size):
    out = np.empty(size, a.dtype)
    out[: a.shape[0]] = a
    return out


@njit(cache=True, nogil=True)
def _solve(supply, demand, tails, heads, costs, xa, xb, generate, eps_rel, gen_tol,
           per_row, max_pivots, max_cost):
    n = supply.shape[0]
    m = demand.shape[0]
    n_nodes = n + m + 1
    root = n + m
    n_art = n + m
    n0 = tails.shape[0]

    cap = n_art + n0 + max(n0 // 4, 1024)
    tail = np.empty(cap, np.int64)
    head = np.empty(cap, np.int64)
    cost = np.empty(cap, np.float64)
    flow = np.zeros(cap, np.float64)
    in_tree = np.zeros(cap, np.bool_)

    art_cost = (max_cost + 1.0) * n_nodes
    eps = eps_rel * (max_cost + 1.0)

    parent = np.full(n_nodes, -1, np.int64)
    pred = np.full(n_nodes, -1, np.int64)
    up = np.zeros(n_nodes, np.bool_)
    pi = np.zeros(n_nodes, np.float64)
    first_child = np.full(n_nodes, -1, np.int64)
    next_sib = np.full(n_nodes, -1, np.int64)
    prev_sib = np.full(n_nodes, -1, np.int64)
    mark = np.zeros(n_nodes, np.int64)
    stack = np.empty(n_nodes, np.int64)

    for u in range(n_art):
        e = u
        if u < n:
            tail[e] = u
            head[e] = root
            flow[e] = supply[u]
            up[u] = True
            pi[u] = -art_cost
        else:
            tail[e] = root
            head[e] = u
            flow[e] = demand[u - n]
            up[u] = False
            pi[u] = art_cost
        cost[e] = art_cost
        in_tree[e] = True
        parent[u] = root
        pred[u] = e
        _add_child(first_child, next_sib, prev_sib, root, u)

    for k in range(n0):
        e = n_art + k
        tail[e] = tails[k]
        head[e] = n + heads[k]
        cost[e] = costs[k]
    n_arcs = n_art + n0  # total arcs in use

    # per-row scratch for arc generation
    buf_j = np.empty(max(m, 1), np.int64)
    buf_v = np.empty(max(m, 1), np.float64)

    next_arc = n_art
    stamp = 0
    pivots = 0
    rounds = 0
    status = OPTIMAL

    while True:
        n_real = n_arcs - n_art
        block = max(int(np.sqrt(n_real)), 10)
        # block search pricing over real arcs
        e_in = -1
        best = 0.0
        cnt = block
        e = next_arc
        if e >= n_arcs:
            e = n_art
        for _ in range(n_real):
            if not in_tree[e]:
                rc = cost[e] + pi[tail[e]] - pi[head[e]]
                if rc < best:
                    best = rc
                    e_in = e
            e += 1
            if e == n_arcs:
                e = n_art
            cnt -= 1
            if cnt == 0:
                if best < -eps:
                    break
                cnt = block
        next_arc = e
        if e_in < 0 or best >= -eps:
            # potentials drift under incremental updates; confirm with fresh ones
            _recompute_potentials(root, first_child, next_sib, pred, up, cost, pi, stack)
            e_in = -1
            best = -eps
            for e2 in range(n_art, n_arcs):
                if not in_tree[e2]:
                    rc = cost[e2] + pi[tail[e2]] - pi[head[e2]]
                    if rc < best:
                        best = rc
                        e_in = e2
            if e_in < 0:
                if not generate:
                    break
                # price the complete bipartite graph and append violators
                rounds += 1
                added = 0
                for i in range(n):
                    k = 0
                    ax = xa[i, 0]
                    ay = xa[i, 1]
                    p = pi[i]
                    for j in range(m):
                        dx = ax - xb[j, 0]
                        dy = ay - xb[j, 1]
                        rc = dx * dx + dy * dy + p - pi[n + j]
                        if rc < -gen_tol:
                            buf_j[k] = j
                            buf_v[k] = rc
                            k += 1
                    if k == 0:
                        continue
                    take = k
                    if k > per_row:
                        order = np.argsort(buf_v[:k])
                        sel = buf_j[order[:per_row]]
                        take = per_row
                        buf_j[:take] = sel
                    for q in range(take):
                        j = buf_j[q]
                        if n_arcs == cap:
                            cap = 2 * cap
                            tail = _grow(tail, cap)
                            head = _grow(head, cap)
                            cost = _grow(cost, cap)
                            flow = _grow(flow, cap)
                            in_tree = _grow(in_tree, cap)
                            flow[n_arcs:] = 0.0
                            in_tree[n_arcs:] = False
                        dx = ax - xb[j, 0]
                        dy = ay - xb[j, 1]
                        tail[n_arcs] = i
                        head[n_arcs] = n + j
                        cost[n_arcs] = dx * dx + dy * dy
                        flow[n_arcs] = 0.0
                        in_tree[n_arcs] = False
                        n_arcs += 1
                        added += 1
                if added == 0:
                    break
                continue
        if pivots >= max_pivots:
            status = MAX_ITER
            break
        pivots += 1

        rc_in = cost[e_in] + pi[tail[e_in]] - pi[head[e_in]]
        first = tail[e_in]
        second = head[e_in]

        # join node: lowest common ancestor, alternating walk with stamps
        stamp += 1
        a = first
        b = second
        mark[a] = stamp
        if mark[b] == stamp:
            join = b
        else:
            mark[b] = stamp
            while True:
                if a != root:
                    a = parent[a]
                    if mark[a] == stamp:
                        join = a
                        break
                    mark[a] = stamp
                if b != root:
                    b = parent[b]
                    if mark[b] == stamp:
                        join = b
                        break
                    mark[b] = stamp

        # leaving arc
        delta = np.inf
        u_out = -1
        result = 0
        u = first
        while u != join:
            if up[u]:
                d = flow[pred[u]]
                if d < delta:
                    delta = d
                    u_out = u
                    result = 1
            u = parent[u]
        u = second
        while u != join:
            if not up[u]:
                d = flow[pred[u]]
                if d <= delta:
                    delta = d
                    u_out = u
                    result = 2
            u = parent[u]
        if result == 0:
            status = UNBOUNDED
            break

        if delta > 0.0:
            flow[e_in] += delta
            u = first
            while u != join:
                if up[u]:
                    flow[pred[u]] -= delta
                else:
                    flow[pred[u]] += delta
                u = parent[u]
            u = second
            while u != join:
                if up[u]:
                    flow[pred[u]] += delta
                else:
                    flow[pred[u]] -= delta
                u = parent[u]

        e_out = pred[u_out]
        flow[e_out] = 0.0
        in_tree[e_in] = True
        in_tree[e_out] = False

        if result == 1:
            u_in = first
            v_in = second
            shift = -rc_in
        else:
            u_in = second
            v_in = first
            shift = rc_in

        # reverse the parent chain u_in .. u_out and hang it below v_in
        w = u_in
        new_par = v_in
        new_arc = e_in
        new_up = tail[e_in] == u_in
        while True:
            old_par = parent[w]
            old_arc = pred[w]
            old_up = up[w]
            _remove_child(first_child, next_sib, prev_sib, old_par, w)
            parent[w] = new_par
            pred[w] = new_arc
            up[w] = new_up
            _add_child(first_child, next_sib, prev_sib, new_par, w)
            if w == u_out:
                break
            new_par = w
            new_arc = old_arc
            new_up = not old_up
            w = old_par

        # shift potentials of the moved subtree
        top = 1
        stack[0] = u_in
        while top > 0:
            top -= 1
            p = stack[top]
            pi[p] += shift
            c = first_child[p]
            while c >= 0:
                stack[top] = c
                top += 1
                c = next_sib[c]

    _recompute_potentials(root, first_child, next_sib, pred, up, cost, pi, stack)
    art_flow = 0.0
    for u in range(n_art):
        art_flow += flow[u]
    return (tail[n_art:n_arcs] - 0, head[n_art:n_arcs] - n, flow[n_art:n_arcs].copy(),
            cost[n_art:n_arcs].copy(), pi, status, art_flow, pivots, rounds)


def network_simplex(supply, demand, tails, heads, costs, eps_rel=1e-12, max_pivots=10**9):
    """Solve ``min sum c_e f_e`` subject to source supplies and sink demands.

    ``tails`` index sources, ``heads`` index sinks (both zero based). Returns
    ``(flow, potentials, status, artificial_flow, pivots)``; ``flow`` is
    aligned with the input arcs and ``potentials`` has length ``n + m + 1``
    with reduced cost ``c_e + pi[tail] - pi[n + head]`` nonnegative at
    optimality. A positive ``artificial_flow`` means the arcs cannot carry the
    demand.
    """
    costs = np.ascontiguousarray(costs, dtype=np.float64)
    max_cost = float(np.abs(costs).max()) if costs.size else 0.0
    dummy = np.zeros((1, 2))
    _, _, flow, _, pi, status, art, piv, _ = _solve(
        np.ascontiguousarray(supply, dtype=np.float64),
        np.ascontiguousarray(demand, dtype=np.float64),
        np.ascontiguousarray(tails, dtype=np.int64),
        np.ascontiguousarray(heads, dtype=np.int64),
        costs, dummy, dummy, False, eps_rel, 0.0, 1, max_pivots, max_cost)
    return flow, pi, status, art, piv


def transport_simplex(supply, demand, xa, xb, tails, heads, eps_rel, gen_tol, per_row,
                      max_pivots):
    """Squared-Euclidean transport with arc generation over the complete graph.

    Starts from the candidate arcs ``(tails, heads)``. Whenever the candidates
    are optimal, every source-sink pair is priced with the current potentials
    and up to ``per_row`` arcs per source with reduced cost below ``-gen_tol``
    are appended to the live problem. Returns ``(tails, heads, flow, cost,
    potentials, status, artificial_flow, pivots, rounds)`` over all arcs used.
    """
    xa = np.ascontiguousarray(xa, dtype=np.float64)
    xb = np.ascontiguousarray(xb, dtype=np.float64)
    lo = np.minimum(xa.min(axis=0), xb.min(axis=0))
    hi = np.maximum(xa.max(axis=0), xb.max(axis=0))
    max_cost = float(((hi - lo) ** 2).sum())
    tails = np.ascontiguousarray(tails, dtype=np.int64)
    heads = np.ascontiguousarray(heads, dtype=np.int64)
    d = xa[tails] - xb[heads]
    costs = np.einsum("ij,ij->i", d, d)
    return _solve(np.ascontiguousarray(supply, dtype=np.float64),
                  np.ascontiguousarray(demand, dtype=np.float64),
                  tails, heads, costs, xa, xb, True, eps_rel, gen_tol, per_row,
                  max_pivots, max_cost)
