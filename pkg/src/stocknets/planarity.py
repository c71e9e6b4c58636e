"""Left-right planarity test on adjacency lists.

Flat-array implementation of the LR (Brandes) planarity criterion, kept
lean because PMFG construction calls it once per candidate edge. Only the
boolean verdict is computed; no embedding is extracted.
"""

from __future__ import annotations

from typing import Sequence

__all__ = ["is_planar", "is_planar_adjacency"]

_NONE = -1


def is_planar(n: int, edges: Sequence[tuple[int, int]]) -> bool:
    """True iff the simple undirected graph on nodes 0..n-1 is planar."""
    adj: list[list[int]] = [[] for _ in range(n)]
    seen = set()
    m = 0
    for u, v in edges:
        if u == v:
            raise ValueError(f"self-loop on node {u}")
        key = (u, v) if u < v else (v, u)
        if key in seen:
            raise ValueError(f"duplicate edge {key}")
        seen.add(key)
        adj[u].append(v)
        adj[v].append(u)
        m += 1
    return is_planar_adjacency(n, adj, m)


def is_planar_adjacency(n: int, adj: Sequence[Sequence[int]], m: int) -> bool:
    """LR test over prebuilt adjacency lists (no validation, no copies).

    `adj` must describe a simple undirected graph: every edge {u, v} listed
    once in adj[u] and once in adj[v]. `m` is the edge count.
    """
    if n <= 4 or m < 9:
        # smallest non-planar graphs: K3,3 (9 edges), K5 (10 edges)
        return True
    if m > 3 * n - 6:
        return False

    # -- orientation phase: DFS assigning heights, lowpoints, nesting depth --
    # Each undirected edge becomes one directed id at first traversal:
    # src[k] -> dst[k]. The tree edge into w is parent_edge[w].
    height = [_NONE] * n
    parent_edge = [_NONE] * n
    src: list[int] = []
    dst: list[int] = []
    lowpt: list[int] = []
    lowpt2: list[int] = []
    nesting: list[int] = []
    out_edges: list[list[int]] = [[] for _ in range(n)]
    cursor = [0] * n
    oriented: set[tuple[int, int]] = set()

    def finish(eid: int, pe: int) -> None:
        # runs once per edge, after its subtree (tree edge) or immediately
        # (back edge); sets nesting depth and folds lowpoints into pe
        hv = height[src[eid]]
        d = 2 * lowpt[eid]
        if lowpt2[eid] < hv:
            d += 1  # chordal
        nesting[eid] = d
        if pe == _NONE:
            return
        if lowpt[eid] < lowpt[pe]:
            lowpt2[pe] = min(lowpt[pe], lowpt2[eid])
            lowpt[pe] = lowpt[eid]
        elif lowpt[eid] > lowpt[pe]:
            lowpt2[pe] = min(lowpt2[pe], lowpt[eid])
        else:
            lowpt2[pe] = min(lowpt2[pe], lowpt2[eid])

    roots = []
    for s in range(n):
        if height[s] != _NONE:
            continue
        roots.append(s)
        height[s] = 0
        stack = [s]
        while stack:
            v = stack[-1]
            hv = height[v]
            descended = False
            while cursor[v] < len(adj[v]):
                w = adj[v][cursor[v]]
                cursor[v] += 1
                if (w, v) in oriented:
                    continue
                oriented.add((v, w))
                eid = len(src)
                src.append(v)
                dst.append(w)
                out_edges[v].append(eid)
                nesting.append(0)
                if height[w] == _NONE:  # tree edge
                    lowpt.append(hv)
                    lowpt2.append(hv)
                    parent_edge[w] = eid
                    height[w] = hv + 1
                    stack.append(w)
                    descended = True
                    break
                # back edge
                lowpt.append(height[w])
                lowpt2.append(hv)
                finish(eid, parent_edge[v])
            if descended:
                continue
            stack.pop()
            pe = parent_edge[v]
            if pe != _NONE:
                finish(pe, parent_edge[src[pe]])

    # -- testing phase: DFS in nesting order with a conflict-pair stack --
    for v in range(n):
        out_edges[v].sort(key=nesting.__getitem__)

    # conflict pairs are flat 4-lists [Ll, Lh, Rl, Rh] of edge ids, -1 empty
    S: list[list[int]] = []
    n_edges = len(src)
    stack_bottom = [0] * n_edges
    lowpt_edge = list(range(n_edges))
    ref = [_NONE] * n_edges

    def conflicting(high: int, b: int) -> bool:
        return high != _NONE and lowpt[high] > lowpt[b]

    def add_constraints(ei: int, e: int) -> bool:
        P = [_NONE, _NONE, _NONE, _NONE]
        bottom = stack_bottom[ei]
        # merge return edges of ei into P's right interval
        while True:
            Q = S.pop()
            if Q[0] != _NONE:
                Q[0], Q[1], Q[2], Q[3] = Q[2], Q[3], Q[0], Q[1]
            if Q[0] != _NONE:
                return False
            if lowpt[Q[2]] > lowpt[e]:
                if P[2] == _NONE:
                    P[3] = Q[3]
                else:
                    ref[P[2]] = Q[3]
                P[2] = Q[2]
            else:
                ref[Q[2]] = lowpt_edge[e]
            if len(S) == bottom:
                break
        # merge conflicting return edges of earlier siblings into P's left
        while S and (conflicting(S[-1][1], ei) or conflicting(S[-1][3], ei)):
            Q = S.pop()
            if conflicting(Q[3], ei):
                Q[0], Q[1], Q[2], Q[3] = Q[2], Q[3], Q[0], Q[1]
            if conflicting(Q[3], ei):
                return False
            # interval below lowpt(ei) merges into the right side
            if P[2] != _NONE:
                ref[P[2]] = Q[3]
            if Q[2] != _NONE:
                P[2] = Q[2]
            if P[0] == _NONE:
                P[1] = Q[1]
            else:
                ref[P[0]] = Q[1]
            P[0] = Q[0]
        if P[0] != _NONE or P[2] != _NONE:
            S.append(P)
        return True

    def lowest(P: list[int]) -> int:
        if P[0] == _NONE:
            return lowpt[P[2]]
        if P[2] == _NONE:
            return lowpt[P[0]]
        return min(lowpt[P[0]], lowpt[P[2]])

    def remove_back_edges(e: int) -> None:
        u = src[e]
        hu = height[u]
        # drop conflict pairs whose return edges all end at u
        while S and lowest(S[-1]) == hu:
            S.pop()
        if S:
            P = S.pop()
            while P[1] != _NONE and dst[P[1]] == u:
                P[1] = ref[P[1]]
            if P[1] == _NONE and P[0] != _NONE:  # left just emptied
                ref[P[0]] = P[2]
                P[0] = _NONE
            while P[3] != _NONE and dst[P[3]] == u:
                P[3] = ref[P[3]]
            if P[3] == _NONE and P[2] != _NONE:
                ref[P[2]] = P[0]
                P[2] = _NONE
            S.append(P)

    for s in roots:
        # frames: [vertex, next edge index, edge awaiting post-processing]
        frames = [[s, 0, _NONE]]
        while frames:
            frame = frames[-1]
            v = frame[0]
            pending = frame[2]
            if pending != _NONE:
                frame[2] = _NONE
                if lowpt[pending] < height[v]:  # pending has a return edge
                    if pending == out_edges[v][0]:
                        lowpt_edge[parent_edge[v]] = lowpt_edge[pending]
                    elif not add_constraints(pending, parent_edge[v]):
                        return False
                frame[1] += 1
                continue
            i = frame[1]
            ev = out_edges[v]
            if i < len(ev):
                ei = ev[i]
                stack_bottom[ei] = len(S)
                w = dst[ei]
                if parent_edge[w] == ei:  # tree edge
                    frame[2] = ei
                    frames.append([w, 0, _NONE])
                else:  # back edge
                    lowpt_edge[ei] = ei
                    S.append([_NONE, _NONE, ei, ei])
                    frame[2] = ei
                continue
            frames.pop()
            e = parent_edge[v]
            if e != _NONE:
                remove_back_edges(e)
    return True
