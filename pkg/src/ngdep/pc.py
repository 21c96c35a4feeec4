"""The PC algorithm: skeleton search, collider orientation, Meek closure."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

from ngdep.graph import (
    GraphError,
    MixedGraph,
    SepsetMap,
    apply_meek_rules,
    has_directed_cycle,
    orient_v_structures,
    pair,
)


@dataclass(frozen=True)
class Dsep:
    """Output of PC: a chain graph and the separating sets behind it."""

    graph: MixedGraph
    sepsets: SepsetMap

    def __post_init__(self):
        if has_directed_cycle(self.graph):
            raise GraphError("a DSEP must be a chain graph")
        object.__setattr__(self, "sepsets", SepsetMap(self.sepsets))

    @property
    def p(self) -> int:
        return self.graph.p


def estimate_skeleton(ci, p: int, *, max_cond: int | None = None, stable: bool = False):
    """Level-wise search for the adjacency structure.

    Starting from the complete undirected graph, the edge ``i - j`` is
    removed as soon as some ``S`` of size ``l`` drawn from the current
    neighbours of ``i`` (then of ``j``) makes them conditionally
    independent.  Levels ``l = 0, 1, ...`` run until no vertex has enough
    neighbours.

    Parameters
    ----------
    ci : provider
        Object with ``independent(i, j, S) -> bool``.
    p : int
        Number of variables.
    max_cond : int, optional
        Largest conditioning set size.  Unbounded by default.
    stable : bool, default False
        Freeze the adjacency sets at the start of every level, which makes
        the result independent of the pair order.

    Returns
    -------
    skeleton : MixedGraph
        Fully undirected.
    sepsets : SepsetMap
        First separating set found for every removed pair.
    """
    if p < 1:
        raise ValueError("p must be positive")
    adj = {v: set(range(p)) - {v} for v in range(p)}
    sepsets = SepsetMap()
    level = 0
    while True:
        if max_cond is not None and level > max_cond:
            break
        if all(len(adj[v]) - 1 < level for v in range(p)):
            break
        frozen = {v: set(a) for v, a in adj.items()} if stable else adj
        for i, j in combinations(range(p), 2):
            if j not in adj[i]:
                continue
            for a, b in ((i, j), (j, i)):
                cand = sorted(frozen[a] - {b})
                if len(cand) < level:
                    continue
                found = None
                for S in combinations(cand, level):
                    if ci.independent(i, j, S):
                        found = S
                        break
                if found is not None:
                    adj[i].discard(j)
                    adj[j].discard(i)
                    sepsets[i, j] = found
                    break
        level += 1
    edges = {pair(i, j) for i in range(p) for j in adj[i]}
    return MixedGraph.from_edges(p, undirected=edges), sepsets


def run_pc(ci, p: int, *, max_cond: int | None = None, stable: bool = False, names=None) -> Dsep:
    """Skeleton search, then colliders, then the Meek rules.

    With an oracle provider on a faithful model the result is the
    completed pattern of the true DAG.  With noisy tests the result is
    always a chain graph: collider and Meek orientations that would close
    a directed cycle are left undirected.
    """
    skel, sepsets = estimate_skeleton(ci, p, max_cond=max_cond, stable=stable)
    if names is not None:
        skel = MixedGraph(skel.vertices, skel.directed, skel.undirected, tuple(names))
    # noisy separating sets can ask for orientations that close a cycle;
    # those are skipped (never needed with exact tests)
    g = orient_v_structures(skel, sepsets, acyclic=True)
    g = apply_meek_rules(g, acyclic=True)
    return Dsep(g, sepsets)
