"""Mixed graphs and the purely graph-theoretic procedures built on them.

A :class:`MixedGraph` holds a vertex set together with disjoint sets of
directed and undirected edges.  The same value type represents DAGs,
skeletons, d-separation equivalence patterns (DSEPs) and distribution
equivalence patterns (DEPs).  Everything here is a pure function of
immutable graph values.

Vertices are integer ids.  Edge sets are iterated in sorted order
wherever the result could depend on the order, so that every procedure is
deterministic.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from itertools import combinations
from typing import Iterable, Iterator, Mapping

Edge = tuple[int, int]


class GraphError(ValueError):
    """Raised for malformed graphs or inputs violating a precondition."""


def pair(i: int, j: int) -> Edge:
    """Return the unordered pair ``{i, j}`` as a sorted tuple."""
    return (i, j) if i < j else (j, i)


@dataclass(frozen=True)
class MixedGraph:
    """Graph with directed and undirected edges.

    Parameters
    ----------
    vertices : tuple of int
        Vertex ids, stored sorted.
    directed : frozenset of (int, int)
        ``(i, j)`` means ``i -> j``.
    undirected : frozenset of (int, int)
        Unordered pairs, normalised to ``(min, max)``.
    names : tuple of str, optional
        Display names aligned with ``vertices``.  Names take no part in
        equality.

    Notes
    -----
    Two graphs are equal when their vertex sets and edge sets coincide.
    Construction validates that edges connect known vertices, that there
    are no self loops and that every unordered pair carries at most one
    edge.
    """

    vertices: tuple[int, ...]
    directed: frozenset = frozenset()
    undirected: frozenset = frozenset()
    names: tuple[str, ...] | None = field(default=None, compare=False)

    def __post_init__(self):
        verts = tuple(sorted(set(int(v) for v in self.vertices)))
        if len(verts) != len(tuple(self.vertices)):
            raise GraphError("duplicate vertex ids")
        directed = frozenset((int(a), int(b)) for a, b in self.directed)
        undirected = frozenset(pair(int(a), int(b)) for a, b in self.undirected)
        object.__setattr__(self, "vertices", verts)
        object.__setattr__(self, "directed", directed)
        object.__setattr__(self, "undirected", undirected)
        if self.names is not None:
            names = tuple(str(s) for s in self.names)
            if len(names) != len(verts):
                raise GraphError("names must align with vertices")
            object.__setattr__(self, "names", names)

        vset = set(verts)
        seen: set[Edge] = set()
        for a, b in sorted(directed) + sorted(undirected):
            if a == b:
                raise GraphError(f"self loop on vertex {a}")
            if a not in vset or b not in vset:
                raise GraphError(f"edge ({a}, {b}) uses an unknown vertex")
            key = pair(a, b)
            if key in seen:
                raise GraphError(f"more than one edge between {a} and {b}")
            seen.add(key)

    # -- construction -------------------------------------------------
    @classmethod
    def from_edges(
        cls,
        p: int | Iterable[int],
        directed: Iterable[Edge] = (),
        undirected: Iterable[Edge] = (),
        names: Iterable[str] | None = None,
    ) -> "MixedGraph":
        """Build a graph on ``range(p)`` (or on the given vertex ids)."""
        verts = tuple(range(p)) if isinstance(p, int) else tuple(p)
        return cls(
            verts,
            frozenset(directed),
            frozenset(undirected),
            None if names is None else tuple(names),
        )

    @classmethod
    def complete_undirected(cls, p: int) -> "MixedGraph":
        return cls.from_edges(p, undirected=combinations(range(p), 2))

    def replace(self, directed=None, undirected=None) -> "MixedGraph":
        """Copy with new edge sets on the same vertices."""
        return MixedGraph(
            self.vertices,
            self.directed if directed is None else frozenset(directed),
            self.undirected if undirected is None else frozenset(undirected),
            self.names,
        )

    # -- queries ------------------------------------------------------
    @property
    def p(self) -> int:
        return len(self.vertices)

    @cached_property
    def _parents(self) -> dict[int, frozenset[int]]:
        par: dict[int, set[int]] = {v: set() for v in self.vertices}
        for a, b in self.directed:
            par[b].add(a)
        return {v: frozenset(s) for v, s in par.items()}

    @cached_property
    def _children(self) -> dict[int, frozenset[int]]:
        ch: dict[int, set[int]] = {v: set() for v in self.vertices}
        for a, b in self.directed:
            ch[a].add(b)
        return {v: frozenset(s) for v, s in ch.items()}

    @cached_property
    def _undirected_nbrs(self) -> dict[int, frozenset[int]]:
        nb: dict[int, set[int]] = {v: set() for v in self.vertices}
        for a, b in self.undirected:
            nb[a].add(b)
            nb[b].add(a)
        return {v: frozenset(s) for v, s in nb.items()}

    @cached_property
    def _adjacent(self) -> dict[int, frozenset[int]]:
        return {
            v: self._parents[v] | self._children[v] | self._undirected_nbrs[v]
            for v in self.vertices
        }

    def parents(self, v: int) -> frozenset[int]:
        return self._parents[v]

    def children(self, v: int) -> frozenset[int]:
        return self._children[v]

    def undirected_neighbors(self, v: int) -> frozenset[int]:
        return self._undirected_nbrs[v]

    def neighbors(self, v: int) -> frozenset[int]:
        """All vertices joined to ``v`` by an edge of either kind."""
        return self._adjacent[v]

    def adjacent(self, i: int, j: int) -> bool:
        return j in self._adjacent[i]

    def skeleton_edges(self) -> frozenset[Edge]:
        """Unordered pairs joined by any edge."""
        return self.undirected | frozenset(pair(a, b) for a, b in self.directed)

    def skeleton(self) -> "MixedGraph":
        """The same adjacencies with every edge undirected."""
        return self.replace(directed=(), undirected=self.skeleton_edges())

    def is_dag(self) -> bool:
        return not self.undirected and not has_directed_cycle(self)

    def name(self, v: int) -> str:
        if self.names is None:
            return f"x{v + 1}"
        return self.names[self.vertices.index(v)]

    def vertex_names(self) -> tuple[str, ...]:
        return tuple(self.name(v) for v in self.vertices)

    def __repr__(self) -> str:
        d = ", ".join(f"{a}->{b}" for a, b in sorted(self.directed))
        u = ", ".join(f"{a}-{b}" for a, b in sorted(self.undirected))
        return f"MixedGraph(vertices={list(self.vertices)}, directed=[{d}], undirected=[{u}])"


class SepsetMap(dict):
    """Separating sets keyed by unordered vertex pairs.

    Keys are normalised with :func:`pair`, so ``m[i, j]`` and ``m[j, i]``
    address the same entry.
    """

    def __init__(self, items: Mapping | Iterable = ()):
        super().__init__()
        items = items.items() if isinstance(items, Mapping) else items
        for key, value in items:
            self[key] = value

    def __setitem__(self, key, value):
        i, j = key
        s = frozenset(int(v) for v in value)
        if i in s or j in s:
            raise GraphError(f"separating set for ({i}, {j}) contains an endpoint")
        super().__setitem__(pair(int(i), int(j)), s)

    def __getitem__(self, key):
        return super().__getitem__(pair(*key))

    def __contains__(self, key):
        return super().__contains__(pair(*key))

    def get(self, key, default=None):
        return super().get(pair(*key), default)


# ---------------------------------------------------------------------------
# structural helpers


def _check_vertices(g: MixedGraph, *vs: int) -> None:
    known = set(g.vertices)
    for v in vs:
        if v not in known:
            raise GraphError(f"unknown vertex id {v}")


def weakly_connected_components(g: MixedGraph) -> list[frozenset[int]]:
    """Partition the vertices into weakly connected components.

    Returns
    -------
    list of frozenset
        Components ordered by their smallest member.
    """
    seen: set[int] = set()
    comps = []
    for v in g.vertices:
        if v in seen:
            continue
        comp = {v}
        queue = deque([v])
        while queue:
            u = queue.popleft()
            for w in g.neighbors(u):
                if w not in comp:
                    comp.add(w)
                    queue.append(w)
        seen |= comp
        comps.append(frozenset(comp))
    return comps


def undirected_components(g: MixedGraph) -> list[frozenset[int]]:
    """Connected components of the undirected part having at least one edge."""
    und = MixedGraph(g.vertices, (), g.undirected)
    return [c for c in weakly_connected_components(und) if len(c) > 1]


def induced_subgraph(g: MixedGraph, S: Iterable[int]) -> MixedGraph:
    """Subgraph on ``S`` keeping every edge with both endpoints in ``S``."""
    S = frozenset(S)
    _check_vertices(g, *S)
    verts = tuple(v for v in g.vertices if v in S)
    names = None if g.names is None else tuple(g.name(v) for v in verts)
    return MixedGraph(
        verts,
        frozenset(e for e in g.directed if e[0] in S and e[1] in S),
        frozenset(e for e in g.undirected if e[0] in S and e[1] in S),
        names,
    )


def topological_order(g: MixedGraph) -> list[int] | None:
    """Order the vertices along the directed edges.

    Undirected edges are ignored.  Returns ``None`` when the directed part
    has a cycle.  Ties are broken by the smallest vertex id.
    """
    indeg = {v: len(g.parents(v)) for v in g.vertices}
    import heapq

    heap = [v for v, d in indeg.items() if d == 0]
    heapq.heapify(heap)
    order = []
    while heap:
        v = heapq.heappop(heap)
        order.append(v)
        for c in g.children(v):
            indeg[c] -= 1
            if indeg[c] == 0:
                heapq.heappush(heap, c)
    return order if len(order) == len(g.vertices) else None


def has_directed_cycle(g: MixedGraph) -> bool:
    """True iff following directed edges forward can return to a vertex."""
    return topological_order(g) is None


def ancestors(g: MixedGraph, v: int, avoid: Iterable[int] = ()) -> frozenset[int]:
    """Vertices with a directed path into ``v`` (``v`` excluded).

    Paths may not pass through any vertex in ``avoid``.
    """
    blocked = set(avoid)
    out: set[int] = set()
    stack = [v]
    while stack:
        u = stack.pop()
        for w in g.parents(u):
            if w not in out and w not in blocked and w != v:
                out.add(w)
                stack.append(w)
    return frozenset(out)


def descendants(g: MixedGraph, v: int) -> frozenset[int]:
    """Vertices reachable from ``v`` along directed edges (``v`` excluded)."""
    out: set[int] = set()
    stack = [v]
    while stack:
        u = stack.pop()
        for w in g.children(u):
            if w not in out and w != v:
                out.add(w)
                stack.append(w)
    return frozenset(out)


def source_nodes(g: MixedGraph) -> frozenset[int]:
    """Vertices without an incoming directed edge."""
    return frozenset(v for v in g.vertices if not g.parents(v))


# ---------------------------------------------------------------------------
# d-separation


def d_separated(g: MixedGraph, i: int, j: int, S: Iterable[int] = ()) -> bool:
    """Decide whether ``i`` and ``j`` are d-separated by ``S`` in a DAG.

    Uses the reachability formulation: a trail is explored from ``i``
    remembering whether each vertex was entered along or against the edge
    direction.  Colliders are passable only when they have a descendant
    in ``S`` (equivalently, when they are ancestors of ``S`` or in ``S``).

    Parameters
    ----------
    g : MixedGraph
        Must be a DAG.
    i, j : int
        Distinct vertices outside ``S``.
    S : iterable of int
        Conditioning set.

    Returns
    -------
    bool
    """
    S = frozenset(S)
    _check_vertices(g, i, j, *S)
    if g.undirected or has_directed_cycle(g):
        raise GraphError("d-separation is defined here for DAGs only")
    if i == j:
        raise GraphError("d-separation needs two distinct vertices")
    if i in S or j in S:
        raise GraphError("endpoints must not be in the conditioning set")

    # vertices that are in S or have a descendant in S
    anc_s = set(S)
    stack = list(S)
    while stack:
        u = stack.pop()
        for w in g.parents(u):
            if w not in anc_s:
                anc_s.add(w)
                stack.append(w)

    # direction flag: True = arrived from a child (moving up), False = from a parent
    visited: set[tuple[int, bool]] = set()
    stack2: list[tuple[int, bool]] = [(i, True)]
    while stack2:
        v, up = stack2.pop()
        if (v, up) in visited:
            continue
        visited.add((v, up))
        if v == j:
            return False
        if up:
            if v not in S:
                stack2.extend((w, True) for w in g.parents(v))
                stack2.extend((w, False) for w in g.children(v))
        else:
            if v not in S:
                stack2.extend((w, False) for w in g.children(v))
            if v in anc_s:
                stack2.extend((w, True) for w in g.parents(v))
    return True


# ---------------------------------------------------------------------------
# v-structures and orientation propagation


def v_structures(g: MixedGraph) -> frozenset[tuple[int, int, int]]:
    """Triples ``(i, k, j)`` with ``i -> k <- j``, ``i < j`` nonadjacent."""
    out = set()
    for k in g.vertices:
        for i, j in combinations(sorted(g.parents(k)), 2):
            if not g.adjacent(i, j):
                out.add((i, k, j))
    return frozenset(out)


def _reaches(directed: set, src: int, dst: int) -> bool:
    """Whether a directed path leads from ``src`` to ``dst``."""
    seen, frontier = {src}, [src]
    while frontier:
        v = frontier.pop()
        if v == dst:
            return True
        for a, b in directed:
            if a == v and b not in seen:
                seen.add(b)
                frontier.append(b)
    return False


def orient_v_structures(skeleton: MixedGraph, sepsets: Mapping, *, acyclic: bool = False) -> MixedGraph:
    """Orient every unshielded collider of an undirected skeleton.

    For each nonadjacent pair ``(i, j)`` and each common neighbour ``k``
    with ``k`` outside the recorded separating set of ``(i, j)``, the
    edges become ``i -> k <- j``.  Pairs are visited in lexicographic
    order; if an edge was already oriented the other way by an earlier
    collider, the earlier orientation is kept.  With ``acyclic=True`` an
    orientation that would close a directed cycle is skipped as well
    (separating sets from noisy tests can demand one).

    Raises
    ------
    GraphError
        If the skeleton has directed edges or a separating set is missing.
    """
    if skeleton.directed:
        raise GraphError("skeleton must be fully undirected")
    sepsets = sepsets if isinstance(sepsets, SepsetMap) else SepsetMap(sepsets)
    directed: set[Edge] = set()
    undirected = set(skeleton.undirected)

    def orient(a: int, b: int) -> None:
        key = pair(a, b)
        if key in undirected and not (acyclic and _reaches(directed, b, a)):
            undirected.discard(key)
            directed.add((a, b))

    for i, j in combinations(skeleton.vertices, 2):
        if skeleton.adjacent(i, j):
            continue
        common = skeleton.neighbors(i) & skeleton.neighbors(j)
        if not common:
            continue
        if (i, j) not in sepsets:
            raise GraphError(f"no separating set recorded for nonadjacent pair ({i}, {j})")
        sep = sepsets[i, j]
        for k in sorted(common):
            if k not in sep:
                orient(i, k)
                orient(j, k)
    return skeleton.replace(directed=directed, undirected=undirected)


def _meek_fires(x: int, y: int, directed: set, undirected: set, adj) -> bool:
    """Whether one of the four rules orients the undirected edge as ``x -> y``."""

    def d(a, b):
        return (a, b) in directed

    def u(a, b):
        return pair(a, b) in undirected

    nx, ny = adj[x], adj[y]
    # rule 1: k -> x - y, k and y nonadjacent
    for k in nx:
        if d(k, x) and k not in ny and k != y:
            return True
    # rule 2: x -> k -> y
    for k in nx & ny:
        if d(x, k) and d(k, y):
            return True
    # rule 3: x - k -> y and x - l -> y with k, l nonadjacent
    ks = sorted(k for k in nx & ny if u(x, k) and d(k, y))
    for k, l in combinations(ks, 2):
        if l not in adj[k]:
            return True
    # rule 4: x - k -> l -> y with x adjacent to l and k, y nonadjacent
    for l in nx & ny:
        if not d(l, y):
            continue
        for k in nx:
            if k != l and k not in ny and k != y and u(x, k) and d(k, l):
                return True
    return False


def apply_meek_rules(g: MixedGraph, *, check: bool = True, acyclic: bool = False) -> MixedGraph:
    """Propagate orientations with the four Meek rules until nothing changes.

    Parameters
    ----------
    g : MixedGraph
        A chain graph.
    check : bool, default True
        Reject inputs whose directed part has a cycle.  Internal callers
        that handle inconsistent estimates pass ``False``; the rules are
        then applied as written and the result may keep the cycle.
    acyclic : bool, default False
        Never fire a rule whose orientation would close a directed cycle.
        Only matters for patterns no DAG can produce.

    Returns
    -------
    MixedGraph
        Same skeleton; directed edges are a superset of the input's.
    """
    if check and has_directed_cycle(g):
        raise GraphError("input has a directed cycle")
    directed = set(g.directed)
    undirected = set(g.undirected)
    adj = {v: g.neighbors(v) for v in g.vertices}
    changed = True
    while changed:
        changed = False
        for a, b in sorted(undirected):
            for x, y in ((a, b), (b, a)):
                if _meek_fires(x, y, directed, undirected, adj) and not (
                    acyclic and _reaches(directed, y, x)
                ):
                    undirected.discard((a, b))
                    directed.add((x, y))
                    changed = True
                    break
    return g.replace(directed=directed, undirected=undirected)


def cpdag(dag: MixedGraph) -> MixedGraph:
    """Completed pattern of a DAG: skeleton, its v-structures, Meek closure."""
    if not dag.is_dag():
        raise GraphError("cpdag needs a DAG")
    vs = v_structures(dag)
    directed = set()
    for i, k, j in vs:
        directed.add((i, k))
        directed.add((j, k))
    undirected = dag.skeleton_edges() - {pair(a, b) for a, b in directed}
    return apply_meek_rules(dag.replace(directed=directed, undirected=undirected))


# ---------------------------------------------------------------------------
# backdoor common ancestors and directed moral graphs


def backdoor_common_ancestors(g: MixedGraph, i: int, j: int) -> frozenset[int]:
    """Common ancestors of ``i`` and ``j`` that start a backdoor path.

    ``k`` qualifies when some directed path ``k => i`` avoids ``j`` and
    some directed path ``k => j`` avoids ``i``.  Only directed edges count
    towards ancestry, so the function also applies to mixed graphs.
    """
    _check_vertices(g, i, j)
    if i == j:
        raise GraphError("backdoor common ancestors need two distinct vertices")
    return (ancestors(g, i, avoid=(j,)) & ancestors(g, j, avoid=(i,))) - {i, j}


def is_dmg(g: MixedGraph) -> bool:
    """Whether a weakly connected DAG is a directed moral graph.

    A DAG is a directed moral graph when every two parents of a common
    child are adjacent.
    """
    if not g.is_dag():
        raise GraphError("is_dmg needs a DAG")
    if len(weakly_connected_components(g)) != 1:
        raise GraphError("is_dmg needs a weakly connected graph")
    return not v_structures(g)


# ---------------------------------------------------------------------------
# serialisation


def to_json_dict(g: MixedGraph) -> dict:
    """Graph as a JSON-ready dict keyed by vertex names."""
    return {
        "nodes": list(g.vertex_names()),
        "directed": [[g.name(a), g.name(b)] for a, b in sorted(g.directed)],
        "undirected": [[g.name(a), g.name(b)] for a, b in sorted(g.undirected)],
    }


def from_json_dict(obj: Mapping) -> MixedGraph:
    """Inverse of :func:`to_json_dict`.  Vertex ids follow the node order."""
    try:
        nodes = [str(n) for n in obj["nodes"]]
    except (KeyError, TypeError) as exc:
        raise GraphError("graph JSON needs a 'nodes' list") from exc
    index = {n: k for k, n in enumerate(nodes)}
    if len(index) != len(nodes):
        raise GraphError("duplicate node names")

    def ids(edges, kind):
        out = []
        for e in edges:
            if len(e) != 2 or str(e[0]) not in index or str(e[1]) not in index:
                raise GraphError(f"bad {kind} edge {e!r}")
            out.append((index[str(e[0])], index[str(e[1])]))
        return out

    return MixedGraph.from_edges(
        len(nodes),
        ids(obj.get("directed", []), "directed"),
        ids(obj.get("undirected", []), "undirected"),
        nodes,
    )


def to_dot(g: MixedGraph, name: str = "G") -> str:
    """Graphviz DOT text; undirected edges carry ``dir=none``."""
    lines = [f"digraph {name} {{"]
    for v in g.vertices:
        lines.append(f'  "{g.name(v)}";')
    for a, b in sorted(g.directed):
        lines.append(f'  "{g.name(a)}" -> "{g.name(b)}";')
    for a, b in sorted(g.undirected):
        lines.append(f'  "{g.name(a)}" -> "{g.name(b)}" [dir=none];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def iter_pairs(vertices: Iterable[int]) -> Iterator[Edge]:
    """Unordered vertex pairs in lexicographic order."""
    return combinations(sorted(vertices), 2)
