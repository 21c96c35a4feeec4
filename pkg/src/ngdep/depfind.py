"""Orient a DSEP towards its distribution-equivalence pattern.

:func:`find_dep` walks the undirected components of a DSEP.  Inside a
component it first orients every edge between a Gaussian and a
non-Gaussian variable from the Gaussian end, then repeatedly tests the
remaining non-Gaussian pairs with the residual-independence criterion.
A pair whose test is confounded by a backdoor common ancestor (BCA) is
held back, and the ancestors found so far are regressed out of both of
its columns before it is tested again.  A final Meek closure propagates
the new orientations.

With finite samples the result can disagree with the DSEP (a directed
cycle, or a collider PC did not find).  :func:`check_consistency` reports
such disagreements and :func:`repair_exceptions` reorients the disputed
edges.
"""

from __future__ import annotations

from collections import Counter, deque
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from ngdep.graph import (
    GraphError,
    MixedGraph,
    apply_meek_rules,
    backdoor_common_ancestors,
    has_directed_cycle,
    pair,
    source_nodes,
    undirected_components,
    v_structures,
    weakly_connected_components,
)
from ngdep.pc import Dsep
from ngdep.providers import PairVerdict
from ngdep.seeding import substream

FROM_PC = "from-PC"
GAUSSIAN_RULE = "gaussian-rule"
ANCESTOR_RULE = "ancestor-rule"
MEEK = "meek"
REPAIR = "repair"


class PairTestError(RuntimeError):
    """A provider or regression failed while testing a specific pair."""

    def __init__(self, i: int, j: int, cause: Exception):
        super().__init__(f"testing pair ({i}, {j}) failed: {cause}")
        self.pair = (i, j)


@dataclass(frozen=True)
class Dep:
    """A distribution-equivalence pattern with per-edge provenance.

    Attributes
    ----------
    graph : MixedGraph
    provenance : dict
        Maps each unordered pair ``(min, max)`` joined by an edge to the
        step that fixed its final state: ``"from-PC"``,
        ``"gaussian-rule"``, ``"ancestor-rule"``, ``"meek"`` or
        ``"repair"``.
    log : dict
        Counters collected during the run.
    """

    graph: MixedGraph
    provenance: dict = field(default_factory=dict, compare=False)
    log: dict = field(default_factory=dict, compare=False)


@dataclass
class WorkingPair:
    """An adjacent pair with the ancestors regressed out of its columns."""

    i: int
    j: int
    bca_star: frozenset
    columns: tuple

    def __post_init__(self):
        if self.i in self.bca_star or self.j in self.bca_star:
            raise ValueError("regressed-out set cannot contain the pair itself")


def _classify(pair_: WorkingPair, gauss, indep, source) -> tuple[PairVerdict, str | None]:
    vi, vj = pair_.columns
    gi = gauss.is_gaussian(vi)
    gj = gauss.is_gaussian(vj)
    if gi and gj:
        return PairVerdict.BOTH_GAUSSIAN, None
    if gi:
        return PairVerdict.I_TO_J, GAUSSIAN_RULE
    if gj:
        return PairVerdict.J_TO_I, GAUSSIAN_RULE
    return _residual_verdict(vi, vj, indep, source)


def _residual_verdict(vi, vj, indep, source) -> tuple[PairVerdict, str | None]:
    """Residual-independence test for two non-Gaussian working columns."""
    uj = source.residual(vj, [vi])
    ui = source.residual(vi, [vj])
    ind_i = indep.independent(vi, uj)
    ind_j = indep.independent(vj, ui)
    if ind_i and not ind_j:
        return PairVerdict.I_TO_J, ANCESTOR_RULE
    if ind_j and not ind_i:
        return PairVerdict.J_TO_I, ANCESTOR_RULE
    if ind_i and ind_j:
        return PairVerdict.INDEPENDENT, None
    return PairVerdict.BCA_NONEMPTY, None


def classify_pair(pair_: WorkingPair, gauss, indep) -> PairVerdict:
    """Decide the orientation of one adjacent pair from its working columns.

    If exactly one column is Gaussian, the Gaussian variable is the cause.
    If both are non-Gaussian, ``x_i`` is the cause when ``v_i`` is
    independent of the residual of ``v_j`` on ``v_i`` while the reverse
    regression leaves a dependent residual.  Dependence in both
    directions signals a remaining backdoor common ancestor.

    Parameters
    ----------
    pair_ : WorkingPair
    gauss, indep : providers
        Must share one column source.

    Returns
    -------
    PairVerdict
    """
    return _classify(pair_, gauss, indep, gauss.source)[0]


class _Workspace:
    """Caches working columns and verdicts for one :func:`find_dep` run.

    Verdicts depend only on the pair and the set regressed out of it, so
    repeated sweeps of the same component reuse them.
    """

    def __init__(self, gauss, indep):
        if gauss.source is not indep.source:
            raise ValueError("Gaussianity and independence providers must share a column source")
        self.gauss = gauss
        self.indep = indep
        self.source = gauss.source
        self._columns: dict = {}
        self._gaussian: dict = {}
        self._verdicts: dict = {}
        self.counts = Counter()

    def column(self, v: int, removed: frozenset) -> np.ndarray:
        key = (v, removed)
        if key not in self._columns:
            y = self.source.column(v)
            if removed:
                y = self.source.residual(y, [self.source.column(k) for k in sorted(removed)])
                self.counts["regressions"] += 1
            self._columns[key] = y
        return self._columns[key]

    def is_gaussian(self, v: int, removed: frozenset) -> bool:
        key = (v, removed)
        if key not in self._gaussian:
            self._gaussian[key] = self.gauss.is_gaussian(self.column(v, removed))
            self.counts["gaussianity_tests"] += 1
        return self._gaussian[key]

    def classify(self, i: int, j: int, removed: frozenset) -> tuple[PairVerdict, str | None]:
        key = (i, j, removed)
        if key not in self._verdicts:
            try:
                self._verdicts[key] = self._classify(i, j, removed)
            except Exception as exc:  # noqa: BLE001 - re-raised with the pair attached
                raise PairTestError(i, j, exc) from exc
        return self._verdicts[key]

    def _classify(self, i, j, removed):
        gi = self.is_gaussian(i, removed)
        gj = self.is_gaussian(j, removed)
        if gi and gj:
            return PairVerdict.BOTH_GAUSSIAN, None
        if gi != gj:
            return (PairVerdict.I_TO_J if gi else PairVerdict.J_TO_I), GAUSSIAN_RULE
        before = self.indep.calls
        out = _residual_verdict(self.column(i, removed), self.column(j, removed), self.indep, self.source)
        self.counts["independence_tests"] += self.indep.calls - before
        self.counts["regressions"] += 2
        return out


class _State:
    """Mutable edge sets of the graph being oriented."""

    def __init__(self, g: MixedGraph):
        self.vertices = g.vertices
        self.names = g.names
        self.directed = set(g.directed)
        self.undirected = set(g.undirected)
        self.provenance = {pair(a, b): FROM_PC for a, b in g.directed}
        self.provenance.update({e: FROM_PC for e in g.undirected})
        self.rules = Counter()

    def orient(self, a: int, b: int, rule: str) -> None:
        e = pair(a, b)
        self.undirected.discard(e)
        self.directed.add((a, b))
        self.provenance[e] = rule
        self.rules[rule] += 1

    def graph(self) -> MixedGraph:
        return MixedGraph(self.vertices, self.directed, self.undirected, self.names)


def _working_graph(vertices, directed, undirected) -> MixedGraph:
    vs = frozenset(vertices)
    return MixedGraph(
        tuple(sorted(vs)),
        frozenset(e for e in directed if e[0] in vs and e[1] in vs),
        frozenset(e for e in undirected if e[0] in vs and e[1] in vs),
    )


def _components_of(vertices, edges) -> list[frozenset]:
    g = MixedGraph(tuple(sorted(vertices)), (), edges)
    return undirected_components(g)


def find_dep(dsep: Dsep, gauss, indep) -> Dep:
    """Orient the undirected edges of a DSEP that the data identify.

    Parameters
    ----------
    dsep : Dsep
        Output of :func:`ngdep.pc.run_pc` (or any chain graph with
        separating sets).
    gauss : provider
        ``is_gaussian(column) -> bool``.
    indep : provider
        ``independent(a, b) -> bool`` on columns from the same source.

    Returns
    -------
    Dep
        Every DSEP edge is kept and no DSEP direction is reversed.  The
        log records test counts, the number of orientations per rule and
        the number of sweeps.

    Notes
    -----
    Each pair keeps the cumulative set of vertices regressed out of its
    columns; regressions never affect other pairs.  A pair with both
    working columns Gaussian stays undirected for good.
    """
    ws = _Workspace(gauss, indep)
    g0 = dsep.graph
    st = _State(g0)
    regressed: dict = {e: frozenset() for e in g0.undirected}
    pending: dict = {e: set(backdoor_common_ancestors(g0, *e)) for e in sorted(g0.undirected)}
    settled: set = set()  # pairs whose working columns are both Gaussian
    sweeps = 0

    queue = deque(undirected_components(g0))
    while queue:
        comp = queue.popleft()
        e_ud = {e for e in st.undirected if e[0] in comp and e[1] in comp and e not in settled}
        if not e_ud:
            continue
        start_edges = frozenset(e_ud)
        e_di: set = set()

        gauss_raw = {v: ws.is_gaussian(v, frozenset()) for v in sorted(comp)}
        if all(gauss_raw.values()):
            settled |= e_ud
            continue
        for a, b in sorted(e_ud):
            ga, gb = gauss_raw[a], gauss_raw[b]
            if ga and gb:
                settled.add((a, b))
                e_ud.discard((a, b))
            elif ga != gb:
                src, dst = (a, b) if ga else (b, a)
                st.orient(src, dst, GAUSSIAN_RULE)
                e_ud.discard((a, b))
                e_di.add((src, dst))

        current = _working_graph(comp, e_di, e_ud)
        for e in sorted(e_ud):
            pending[e] |= backdoor_common_ancestors(current, *e) - regressed[e]

        ng = {v for v in comp if not gauss_raw[v]}
        ng_edges = {e for e in e_ud if e[0] in ng and e[1] in ng}
        parts = _components_of(ng, ng_edges)
        if len(parts) != 1:
            queue.extend(parts)
            continue
        comp = parts[0]
        e_ud = {e for e in ng_edges if e[0] in comp}
        e_di = {e for e in e_di if e[0] in comp and e[1] in comp}

        flag = True
        while flag:
            flag = False
            sweeps += 1
            for e in sorted(e_ud):
                if pending[e]:
                    regressed[e] = regressed[e] | frozenset(pending[e])
                    pending[e] = set()
                verdict, rule = ws.classify(e[0], e[1], regressed[e])
                if verdict is PairVerdict.I_TO_J:
                    st.orient(e[0], e[1], rule)
                elif verdict is PairVerdict.J_TO_I:
                    st.orient(e[1], e[0], rule)
                elif verdict is PairVerdict.BOTH_GAUSSIAN:
                    settled.add(e)
                    e_ud.discard(e)
                    continue
                else:
                    continue
                e_ud.discard(e)
                e_di.add((e[0], e[1]) if verdict is PairVerdict.I_TO_J else (e[1], e[0]))
                flag = True
            current = _working_graph(comp, e_di, e_ud)
            for e in sorted(e_ud):
                new = backdoor_common_ancestors(current, *e) - regressed[e]
                pending[e] = set(new)
                if new:
                    flag = True

        if e_ud and frozenset(e_ud) != start_edges:
            touched = {v for e in e_ud for v in e}
            queue.extend(_components_of(touched, e_ud))

    before = st.graph()
    closed = apply_meek_rules(before, check=False)
    for a, b in sorted(closed.directed - before.directed):
        st.orient(a, b, MEEK)

    log = {
        "gaussianity_tests": ws.counts["gaussianity_tests"],
        "independence_tests": ws.counts["independence_tests"],
        "regressions": ws.counts["regressions"],
        "sweeps": sweeps,
        "orientations": {r: st.rules[r] for r in (GAUSSIAN_RULE, ANCESTOR_RULE, MEEK)},
    }
    return Dep(st.graph(), dict(sorted(st.provenance.items())), log)


# ---------------------------------------------------------------------------
# consistency with the DSEP


@dataclass(frozen=True)
class Violation:
    """One way a DEP disagrees with its DSEP.

    ``kind`` is ``"skeleton"``, ``"reversal"``, ``"cycle"`` or
    ``"v-structure"``.  ``edges`` lists the offending edges (ordered
    pairs for directed edges).  New colliders are grouped per collider
    vertex, and cycles per strongly connected set of vertices.
    """

    kind: str
    vertices: tuple
    edges: tuple

    def describe(self, g: MixedGraph | None = None) -> str:
        def nm(v):
            return g.name(v) if g is not None else str(v)

        if self.kind == "skeleton":
            (a, b), = self.edges
            return f"skeleton: adjacency of {nm(a)} and {nm(b)} differs"
        if self.kind == "reversal":
            (a, b), = self.edges
            return f"reversal: {nm(b)} -> {nm(a)} is directed {nm(a)} -> {nm(b)}"
        if self.kind == "cycle":
            return "cycle: " + " -> ".join(nm(v) for v in self.vertices + self.vertices[:1])
        k = self.vertices[0]
        pairs = ", ".join(f"{nm(a)} -> {nm(k)} <- {nm(b)}" for (a, _), (b, _) in self.edges)
        return f"v-structure: {pairs}"


def _find_cycle(directed: set, within: frozenset) -> tuple:
    """One directed cycle through the strongly connected set ``within``."""
    start = min(within)
    succ = {v: sorted(b for a, b in directed if a == v and b in within) for v in within}
    path = [start]
    seen = {start: 0}
    v = start
    while True:
        nxt = succ[v][0]
        if nxt in seen:
            return tuple(path[seen[nxt]:])
        seen[nxt] = len(path)
        path.append(nxt)
        v = nxt


def _strong_components(g: MixedGraph) -> list[frozenset]:
    """Strongly connected sets of the directed part with more than one vertex."""
    index, low, on_stack, stack, out = {}, {}, set(), [], []
    counter = [0]

    def visit(v):
        index[v] = low[v] = counter[0]
        counter[0] += 1
        stack.append(v)
        on_stack.add(v)
        for w in sorted(g.children(v)):
            if w not in index:
                visit(w)
                low[v] = min(low[v], low[w])
            elif w in on_stack:
                low[v] = min(low[v], index[w])
        if low[v] == index[v]:
            comp = set()
            while True:
                w = stack.pop()
                on_stack.discard(w)
                comp.add(w)
                if w == v:
                    break
            if len(comp) > 1:
                out.append(frozenset(comp))

    for v in g.vertices:
        if v not in index:
            visit(v)
    return sorted(out, key=min)


def check_consistency(dep: Dep | MixedGraph, dsep: Dsep | MixedGraph) -> list[Violation]:
    """List the ways ``dep`` contradicts ``dsep``.

    Four classes are reported: adjacencies that differ, DSEP directions
    that are reversed, directed cycles, and colliders ``i -> k <- j``
    (``i``, ``j`` nonadjacent) that the DSEP does not have.

    Raises
    ------
    GraphError
        If the two graphs have different vertex sets.
    """
    g = dep.graph if isinstance(dep, Dep) else dep
    h = dsep.graph if isinstance(dsep, Dsep) else dsep
    if g.vertices != h.vertices:
        raise GraphError("DEP and DSEP have different vertex sets")
    out: list[Violation] = []
    for e in sorted(g.skeleton_edges() ^ h.skeleton_edges()):
        out.append(Violation("skeleton", e, (e,)))
    for a, b in sorted(h.directed):
        if (b, a) in g.directed:
            out.append(Violation("reversal", (a, b), ((b, a),)))
    for comp in _strong_components(g):
        cyc = _find_cycle(set(g.directed), comp)
        out.append(Violation("cycle", cyc, tuple(zip(cyc, cyc[1:] + cyc[:1]))))
    known = v_structures(h)
    new = sorted(v for v in v_structures(g) if v not in known)
    by_collider: dict = {}
    for i, k, j in new:
        by_collider.setdefault(k, []).append(((i, k), (j, k)))
    for k in sorted(by_collider):
        out.append(Violation("v-structure", (k,), tuple(by_collider[k])))
    return out


# ---------------------------------------------------------------------------
# repairing inconsistent estimates


def _pick(candidates, rng, order) -> int:
    cands = sorted(candidates)
    if order is not None:
        for v in order:
            if v in candidates:
                return v
    return cands[int(rng.integers(len(cands)))]


def _extendable(comp: frozenset, directed: set, skeleton: MixedGraph, external_parents) -> bool:
    """Whether the fixed directions inside ``comp`` extend to a DAG without new colliders.

    Searches vertex orders depth-first: a vertex may come next when all of
    its fixed in-edges start at already placed vertices and its placed
    neighbours (plus external parents) are pairwise adjacent.
    """
    verts = sorted(comp)
    nbrs = {v: skeleton.neighbors(v) & comp for v in verts}
    fixed_in = {v: {a for a, b in directed if b == v and a in comp} for v in verts}
    fixed_out = {v: {b for a, b in directed if a == v and b in comp} for v in verts}

    def ok(v, placed):
        if not fixed_in[v] <= placed or fixed_out[v] & placed:
            return False
        pa = sorted((nbrs[v] & placed) | external_parents[v])
        return all(skeleton.adjacent(a, b) for a, b in combinations(pa, 2))

    def search(placed, remaining):
        if not remaining:
            return True
        for v in sorted(remaining):
            if ok(v, placed) and search(placed | {v}, remaining - {v}):
                return True
        return False

    return search(frozenset(), frozenset(verts))


def repair_exceptions(dep: Dep, dsep: Dsep, seed: int = 0, *, order=None) -> Dep:
    """Reorient disputed edges so the estimate agrees with the DSEP again.

    The edges directed by the estimate but undirected in the DSEP form the
    disputed subgraph.  For each of its weakly connected components a
    start vertex is chosen at random among the sources (any vertex if
    there is none) and the component is traversed breadth first; every
    edge met is directed away from the vertex being expanded.  Finally the
    Meek rules are applied.

    If directed cycles or new colliders survive (the traversal does not
    always find a perfect elimination order), each DSEP chain component
    whose fixed directions cannot be extended without a new collider is
    reset to undirected and the Meek rules are applied again.

    Parameters
    ----------
    dep : Dep
    dsep : Dsep
    seed : int
        Seed of the random start-vertex choices.
    order : sequence of int, optional
        Preference list for start-vertex choices; whenever a choice is
        made, the first listed candidate is taken.

    Returns
    -------
    Dep
        Same skeleton as the DSEP; provenance ``"repair"`` on every edge
        whose state changed.
    """
    g = dep.graph
    h = dsep.graph
    if g.vertices != h.vertices:
        raise GraphError("DEP and DSEP have different vertex sets")
    if g.skeleton_edges() != h.skeleton_edges():
        raise GraphError("repair needs the DEP to keep the DSEP skeleton")
    if not check_consistency(g, h):
        return dep
    rng = substream(seed, "repair")

    directed = set(g.directed)
    undirected = set(g.undirected)
    # DSEP directions always win
    for a, b in h.directed:
        if (b, a) in directed:
            directed.discard((b, a))
            directed.add((a, b))

    disputed = {(a, b) for a, b in directed if pair(a, b) in h.undirected}
    dgraph = MixedGraph(h.vertices, disputed, ())
    known = v_structures(h)
    for comp in weakly_connected_components(dgraph):
        if len(comp) < 2:
            continue
        sub_edges = {e for e in disputed if e[0] in comp}
        sub = MixedGraph(tuple(sorted(comp)), sub_edges, ())
        new_collider = any(
            not g.adjacent(i, j) and (i, k, j) not in known for i, k, j in v_structures(sub)
        )
        if not (has_directed_cycle(sub) or new_collider):
            continue
        adj = {v: sub.neighbors(v) for v in comp}
        x0 = _pick(source_nodes(sub) or comp, rng, order)
        closed: set = set()
        open_ = {x0}
        while len(closed) != len(comp):
            open_.discard(x0)
            fresh = adj[x0] - closed
            open_ |= fresh
            for y in sorted(fresh):
                if (y, x0) in directed:
                    directed.discard((y, x0))
                    directed.add((x0, y))
            closed.add(x0)
            cands = (open_ & adj[x0]) - closed
            if not cands:
                cands = open_ - closed
            if not cands:
                break
            x0 = _pick(cands, rng, order)

    fixed = MixedGraph(h.vertices, directed, undirected, h.names)
    fixed = apply_meek_rules(fixed, check=False)
    if {v.kind for v in check_consistency(fixed, h)} & {"cycle", "v-structure"}:
        fixed = _reset_components(fixed, h)

    prov = dict(dep.provenance)
    for e in sorted(fixed.skeleton_edges()):
        a, b = e
        state_g = (a, b) in g.directed, (b, a) in g.directed
        state_f = (a, b) in fixed.directed, (b, a) in fixed.directed
        if state_g != state_f:
            prov[e] = REPAIR
    log = dict(dep.log)
    log["repaired_edges"] = sum(1 for t in prov.values() if t == REPAIR)
    return Dep(fixed, dict(sorted(prov.items())), log)


def _reset_components(g: MixedGraph, h: MixedGraph) -> MixedGraph:
    directed = set(g.directed)
    undirected = set(g.undirected)
    for comp in undirected_components(h):
        inside = {(a, b) for a, b in directed if a in comp and b in comp}
        ext = {v: frozenset(a for a in h.parents(v)) for v in comp}
        if not has_directed_cycle(MixedGraph(tuple(sorted(comp)), inside, ())) and _extendable(
            comp, inside, h, ext
        ):
            continue
        for a, b in inside:
            directed.discard((a, b))
            undirected.add(pair(a, b))
    out = apply_meek_rules(MixedGraph(h.vertices, directed, undirected, h.names), check=False)
    if {v.kind for v in check_consistency(out, h)} & {"cycle", "v-structure"}:
        # the DSEP itself is never in conflict with itself
        return h
    return out
