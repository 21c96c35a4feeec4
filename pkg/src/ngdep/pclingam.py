"""PC-LiNGAM: score every DAG in the equivalence class, keep the best.

The baseline enumerates all DAGs consistent with a DSEP, regresses each
variable on its parents, scores the residuals by how far they are from
Gaussian, and returns the best DAG with its Gaussian-Gaussian edges made
undirected again and the Meek rules applied.  Its cost grows with the
number of consistent DAGs, which is ``p!`` for a complete DSEP.

:func:`oracle_dep` runs the same last step on the true model and is the
reference answer throughout the test-suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Iterator

import numpy as np

from ngdep.depfind import FROM_PC, MEEK, Dep
from ngdep.graph import (
    GraphError,
    MixedGraph,
    apply_meek_rules,
    cpdag,
    has_directed_cycle,
    pair,
    undirected_components,
    v_structures,
)
from ngdep.pc import Dsep
from ngdep.stats import InputError
from ngdep.synth import NgDag

#: provenance tag for edges oriented by the chosen DAG
ICA_SCORE = "ica-score"
#: provenance tag for edges taken from the true model
TRUE_MODEL = "model"
DEFAULT_MAX_ENUM = math.factorial(10)
GAUSS_ABS_MEAN = math.sqrt(2.0 / math.pi)


class EnumerationLimitError(RuntimeError):
    """The DSEP admits more candidate DAGs than the configured cap."""

    def __init__(self, estimate: int, cap: int):
        super().__init__(
            f"up to {estimate} consistent DAGs to score, above the cap of {cap}; "
            "raise --max-enum to proceed"
        )
        self.estimate = estimate
        self.cap = cap


@dataclass(frozen=True)
class ScoredDag:
    """A candidate DAG with its residual non-Gaussianity flags and score."""

    dag: MixedGraph
    ng: tuple[bool, ...]
    score: float


def _component_orientations(comp: frozenset, g: MixedGraph) -> Iterator[frozenset]:
    """Orientations of the undirected edges inside ``comp`` creating no new collider.

    Vertex orders are built depth first.  A vertex may be placed next when
    its already placed undirected neighbours, together with its directed
    parents, leave no nonadjacent pair of parents behind; the orientation
    induced by the order is then acyclic and collider free.  Only orders
    that are the smallest topological order of their own orientation are
    completed, so each orientation is produced exactly once.
    """
    verts = sorted(comp)
    nbrs = {v: g.undirected_neighbors(v) & comp for v in verts}

    def admissible(v, placed):
        new = sorted(nbrs[v] & placed)
        old = g.parents(v)
        for a, b in combinations(new, 2):
            if not g.adjacent(a, b):
                return False
        return all(g.adjacent(a, d) for a in new for d in old)

    def canonical(v, order, pos):
        last = max((pos[w] for w in nbrs[v] if w in pos), default=-1)
        return all(u < v for u in order[last + 1:])

    def extend(order: list, pos: dict, edges: tuple):
        if len(order) == len(verts):
            yield frozenset(edges)
            return
        for v in verts:
            if v in pos or not canonical(v, order, pos) or not admissible(v, pos.keys()):
                continue
            new = tuple((u, v) for u in sorted(nbrs[v] & pos.keys()))
            pos[v] = len(order)
            order.append(v)
            yield from extend(order, pos, edges + new)
            order.pop()
            del pos[v]

    yield from extend([], {}, ())


def enumerate_consistent_dags(dsep: Dsep | MixedGraph) -> Iterator[MixedGraph]:
    """Lazily yield every DAG whose pattern is the given DSEP.

    Each DAG keeps the DSEP's directed edges and orients its undirected
    ones without creating a cycle or a collider between nonadjacent
    vertices.  The order of the sequence is deterministic.
    """
    g = dsep.graph if isinstance(dsep, Dsep) else dsep
    comps = undirected_components(g)
    target = v_structures(g)

    def product(k: int, acc: frozenset):
        if k == len(comps):
            dag = MixedGraph(g.vertices, g.directed | acc, (), g.names)
            if not has_directed_cycle(dag) and v_structures(dag) == target:
                yield dag
            return
        for orient in _component_orientations(comps[k], g):
            yield from product(k + 1, acc | orient)

    yield from product(0, frozenset())


def enumeration_bound(dsep: Dsep | MixedGraph) -> int:
    """Upper bound on the number of consistent DAGs: product of component factorials."""
    g = dsep.graph if isinstance(dsep, Dsep) else dsep
    out = 1
    for comp in undirected_components(g):
        out *= math.factorial(len(comp))
    return out


def ica_objective(residuals) -> float:
    """Non-Gaussianity score of residual columns.

    Every column is centred and scaled to unit sample variance; the score
    is ``sum_i |mean(|r_i|) - sqrt(2/pi)|``.  A standard normal column
    contributes zero in expectation.

    Parameters
    ----------
    residuals : sequence of array_like, or 2-d array with one column per residual

    Raises
    ------
    InputError
        If a column has zero variance.
    """
    if isinstance(residuals, np.ndarray) and residuals.ndim == 2:
        R = np.asarray(residuals, dtype=float)
    else:
        R = np.column_stack([np.asarray(r, dtype=float) for r in residuals])
    Rc = R - R.mean(axis=0)
    sd = Rc.std(axis=0)
    scale = np.abs(R).max(axis=0)
    if np.any(sd <= 1e-12 * np.maximum(scale, 1e-300)):
        raise InputError("zero-variance residual")
    return float(np.abs(np.abs(Rc / sd).mean(axis=0) - GAUSS_ABS_MEAN).sum())


def _residuals(dag: MixedGraph, source) -> list[np.ndarray]:
    out = []
    for v in dag.vertices:
        y = source.column(v)
        pa = sorted(dag.parents(v))
        out.append(source.residual(y, [source.column(k) for k in pa]) if pa else source.residual(y, []))
    return out


def score_dag(dag: MixedGraph, gauss, indep=None) -> ScoredDag:
    """Residual flags and score of one candidate.

    With a data source the score is :func:`ica_objective`.  With an oracle
    source (which has no sample to score) the score is the number of
    residual pairs found independent by ``indep``; it is maximal exactly
    for DAGs whose residuals are mutually independent.
    """
    source = gauss.source
    res = _residuals(dag, source)
    ng = tuple(not gauss.is_gaussian(r) for r in res)
    if source.kind == "oracle":
        if indep is None:
            raise ValueError("scoring with an oracle source needs an independence provider")
        score = float(sum(indep.independent(a, b) for a, b in combinations(res, 2)))
    else:
        score = ica_objective(res)
    return ScoredDag(dag, ng, score)


def _pattern_from(dag: MixedGraph, gaussian, protected, base_tag: str) -> Dep:
    """Undirect Gaussian-Gaussian edges not in ``protected``, then Meek."""
    directed, undirected = set(), set()
    for a, b in dag.directed:
        if gaussian[a] and gaussian[b] and (a, b) not in protected:
            undirected.add(pair(a, b))
        else:
            directed.add((a, b))
    g0 = dag.replace(directed=directed, undirected=undirected)
    g = apply_meek_rules(g0)
    prov = {}
    for a, b in g.directed:
        if (a, b) in protected:
            prov[pair(a, b)] = FROM_PC
        elif (a, b) in directed:
            prov[pair(a, b)] = base_tag
        else:
            prov[pair(a, b)] = MEEK
    for e in g.undirected:
        prov[e] = FROM_PC
    return Dep(g, dict(sorted(prov.items())))


def run_pc_lingam(dsep: Dsep, gauss, indep=None, *, max_enum: int = DEFAULT_MAX_ENUM) -> Dep:
    """Score every DAG consistent with ``dsep`` and return the best pattern.

    Parameters
    ----------
    dsep : Dsep
    gauss : Gaussianity provider
        Its column source supplies the data (or oracle forms).
    indep : independence provider, optional
        Needed only with an oracle source.
    max_enum : int
        Refuse DSEPs whose candidate bound exceeds this.

    Returns
    -------
    Dep
        The winning DAG (first in enumeration order among equal scores)
        with every edge between two Gaussian-residual variables made
        undirected unless the DSEP directs it, closed under the Meek
        rules.  ``log["dags_scored"]`` counts the candidates.

    Raises
    ------
    EnumerationLimitError
    """
    bound = enumeration_bound(dsep)
    if bound > max_enum:
        raise EnumerationLimitError(bound, max_enum)
    best: ScoredDag | None = None
    count = 0
    for dag in enumerate_consistent_dags(dsep):
        count += 1
        cand = score_dag(dag, gauss, indep)
        if best is None or cand.score > best.score:
            best = cand
    if best is None:
        raise GraphError("no DAG is consistent with the DSEP")
    dep = _pattern_from(best.dag, [not f for f in best.ng], dsep.graph.directed, ICA_SCORE)
    names = dsep.graph.names
    g = dep.graph if names is None else MixedGraph(dep.graph.vertices, dep.graph.directed, dep.graph.undirected, names)
    log = {"dags_scored": count, "gaussianity_tests": gauss.calls, "best_score": best.score}
    return Dep(g, dep.provenance, log)


def oracle_dep(model: NgDag) -> Dep:
    """Reference pattern of a model.

    On the true DAG each residual is its own disturbance, so edges whose
    endpoints both have Gaussian disturbances are made undirected (unless
    the completed pattern of the DAG directs them), and the Meek rules are
    applied.
    """
    protected = cpdag(model.dag).directed
    return _pattern_from(model.dag, model.gaussian, protected, TRUE_MODEL)
