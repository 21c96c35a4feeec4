"""Ground-truth linear models with Gaussian and non-Gaussian disturbances.

A model is ``x = B x + e``: ``B[j, i]`` is the coefficient of the edge
``i -> j``, and every disturbance is either standard normal or a
Lognormal(0, 1) variable shifted to mean zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from ngdep.graph import GraphError, MixedGraph, topological_order
from ngdep.seeding import substream
from ngdep.stats import Dataset

GAUSSIAN = "gaussian"
LOGNORMAL = "lognormal"
DISTURBANCES = (GAUSSIAN, LOGNORMAL)

#: mean of Lognormal(0, 1); subtracted so the disturbance has mean zero
LOGNORMAL_SHIFT = math.exp(0.5)
#: variance of Lognormal(0, 1)
LOGNORMAL_VAR = (math.e - 1.0) * math.e


@dataclass(frozen=True)
class NgDag:
    """A DAG with edge coefficients and per-variable disturbance laws.

    Parameters
    ----------
    dag : MixedGraph
        Directed acyclic graph on ``0..p-1``.
    B : ndarray, shape (p, p)
        ``B[j, i]`` is nonzero exactly when ``i -> j`` is an edge.
    disturbances : tuple of str
        ``"gaussian"`` or ``"lognormal"`` for each variable.
    """

    dag: MixedGraph
    B: np.ndarray
    disturbances: tuple[str, ...]

    def __post_init__(self):
        B = np.array(self.B, dtype=float, copy=True)
        p = self.dag.p
        if self.dag.vertices != tuple(range(p)):
            raise GraphError("model vertices must be 0..p-1")
        if not self.dag.is_dag():
            raise GraphError("model graph must be a DAG")
        if B.shape != (p, p):
            raise GraphError(f"B has shape {B.shape}, expected {(p, p)}")
        support = {(i, j) for j, i in zip(*np.nonzero(B))}
        if support != set(self.dag.directed):
            raise GraphError("nonzero pattern of B must match the DAG edges")
        dist = tuple(self.disturbances)
        if len(dist) != p or any(d not in DISTURBANCES for d in dist):
            raise GraphError(f"disturbances must be {p} entries from {DISTURBANCES}")
        B.flags.writeable = False
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "disturbances", dist)

    @property
    def p(self) -> int:
        return self.dag.p

    @property
    def gaussian(self) -> tuple[bool, ...]:
        """Per-variable flag: disturbance is Gaussian."""
        return tuple(d == GAUSSIAN for d in self.disturbances)

    @property
    def ng(self) -> tuple[bool, ...]:
        """Per-variable flag: disturbance is non-Gaussian."""
        return tuple(d != GAUSSIAN for d in self.disturbances)

    @property
    def variances(self) -> np.ndarray:
        """Disturbance variances."""
        return np.array([1.0 if d == GAUSSIAN else LOGNORMAL_VAR for d in self.disturbances])

    def covariance(self) -> np.ndarray:
        """Population covariance ``A D A^T`` with ``A = (I - B)^{-1}``."""
        A = total_effects(self.B)
        return A @ np.diag(self.variances) @ A.T


def total_effects(B) -> np.ndarray:
    """Matrix of total effects ``(I - B)^{-1}``.

    Entry ``[j, i]`` is the sum over directed paths ``i => j`` of the
    product of edge coefficients.

    Raises
    ------
    GraphError
        If the support of ``B`` contains a directed cycle.
    """
    B = np.asarray(B, dtype=float)
    p = B.shape[0]
    g = MixedGraph.from_edges(p, ((i, j) for j, i in zip(*np.nonzero(B))))
    order = topological_order(g)
    if order is None:
        raise GraphError("B is not permutable to strictly lower triangular form")
    # forward substitution along the causal order
    A = np.zeros((p, p))
    for j in order:
        A[j] = B[j] @ A
        A[j, j] += 1.0
    return A


def _draw_ng_count(p: int, rng: np.random.Generator) -> int:
    lo, hi = p // 3 + 1, p - 1
    if hi < lo:
        return max(min(lo, p), 0)
    return int(rng.integers(lo, hi + 1))


def _build(p, edges, coef_rng, ng_count, flag_rng, signs) -> NgDag:
    B = np.zeros((p, p))
    for i, j in sorted(edges):
        b = coef_rng.uniform(0.5, 1.0)
        if signs and coef_rng.random() < 0.5:
            b = -b
        B[j, i] = b
    ng_pos = set(flag_rng.choice(p, size=ng_count, replace=False).tolist()) if ng_count else set()
    dist = tuple(LOGNORMAL if k in ng_pos else GAUSSIAN for k in range(p))
    return NgDag(MixedGraph.from_edges(p, edges), B, dist)


def random_complete_ngdag(p: int, seed: int = 0, *, signs: bool = False) -> NgDag:
    """Complete DAG over a random causal order with the experiment settings.

    Coefficients are drawn from U(0.5, 1).  The number of non-Gaussian
    disturbances is uniform on ``{p // 3 + 1, ..., p - 1}``, placed at
    random positions.

    Parameters
    ----------
    p : int
        At least 2.
    seed : int
        Master seed; graph, coefficients and disturbance flags come from
        separate named substreams.
    signs : bool
        Flip each coefficient's sign with probability 1/2.
    """
    if p < 2:
        raise ValueError("p must be at least 2")
    order = substream(seed, "graph").permutation(p)
    edges = [(int(order[a]), int(order[b])) for a, b in combinations(range(p), 2)]
    flag_rng = substream(seed, "disturbances")
    return _build(p, edges, substream(seed, "coefficients"), _draw_ng_count(p, flag_rng), flag_rng, signs)


def random_ngdag(
    p: int,
    edge_density: float,
    ng_count: int | None = None,
    seed: int = 0,
    *,
    signs: bool = False,
) -> NgDag:
    """Random DAG: each forward edge of a random order kept with ``edge_density``.

    ``ng_count=None`` draws the number of non-Gaussian disturbances with
    the same rule as :func:`random_complete_ngdag`.
    """
    if not 0.0 <= edge_density <= 1.0:
        raise ValueError("edge_density must lie in [0, 1]")
    if p < 1:
        raise ValueError("p must be positive")
    g_rng = substream(seed, "graph")
    order = g_rng.permutation(p)
    edges = [
        (int(order[a]), int(order[b]))
        for a, b in combinations(range(p), 2)
        if g_rng.random() < edge_density
    ]
    flag_rng = substream(seed, "disturbances")
    if ng_count is None:
        ng_count = _draw_ng_count(p, flag_rng) if p >= 2 else 0
    if not 0 <= ng_count <= p:
        raise ValueError("ng_count must lie in [0, p]")
    return _build(p, edges, substream(seed, "coefficients"), ng_count, flag_rng, signs)


def model_from_edges(p, coefficients: dict, disturbances) -> NgDag:
    """Model from ``{(i, j): b}`` edge coefficients (edge ``i -> j``)."""
    B = np.zeros((p, p))
    for (i, j), b in coefficients.items():
        B[j, i] = b
    return NgDag(MixedGraph.from_edges(p, coefficients.keys()), B, tuple(disturbances))


def sample(model: NgDag, n: int, seed: int = 0, names=None) -> Dataset:
    """Draw ``n`` observations of ``model``.

    Disturbances come from the ``"noise"`` substream of ``seed``;
    variables are then computed in topological order.
    """
    if n < 1:
        raise ValueError("n must be positive")
    rng = substream(seed, "noise")
    p = model.p
    E = np.empty((n, p))
    for k, d in enumerate(model.disturbances):
        if d == GAUSSIAN:
            E[:, k] = rng.standard_normal(n)
        else:
            E[:, k] = rng.lognormal(0.0, 1.0, n) - LOGNORMAL_SHIFT
    X = np.zeros_like(E)
    for j in topological_order(model.dag):
        X[:, j] = E[:, j] + X @ model.B[j] if model.dag.parents(j) else E[:, j]
    return Dataset(X, tuple(names) if names else model.dag.vertex_names())
