"""Decision providers: every test the discovery algorithms ask for.

Three questions are asked during discovery:

* conditional independence of two variables given a set (skeleton search),
* whether a column (a variable or a residual) is Gaussian,
* whether two columns are independent.

Each has a data-driven implementation built on :mod:`ngdep.stats` and an
oracle implementation that answers from a known :class:`~ngdep.synth.NgDag`.
Oracle columns are linear forms in the disturbances: a column is the
vector of its coefficients on ``e_1..e_p``.  Regression is an exact
projection under the population covariance, and Gaussianity and
independence are read off from which disturbances a form loads on.

All providers count the queries they answer, which the complexity tests
use.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ngdep.graph import MixedGraph, ancestors, backdoor_common_ancestors, d_separated, induced_subgraph
from ngdep.stats import Dataset, NumericalError, TestConfig, fisher_z_ci, hsic_test, ols_residuals, shapiro_wilk
from ngdep.synth import NgDag, total_effects

#: relative size below which an oracle coefficient counts as exactly zero
ORACLE_TOL = 1e-9


class PairVerdict(enum.Enum):
    """What the orientation tests conclude about an adjacent pair."""

    INDEPENDENT = "Independent"
    I_TO_J = "IToJ"
    J_TO_I = "JToI"
    BCA_NONEMPTY = "BcaNonempty"
    BOTH_GAUSSIAN = "BothGaussian"


# ---------------------------------------------------------------------------
# column sources


class DataColumns:
    """Columns are observed data; residuals come from least squares."""

    kind = "data"

    def __init__(self, dataset: Dataset):
        self.dataset = dataset
        self.regressions = 0

    @property
    def p(self) -> int:
        return self.dataset.p

    def column(self, i: int) -> np.ndarray:
        return self.dataset.column(i)

    def residual(self, y: np.ndarray, regressors: Sequence[np.ndarray]) -> np.ndarray:
        self.regressions += 1
        return ols_residuals(y, regressors)[1]


class OracleColumns:
    """Columns are coefficient vectors over the disturbances of a model."""

    kind = "oracle"

    def __init__(self, model: NgDag):
        self.model = model
        self._A = total_effects(model.B)
        self._var = model.variances
        self._gauss = np.array(model.gaussian)
        self.regressions = 0

    @property
    def p(self) -> int:
        return self.model.p

    def column(self, i: int) -> np.ndarray:
        return self._A[i].copy()

    def cov(self, a: np.ndarray, b: np.ndarray) -> float:
        return float(np.sum(a * b * self._var))

    def residual(self, y: np.ndarray, regressors: Sequence[np.ndarray]) -> np.ndarray:
        """Population residual of ``y`` after projecting out ``regressors``."""
        self.regressions += 1
        if len(regressors) == 0:
            return np.array(y, dtype=float)
        X = np.vstack(regressors)
        G = (X * self._var) @ X.T
        c = (X * self._var) @ y
        if np.linalg.cond(G) > 1e12:
            raise NumericalError("oracle regressors are linearly dependent")
        beta = np.linalg.solve(G, c)
        return y - beta @ X

    def support(self, a: np.ndarray) -> np.ndarray:
        """Boolean mask of disturbances the form ``a`` loads on."""
        scale = np.max(np.abs(a) * np.sqrt(self._var))
        return np.abs(a) * np.sqrt(self._var) > ORACLE_TOL * max(scale, 1e-300)


# ---------------------------------------------------------------------------
# Gaussianity


class DataGaussianity:
    """Shapiro-Wilk at level ``config.alpha_gauss``."""

    def __init__(self, source: DataColumns, config: TestConfig):
        self.source = source
        self.config = config
        self.calls = 0

    def is_gaussian(self, col: np.ndarray) -> bool:
        self.calls += 1
        return not shapiro_wilk(col, self.config.alpha_gauss, seed=self.config.seed).reject


class OracleGaussianity:
    """A form is Gaussian iff every disturbance it loads on is Gaussian."""

    def __init__(self, source: OracleColumns):
        self.source = source
        self.calls = 0

    def is_gaussian(self, col: np.ndarray) -> bool:
        self.calls += 1
        s = self.source.support(col)
        return bool(np.all(self.source._gauss[s]))


# ---------------------------------------------------------------------------
# pairwise independence


class DataIndependence:
    """HSIC at level ``config.alpha_indep``."""

    def __init__(self, source: DataColumns, config: TestConfig):
        self.source = source
        self.config = config
        self.calls = 0

    def independent(self, a: np.ndarray, b: np.ndarray) -> bool:
        self.calls += 1
        return not hsic_test(a, b, self.config).reject


class OracleIndependence:
    """Two forms are independent iff they are uncorrelated and share no
    non-Gaussian disturbance."""

    def __init__(self, source: OracleColumns):
        self.source = source
        self.calls = 0

    def independent(self, a: np.ndarray, b: np.ndarray) -> bool:
        self.calls += 1
        src = self.source
        shared = src.support(a) & src.support(b) & ~src._gauss
        if shared.any():
            return False
        scale = np.sqrt(src.cov(a, a) * src.cov(b, b))
        return abs(src.cov(a, b)) <= ORACLE_TOL * scale


# ---------------------------------------------------------------------------
# conditional independence


class DataCI:
    """Fisher-z partial-correlation test at level ``config.alpha_ci``."""

    def __init__(self, dataset: Dataset, config: TestConfig):
        self.dataset = dataset
        self.config = config
        self.calls = 0

    @property
    def p(self) -> int:
        return self.dataset.p

    def independent(self, i: int, j: int, S=()) -> bool:
        self.calls += 1
        return not fisher_z_ci(self.dataset, i, j, S, self.config.alpha_ci).reject


class OracleCI:
    """d-separation in a known DAG."""

    def __init__(self, dag: MixedGraph | NgDag):
        self.dag = dag.dag if isinstance(dag, NgDag) else dag
        self.calls = 0

    @property
    def p(self) -> int:
        return self.dag.p

    def independent(self, i: int, j: int, S=()) -> bool:
        self.calls += 1
        return d_separated(self.dag, i, j, S)


@dataclass
class Providers:
    """The three providers answering queries about one dataset or model."""

    ci: DataCI | OracleCI
    gauss: DataGaussianity | OracleGaussianity
    indep: DataIndependence | OracleIndependence

    @property
    def source(self):
        return self.gauss.source


def data_providers(dataset: Dataset, config: TestConfig | None = None) -> Providers:
    config = config or TestConfig()
    src = DataColumns(dataset)
    return Providers(DataCI(dataset, config), DataGaussianity(src, config), DataIndependence(src, config))


def oracle_providers(model: NgDag) -> Providers:
    src = OracleColumns(model)
    return Providers(OracleCI(model), OracleGaussianity(src), OracleIndependence(src))


# ---------------------------------------------------------------------------
# structural oracles


def oracle_is_gaussian(model: NgDag, i: int) -> bool:
    """Whether ``x_i`` is Gaussian: its own and all ancestors' disturbances are."""
    g = model.gaussian
    return g[i] and all(g[k] for k in ancestors(model.dag, i))


def oracle_pair_verdict(model: NgDag, i: int, j: int, removed=()) -> PairVerdict:
    """Generic outcome of the orientation tests for ``(x_i, x_j)``, from structure.

    The variables in ``removed`` are taken out of the model together with
    their disturbances, as happens when they are regressed out of both
    columns.  On the remaining DAG:

    * both variables Gaussian gives ``BOTH_GAUSSIAN``;
    * no ancestral relation and no backdoor common ancestor gives
      ``INDEPENDENT``;
    * exactly one Gaussian gives the direction from the Gaussian one;
    * an ancestral relation without backdoor common ancestors gives the
      causal direction;
    * otherwise ``BCA_NONEMPTY``.
    """
    if i == j:
        raise ValueError("pair needs two distinct vertices")
    removed = frozenset(removed)
    if i in removed or j in removed:
        raise ValueError("pair endpoints cannot be removed")
    keep = [v for v in model.dag.vertices if v not in removed]
    sub = induced_subgraph(model.dag, keep)
    flags = model.gaussian

    def gaussian(v):
        return flags[v] and all(flags[k] for k in ancestors(sub, v))

    gi, gj = gaussian(i), gaussian(j)
    if gi and gj:
        return PairVerdict.BOTH_GAUSSIAN
    bca = backdoor_common_ancestors(sub, i, j)
    i_anc_j = i in ancestors(sub, j)
    j_anc_i = j in ancestors(sub, i)
    if not (bca or i_anc_j or j_anc_i):
        return PairVerdict.INDEPENDENT
    if gi:
        return PairVerdict.I_TO_J
    if gj:
        return PairVerdict.J_TO_I
    if not bca:
        return PairVerdict.I_TO_J if i_anc_j else PairVerdict.J_TO_I
    return PairVerdict.BCA_NONEMPTY
