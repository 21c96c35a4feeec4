"""Statistical kernels: regression residuals, Shapiro-Wilk, HSIC and Fisher-z.

All tests return a :class:`TestResult`.  Randomness (subsampling) is drawn
from a generator seeded by :class:`TestConfig`, so repeated calls with the
same inputs give identical answers.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import special, stats as sps

from ngdep.seeding import substream


class NumericalError(ArithmeticError):
    """Raised when a regression or covariance computation is ill-posed."""


class InputError(ValueError):
    """Raised when a statistical routine receives unusable input."""


@dataclass(frozen=True)
class TestResult:
    """Outcome of a hypothesis test.

    Attributes
    ----------
    statistic : float
    p_value : float
        In ``[0, 1]``.
    reject : bool
        ``p_value < alpha`` for the level used.
    """

    __test__ = False  # keep pytest from collecting this class

    statistic: float
    p_value: float
    reject: bool


@dataclass(frozen=True)
class TestConfig:
    """Significance levels and subsampling settings shared by the tests."""

    __test__ = False

    alpha_gauss: float = 0.05
    alpha_indep: float = 0.001
    alpha_ci: float = 0.01
    hsic_subsample: int = 1500
    seed: int = 0

    def __post_init__(self):
        for name in ("alpha_gauss", "alpha_indep", "alpha_ci"):
            a = getattr(self, name)
            if not 0.0 < a < 1.0:
                raise InputError(f"{name} must lie in (0, 1), got {a}")
        if self.hsic_subsample < 2:
            raise InputError("hsic_subsample must be at least 2")


@dataclass(frozen=True)
class Dataset:
    """Immutable ``n x p`` matrix of observations with column names."""

    values: np.ndarray
    names: tuple[str, ...] = field(default=())

    def __post_init__(self):
        vals = np.array(self.values, dtype=float, copy=True)
        if vals.ndim != 2:
            raise InputError("dataset values must be a 2-d array")
        n, p = vals.shape
        names = tuple(self.names) if self.names else tuple(f"x{k + 1}" for k in range(p))
        if len(names) != p:
            raise InputError(f"{len(names)} names for {p} columns")
        if not np.all(np.isfinite(vals)):
            raise InputError("dataset contains missing or non-finite values")
        if n < 2 or np.any(np.var(vals, axis=0) <= 0):
            raise InputError("every column needs strictly positive sample variance")
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "names", names)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]

    def column(self, i: int) -> np.ndarray:
        return self.values[:, i]

    def to_csv(self, path: str | Path | None = None) -> str:
        """Write (and return) CSV text with shortest round-trip floats."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.names)
        for row in self.values:
            w.writerow([repr(float(v)) for v in row])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text

    @classmethod
    def from_csv(cls, path: str | Path) -> "Dataset":
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        if not rows:
            raise InputError(f"{path}: empty file")
        header, body = rows[0], [r for r in rows[1:] if r]
        try:
            vals = np.array([[float(x) for x in r] for r in body], dtype=float)
        except ValueError as exc:
            raise InputError(f"{path}: non-numeric entry") from exc
        if vals.ndim != 2 or vals.shape[1] != len(header):
            raise InputError(f"{path}: ragged rows")
        return cls(vals, tuple(header))


# ---------------------------------------------------------------------------
# regression


def ols_residuals(y, X: Sequence = ()) -> tuple[np.ndarray, np.ndarray]:
    """Least-squares fit of ``y`` on the columns of ``X`` plus an intercept.

    Parameters
    ----------
    y : array_like, shape (n,)
    X : sequence of array_like, each shape (n,)
        May be empty, in which case the residual is ``y`` centred.

    Returns
    -------
    coefficients : ndarray, shape (len(X),)
        Slopes, in the order of ``X``; the intercept is not returned.
    residuals : ndarray, shape (n,)

    Raises
    ------
    NumericalError
        If the design matrix (intercept included) is rank deficient.
    """
    y = np.asarray(y, dtype=float)
    n = y.shape[0]
    if len(X) == 0:
        return np.zeros(0), y - y.mean()
    Z = np.column_stack([np.asarray(x, dtype=float) for x in X])
    if Z.shape[0] != n:
        raise InputError("regressors and response differ in length")
    Zc = Z - Z.mean(axis=0)
    yc = y - y.mean()
    coef, _, rank, sv = np.linalg.lstsq(Zc, yc, rcond=None)
    if rank < Zc.shape[1]:
        cond = np.inf if sv[-1] == 0 else sv[0] / sv[-1]
        raise NumericalError(f"singular design (rank {rank} of {Zc.shape[1]}, condition {cond:.3g})")
    return coef, yc - Zc @ coef


# ---------------------------------------------------------------------------
# Shapiro-Wilk (Royston's AS R94 algorithm)

_SW_C1 = (0.0, 0.221157, -0.147981, -2.071190, 4.434685, -2.706056)
_SW_C2 = (0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633)
_SW_C3 = (0.544, -0.39978, 0.025054, -6.714e-4)
_SW_C4 = (1.3822, -0.77857, 0.062767, -0.0020322)
_SW_C5 = (-1.5861, -0.31082, -0.083751, 0.0038915)
_SW_C6 = (-0.4803, -0.082676, 0.0030302)
_SW_G = (-2.273, 0.459)
SW_MAX_N = 5000


def _poly(coefs, x):
    out = 0.0
    for c in reversed(coefs):
        out = out * x + c
    return out


@lru_cache(maxsize=64)
def _sw_coefficients(n: int) -> np.ndarray:
    """Positive weights ``a_1 >= ... >= a_{n//2}`` for the lower half."""
    half = n // 2
    if n == 3:
        return np.array([math.sqrt(0.5)])
    m = sps.norm.ppf((np.arange(1, half + 1) - 0.375) / (n + 0.25))
    summ2 = 2.0 * float(np.sum(m**2))
    ssumm2 = math.sqrt(summ2)
    rsn = 1.0 / math.sqrt(n)
    a = np.empty(half)
    a1 = _poly(_SW_C1, rsn) - m[0] / ssumm2
    if n > 5:
        a2 = -m[1] / ssumm2 + _poly(_SW_C2, rsn)
        fac = math.sqrt((summ2 - 2 * m[0] ** 2 - 2 * m[1] ** 2) / (1 - 2 * a1**2 - 2 * a2**2))
        a[1] = a2
        start = 2
    else:
        fac = math.sqrt((summ2 - 2 * m[0] ** 2) / (1 - 2 * a1**2))
        start = 1
    a[0] = a1
    a[start:] = -m[start:] / fac
    a.flags.writeable = False
    return a


def _sw_pvalue(w: float, n: int) -> float:
    w1 = 1.0 - w
    if n == 3:
        pw = 6.0 / math.pi * (math.asin(math.sqrt(w)) - math.asin(math.sqrt(0.75)))
        return min(max(pw, 0.0), 1.0)
    if w1 <= 0:
        return 1.0
    y = math.log(w1)
    if n <= 11:
        gamma = _poly(_SW_G, n)
        if y >= gamma:
            return 1e-99
        y = -math.log(gamma - y)
        mu = _poly(_SW_C3, n)
        sigma = math.exp(_poly(_SW_C4, n))
    else:
        xx = math.log(n)
        mu = _poly(_SW_C5, xx)
        sigma = math.exp(_poly(_SW_C6, xx))
    return float(sps.norm.sf((y - mu) / sigma))


def shapiro_wilk(sample, alpha: float = 0.05, *, seed: int = 0) -> TestResult:
    """Shapiro-Wilk test of normality.

    The W statistic uses Royston's polynomial approximation of the
    normal-order-statistic weights, and the p-value his normalising
    transformation of ``log(1 - W)``.  Samples longer than 5000 are
    replaced by a seeded subsample of 5000 points.

    Parameters
    ----------
    sample : array_like, shape (n,)
    alpha : float
        Level used for ``reject``.
    seed : int
        Seed of the subsample drawn when ``n > 5000``.

    Returns
    -------
    TestResult
        ``reject`` means the sample looks non-Gaussian.
    """
    x = np.asarray(sample, dtype=float).ravel()
    n = x.size
    if n < 3:
        raise InputError("Shapiro-Wilk needs at least 3 observations")
    if n > SW_MAX_N:
        idx = substream(seed, "shapiro-subsample").choice(n, SW_MAX_N, replace=False)
        x = x[np.sort(idx)]
        n = SW_MAX_N
    x = np.sort(x)
    rng = x[-1] - x[0]
    if rng <= 0 or not np.isfinite(rng):
        raise InputError("Shapiro-Wilk needs a non-constant sample")
    x = (x - x.mean()) / rng
    a = _sw_coefficients(n)
    half = a.size
    num = float(a @ (x[::-1][:half] - x[:half]))
    ssq = float(x @ x)
    w = min(num * num / ssq, 1.0)
    p = _sw_pvalue(w, n)
    return TestResult(w, p, p < alpha)


# ---------------------------------------------------------------------------
# HSIC with gamma approximation

_BANDWIDTH_POINTS = 100


def _median_bandwidth(x: np.ndarray) -> float:
    pts = x[:_BANDWIDTH_POINTS]
    d = np.abs(pts[:, None] - pts[None, :])[np.triu_indices(pts.size, k=1)]
    d = d[d > 0]
    if d.size == 0:
        raise InputError("HSIC needs a non-constant column")
    return float(np.median(d))


def _centred_gram(x: np.ndarray) -> tuple[np.ndarray, float]:
    """Doubly centred Gaussian Gram matrix and mean off-diagonal entry."""
    n = x.size
    sigma = _median_bandwidth(x)
    K = np.subtract.outer(x, x)
    np.square(K, out=K)
    K *= -0.5 / sigma**2
    np.exp(K, out=K)
    mu = (K.sum() - n) / (n * (n - 1))
    row = K.mean(axis=0)
    K -= row[None, :]
    K -= row[:, None]
    K += row.mean()
    return K, mu


def hsic_test(x, y, config: TestConfig | None = None, *, alpha: float | None = None) -> TestResult:
    """HSIC independence test with a gamma null approximation.

    Gaussian kernels use the median pairwise distance of (up to) the first
    100 points as bandwidth.  When ``n`` exceeds ``config.hsic_subsample``
    a seeded uniform subsample of that size (same rows for ``x`` and
    ``y``) is used.

    Parameters
    ----------
    x, y : array_like, shape (n,)
    config : TestConfig, optional
    alpha : float, optional
        Overrides ``config.alpha_indep``.

    Returns
    -------
    TestResult
        ``statistic`` is the biased HSIC estimate; ``reject`` means
        dependence was detected.
    """
    config = config or TestConfig()
    alpha = config.alpha_indep if alpha is None else alpha
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if x.size != y.size:
        raise InputError("HSIC inputs differ in length")
    n = x.size
    if n < 20:
        raise InputError("HSIC needs at least 20 observations")
    if n > config.hsic_subsample:
        idx = _subsample_index(n, config.hsic_subsample, config.seed)
        x, y = x[idx], y[idx]
        n = x.size
    if np.ptp(x) <= 0 or np.ptp(y) <= 0:
        raise InputError("HSIC needs non-constant columns")

    Kc, mu_x = _centred_gram(x)
    Lc, mu_y = _centred_gram(y)
    KL = Kc * Lc
    stat = float(KL.sum()) / n  # n times the biased estimate
    hsic_b = stat / n

    np.square(KL, out=KL)
    var = (KL.sum() - np.trace(KL)) / 36.0 / n / (n - 1)
    var = var * 72.0 * (n - 4) * (n - 5) / n / (n - 1) / (n - 2) / (n - 3)
    mean = (1.0 + mu_x * mu_y - mu_x - mu_y) / n
    if var <= 0 or mean <= 0:
        return TestResult(max(hsic_b, 0.0), 1.0, False)
    shape = mean**2 / var
    scale = var * n / mean
    p = float(special.gammaincc(shape, max(stat, 0.0) / scale))
    return TestResult(max(hsic_b, 0.0), min(max(p, 0.0), 1.0), p < alpha)


@lru_cache(maxsize=32)
def _subsample_index(n: int, m: int, seed: int) -> np.ndarray:
    idx = np.sort(substream(seed, "hsic-subsample", n).choice(n, m, replace=False))
    idx.flags.writeable = False
    return idx


# ---------------------------------------------------------------------------
# Fisher-z partial correlation


def fisher_z_ci(data: Dataset | np.ndarray, i: int, j: int, S=(), alpha: float = 0.01) -> TestResult:
    """Partial-correlation test of ``x_i`` and ``x_j`` given ``x_S``.

    Returns
    -------
    TestResult
        ``statistic`` is ``|z| sqrt(n - |S| - 3)``; ``reject`` means the
        variables were found conditionally dependent.

    Raises
    ------
    NumericalError
        If the correlation submatrix is singular.
    """
    X = data.values if isinstance(data, Dataset) else np.asarray(data, dtype=float)
    S = sorted(S)
    n = X.shape[0]
    if len(S) > n - 4:
        raise InputError("conditioning set too large for the sample size")
    idx = [i, j, *S]
    C = np.corrcoef(X[:, idx], rowvar=False)
    C = np.atleast_2d(C)
    cond = np.linalg.cond(C)
    if not np.isfinite(cond) or cond > 1e12:
        raise NumericalError(f"singular correlation submatrix (condition {cond:.3g})")
    P = np.linalg.inv(C)
    r = -P[0, 1] / math.sqrt(P[0, 0] * P[1, 1])
    r = min(max(r, -1.0 + 1e-15), 1.0 - 1e-15)
    z = 0.5 * math.log1p(2 * r / (1 - r))
    stat = abs(z) * math.sqrt(n - len(S) - 3)
    p = float(2.0 * sps.norm.sf(stat))
    return TestResult(stat, p, p < alpha)
