"""Timing and accuracy harness comparing the two DEP estimators.

For every ``(p, n, iteration)`` a complete ngDAG is generated and sampled,
PC is run with the d-separation oracle (so the DSEP is exact), and each
method turns that DSEP into a DEP from the data.  Only the DSEP to DEP
step is timed.  A run is correct when its DEP equals the model's
reference DEP.
"""

from __future__ import annotations

import csv
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from ngdep.depfind import find_dep
from ngdep.pc import run_pc
from ngdep.pclingam import DEFAULT_MAX_ENUM, EnumerationLimitError, oracle_dep, run_pc_lingam
from ngdep.providers import OracleCI, data_providers
from ngdep.seeding import substream
from ngdep.stats import TestConfig
from ngdep.synth import random_complete_ngdag, sample

PROPOSED = "proposed"
PCLINGAM = "pclingam"
METHODS = (PROPOSED, PCLINGAM)
HEADER = ("p", "n", "method", "iter", "seconds", "correct")
THREADS_ENV = "NGDEP_THREADS"


@dataclass(frozen=True, order=True)
class BenchRecord:
    """One timed DSEP to DEP run."""

    p: int
    n: int
    method: str
    iter: int
    seconds: float
    correct: bool

    def __post_init__(self):
        if self.seconds < 0:
            raise ValueError("seconds must be non-negative")

    def row(self) -> list[str]:
        return [str(self.p), str(self.n), self.method, str(self.iter), f"{self.seconds:.6f}", str(int(self.correct))]

    @classmethod
    def from_row(cls, row: Sequence[str]) -> "BenchRecord":
        p, n, method, it, sec, ok = row
        return cls(int(p), int(n), method, int(it), float(sec), ok.strip().lower() in ("1", "true"))


@dataclass(frozen=True)
class _Task:
    p: int
    n: int
    it: int
    seed: int
    methods: tuple[str, ...]
    config: TestConfig
    max_enum: int


def iteration_seed(seed: int, p: int, n: int, it: int) -> int:
    """Seed of the model and sample used by one benchmark iteration."""
    return int(substream(seed, "bench", p, n, it).integers(2**63 - 1))


def _run_task(task: _Task) -> tuple[list[BenchRecord], list[str]]:
    s = iteration_seed(task.seed, task.p, task.n, task.it)
    model = random_complete_ngdag(task.p, seed=s)
    data = sample(model, task.n, seed=s)
    dsep = run_pc(OracleCI(model), task.p)
    truth = oracle_dep(model).graph
    config = TestConfig(
        task.config.alpha_gauss, task.config.alpha_indep, task.config.alpha_ci,
        task.config.hsic_subsample, s,
    )
    records, notes = [], []
    for method in task.methods:
        prov = data_providers(data, config)
        t0 = time.perf_counter()
        try:
            if method == PROPOSED:
                dep = find_dep(dsep, prov.gauss, prov.indep)
            else:
                dep = run_pc_lingam(dsep, prov.gauss, max_enum=task.max_enum)
        except EnumerationLimitError as exc:
            notes.append(f"p={task.p} n={task.n} iter={task.it} {method}: {exc}")
            continue
        seconds = time.perf_counter() - t0
        records.append(BenchRecord(task.p, task.n, method, task.it, seconds, dep.graph == truth))
    return records, notes


def default_threads() -> int:
    """Worker count from ``NGDEP_THREADS`` (default 1)."""
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ValueError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None


def run_bench(
    ps: Iterable[int],
    ns: Iterable[int],
    iters: int = 10,
    methods: Sequence[str] = METHODS,
    seed: int = 0,
    config: TestConfig | None = None,
    *,
    max_enum: int = DEFAULT_MAX_ENUM,
    threads: int | None = None,
) -> tuple[list[BenchRecord], list[str]]:
    """Run every ``(p, n, iteration)`` cell.

    Parameters
    ----------
    ps, ns : iterables of int
    iters : int
        Iterations per cell.
    methods : sequence of {"proposed", "pclingam"}
    seed : int
        Master seed.  Each iteration derives its own model and sample
        seed, shared by both methods.
    config : TestConfig, optional
        Test levels; its seed is replaced per iteration.
    threads : int, optional
        Worker processes; defaults to :func:`default_threads`.  Timings
        are taken inside the worker that runs the iteration.

    Returns
    -------
    records : list of BenchRecord
        Sorted by ``(p, n, method, iter)``.
    notes : list of str
        Runs skipped because the enumeration cap was exceeded.
    """
    for m in methods:
        if m not in METHODS:
            raise ValueError(f"unknown method {m!r}; choose from {METHODS}")
    if iters < 1:
        raise ValueError("iters must be positive")
    config = config or TestConfig()
    threads = default_threads() if threads is None else max(1, int(threads))
    tasks = [
        _Task(p, n, it, seed, tuple(methods), config, max_enum)
        for p in ps for n in ns for it in range(iters)
    ]
    if threads == 1:
        results = [_run_task(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_run_task, tasks))
    records = sorted(r for rs, _ in results for r in rs)
    notes = [msg for _, ns_ in results for msg in ns_]
    return records, notes


def write_records(records: Iterable[BenchRecord], path: str | Path) -> None:
    """Append rows to a bench CSV, writing the header for a new file."""
    path = Path(path)
    fresh = not path.exists() or path.stat().st_size == 0
    if not fresh:
        with open(path, newline="") as fh:
            head = next(csv.reader(fh), None)
        if tuple(head or ()) != HEADER:
            raise ValueError(f"{path}: existing header {head} differs from {list(HEADER)}")
    with open(path, "a", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if fresh:
            w.writerow(HEADER)
        for r in records:
            w.writerow(r.row())


def read_records(path: str | Path) -> list[BenchRecord]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(rows[0]) != HEADER:
        raise ValueError(f"{path}: not a bench CSV")
    return [BenchRecord.from_row(r) for r in rows[1:] if r]


def summarize(records: Iterable[BenchRecord]) -> dict[tuple[int, int, str], dict]:
    """Per ``(p, n, method)``: run count, incorrect count, total seconds."""
    out: dict[tuple[int, int, str], dict] = {}
    for r in records:
        cell = out.setdefault((r.p, r.n, r.method), {"runs": 0, "incorrect": 0, "seconds": 0.0})
        cell["runs"] += 1
        cell["incorrect"] += not r.correct
        cell["seconds"] += r.seconds
    return dict(sorted(out.items()))


def format_summary(summary: dict) -> str:
    lines = [f"{'p':>3} {'n':>6} {'method':<9} {'runs':>4} {'wrong':>5} {'seconds':>9}"]
    for (p, n, m), c in summary.items():
        lines.append(f"{p:>3} {n:>6} {m:<9} {c['runs']:>4} {c['incorrect']:>5} {c['seconds']:>9.2f}")
    return "\n".join(lines)

