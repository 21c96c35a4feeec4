import csv

import pytest

from ngdep import bench
from ngdep.bench import BenchRecord, iteration_seed, read_records, run_bench, summarize, write_records
from ngdep.depfind import find_dep
from ngdep.pc import run_pc
from ngdep.pclingam import oracle_dep, run_pc_lingam
from ngdep.providers import OracleCI, data_providers
from ngdep.stats import TestConfig
from ngdep.synth import random_complete_ngdag, sample


def _recount(r: BenchRecord) -> bool:
    """Correctness of one record recomputed outside the harness."""
    s = iteration_seed(0, r.p, r.n, r.iter)
    m = random_complete_ngdag(r.p, seed=s)
    prov = data_providers(sample(m, r.n, seed=s), TestConfig(seed=s))
    dsep = run_pc(OracleCI(m), r.p)
    if r.method == bench.PROPOSED:
        dep = find_dep(dsep, prov.gauss, prov.indep)
    else:
        dep = run_pc_lingam(dsep, prov.gauss)
    return dep.graph == oracle_dep(m).graph


@pytest.fixture(scope="module")
def small_run():
    return run_bench([5], [1500], iters=5, threads=1)


def test_row_count_and_order(small_run):
    records, notes = small_run
    assert len(records) == 10 and not notes
    assert records == sorted(records)
    assert {r.method for r in records} == set(bench.METHODS)
    assert all(r.seconds >= 0 for r in records)


def test_summary_matches_recount(small_run):
    records, _ = small_run
    summary = summarize(records)
    for (p, n, method), cell in summary.items():
        mine = [r for r in records if r.method == method]
        assert cell["runs"] == 5
        assert cell["incorrect"] == sum(not _recount(r) for r in mine)


def test_csv_is_append_only_with_fixed_header(tmp_path, small_run):
    records, _ = small_run
    path = tmp_path / "bench.csv"
    write_records(records[:4], path)
    write_records(records[4:], path)
    rows = list(csv.reader(path.open()))
    assert rows[0] == ["p", "n", "method", "iter", "seconds", "correct"]
    assert len(rows) == 11
    back = read_records(path)
    assert [(r.p, r.n, r.method, r.iter, r.correct) for r in back] == [
        (r.p, r.n, r.method, r.iter, r.correct) for r in records
    ]


def test_foreign_csv_is_not_appended_to(tmp_path):
    path = tmp_path / "other.csv"
    path.write_text("a,b\n1,2\n")
    with pytest.raises(ValueError):
        write_records([BenchRecord(5, 10, "proposed", 0, 0.1, True)], path)


def test_workers_give_the_same_verdicts():
    one, _ = run_bench([4], [600], iters=3, threads=1)
    two, _ = run_bench([4], [600], iters=3, threads=2)
    key = lambda rs: [(r.p, r.n, r.method, r.iter, r.correct) for r in rs]  # noqa: E731
    assert key(one) == key(two)


def test_cap_violations_are_reported_per_run():
    records, notes = run_bench([5], [400], iters=2, max_enum=100, threads=1)
    assert [r.method for r in records] == [bench.PROPOSED, bench.PROPOSED]
    assert len(notes) == 2 and "cap of 100" in notes[0]


def test_thread_count_from_environment(monkeypatch):
    monkeypatch.setenv(bench.THREADS_ENV, "3")
    assert bench.default_threads() == 3
    monkeypatch.setenv(bench.THREADS_ENV, "x")
    with pytest.raises(ValueError):
        bench.default_threads()


def test_bad_arguments():
    with pytest.raises(ValueError):
        run_bench([4], [100], methods=["lingam"])
    with pytest.raises(ValueError):
        run_bench([4], [100], iters=0)
    with pytest.raises(ValueError):
        BenchRecord(4, 100, "proposed", 0, -1.0, True)
