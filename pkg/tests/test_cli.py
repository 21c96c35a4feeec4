import csv
import json

import pytest

from ngdep import serialize
from ngdep.cli import EXIT_ERROR, EXIT_INCONSISTENT, EXIT_OK, main
from ngdep.depfind import Dep, check_consistency
from ngdep.graph import MixedGraph, SepsetMap, from_json_dict
from ngdep.pc import Dsep
from ngdep.stats import Dataset


def _graph(path):
    return from_json_dict(json.loads(path.read_text())["graph"])


@pytest.fixture
def model_file(tmp_path, four_var_model):
    path = tmp_path / "model.json"
    serialize.write_model(four_var_model, path)
    return path


def test_gen_writes_all_files(tmp_path):
    out = tmp_path / "g"
    assert main(["gen", "--p", "4", "--n", "1000", "--seed", "3", "--out", str(out), "--dot", str(tmp_path / "t.dot")]) == 0
    data = Dataset.from_csv(out / "data.csv")
    assert data.values.shape == (1000, 4)
    model = serialize.read_model(out / "model.json")
    assert len(model.dag.directed) == 6
    assert "digraph" in (tmp_path / "t.dot").read_text()
    ref = serialize.read_dep(out / "oracle_dep.json")
    assert ref.graph.skeleton_edges() == model.dag.skeleton_edges()


def test_gen_is_reproducible(tmp_path):
    for d in ("a", "b"):
        main(["gen", "--p", "5", "--n", "200", "--mode", "random", "--density", "0.6", "--seed", "9", "--out", str(tmp_path / d)])
    for name in ("data.csv", "model.json", "oracle_dep.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_oracle_discover_on_the_four_variable_example(tmp_path, model_file):
    out = tmp_path / "dep.json"
    assert main(["discover", "--oracle", "--model", str(model_file), "--out", str(out)]) == EXIT_OK
    g = _graph(out)
    assert g.undirected == {(2, 3)}
    assert g.directed == {(0, 1), (0, 2), (0, 3), (1, 2), (1, 3)}
    prov = json.loads(out.read_text())["provenance"]
    assert ["x1", "x2", "gaussian-rule"] in prov


def test_given_dsep_skips_pc(tmp_path, model_file, capsys):
    # a pattern PC would never return for this model: fully directed chain
    dsep = Dsep(MixedGraph.from_edges(4, [(0, 1), (1, 2), (2, 3)]), SepsetMap())
    serialize.write_dsep(dsep, tmp_path / "dsep.json")
    out = tmp_path / "dep.json"
    rc = main(["discover", "--oracle", "--model", str(model_file), "--dsep", str(tmp_path / "dsep.json"), "--out", str(out)])
    assert rc == EXIT_OK
    assert _graph(out) == dsep.graph


def test_pc_then_discover_from_files(tmp_path):
    d = tmp_path / "g"
    main(["gen", "--p", "4", "--n", "2000", "--seed", "1", "--out", str(d)])
    assert main(["pc", "--data", str(d / "data.csv"), "--out", str(tmp_path / "dsep.json")]) == EXIT_OK
    outs = []
    for k in range(2):
        out = tmp_path / f"dep{k}.json"
        rc = main(["discover", "--data", str(d / "data.csv"), "--dsep", str(tmp_path / "dsep.json"), "--out", str(out)])
        assert rc == EXIT_OK
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]


def test_baseline_in_oracle_mode(tmp_path, model_file):
    out = tmp_path / "dep.json"
    assert main(["baseline", "--oracle", "--model", str(model_file), "--out", str(out)]) == EXIT_OK
    assert _graph(out).undirected == {(2, 3)}


def test_baseline_cap_is_an_error(tmp_path, model_file, capsys):
    rc = main(["baseline", "--oracle", "--model", str(model_file), "--max-enum", "10"])
    assert rc == EXIT_ERROR
    assert "cap of 10" in capsys.readouterr().err


def _write_fixtures(tmp_path, dsep_graph, dep_graph):
    serialize.write_dsep(Dsep(dsep_graph, SepsetMap()), tmp_path / "dsep.json")
    serialize.write_dep(Dep(dep_graph), tmp_path / "dep.json")
    return str(tmp_path / "dep.json"), str(tmp_path / "dsep.json")


def test_check_reports_two_violations(tmp_path, five_var_dsep_graph, five_var_bad_dep_graph, capsys):
    dep, dsep = _write_fixtures(tmp_path, five_var_dsep_graph, five_var_bad_dep_graph)
    assert main(["check", dep, dsep]) == EXIT_INCONSISTENT
    out = capsys.readouterr().out
    assert "2 violation(s)" in out and "cycle" in out and "v-structure" in out


def test_check_identical_files_is_clean(tmp_path, five_var_dsep_graph):
    dep, dsep = _write_fixtures(tmp_path, five_var_dsep_graph, five_var_dsep_graph)
    assert main(["check", dep, dsep]) == EXIT_OK


def test_check_node_mismatch_is_an_input_error(tmp_path, five_var_dsep_graph):
    dep, dsep = _write_fixtures(tmp_path, five_var_dsep_graph, MixedGraph.from_edges(4, [(0, 1)]))
    assert main(["check", dep, dsep]) == EXIT_ERROR


def test_repair_produces_a_consistent_dep(tmp_path, five_var_dsep_graph, five_var_bad_dep_graph):
    dep, dsep = _write_fixtures(tmp_path, five_var_dsep_graph, five_var_bad_dep_graph)
    out = tmp_path / "fixed.json"
    assert main(["repair", dep, dsep, "--seed", "4", "--out", str(out)]) == EXIT_OK
    fixed = serialize.read_dep(out)
    assert check_consistency(fixed, Dsep(five_var_dsep_graph, SepsetMap())) == []
    assert main(["check", str(out), dsep]) == EXIT_OK


def test_discover_with_repair_flag(tmp_path, model_file):
    out = tmp_path / "dep.json"
    rc = main(["discover", "--oracle", "--model", str(model_file), "--repair", "--out", str(out)])
    assert rc == EXIT_OK and _graph(out).undirected == {(2, 3)}


def test_bench_subcommand(tmp_path, capsys):
    out = tmp_path / "b.csv"
    assert main(["bench", "--p", "4", "--n", "300", "--iters", "2", "--out", str(out)]) == EXIT_OK
    rows = list(csv.reader(out.open()))
    assert rows[0] == ["p", "n", "method", "iter", "seconds", "correct"] and len(rows) == 5
    assert "pclingam" in capsys.readouterr().out


def test_usage_errors(tmp_path, capsys):
    assert main(["discover", "--oracle"]) == EXIT_ERROR
    assert main(["discover"]) == EXIT_ERROR
    assert main(["pc", "--data", str(tmp_path / "missing.csv")]) == EXIT_ERROR
    with pytest.raises(SystemExit):
        main(["bench", "--p", "a,b", "--out", "x"])
    err = capsys.readouterr().err
    assert "error:" in err


def test_module_entry_point(tmp_path):
    import subprocess
    import sys

    d = tmp_path / "g"
    r = subprocess.run([sys.executable, "-m", "ngdep", "gen", "--p", "3", "--n", "50", "--out", str(d)],
                       capture_output=True, text=True)
    assert r.returncode == 0 and (d / "data.csv").exists()
