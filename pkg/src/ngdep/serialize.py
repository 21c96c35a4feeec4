"""JSON files for DSEPs, DEPs and ground-truth models.

All writers produce sorted, indented JSON so that repeated runs with the
same inputs give byte-identical files.

DSEP file::

    {"graph": <graph JSON>, "sepsets": [[a, b, [s1, ...]], ...]}

DEP file::

    {"graph": <graph JSON>, "provenance": [[a, b, tag], ...], "log": {...}}

Model file::

    {"nodes": [...], "B": [[...], ...], "disturbances": [...],
     "dag": <graph JSON>, "oracle_dep": <graph JSON>}

A bare graph JSON object is accepted wherever a DSEP or DEP is read; its
sepsets (or provenance) are then empty.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

import numpy as np

from ngdep.depfind import Dep
from ngdep.graph import GraphError, MixedGraph, SepsetMap, from_json_dict, pair, to_json_dict
from ngdep.pc import Dsep
from ngdep.synth import NgDag


def dumps(obj: Any) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _load(path: str | Path) -> dict:
    try:
        with open(path) as fh:
            obj = json.load(fh)
    except json.JSONDecodeError as exc:
        raise GraphError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(obj, dict):
        raise GraphError(f"{path}: expected a JSON object")
    return obj


def _index(g: MixedGraph) -> dict[str, int]:
    return {g.name(v): v for v in g.vertices}


# ---------------------------------------------------------------------------
# DSEP


def dsep_to_dict(dsep: Dsep) -> dict:
    g = dsep.graph
    seps = [
        [g.name(a), g.name(b), [g.name(s) for s in sorted(S)]]
        for (a, b), S in sorted(dsep.sepsets.items())
    ]
    return {"graph": to_json_dict(g), "sepsets": seps}


def dsep_from_dict(obj: dict) -> Dsep:
    g = from_json_dict(obj.get("graph", obj))
    idx = _index(g)
    sepsets = SepsetMap()
    for entry in obj.get("sepsets", []):
        try:
            a, b, S = entry
            sepsets[idx[a], idx[b]] = tuple(sorted(idx[s] for s in S))
        except (KeyError, ValueError, TypeError) as exc:
            raise GraphError(f"bad sepset entry {entry!r}") from exc
    return Dsep(g, sepsets)


def write_dsep(dsep: Dsep, path: str | Path) -> None:
    Path(path).write_text(dumps(dsep_to_dict(dsep)))


def read_dsep(path: str | Path) -> Dsep:
    return dsep_from_dict(_load(path))


# ---------------------------------------------------------------------------
# DEP


def dep_to_dict(dep: Dep) -> dict:
    g = dep.graph
    prov = [[g.name(a), g.name(b), tag] for (a, b), tag in sorted(dep.provenance.items())]
    return {"graph": to_json_dict(g), "provenance": prov, "log": dict(dep.log)}


def dep_from_dict(obj: dict) -> Dep:
    g = from_json_dict(obj.get("graph", obj))
    idx = _index(g)
    prov = {}
    for entry in obj.get("provenance", []):
        try:
            a, b, tag = entry
            prov[pair(idx[a], idx[b])] = str(tag)
        except (KeyError, ValueError, TypeError) as exc:
            raise GraphError(f"bad provenance entry {entry!r}") from exc
    return Dep(g, prov, dict(obj.get("log", {})))


def write_dep(dep: Dep, path: str | Path) -> None:
    Path(path).write_text(dumps(dep_to_dict(dep)))


def read_dep(path: str | Path) -> Dep:
    return dep_from_dict(_load(path))


# ---------------------------------------------------------------------------
# models


def model_to_dict(model: NgDag, names=None) -> dict:
    from ngdep.pclingam import oracle_dep

    names = list(names) if names is not None else list(model.dag.vertex_names())
    dag = MixedGraph(model.dag.vertices, model.dag.directed, (), tuple(names))
    dep = oracle_dep(model).graph
    dep = MixedGraph(dep.vertices, dep.directed, dep.undirected, tuple(names))
    return {
        "nodes": names,
        "B": [[float(b) for b in row] for row in model.B],
        "disturbances": list(model.disturbances),
        "dag": to_json_dict(dag),
        "oracle_dep": to_json_dict(dep),
    }


def model_from_dict(obj: dict) -> NgDag:
    try:
        names = [str(n) for n in obj["nodes"]]
        B = np.array(obj["B"], dtype=float)
        dist = tuple(obj["disturbances"])
    except (KeyError, TypeError, ValueError) as exc:
        raise GraphError("model JSON needs 'nodes', 'B' and 'disturbances'") from exc
    p = len(names)
    if B.shape != (p, p):
        raise GraphError(f"B has shape {B.shape}, expected {(p, p)}")
    edges = [(int(i), int(j)) for j, i in zip(*np.nonzero(B))]
    dag = MixedGraph.from_edges(p, edges, names=names)
    return NgDag(dag, B, dist)


def write_model(model: NgDag, path: str | Path, names=None) -> None:
    Path(path).write_text(dumps(model_to_dict(model, names)))


def read_model(path: str | Path) -> NgDag:
    return model_from_dict(_load(path))
