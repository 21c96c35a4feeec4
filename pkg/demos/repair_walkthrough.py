"""Repair an estimate that contradicts its DSEP.

The DSEP is the undirected pattern of x4 -> x1 -> {x2, x3, x5}, x2 -> x3.
A finite-sample estimate might instead contain the cycle
x1 -> x2 -> x3 -> x1 and the collider x4 -> x1 <- x5, neither of which the
DSEP allows.  ``check_consistency`` lists both problems and
``repair_exceptions`` reorients the disputed edges from a source vertex.

Run with ``python3 demos/repair_walkthrough.py``.
"""

from ngdep.depfind import Dep, check_consistency, repair_exceptions
from ngdep.graph import MixedGraph, SepsetMap
from ngdep.pc import Dsep


def main():
    dsep = Dsep(MixedGraph.from_edges(5, undirected=[(0, 1), (0, 2), (1, 2), (0, 3), (0, 4)]), SepsetMap())
    bad = MixedGraph.from_edges(5, directed=[(0, 1), (2, 0), (1, 2), (3, 0), (4, 0)])
    print("estimate:", sorted(bad.directed))
    for v in check_consistency(bad, dsep):
        print("  ", v.describe(bad))
    for seed in range(3):
        fixed = repair_exceptions(Dep(bad), dsep, seed=seed)
        left = check_consistency(fixed, dsep)
        print(f"seed {seed}: directed {sorted(fixed.graph.directed)} "
              f"undirected {sorted(fixed.graph.undirected)}  violations left: {len(left)}")


if __name__ == "__main__":
    main()
