import sys
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

from ngdep.graph import MixedGraph
from ngdep.synth import GAUSSIAN, LOGNORMAL, model_from_edges

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

G, L = GAUSSIAN, LOGNORMAL


@pytest.fixture
def four_var_model():
    """Complete DAG x1 -> x2 -> x3 -> x4 (all forward edges); only x2 has a
    non-Gaussian disturbance."""
    return model_from_edges(
        4,
        {(0, 1): 0.8, (0, 2): 0.7, (0, 3): 0.6, (1, 2): 0.9, (1, 3): 0.5, (2, 3): 0.75},
        (G, L, G, G),
    )


@pytest.fixture
def five_var_dsep_graph():
    """Undirected pattern of x4 -> x1 -> {x2, x3, x5}, x2 -> x3."""
    return MixedGraph.from_edges(5, undirected=[(0, 1), (0, 2), (1, 2), (0, 3), (0, 4)])


@pytest.fixture
def five_var_bad_dep_graph():
    """Estimate with the cycle x1 -> x2 -> x3 -> x1 and collider x4 -> x1 <- x5."""
    return MixedGraph.from_edges(5, directed=[(0, 1), (2, 0), (1, 2), (3, 0), (4, 0)])
