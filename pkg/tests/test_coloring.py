import json

import numpy as np
import pytest

from noisesync.analysis import PhaseReport
from noisesync.coloring import (
    Coloring,
    Graph,
    GraphError,
    NetSettings,
    chromatic_number_bruteforce,
    circulant_graph,
    color_via_oscillators,
    complete_graph,
    cycle_graph,
    cyclic_greedy_coloring,
    derive_seed,
    diamond_graph,
    parse_dimacs,
    phase_order,
    serialize_dimacs,
    verify_coloring,
)
from noisesync.engine import SimConfig
from noisesync.noise import NoiseSpec


def test_parse_triangle():
    g = parse_dimacs("c a triangle\np edge 3 3\ne 1 2\ne 2 3\ne 1 3\n")
    assert g == complete_graph(3)


def test_parse_deduplicates():
    g = parse_dimacs("p edge 3 2\ne 1 2\ne 2 1\ne 1 2\n")
    assert g.edges == {(1, 2)}


@pytest.mark.parametrize(
    "text",
    [
        "e 1 2\n",
        "p edge 3 3\np edge 3 3\n",
        "p edge 3 3\ne 4 1\n",
        "p edge 3 3\ne 2 2\n",
        "p edge x 3\n",
        "p edge 3 3\ne 1\n",
        "p edge 3 3\nq 1 2\n",
    ],
)
def test_parse_errors(text):
    with pytest.raises(GraphError):
        parse_dimacs(text)


def test_serialize_round_trip():
    g = circulant_graph(9, 4)
    text = serialize_dimacs(g, comment="ring")
    assert text.startswith("c ring\np edge 9 18\n")
    assert parse_dimacs(text) == g


def test_graph_validation():
    with pytest.raises(GraphError):
        Graph(3, frozenset({(1, 1)}))
    with pytest.raises(GraphError):
        Graph(3, frozenset({(1, 4)}))
    with pytest.raises(GraphError):
        Graph.from_edges(3, [(1, 2), (2, 1)])
    assert Graph(3, [(2, 1)]).edges == {(1, 2)}


def test_circulant_examples():
    assert circulant_graph(3, 2) == complete_graph(3)
    assert circulant_graph(5, 4) == complete_graph(5)
    g = circulant_graph(8, 4)
    assert len(g.edges) == 16 and all(g.degree(v) == 4 for v in g.nodes)
    for bad in [(8, 3), (4, 4), (5, 0)]:
        with pytest.raises(GraphError):
            circulant_graph(*bad)


def test_phase_order_examples():
    assert phase_order([0, 340, 120, 200]).sequence == (1, 3, 4, 2)
    assert phase_order([15.0] * 5).sequence == (1, 2, 3, 4, 5)
    rep = PhaseReport(0, 1e-4, (0.0, 95.0, 275.0, 185.0), (0, 0, 0, 0))
    assert phase_order(rep).sequence == (1, 2, 4, 3)
    assert phase_order([720.0, -30.0]).phases_deg == (0.0, 330.0)


def test_cyclic_greedy_examples():
    c = cyclic_greedy_coloring((1, 2, 4, 3), diamond_graph())
    assert c.num_colors == 3 and c.classes() == [[1], [2, 4], [3]]
    for order in [(1, 2, 3), (3, 1, 2), (2, 3, 1)]:
        assert cyclic_greedy_coloring(order, complete_graph(3)).num_colors == 3
    c = cyclic_greedy_coloring((1, 3, 2, 4), cycle_graph(4))
    assert c.num_colors == 2 and c.classes() == [[1, 3], [2, 4]]


def test_cyclic_greedy_uses_best_rotation():
    # linear pass from node 1 needs 3 classes; starting at node 2 needs 2
    g = cycle_graph(4)
    assert cyclic_greedy_coloring((1, 3, 2, 4), g).num_colors == 2
    g = Graph(4, [(1, 2), (3, 4)])
    assert cyclic_greedy_coloring((2, 3, 4, 1), g).num_colors == 2


def test_cyclic_greedy_requires_permutation():
    with pytest.raises(GraphError):
        cyclic_greedy_coloring((1, 2), complete_graph(3))


def test_verify_coloring():
    tri = complete_graph(3)
    assert verify_coloring(tri, [1, 2, 3]).valid
    bad = verify_coloring(tri, [1, 1, 2])
    assert not bad and bad.violations == ((1, 2),)
    with pytest.raises(GraphError):
        verify_coloring(tri, {1: 1, 2: 2})


def test_chromatic_oracle():
    assert chromatic_number_bruteforce(complete_graph(4)) == 4
    assert chromatic_number_bruteforce(cycle_graph(5)) == 3
    assert chromatic_number_bruteforce(cycle_graph(4)) == 2
    assert chromatic_number_bruteforce(diamond_graph()) == 3
    assert chromatic_number_bruteforce(Graph(3)) == 1
    assert chromatic_number_bruteforce(circulant_graph(8, 4)) == 4
    assert chromatic_number_bruteforce(circulant_graph(9, 4)) == 3
    with pytest.raises(GraphError):
        chromatic_number_bruteforce(complete_graph(17))


def test_derive_seed_deterministic_and_distinct():
    assert derive_seed(3, 0) == derive_seed(3, 0)
    assert len({derive_seed(3, r) for r in range(50)}) == 50
    assert 0 <= derive_seed(2**70, 1) < 2**63


def test_pipeline_single_node():
    res = color_via_oscillators(Graph(1), runs=2, seed=0)
    assert res.locked and res.num_colors == 1 and res.locked_runs == 2


def test_pipeline_triangle_and_diamond():
    tri = color_via_oscillators(complete_graph(3), runs=6, seed=7)
    assert tri.num_colors == chromatic_number_bruteforce(complete_graph(3))
    dia = color_via_oscillators(diamond_graph(), runs=12, seed=1)
    assert dia.num_colors == 3 and verify_coloring(diamond_graph(), dia.coloring)
    d = json.loads(dia.to_json())
    assert {"num_colors", "assignment", "locked_runs", "total_runs", "order"} <= set(d)
    assert d["total_runs"] == 12 and len(d["runs"]) == 12


def test_pipeline_unlocked_result_has_no_coloring():
    res = color_via_oscillators(complete_graph(3), NetSettings(c_c=0.05e-12, detune_spread=0.02),
                                runs=2, seed=0)
    assert not res.locked and res.coloring is None
    d = res.to_dict()
    assert d["status"] == "unlocked" and d["num_colors"] is None and d["assignment"] is None


def test_pipeline_never_beats_oracle():
    for g in [cycle_graph(5), circulant_graph(7, 4), complete_graph(4)]:
        res = color_via_oscillators(g, runs=4, seed=2)
        if res.coloring is not None:
            assert verify_coloring(g, res.coloring)
            assert res.num_colors >= chromatic_number_bruteforce(g)


def test_pipeline_is_deterministic():
    g = cycle_graph(4)
    cfg = SimConfig.for_network(NetSettings().network(g), t_end=20e-3)
    a = color_via_oscillators(g, NetSettings(), NoiseSpec(0.2), cfg, runs=3, seed=5)
    b = color_via_oscillators(g, NetSettings(), NoiseSpec(0.2), cfg, runs=3, seed=5)
    assert a.to_json() == b.to_json()


def test_runs_must_be_positive():
    with pytest.raises(ValueError):
        color_via_oscillators(complete_graph(3), runs=0)


def test_coloring_num_colors():
    assert Coloring({1: 1, 2: 5, 3: 1}).num_colors == 2
