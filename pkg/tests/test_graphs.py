import json

import pytest

import _props
from typedag.graphs import (
    CycleError,
    Dag,
    Pdag,
    TypedDag,
    TypeMap,
    d_separated,
    graph_from_json,
    graph_to_json,
    is_type_consistent,
    markov_equivalent,
    pdag_is_type_consistent,
    skeleton_of,
    t_edges,
    topological_order,
    two_type_forks,
    typed_dag_from_json,
    v_structures,
)


def test_dag_rejects_cycles_and_bad_vertices():
    with pytest.raises(CycleError):
        Dag(3, {(0, 1), (1, 2), (2, 0)})
    with pytest.raises(ValueError):
        Dag(2, {(0, 0)})
    with pytest.raises(ValueError):
        Dag(2, {(0, 5)})
    with pytest.raises(ValueError):
        Dag(-1)


def test_topological_order_prefers_small_indices():
    assert topological_order(4, [(3, 0), (2, 1)]) == [2, 1, 3, 0]
    dag = Dag(4, {(3, 0), (2, 1)})
    assert dag.topological_order() == (2, 1, 3, 0)


def test_dag_neighbourhoods():
    dag = Dag(4, {(0, 1), (1, 2), (3, 2)})
    assert dag.parents(2) == {1, 3}
    assert dag.children(0) == {1}
    assert dag.neighbors(1) == {0, 2}
    assert dag.descendants(0) == {0, 1, 2}
    assert dag.ancestors_of([2]) == {0, 1, 2, 3}
    assert dag.adjacent(2, 3) and not dag.adjacent(0, 3)


def test_pdag_union_convention():
    g = Pdag(3, {(0, 1), (1, 0), (1, 2)}, {(2, 1)})
    assert g.directed == frozenset()
    assert g.undirected == {(0, 1), (1, 2)}
    assert g.edge_count() == 2
    with pytest.raises(ValueError):
        Pdag(2, {(1, 1)})
    with pytest.raises(ValueError):
        g.to_dag()


def test_typemap_validation():
    with pytest.raises(ValueError):
        TypeMap((0, 2), 2)
    with pytest.raises(ValueError):
        TypedDag(Dag(3), TypeMap((0, 1), 2))
    assert TypeMap.from_list([0, 3]).k == 4


class TestDSeparation:
    chain = Dag(3, {(0, 1), (1, 2)})
    collider = Dag(3, {(0, 2), (1, 2)})

    def test_chain(self):
        assert not d_separated(self.chain, 0, 2, [])
        assert d_separated(self.chain, 0, 2, [1])

    def test_collider_and_descendant(self):
        assert d_separated(self.collider, 0, 1, [])
        assert not d_separated(self.collider, 0, 1, [2])
        g = Dag(4, {(0, 2), (1, 2), (2, 3)})
        assert not d_separated(g, 0, 1, [3])

    def test_bad_arguments(self):
        with pytest.raises(ValueError):
            d_separated(self.chain, 0, 0, [])
        with pytest.raises(ValueError):
            d_separated(self.chain, 0, 2, [0])

    def test_agrees_with_path_enumeration(self):
        assert _props.check_dsep(60, seed=11) == []


def test_v_structures_and_forks():
    g = Dag(4, {(0, 2), (1, 2), (2, 3)})
    assert v_structures(g) == {(0, 2, 1)}
    assert v_structures(Dag(3, {(0, 1), (0, 2), (1, 2)})) == set()
    # b - a1, b - a2 with both a's of one type
    fork = Dag(3, {(0, 1), (0, 2)})
    types = TypeMap((1, 0, 0), 2)
    assert two_type_forks(fork, types) == {(1, 0, 2)}
    assert two_type_forks(TypedDag(fork, TypeMap((0, 0, 0), 1))) == set()
    with pytest.raises(ValueError):
        two_type_forks(fork)


def test_type_consistency():
    types = TypeMap((0, 0, 1, 1), 2)
    ok = TypedDag(Dag(4, {(0, 2), (1, 3), (2, 3)}), types)
    bad = TypedDag(Dag(4, {(0, 2), (3, 1)}), types)
    assert is_type_consistent(ok)
    assert not is_type_consistent(bad)
    assert t_edges(ok) == {(0, 1): frozenset({(0, 2), (1, 3)})}
    assert pdag_is_type_consistent(Pdag(4, {(0, 2)}, {(1, 3)}), types)
    assert not pdag_is_type_consistent(bad.dag.to_pdag(), types)


def test_markov_equivalent():
    a = Dag(3, {(0, 1), (1, 2)})
    b = Dag(3, {(1, 0), (1, 2)})
    c = Dag(3, {(0, 1), (2, 1)})
    assert markov_equivalent(a, b)
    assert not markov_equivalent(a, c)
    with pytest.raises(ValueError):
        markov_equivalent(a, Dag(4))
    assert skeleton_of(a) == skeleton_of(c)


def test_markov_laws_small():
    assert _props.check_markov_laws(8, seed=5) == []


def test_json_round_trip():
    g = Pdag(4, {(0, 1), (3, 2)}, {(1, 2)})
    types = TypeMap((0, 1, 1, 2), 3)
    obj = json.loads(json.dumps(graph_to_json(g, types)))
    assert obj == {"d": 4, "k": 3, "types": [0, 1, 1, 2],
                   "directed": [[0, 1], [3, 2]], "undirected": [[1, 2]]}
    assert graph_from_json(obj) == (g, types)
    td = TypedDag(Dag(2, {(1, 0)}), TypeMap((0, 1), 2))
    assert typed_dag_from_json(graph_to_json(td)) == td
    with pytest.raises(ValueError):
        graph_from_json({"d": 2, "types": [0]})
