import numpy as np
import pytest

import _props
from typedag.equivalence import (
    BudgetExceeded,
    EnumerationBudget,
    NoConsistentExtension,
    TypeInconsistencyError,
    count_extensions,
    enumerate_mec,
    enumerate_tmec,
    essential_graph,
    meek_closure,
    propagate_types,
    refines,
    t_essential_graph,
    t_propagation,
    tmec_upper_bound,
    union_of_dags,
    unoriented_tedges,
)
from typedag.graphs import Dag, Pdag, TypedDag, TypeMap, is_type_consistent, markov_equivalent
from typedag.random_tdag import random_tdag


def P(n, directed=(), undirected=()):
    return Pdag(n, frozenset(directed), frozenset(undirected))


# Counterexample where the t-edge b -> c is only settled by the witness
# search: types a = 0 (v1, v3), b = 2 (v4), c = 1 (v0, v2, v5).
CE1 = TypedDag(
    Dag(6, {(0, 2), (1, 2), (1, 3), (1, 4), (1, 5), (3, 4), (4, 5)}),
    TypeMap((1, 0, 1, 0, 2, 1), 3),
)
CE1_STEPS_1_3 = P(6, [(0, 2), (1, 2), (1, 5)], [(1, 3), (1, 4), (3, 4), (4, 5)])
CE1_FULL = P(6, [(0, 2), (1, 2), (1, 5), (4, 5)], [(1, 3), (1, 4), (3, 4)])

# Chain b1 - a1 - c1 - d1 - a2 - b2 with a1, a2 of type a = 0 and b1, b2 of
# type b = 1: the two a -> b edges share one t-edge, which only the
# witness search orients.
CE2 = TypedDag(
    Dag(6, {(0, 2), (1, 3), (4, 0), (5, 4), (1, 5)}),
    TypeMap((0, 0, 1, 1, 2, 3), 4),
)
CE2_FULL = P(6, [(0, 2), (1, 3)], [(0, 4), (1, 5), (4, 5)])

# fork a1 <- b -> a2
FORK = TypedDag(Dag(3, {(0, 1), (0, 2)}), TypeMap((1, 0, 0), 2))


class TestEnumeration:
    def test_known_mec_sizes(self):
        assert len(enumerate_mec(Dag(3, {(0, 1), (1, 2)}))) == 3
        assert len(enumerate_mec(Dag(3, {(0, 1), (1, 2), (0, 2)}))) == 6
        assert len(enumerate_mec(Dag(3, {(0, 2), (1, 2)}))) == 1
        assert len(enumerate_mec(Dag(4))) == 1

    def test_members_are_equivalent_and_distinct(self):
        dag = random_tdag(8, 1, 0, 0.4, 3).dag
        mec = enumerate_mec(dag)
        assert dag in mec
        assert len(set(mec)) == len(mec)
        assert all(markov_equivalent(dag, m) for m in mec)

    def test_tmec_is_consistent_filter_of_mec(self):
        for seed in range(30):
            td = random_tdag(7, 3, 0.4, 0.3, seed)
            expected = [m for m in enumerate_mec(td.dag) if is_type_consistent(TypedDag(m, td.types))]
            assert [m.dag for m in enumerate_tmec(td)] == expected

    def test_budget(self):
        complete = Dag(6, {(i, j) for i in range(6) for j in range(i + 1, 6)})
        with pytest.raises(BudgetExceeded):
            enumerate_mec(complete, EnumerationBudget(100))
        assert len(enumerate_mec(complete, 720)) == 720

    def test_inconsistent_input(self):
        td = TypedDag(Dag(4, {(0, 2), (3, 1)}), TypeMap((0, 0, 1, 1), 2))
        with pytest.raises(TypeInconsistencyError):
            enumerate_tmec(td)

    def test_union(self):
        dags = [Dag(3, {(0, 1), (1, 2)}), Dag(3, {(1, 0), (1, 2)})]
        assert union_of_dags(3, dags) == P(3, [(1, 2)], [(0, 1)])


class TestMeek:
    def test_rule_1(self):
        assert meek_closure(P(3, [(0, 1)], [(1, 2)])) == P(3, [(0, 1), (1, 2)])

    def test_rule_2(self):
        assert meek_closure(P(3, [(0, 1), (1, 2)], [(0, 2)])) == P(3, [(0, 1), (1, 2), (0, 2)])

    def test_rule_3(self):
        g = P(4, [(1, 3), (2, 3)], [(0, 1), (0, 2), (0, 3)])
        assert (0, 3) in meek_closure(g).directed

    def test_rule_4(self):
        # a=0, d=1, c=2, b=3: a - d -> c -> b, a adjacent c, d not adjacent b
        g = P(4, [(1, 2), (2, 3)], [(0, 1), (0, 2), (0, 3)])
        assert (0, 3) in meek_closure(g).directed

    def test_essential_graph_examples(self):
        assert essential_graph(Dag(3, {(0, 2), (1, 2)})) == P(3, [(0, 2), (1, 2)])
        eg = essential_graph(Dag(4, {(0, 2), (1, 2), (2, 3)}))
        assert eg == P(4, [(0, 2), (1, 2), (2, 3)])

    def test_laws(self):
        assert _props.check_meek_laws(150, seed=2) == []


class TestTPropagation:
    def test_two_type_fork(self):
        assert len(enumerate_mec(FORK.dag)) == 3
        assert len(enumerate_tmec(FORK)) == 1
        expected = P(3, [(0, 1), (0, 2)])
        assert t_essential_graph(FORK) == expected
        assert t_propagation(essential_graph(FORK.dag), FORK.types) == expected
        # without the fork rule the witness search still gets there
        assert t_propagation(essential_graph(FORK.dag), FORK.types, fork_rule=False) == expected

    def test_counterexample_1(self):
        eg = essential_graph(CE1.dag)
        assert t_essential_graph(CE1) == CE1_FULL
        for fork_rule in (True, False):
            assert propagate_types(eg, CE1.types, fork_rule=fork_rule) == CE1_STEPS_1_3
            assert t_propagation(eg, CE1.types, fork_rule=fork_rule) == CE1_FULL
        assert (4, 5) not in CE1_STEPS_1_3.directed

    def test_counterexample_2(self):
        eg = essential_graph(CE2.dag)
        assert len(enumerate_mec(CE2.dag)) == 6
        assert len(enumerate_tmec(CE2)) == 4
        assert t_essential_graph(CE2) == CE2_FULL
        assert propagate_types(eg, CE2.types) == eg
        assert t_propagation(eg, CE2.types) == CE2_FULL
        assert t_propagation(eg, CE2.types, exhaustive=True) == CE2_FULL

    def test_collider_forces_tedge(self):
        # a1 -> c1, a1 -> c2, b1 -> c1; the t-edge a -> c is forced by the
        # collider at c1
        td = TypedDag(Dag(4, {(0, 2), (0, 3), (1, 2)}), TypeMap((0, 1, 2, 2), 3))
        assert essential_graph(td.dag) == P(4, [(0, 2), (1, 2)], [(0, 3)])
        assert t_essential_graph(td) == P(4, [(0, 2), (0, 3), (1, 2)])
        with pytest.raises(TypeInconsistencyError) as err:
            t_propagation(P(4, [(0, 2), (3, 0)]), td.types)
        assert set(err.value.type_pair) == {0, 2}

    def test_granularity_edge(self):
        eg = essential_graph(CE1.dag)
        assert t_propagation(eg, CE1.types, granularity="edge") == CE1_FULL
        with pytest.raises(ValueError):
            t_propagation(eg, CE1.types, granularity="bogus")

    def test_no_consistent_extension(self):
        # a 4-cycle of undirected edges can only be completed with a collider
        g = P(4, [], [(0, 1), (1, 2), (2, 3), (0, 3)])
        with pytest.raises(NoConsistentExtension):
            t_propagation(g, TypeMap((0, 1, 2, 3), 4))

    @pytest.mark.parametrize("seed", range(40))
    def test_random_agreement(self, seed):
        rng = np.random.default_rng(seed)
        k = int(rng.integers(2, 5))
        td = random_tdag(int(rng.integers(3, 9)), k, 0.3, float(rng.choice([0, 0.2])), seed, 9)
        truth = t_essential_graph(td)
        eg = essential_graph(td.dag)
        assert t_propagation(eg, td.types) == truth
        assert refines(truth, eg)
        assert refines(td.dag.to_pdag(), truth)
        size = count_extensions(truth, td.types)
        assert size == len(enumerate_tmec(td))
        assert size <= tmec_upper_bound(truth, td.types)


def test_bound_and_counts():
    assert tmec_upper_bound(CE2_FULL, CE2.types) == 8
    assert count_extensions(CE2_FULL, CE2.types) == 4
    assert unoriented_tedges(CE2_FULL, CE2.types) == 3
    assert unoriented_tedges(CE1_FULL, CE1.types) == 1
    # one type per vertex: counting extensions of the essential graph
    # counts the MEC
    n = CE2.n
    assert count_extensions(essential_graph(CE2.dag), TypeMap(tuple(range(n)), n)) == 6
