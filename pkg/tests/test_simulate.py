import numpy as np
import pytest

import _props
from typedag.graphs import Dag
from typedag.random_tdag import make_rng, random_tdag
from typedag.simulate import (
    BayesNet,
    BifParseError,
    Scm,
    ancestral_sample,
    assign_types_topological,
    linear_covariance,
    make_scm,
    parse_bif,
    read_bif,
    sample_scm,
    standard_normal,
    write_bif,
)

NETWORK_SIZES = {"sachs": 11, "child": 20, "insurance": 27, "alarm": 37, "hailfinder": 56, "win95pts": 76}

ONE_NODE = """
network tiny {
}
variable A {
  type discrete [ 2 ] { yes, no };
}
probability ( A ) {
  table 0.4, 0.6;
}
"""

TWO_NODES = """
// a comment
variable A { type discrete [ 2 ] { a0, a1 }; }
variable B {
  type discrete [ 3 ] { b0, b1, b2 };
  property "ignored";
}
probability ( A ) { table 0.3, 0.7; }
probability ( B | A ) {
  (a0) 0.1, 0.2, 0.7;
  (a1) 0.5, 0.25, 0.25;
}
"""


class TestScm:
    def test_source_is_noise(self):
        for mech in ("linear", "anm", "nn"):
            scm = make_scm(Dag(1), mech, make_rng(0))
            assert 1 <= scm.variances[0] <= 2
            x = sample_scm(scm, 10_000, make_rng(1)).values[:, 0]
            assert 0.8 <= x.var() <= 2.4
            assert x.var() == pytest.approx(scm.variances[0], rel=0.05)

    def test_chain_correlation_sign(self):
        for s in range(10):
            scm = make_scm(Dag(2, {(0, 1)}), "linear", make_rng(s))
            w = scm.params[1]["weights"][0]
            assert 0.25 <= abs(w) <= 1
            assert 0.01 <= scm.variances[1] <= 0.02
            x = sample_scm(scm, 10_000, make_rng(s, 1)).values
            assert np.sign(np.corrcoef(x.T)[0, 1]) == np.sign(w)

    def test_covariance_within_five_standard_errors(self):
        dag = random_tdag(8, 1, 0, 0.4, 2).dag
        scm = make_scm(dag, "linear", make_rng(3))
        n = 10_000
        x = sample_scm(scm, n, make_rng(4)).values
        S = linear_covariance(scm)
        emp = np.cov(x.T)
        se = np.sqrt((np.outer(np.diag(S), np.diag(S)) + S**2) / n)
        assert np.all(np.abs(emp - S) <= 5 * se)

    def test_network_shapes(self):
        dag = Dag(3, {(0, 2), (1, 2)})
        anm = make_scm(dag, "anm", make_rng(0))
        nn = make_scm(dag, "nn", make_rng(0))
        assert anm.params[2]["W1"].shape == (10, 2)
        assert nn.params[2]["W1"].shape == (20, 3)
        assert nn.params[0] == {}

    def test_deterministic_and_json_replay(self):
        dag = random_tdag(6, 2, 0.5, 0.3, 1).dag
        for mech in ("linear", "anm", "nn"):
            scm = make_scm(dag, mech, make_rng(5))
            a = sample_scm(scm, 100, make_rng(6)).values
            b = sample_scm(Scm.from_json(scm.to_json()), 100, make_rng(6)).values
            assert np.array_equal(a, b)

    def test_validation(self):
        with pytest.raises(ValueError):
            make_scm(Dag(1), "gp")
        with pytest.raises(ValueError):
            Scm(Dag(2, {(0, 1)}), "linear", (1.0, 1.0), ({}, {"weights": np.ones(2)}))
        with pytest.raises(ValueError):
            Scm(Dag(1), "linear", (0.0,), ({},))
        with pytest.raises(ValueError):
            sample_scm(make_scm(Dag(1), "linear", make_rng(0)), 0, make_rng(0))

    def test_standard_normal_by_inversion(self):
        z = standard_normal(make_rng(0), 200_000)
        assert abs(z.mean()) < 0.01 and abs(z.std() - 1) < 0.01
        assert np.array_equal(z[:5], standard_normal(make_rng(0), 5))


class TestBif:
    def test_one_node(self):
        bn = parse_bif(ONE_NODE)
        assert bn.d == 1 and bn.name == "tiny"
        assert bn.states == (("yes", "no"),)
        assert np.allclose(bn.cpts[0], [[0.4, 0.6]])

    def test_two_nodes(self):
        bn = parse_bif(TWO_NODES)
        assert bn.dag.edges == {(0, 1)}
        assert bn.cpts[1].shape == (2, 3)
        assert np.allclose(bn.cpts[1][1], [0.5, 0.25, 0.25])

    def test_table_and_default_rows(self):
        text = TWO_NODES.replace(
            "(a0) 0.1, 0.2, 0.7;\n  (a1) 0.5, 0.25, 0.25;",
            "default 0.2, 0.3, 0.5;\n  (a1) 0.5, 0.25, 0.25;")
        bn = parse_bif(text)
        assert np.allclose(bn.cpts[1], [[0.2, 0.3, 0.5], [0.5, 0.25, 0.25]])
        text = TWO_NODES.replace(
            "(a0) 0.1, 0.2, 0.7;\n  (a1) 0.5, 0.25, 0.25;",
            "table 0.1, 0.2, 0.7, 0.5, 0.25, 0.25;")
        assert parse_bif(text) == parse_bif(TWO_NODES)

    @pytest.mark.parametrize("name,size", sorted(NETWORK_SIZES.items()))
    def test_repository_networks(self, name, size, bif_path):
        bn = read_bif(bif_path(name))
        assert bn.d == size
        assert parse_bif(write_bif(bn)) == bn

    def test_parse_errors_carry_position(self):
        with pytest.raises(BifParseError) as err:
            parse_bif("variable A {\n  type discrete [ 2 ] { x, y }\n}")
        assert err.value.line == 3 and err.value.col == 1
        with pytest.raises(BifParseError):
            parse_bif("variable A { type discrete [ 3 ] { x, y }; }")
        with pytest.raises(BifParseError):
            parse_bif("probability ( A | B ) { table 1; }\nvariable A")
        with pytest.raises(BifParseError):
            parse_bif("bogus")

    def test_validation_errors(self):
        with pytest.raises(ValueError):
            parse_bif(ONE_NODE.replace("0.4, 0.6", "0.4, 0.7"))
        with pytest.raises(ValueError):
            parse_bif(TWO_NODES.replace("(a1) 0.5, 0.25, 0.25;", ""))
        with pytest.raises(ValueError):
            parse_bif(TWO_NODES.replace("(a1)", "(a9)"))
        with pytest.raises(ValueError):
            parse_bif(ONE_NODE.replace("probability ( A ) {\n  table 0.4, 0.6;\n}", ""))


class TestAncestral:
    def test_one_node_frequency(self):
        x = ancestral_sample(parse_bif(ONE_NODE), 50_000, make_rng(0)).values[:, 0]
        assert abs((x == 0).mean() - 0.4) < 0.01

    def test_deterministic_cpts(self):
        bn = BayesNet(("a", "b"), (("0", "1"), ("0", "1")), ((), (0,)),
                      ([0.0, 1.0], [[1.0, 0.0], [0.0, 1.0]]))
        x = ancestral_sample(bn, 100, make_rng(0)).values
        assert np.all(x == [1, 1])

    def test_root_marginals_insurance(self, bif_path):
        bn = read_bif(bif_path("insurance"))
        ds = ancestral_sample(bn, 50_000, make_rng(1))
        assert ds.cardinalities == bn.cardinalities
        for j in range(bn.d):
            if not bn.parents[j]:
                freq = np.bincount(ds.values[:, j], minlength=bn.cardinalities[j]) / ds.n
                assert np.abs(freq - bn.cpts[j][0]).max() < 0.01

    def test_conditional_frequencies(self):
        bn = parse_bif(TWO_NODES)
        x = ancestral_sample(bn, 50_000, make_rng(2)).values
        rows = x[x[:, 0] == 0, 1]
        freq = np.bincount(rows, minlength=3) / len(rows)
        assert np.abs(freq - [0.1, 0.2, 0.7]).max() < 0.015


class TestTypeAssignment:
    def test_extremes(self):
        dag = random_tdag(12, 1, 0, 0.3, 0).dag
        one = assign_types_topological(dag, 1e12, make_rng(0))
        assert one.k == 1 and set(one.assignment) == {0}
        every = assign_types_topological(dag, 1, make_rng(0))
        assert every.k == 12
        order = dag.topological_order()
        assert [every[v] for v in order] == list(range(12))
        with pytest.raises(ValueError):
            assign_types_topological(dag, 0.5, make_rng(0))

    def test_mean_block_count(self):
        dag = random_tdag(20, 1, 0, 0.3, 0).dag
        ks = [assign_types_topological(dag, 5, make_rng(s)).k for s in range(50)]
        assert abs(np.mean(ks) - 20 / 5) <= 0.3 * 20 / 5

    def test_always_consistent(self):
        assert _props.check_type_assignment(200, seed=4) == []
