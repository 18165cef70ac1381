"""Typed DAGs and type-consistent causal discovery."""

from .graphs import (
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
    two_type_forks,
    v_structures,
)
from .equivalence import (
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
    t_essential_graph,
    t_propagation,
    tmec_upper_bound,
    unoriented_tedges,
)
from .random_tdag import (
    GrowthConfig,
    InteractionMatrix,
    TypeDistribution,
    grow_random_tdag,
    make_rng,
    random_tdag,
    theorem1_bound,
)
from .citests import (
    CiDecision,
    Dataset,
    FisherZTester,
    GSquareTester,
    OracleTester,
    SepsetTable,
    read_dataset,
    write_dataset,
)
from .discovery import (
    DiscoveryResult,
    pc,
    pc_skeleton,
    pc_with_tpropagation,
    tpc_majority,
    tpc_naive,
)
from .simulate import (
    BayesNet,
    Scm,
    ancestral_sample,
    assign_types_topological,
    make_scm,
    parse_bif,
    read_bif,
    sample_scm,
    write_bif,
)
from .bench import shd

__version__ = "0.1.0"
