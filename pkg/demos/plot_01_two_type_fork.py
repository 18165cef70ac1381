"""
Types can orient what Markov equivalence cannot
===============================================

A fork ``a1 <- b -> a2`` has no collider, so its Markov equivalence class
holds three DAGs. Once we know ``a1`` and ``a2`` share a type and ``b`` has
another, only one orientation stays type consistent.
"""

from typedag import Dag, TypedDag, TypeMap
from typedag.equivalence import enumerate_mec, enumerate_tmec, essential_graph, t_essential_graph

# vertex 0 is b (type 1), vertices 1 and 2 are a1, a2 (type 0)
fork = TypedDag(Dag(3, {(0, 1), (0, 2)}), TypeMap((1, 0, 0), 2))

print("MEC members:")
for g in enumerate_mec(fork.dag):
    print("   ", sorted(g.edges))

# the typed class keeps only the member with both edges leaving b
print("t-MEC members:")
for g in enumerate_tmec(fork):
    print("   ", sorted(g.dag.edges))

print("essential graph:  ", essential_graph(fork.dag))
print("t-essential graph:", t_essential_graph(fork))
