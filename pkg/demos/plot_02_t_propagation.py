"""
Completing a partially oriented graph with type information
===========================================================

t-Propagation starts from the essential graph, pushes type consistency and
the Meek rules to a fixed point, then asks, one t-edge at a time, whether a
consistent extension exists with each direction. The last step matters:
below, propagation alone stops short of the enumerated answer.
"""

from typedag import Dag, TypedDag, TypeMap
from typedag.equivalence import (
    count_extensions,
    essential_graph,
    propagate_types,
    t_essential_graph,
    t_propagation,
    tmec_upper_bound,
)

td = TypedDag(
    Dag(6, {(0, 2), (1, 2), (1, 3), (1, 4), (1, 5), (3, 4), (4, 5)}),
    TypeMap((1, 0, 1, 0, 2, 1), 3),
)
eg = essential_graph(td.dag)
print("essential graph:     ", eg)

# rules only: the edge 4 - 5 (type 2 to type 1) is left undirected
print("propagation only:    ", propagate_types(eg, td.types))

# with the witness search it gets directed, matching brute force
full = t_propagation(eg, td.types)
print("full t-Propagation:  ", full)
print("enumeration oracle:  ", t_essential_graph(td))

# size of the typed class against its upper bound
print("t-MEC size", count_extensions(full, td.types), "bound", tmec_upper_bound(full, td.types))
