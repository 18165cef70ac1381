"""Graph data model for typed DAGs.

Vertices are dense integer indices ``0..n-1``. Names only live in datasets
and serialized files. All classes here are immutable once built.
"""

from __future__ import annotations

import heapq
import json
from collections import defaultdict, deque
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Union


class CycleError(ValueError):
    """Raised when a set of arcs does not admit a topological order."""


def _check_vertex(n: int, v: int) -> None:
    if not (0 <= v < n):
        raise ValueError(f"vertex {v} out of range for graph with {n} vertices")


def topological_order(n: int, edges: Iterable[tuple[int, int]]) -> list[int]:
    """Kahn's algorithm, smallest available index first (deterministic)."""
    indeg = [0] * n
    children = [[] for _ in range(n)]
    for u, v in edges:
        children[u].append(v)
        indeg[v] += 1
    heap = [v for v in range(n) if indeg[v] == 0]
    heapq.heapify(heap)
    order = []
    while heap:
        u = heapq.heappop(heap)
        order.append(u)
        for v in children[u]:
            indeg[v] -= 1
            if indeg[v] == 0:
                heapq.heappush(heap, v)
    if len(order) != n:
        raise CycleError("graph contains a directed cycle")
    return order


@dataclass(frozen=True)
class Dag:
    """A directed acyclic graph over vertices ``0..n-1``."""

    n: int
    edges: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        if self.n < 0:
            raise ValueError("vertex count must be non-negative")
        edges = frozenset((int(u), int(v)) for u, v in self.edges)
        for u, v in edges:
            _check_vertex(self.n, u)
            _check_vertex(self.n, v)
            if u == v:
                raise ValueError(f"self-loop on vertex {u}")
        object.__setattr__(self, "edges", edges)
        parents = [set() for _ in range(self.n)]
        children = [set() for _ in range(self.n)]
        for u, v in edges:
            parents[v].add(u)
            children[u].add(v)
        object.__setattr__(self, "_parents", tuple(frozenset(p) for p in parents))
        object.__setattr__(self, "_children", tuple(frozenset(c) for c in children))
        object.__setattr__(self, "_order", tuple(topological_order(self.n, edges)))

    def parents(self, v: int) -> frozenset:
        return self._parents[v]

    def children(self, v: int) -> frozenset:
        return self._children[v]

    def neighbors(self, v: int) -> frozenset:
        return self._parents[v] | self._children[v]

    def adjacent(self, u: int, v: int) -> bool:
        return v in self._parents[u] or v in self._children[u]

    def topological_order(self) -> tuple:
        return self._order

    def descendants(self, v: int) -> set:
        seen = {v}
        stack = [v]
        while stack:
            for c in self._children[stack.pop()]:
                if c not in seen:
                    seen.add(c)
                    stack.append(c)
        return seen

    def ancestors_of(self, vs: Iterable[int]) -> set:
        seen = set(vs)
        stack = list(seen)
        while stack:
            for p in self._parents[stack.pop()]:
                if p not in seen:
                    seen.add(p)
                    stack.append(p)
        return seen

    def to_pdag(self) -> "Pdag":
        return Pdag(self.n, self.edges, frozenset())

    def __repr__(self):
        return f"Dag(n={self.n}, edges={sorted(self.edges)})"


@dataclass(frozen=True)
class TypeMap:
    """Total mapping vertex -> type index in ``[0, k)``. Types may be unused."""

    assignment: tuple
    k: int

    def __post_init__(self):
        assignment = tuple(int(t) for t in self.assignment)
        object.__setattr__(self, "assignment", assignment)
        if self.k < 1:
            raise ValueError("type count k must be positive")
        for t in assignment:
            if not (0 <= t < self.k):
                raise ValueError(f"type index {t} out of range for k={self.k}")

    @classmethod
    def from_list(cls, types: Iterable[int], k: int | None = None) -> "TypeMap":
        types = tuple(types)
        if k is None:
            k = max(types) + 1 if types else 1
        return cls(types, k)

    def __getitem__(self, v: int) -> int:
        return self.assignment[v]

    def __len__(self) -> int:
        return len(self.assignment)


@dataclass(frozen=True)
class TypedDag:
    dag: Dag
    types: TypeMap

    def __post_init__(self):
        if self.dag.n != len(self.types):
            raise ValueError(
                f"type map covers {len(self.types)} vertices, DAG has {self.dag.n}"
            )

    @property
    def n(self) -> int:
        return self.dag.n


def _norm_pair(u: int, v: int) -> tuple[int, int]:
    return (u, v) if u < v else (v, u)


@dataclass(frozen=True)
class Pdag:
    """Partially directed graph.

    A pair listed in both directions, or listed both directed and undirected,
    is stored as undirected (the edge-wise union convention).
    """

    n: int
    directed: frozenset = field(default_factory=frozenset)
    undirected: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        directed = set()
        undirected = set()
        for u, v in self.undirected:
            u, v = int(u), int(v)
            _check_vertex(self.n, u)
            _check_vertex(self.n, v)
            if u == v:
                raise ValueError(f"self-loop on vertex {u}")
            undirected.add(_norm_pair(u, v))
        for u, v in self.directed:
            u, v = int(u), int(v)
            _check_vertex(self.n, u)
            _check_vertex(self.n, v)
            if u == v:
                raise ValueError(f"self-loop on vertex {u}")
            directed.add((u, v))
        for u, v in list(directed):
            if (v, u) in directed or _norm_pair(u, v) in undirected:
                undirected.add(_norm_pair(u, v))
        directed = {e for e in directed if _norm_pair(*e) not in undirected}
        object.__setattr__(self, "directed", frozenset(directed))
        object.__setattr__(self, "undirected", frozenset(undirected))

    def adjacent(self, u: int, v: int) -> bool:
        return (
            (u, v) in self.directed
            or (v, u) in self.directed
            or _norm_pair(u, v) in self.undirected
        )

    def adjacency(self) -> list[set]:
        adj = [set() for _ in range(self.n)]
        for u, v in self.directed:
            adj[u].add(v)
            adj[v].add(u)
        for u, v in self.undirected:
            adj[u].add(v)
            adj[v].add(u)
        return adj

    def skeleton_pairs(self) -> frozenset:
        return frozenset(_norm_pair(u, v) for u, v in self.directed) | self.undirected

    def edge_count(self) -> int:
        return len(self.directed) + len(self.undirected)

    def is_fully_directed(self) -> bool:
        return not self.undirected

    def to_dag(self) -> Dag:
        if self.undirected:
            raise ValueError("graph has undirected edges")
        return Dag(self.n, self.directed)

    def __repr__(self):
        return (
            f"Pdag(n={self.n}, directed={sorted(self.directed)}, "
            f"undirected={sorted(self.undirected)})"
        )


Graph = Union[Dag, Pdag, TypedDag]


def _as_pdag(g: Graph) -> Pdag:
    if isinstance(g, TypedDag):
        return g.dag.to_pdag()
    if isinstance(g, Dag):
        return g.to_pdag()
    return g


# ---------------------------------------------------------------------------
# structural predicates
# ---------------------------------------------------------------------------


def d_separated(dag: Dag, i: int, j: int, z: Iterable[int]) -> bool:
    """True iff ``i`` and ``j`` are d-separated given ``z`` in ``dag``.

    Uses the reachability ("Bayes-ball") traversal over (vertex, direction)
    states; ``z`` must not contain ``i`` or ``j``.
    """
    z = set(z)
    for v in (i, j, *z):
        _check_vertex(dag.n, v)
    if i == j:
        raise ValueError("i and j must differ")
    if i in z or j in z:
        raise ValueError("conditioning set must exclude i and j")

    anc_z = dag.ancestors_of(z)
    # direction "up": arrived from a child; "down": arrived from a parent
    visited = set()
    queue = deque([(i, "up")])
    while queue:
        v, direction = queue.popleft()
        if (v, direction) in visited:
            continue
        visited.add((v, direction))
        if v == j:
            return False
        if direction == "up" and v not in z:
            for p in dag.parents(v):
                queue.append((p, "up"))
            for c in dag.children(v):
                queue.append((c, "down"))
        elif direction == "down":
            if v not in z:
                for c in dag.children(v):
                    queue.append((c, "down"))
            if v in anc_z:
                for p in dag.parents(v):
                    queue.append((p, "up"))
    return True


def v_structures(g: Graph) -> set:
    """Unshielded colliders ``i -> k <- j`` as triples ``(i, k, j)``, ``i < j``.

    For a PDAG only colliders whose two arms are both directed count.
    """
    g = _as_pdag(g)
    adj = g.adjacency()
    parents = defaultdict(set)
    for u, v in g.directed:
        parents[v].add(u)
    out = set()
    for k, pa in parents.items():
        for a, b in combinations(sorted(pa), 2):
            if b not in adj[a]:
                out.add((a, k, b))
    return out


def two_type_forks(g: Graph, types: TypeMap | None = None) -> set:
    """Triples ``(a1, b1, a2)`` with ``a1 - b1 - a2`` unshielded in the skeleton
    and ``T(a1) == T(a2) != T(b1)``; ``a1 < a2``."""
    if isinstance(g, TypedDag):
        types = g.types if types is None else types
    if types is None:
        raise ValueError("a type map is required")
    adj = _as_pdag(g).adjacency()
    out = set()
    for b in range(len(adj)):
        tb = types[b]
        for a1, a2 in combinations(sorted(adj[b]), 2):
            if types[a1] == types[a2] != tb and a2 not in adj[a1]:
                out.add((a1, b, a2))
    return out


def t_edges(tdag: TypedDag) -> dict:
    """Inter-type edges keyed by ordered type pair ``(t_i, t_j)``."""
    index = defaultdict(set)
    T = tdag.types
    for u, v in tdag.dag.edges:
        if T[u] != T[v]:
            index[(T[u], T[v])].add((u, v))
    return {key: frozenset(val) for key, val in index.items()}


def is_type_consistent(tdag: TypedDag) -> bool:
    index = t_edges(tdag)
    return all((tj, ti) not in index for ti, tj in index)


def pdag_is_type_consistent(g: Pdag, types: TypeMap) -> bool:
    """No pair of distinct types has directed edges running both ways."""
    seen = set()
    for u, v in g.directed:
        if types[u] != types[v]:
            seen.add((types[u], types[v]))
    return all((b, a) not in seen for a, b in seen)


def markov_equivalent(d1: Dag, d2: Dag) -> bool:
    if d1.n != d2.n:
        raise ValueError(f"vertex counts differ: {d1.n} vs {d2.n}")
    s1 = frozenset(_norm_pair(u, v) for u, v in d1.edges)
    s2 = frozenset(_norm_pair(u, v) for u, v in d2.edges)
    return s1 == s2 and v_structures(d1) == v_structures(d2)


def skeleton_of(g: Graph) -> Pdag:
    g = _as_pdag(g)
    return Pdag(g.n, frozenset(), g.skeleton_pairs())


# ---------------------------------------------------------------------------
# JSON
# ---------------------------------------------------------------------------


def graph_to_json(g: Graph, types: TypeMap | None = None) -> dict:
    if isinstance(g, TypedDag):
        types = g.types if types is None else types
    p = _as_pdag(g)
    if types is None:
        types = TypeMap((0,) * p.n, 1)
    return {
        "d": p.n,
        "k": types.k,
        "types": list(types.assignment),
        "directed": [list(e) for e in sorted(p.directed)],
        "undirected": [list(e) for e in sorted(p.undirected)],
    }


def graph_from_json(obj: dict | str) -> tuple[Pdag, TypeMap]:
    if isinstance(obj, str):
        obj = json.loads(obj)
    d = int(obj["d"])
    types = obj.get("types") or [0] * d
    k = int(obj.get("k", max(types, default=0) + 1))
    tm = TypeMap(tuple(types), k)
    g = Pdag(
        d,
        frozenset(tuple(e) for e in obj.get("directed", [])),
        frozenset(tuple(e) for e in obj.get("undirected", [])),
    )
    if len(tm) != d:
        raise ValueError("types length does not match d")
    return g, tm


def typed_dag_from_json(obj: dict | str) -> TypedDag:
    g, tm = graph_from_json(obj)
    return TypedDag(g.to_dag(), tm)
