"""Equivalence classes of (typed) DAGs.

Two independent routes compute t-essential graphs here:

* the *enumeration oracle* (``enumerate_mec`` / ``enumerate_tmec`` /
  ``t_essential_graph``) orients the skeleton edge by edge and keeps every
  assignment with the right v-structures and no cycle;
* ``t_propagation`` propagates orientations with type consistency and the
  Meek rules, then completes the graph with a pruned search over consistent
  extensions.

Tests check that the two always agree.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from itertools import combinations
from typing import Iterable

from .graphs import (
    Dag,
    Pdag,
    TypedDag,
    TypeMap,
    _norm_pair,
    is_type_consistent,
    v_structures,
)

DEFAULT_MAX_MEMBERS = 10**6


@dataclass(frozen=True)
class EnumerationBudget:
    max_members: int = DEFAULT_MAX_MEMBERS

    def __post_init__(self):
        if self.max_members < 1:
            raise ValueError("max_members must be positive")


class BudgetExceeded(RuntimeError):
    """An enumeration or search went past its ``EnumerationBudget``."""

    def __init__(self, limit: int):
        self.limit = limit
        super().__init__(f"enumeration budget of {limit} exceeded")


class TypeInconsistencyError(ValueError):
    """Some t-edge is forced in both directions.

    ``type_pair`` is the offending ordered pair, or ``None`` when the failure
    is that no consistent extension exists at all.
    """

    def __init__(self, message: str, type_pair: tuple | None = None):
        self.type_pair = type_pair
        super().__init__(message)


class NoConsistentExtension(TypeInconsistencyError):
    pass


class _Conflict(Exception):
    pass


def _budget(budget: EnumerationBudget | int | None) -> int:
    if budget is None:
        return DEFAULT_MAX_MEMBERS
    if isinstance(budget, int):
        return EnumerationBudget(budget).max_members
    return budget.max_members


# ---------------------------------------------------------------------------
# mutable working graph
# ---------------------------------------------------------------------------


class _Work:
    __slots__ = ("n", "pa", "ch", "und")

    def __init__(self, n, pa, ch, und):
        self.n = n
        self.pa = pa
        self.ch = ch
        self.und = und

    @classmethod
    def from_pdag(cls, g: Pdag) -> "_Work":
        n = g.n
        pa = [set() for _ in range(n)]
        ch = [set() for _ in range(n)]
        und = [set() for _ in range(n)]
        for u, v in g.directed:
            pa[v].add(u)
            ch[u].add(v)
        for u, v in g.undirected:
            und[u].add(v)
            und[v].add(u)
        return cls(n, pa, ch, und)

    def copy(self) -> "_Work":
        return _Work(
            self.n,
            [set(s) for s in self.pa],
            [set(s) for s in self.ch],
            [set(s) for s in self.und],
        )

    def adjacent(self, u, v) -> bool:
        return v in self.und[u] or v in self.pa[u] or v in self.ch[u]

    def orient(self, u, v) -> None:
        self.und[u].discard(v)
        self.und[v].discard(u)
        self.pa[v].add(u)
        self.ch[u].add(v)

    def reverse(self, u, v) -> None:
        """Replace ``u -> v`` by ``v -> u``."""
        self.pa[v].discard(u)
        self.ch[u].discard(v)
        self.pa[u].add(v)
        self.ch[v].add(u)

    def undirected_edges(self) -> list:
        return sorted((u, v) for u in range(self.n) for v in self.und[u] if u < v)

    def first_undirected(self):
        for u in range(self.n):
            for v in self.und[u]:
                if u < v:
                    return (u, min(w for w in self.und[u] if w > u))
        return None

    def to_pdag(self) -> Pdag:
        directed = frozenset((u, v) for v in range(self.n) for u in self.pa[v])
        return Pdag(self.n, directed, frozenset(self.undirected_edges()))


def _implied(g: _Work, a: int, b: int) -> bool:
    """Whether Meek rules R1-R4 force ``a -> b`` for the undirected edge a - b."""
    pa_b = g.pa[b]
    # R1: c -> a - b, c and b non-adjacent
    for c in g.pa[a]:
        if not g.adjacent(c, b):
            return True
    # R2: a -> c -> b
    if not g.ch[a].isdisjoint(pa_b):
        return True
    # R3: a - c -> b, a - d -> b, c and d non-adjacent
    cands = g.und[a] & pa_b
    if len(cands) >= 2:
        for c, d in combinations(sorted(cands), 2):
            if not g.adjacent(c, d):
                return True
    # R4: a - d -> c -> b, a adjacent to c, d and b non-adjacent
    for c in pa_b:
        if g.adjacent(a, c):
            for d in g.pa[c] & g.und[a]:
                if d != b and not g.adjacent(d, b):
                    return True
    return False


def _meek(g: _Work, strict: bool = False, on_orient=None) -> bool:
    """Apply R1-R4 to a fixpoint in place. Returns whether anything changed.

    ``on_orient(g, u, v)`` is called after each single orientation (used to
    propagate type consistency edge by edge). In strict mode an edge forced
    both ways raises ``_Conflict``.
    """
    changed_any = False
    changed = True
    while changed:
        changed = False
        for a, b in g.undirected_edges():
            if b not in g.und[a]:
                continue
            fwd = _implied(g, a, b)
            bwd = _implied(g, b, a)
            if fwd and bwd and strict:
                raise _Conflict()
            if fwd or bwd:
                u, v = (a, b) if fwd else (b, a)
                g.orient(u, v)
                if on_orient is not None:
                    on_orient(g, u, v)
                changed = changed_any = True
    return changed_any


def meek_closure(g: Pdag) -> Pdag:
    """Close a PDAG under Meek's rules R1-R4. Never un-orients an edge."""
    w = _Work.from_pdag(g)
    _meek(w)
    return w.to_pdag()


def essential_graph(dag: Dag) -> Pdag:
    """CPDAG of ``dag``: v-structures oriented, then Meek closure."""
    directed = set()
    for i, k, j in v_structures(dag):
        directed.add((i, k))
        directed.add((j, k))
    skeleton = {_norm_pair(u, v) for u, v in dag.edges}
    undirected = skeleton - {_norm_pair(u, v) for u, v in directed}
    return meek_closure(Pdag(dag.n, frozenset(directed), frozenset(undirected)))


def union_of_dags(n: int, dags: Iterable) -> Pdag:
    """Edge-wise union; a pair present in both directions becomes undirected."""
    directed = set()
    for d in dags:
        if isinstance(d, TypedDag):
            d = d.dag
        directed |= d.edges
    return Pdag(n, frozenset(directed), frozenset())


# ---------------------------------------------------------------------------
# enumeration oracle
# ---------------------------------------------------------------------------


def _orientations(n, pairs, vstructs, types=None, limit=DEFAULT_MAX_MEMBERS):
    """All acyclic orientations of ``pairs`` whose unshielded colliders are
    exactly ``vstructs``; with ``types`` only type-consistent ones."""
    adj = [set() for _ in range(n)]
    for u, v in pairs:
        adj[u].add(v)
        adj[v].add(u)

    # breadth-first edge order so unshielded triples close early
    order = []
    placed = set()
    for root in range(n):
        queue = [root]
        for x in queue:
            for y in sorted(adj[x]):
                e = _norm_pair(x, y)
                if e not in placed:
                    placed.add(e)
                    order.append(e)
                    queue.append(y)

    pa = [set() for _ in range(n)]
    ch = [set() for _ in range(n)]
    tcount = defaultdict(int)
    out = []

    def reaches(src, dst):
        stack = [src]
        seen = {src}
        while stack:
            x = stack.pop()
            if x == dst:
                return True
            for y in ch[x]:
                if y not in seen:
                    seen.add(y)
                    stack.append(y)
        return False

    def ok(u, v):
        # u -> v about to be added
        if types is not None and types[u] != types[v]:
            if tcount[(types[v], types[u])]:
                return False
        if reaches(v, u):
            return False
        for w in pa[v]:
            if w not in adj[u] and _norm_pair(u, w) + (v,) not in vkeys:
                return False
        for w in ch[v]:
            if w not in adj[u] and _norm_pair(u, w) + (v,) in vkeys:
                return False
        for w in pa[u] | ch[u]:
            if w not in adj[v] and _norm_pair(v, w) + (u,) in vkeys:
                return False
        return True

    vkeys = {(i, j, k) for i, k, j in vstructs}

    def rec(idx):
        if idx == len(order):
            out.append(frozenset((u, v) for v in range(n) for u in pa[v]))
            if len(out) > limit:
                raise BudgetExceeded(limit)
            return
        a, b = order[idx]
        for u, v in ((a, b), (b, a)):
            if ok(u, v):
                pa[v].add(u)
                ch[u].add(v)
                if types is not None and types[u] != types[v]:
                    tcount[(types[u], types[v])] += 1
                rec(idx + 1)
                pa[v].discard(u)
                ch[u].discard(v)
                if types is not None and types[u] != types[v]:
                    tcount[(types[u], types[v])] -= 1

    rec(0)
    return out


def enumerate_mec(dag: Dag, budget: EnumerationBudget | int | None = None) -> list:
    """Every DAG with the skeleton and v-structures of ``dag``."""
    pairs = sorted({_norm_pair(u, v) for u, v in dag.edges})
    members = _orientations(dag.n, pairs, v_structures(dag), None, _budget(budget))
    return sorted((Dag(dag.n, e) for e in members), key=lambda d: sorted(d.edges))


def enumerate_tmec(
    tdag: TypedDag, budget: EnumerationBudget | int | None = None
) -> list:
    """Every consistent t-DAG (same type map) Markov equivalent to ``tdag``.

    Equal to filtering ``enumerate_mec`` by ``is_type_consistent``; the type
    check is applied during the search instead of afterwards.
    """
    if not is_type_consistent(tdag):
        raise TypeInconsistencyError("input t-DAG is not type consistent")
    dag = tdag.dag
    pairs = sorted({_norm_pair(u, v) for u, v in dag.edges})
    members = _orientations(
        dag.n, pairs, v_structures(dag), tdag.types, _budget(budget)
    )
    return sorted(
        (TypedDag(Dag(dag.n, e), tdag.types) for e in members),
        key=lambda t: sorted(t.dag.edges),
    )


def t_essential_graph(
    tdag: TypedDag, budget: EnumerationBudget | int | None = None
) -> Pdag:
    """Union of the t-MEC, by exhaustive enumeration."""
    return union_of_dags(tdag.n, enumerate_tmec(tdag, budget))


# ---------------------------------------------------------------------------
# t-Propagation
# ---------------------------------------------------------------------------


class _TypeIndex:
    """Skeleton edges grouped by unordered type pair."""

    def __init__(self, g: _Work, types: TypeMap):
        self.types = types
        self.groups = defaultdict(list)
        for u in range(g.n):
            for v in g.und[u] | g.ch[u]:
                if types[u] != types[v]:
                    self.groups[frozenset((types[u], types[v]))].append((u, v))

    def orient_tedge(self, g: _Work, src: int, dst: int) -> bool:
        """Orient every edge from type ``src`` to type ``dst``.

        Raises ``TypeInconsistencyError`` if one already points the other way.
        """
        T = self.types
        changed = False
        for u, v in self.groups.get(frozenset((src, dst)), ()):
            if T[u] != src:
                u, v = v, u
            if u in g.pa[v]:
                continue
            if v in g.pa[u]:
                raise TypeInconsistencyError(
                    f"t-edge between types {src} and {dst} is forced both ways",
                    (src, dst),
                )
            g.orient(u, v)
            changed = True
        return changed

    def enforce(self, g: _Work) -> bool:
        """Step 1: every t-edge with an oriented edge gets fully oriented."""
        T = self.types
        changed = False
        for pair in sorted(self.groups, key=sorted):
            dirs = set()
            for u, v in self.groups[pair]:
                if v in g.ch[u]:
                    dirs.add((T[u], T[v]))
                elif u in g.ch[v]:
                    dirs.add((T[v], T[u]))
            if len(dirs) == 2:
                raise TypeInconsistencyError(
                    f"t-edge between types {sorted(pair)} is oriented both ways",
                    min(dirs),
                )
            if dirs:
                changed |= self.orient_tedge(g, *dirs.pop())
        return changed


def _fork_rule(g: _Work, tindex: _TypeIndex) -> bool:
    """Orient b -> a for undirected two-type forks a1 - b - a2."""
    T = tindex.types
    changed = False
    for b in range(g.n):
        und = sorted(g.und[b])
        for a1, a2 in combinations(und, 2):
            if T[a1] == T[a2] != T[b] and not g.adjacent(a1, a2):
                if a1 in g.und[b]:
                    changed |= tindex.orient_tedge(g, T[b], T[a1])
    return changed


def _propagate(g: _Work, tindex: _TypeIndex, fork_rule: bool, granularity: str,
               strict: bool = False) -> None:
    if granularity == "edge":
        T = tindex.types

        def hook(h, u, v):
            if T[u] != T[v]:
                tindex.orient_tedge(h, T[u], T[v])

        tindex.enforce(g)
        while True:
            changed = _meek(g, strict=strict, on_orient=hook)
            if fork_rule:
                changed |= _fork_rule(g, tindex)
            if not changed:
                return
    elif granularity == "pass":
        for _ in range(sum(len(s) for s in g.und) + sum(len(s) for s in g.ch) + 2):
            changed = tindex.enforce(g)
            changed |= _meek(g, strict=strict)
            if fork_rule:
                changed |= _fork_rule(g, tindex)
            if not changed:
                return
        raise AssertionError("propagation did not reach a fixpoint")
    else:
        raise ValueError(f"unknown granularity {granularity!r}")


def propagate_types(
    g: Pdag, types: TypeMap, *, fork_rule: bool = True, granularity: str = "pass"
) -> Pdag:
    """Steps 1-3 of t-Propagation: type enforcement and Meek closure to a
    fixpoint. Sound but not complete.

    ``granularity="pass"`` alternates whole passes of type enforcement and
    Meek closure; ``"edge"`` propagates each single Meek orientation to its
    t-edge immediately, which never creates a type conflict on a
    type-consistent input. Both reach the same fixpoint when the input is a
    sub-orientation of some consistent t-DAG.
    """
    if len(types) != g.n:
        raise ValueError("type map does not cover the graph")
    w = _Work.from_pdag(g)
    _propagate(w, _TypeIndex(w, types), fork_rule, granularity)
    return w.to_pdag()


def _violates(g: _Work, allowed: set) -> bool:
    """New unshielded collider or directed cycle."""
    for v in range(g.n):
        pa = g.pa[v]
        if len(pa) > 1:
            for a, b in combinations(sorted(pa), 2):
                if not g.adjacent(a, b) and (a, v, b) not in allowed:
                    return True
    # cycle check on the directed part
    state = [0] * g.n
    for s in range(g.n):
        if state[s]:
            continue
        stack = [(s, iter(g.ch[s]))]
        state[s] = 1
        while stack:
            x, it = stack[-1]
            nxt = next(it, None)
            if nxt is None:
                state[x] = 2
                stack.pop()
            elif state[nxt] == 1:
                return True
            elif state[nxt] == 0:
                state[nxt] = 1
                stack.append((nxt, iter(g.ch[nxt])))
    return False


class _Extender:
    """Depth-first search over consistent, v-structure-preserving, acyclic
    extensions of a partially directed graph."""

    def __init__(self, g: _Work, types: TypeMap, fork_rule: bool, limit: int):
        self.tindex = _TypeIndex(g, types)
        self.types = types
        self.allowed = set()
        for v in range(g.n):
            for a, b in combinations(sorted(g.pa[v]), 2):
                if not g.adjacent(a, b):
                    self.allowed.add((a, v, b))
        self.fork_rule = fork_rule
        self.limit = limit
        self.nodes = 0

    def settle(self, g: _Work) -> bool:
        """Propagate in place; False if the branch is dead."""
        self.nodes += 1
        if self.nodes > self.limit:
            raise BudgetExceeded(self.limit)
        try:
            _propagate(g, self.tindex, self.fork_rule, "edge", strict=True)
        except (_Conflict, TypeInconsistencyError):
            return False
        return not _violates(g, self.allowed)

    def branch(self, g: _Work, u: int, v: int):
        h = g.copy()
        h.orient(u, v)
        try:
            if self.types[u] != self.types[v]:
                self.tindex.orient_tedge(h, self.types[u], self.types[v])
        except TypeInconsistencyError:
            return None
        return h if self.settle(h) else None

    def leaves(self, g: _Work, first_orientation=None):
        """Yield complete extensions, depth first."""
        if first_orientation is not None:
            g = self.branch(g, *first_orientation)
            if g is None:
                return
        stack = [g]
        while stack:
            h = stack.pop()
            e = h.first_undirected()
            if e is None:
                yield h
                continue
            a, b = e
            kids = [self.branch(h, b, a), self.branch(h, a, b)]
            stack.extend(k for k in kids if k is not None)


def _complete(g: _Work, types: TypeMap, fork_rule: bool, limit: int,
              exhaustive: bool = False) -> Pdag:
    """Step 4: union of all consistent extensions of ``g``."""
    ext = _Extender(g, types, fork_rule, limit)
    root = g.copy()
    if not ext.settle(root):
        raise NoConsistentExtension("no consistent extension exists")
    base_und = root.undirected_edges()
    seen = defaultdict(set)

    def record(leaf):
        for a, b in base_und:
            seen[(a, b)].add((a, b) if b in leaf.ch[a] else (b, a))

    if exhaustive:
        count = 0
        for leaf in ext.leaves(root):
            count += 1
            if count > limit:
                raise BudgetExceeded(limit)
            record(leaf)
        if not count:
            raise NoConsistentExtension("no consistent extension exists")
    else:
        first = next(ext.leaves(root), None)
        if first is None:
            raise NoConsistentExtension("no consistent extension exists")
        record(first)
        for a, b in base_und:
            if len(seen[(a, b)]) == 2:
                continue
            (have,) = seen[(a, b)]
            want = (have[1], have[0])
            leaf = next(ext.leaves(root, want), None)
            if leaf is not None:
                record(leaf)

    directed = {(u, v) for v in range(root.n) for u in root.pa[v]}
    undirected = set()
    for e, dirs in seen.items():
        if len(dirs) == 2:
            undirected.add(e)
        else:
            directed.add(next(iter(dirs)))
    return Pdag(root.n, frozenset(directed), frozenset(undirected))


def t_propagation(
    g: Pdag,
    types: TypeMap,
    budget: EnumerationBudget | int | None = None,
    *,
    fork_rule: bool = True,
    granularity: str = "pass",
    exhaustive: bool = False,
) -> Pdag:
    """t-Propagation: type/Meek propagation to a fixpoint, then the union of
    every consistent t-DAG extending the result.

    When ``g`` shares skeleton and v-structures with a consistent t-DAG whose
    orientations it contains, the output is that t-DAG's t-essential graph.

    The completion step finds, for each still-undirected edge, a witness
    extension for each orientation instead of listing every member; pass
    ``exhaustive=True`` to enumerate all members. The budget caps search
    nodes (or members when exhaustive).

    Raises ``TypeInconsistencyError`` if some t-edge is forced both ways and
    ``NoConsistentExtension`` (a subclass) if no consistent completion exists.
    """
    if len(types) != g.n:
        raise ValueError("type map does not cover the graph")
    w = _Work.from_pdag(g)
    _propagate(w, _TypeIndex(w, types), fork_rule, granularity)
    return _complete(w, types, fork_rule, _budget(budget), exhaustive)


def count_extensions(
    g: Pdag, types: TypeMap, budget: EnumerationBudget | int | None = None
) -> int:
    """Number of consistent t-DAGs extending ``g`` without new v-structures.

    Applied to a t-essential graph this is the t-MEC size; with one type per
    vertex and an essential graph, the MEC size.
    """
    limit = _budget(budget)
    w = _Work.from_pdag(g)
    ext = _Extender(w, types, True, 50 * limit)
    root = w.copy()
    if not ext.settle(root):
        return 0
    count = 0
    for _ in ext.leaves(root):
        count += 1
        if count > limit:
            raise BudgetExceeded(limit)
    return count


def unoriented_tedges(g: Pdag, types: TypeMap) -> int:
    """Number of unordered type pairs with at least one undirected edge."""
    return len(
        {frozenset((types[u], types[v])) for u, v in g.undirected if types[u] != types[v]}
    )


def tmec_upper_bound(t_essential: Pdag, types: TypeMap) -> int:
    """``2**u * prod_t 2**u_t``: ``u`` undirected t-edges, ``u_t`` undirected
    intra-type edges of type ``t``."""
    intra = sum(1 for u, v in t_essential.undirected if types[u] == types[v])
    return 2 ** (unoriented_tedges(t_essential, types) + intra)


def refines(fine: Pdag, coarse: Pdag) -> bool:
    """Orientation-refinement order: same skeleton, and every directed edge of
    ``coarse`` is directed the same way in ``fine``."""
    if fine.n != coarse.n or fine.skeleton_pairs() != coarse.skeleton_pairs():
        return False
    return coarse.directed <= fine.directed
