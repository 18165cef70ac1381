"""PC and its typed variants.

Every algorithm takes a tester (see ``citests``), the number of variables and,
for the typed ones, a ``TypeMap``. Phase 1 (skeleton) is shared; the
variants differ in how they orient forks and how they close the graph.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from itertools import combinations

from .citests import SepsetTable
from .equivalence import (
    EnumerationBudget,
    NoConsistentExtension,
    TypeInconsistencyError,
    _meek,
    _TypeIndex,
    _Work,
    propagate_types,
    t_propagation,
)
from .graphs import Pdag, TypeMap

METHODS = ("pc", "pc-tprop", "tpc-naive", "tpc-majority")


@dataclass
class DiscoveryResult:
    graph: Pdag
    used_fallback: bool = False
    diagnostics: dict = field(default_factory=dict)


def pc_skeleton(tester, d: int, *, stable: bool = True, counters: dict | None = None):
    """Level-wise skeleton search. Returns ``(skeleton, sepsets)``.

    With ``stable=True`` conditioning sets at each level come from the
    adjacencies as they were when the level started.
    """
    adj = [set(range(d)) - {i} for i in range(d)]
    sepsets = SepsetTable()
    ntests = 0
    level = 0
    while True:
        snapshot = [set(a) for a in adj] if stable else adj
        testable = False
        for i in range(d):
            for j in sorted(snapshot[i]):
                if j not in adj[i]:
                    continue
                cands = sorted((snapshot[i] if stable else adj[i]) - {j})
                if len(cands) < level:
                    continue
                testable = True
                for S in combinations(cands, level):
                    ntests += 1
                    if tester(i, j, S).independent:
                        adj[i].discard(j)
                        adj[j].discard(i)
                        sepsets[(i, j)] = S
                        break
        if not testable:
            break
        level += 1
    if counters is not None:
        counters["ci_tests"] = counters.get("ci_tests", 0) + ntests
    pairs = frozenset((i, j) for i in range(d) for j in adj[i] if i < j)
    return Pdag(d, frozenset(), pairs), sepsets


def disconnected_forks(g) -> list:
    """Sorted triples ``(i, k, j)``, ``i < j``, with ``i - k - j`` in the
    skeleton and ``i``, ``j`` non-adjacent."""
    if isinstance(g, _Work):
        adj = [g.und[v] | g.pa[v] | g.ch[v] for v in range(g.n)]
    else:
        adj = g.adjacency()
    out = []
    for k in range(len(adj)):
        for i, j in combinations(sorted(adj[k]), 2):
            if j not in adj[i]:
                out.append((i, k, j))
    out.sort()
    return out


def _separated_through(sepsets, i, k, j) -> bool:
    s = sepsets.get((i, j))
    return s is not None and k in s


def _orient_v_structures(w: _Work, sepsets) -> int:
    conflicts = 0
    for i, k, j in disconnected_forks(w):
        if _separated_through(sepsets, i, k, j):
            continue
        for x in (i, j):
            if x in w.pa[k]:
                continue
            if x in w.ch[k]:
                conflicts += 1
                w.reverse(k, x)
            else:
                w.orient(x, k)
    return conflicts


def orient_v_structures(skel: Pdag, sepsets) -> Pdag:
    """Orient ``i -> k <- j`` for every disconnected fork with ``k`` outside
    the separating set of ``i`` and ``j``. On conflicting arrowheads the last
    write stands."""
    w = _Work.from_pdag(skel)
    _orient_v_structures(w, sepsets)
    return w.to_pdag()


def _phase2_pc(tester, d, stable, counters):
    skel, sepsets = pc_skeleton(tester, d, stable=stable, counters=counters)
    w = _Work.from_pdag(skel)
    counters["vstructure_conflicts"] = _orient_v_structures(w, sepsets)
    return w


def pc(tester, d: int, *, stable: bool = True) -> DiscoveryResult:
    """Plain PC: skeleton, v-structures, Meek closure."""
    counters = {}
    w = _phase2_pc(tester, d, stable, counters)
    _meek(w)
    return DiscoveryResult(w.to_pdag(), False, counters)


def pc_with_tpropagation(
    tester,
    types: TypeMap,
    d: int,
    *,
    budget: EnumerationBudget | int | None = None,
    stable: bool = True,
) -> DiscoveryResult:
    """PC with the Meek phase replaced by t-Propagation.

    When t-Propagation finds the PC orientations type-inconsistent (or not
    completable), the plain PC output is returned with ``used_fallback``.
    """
    counters = {}
    w = _phase2_pc(tester, d, stable, counters)
    phase2 = w.to_pdag()
    try:
        g = t_propagation(phase2, types, budget)
        return DiscoveryResult(g, False, counters)
    except TypeInconsistencyError as err:
        counters["inconsistent_type_pair"] = err.type_pair
        _meek(w)
        return DiscoveryResult(w.to_pdag(), True, counters)


def _finish_typed(w: _Work, types, budget, counters) -> DiscoveryResult:
    g = w.to_pdag()
    try:
        out = t_propagation(g, types, budget, granularity="edge")
    except NoConsistentExtension:
        counters["no_extension"] = True
        out = propagate_types(g, types, granularity="edge")
    return DiscoveryResult(out, False, counters)


def _tedge_key(types, u, v):
    return frozenset((types[u], types[v]))


def tpc_naive(
    tester,
    types: TypeMap,
    d: int,
    *,
    budget: EnumerationBudget | int | None = None,
    stable: bool = True,
) -> DiscoveryResult:
    """Typed PC; each t-edge takes the orientation of the first fork (in
    sorted order) that orients it."""
    counters = {}
    skel, sepsets = pc_skeleton(tester, d, stable=stable, counters=counters)
    w = _Work.from_pdag(skel)
    tindex = _TypeIndex(w, types)
    T = types
    done = set()
    forks = disconnected_forks(w)
    counters["forks_examined"] = len(forks)
    oriented = 0

    def orient(u, v):
        nonlocal oriented
        if T[u] != T[v]:
            key = _tedge_key(T, u, v)
            if key not in done:
                done.add(key)
                tindex.orient_tedge(w, T[u], T[v])
                oriented += 1
        elif v in w.und[u]:
            w.orient(u, v)

    for i, k, j in forks:
        if not _separated_through(sepsets, i, k, j):
            orient(i, k)
            orient(j, k)
        elif T[i] == T[j] != T[k]:
            orient(k, i)
    counters["tedges_oriented"] = oriented
    return _finish_typed(w, types, budget, counters)


def tpc_majority(
    tester,
    types: TypeMap,
    d: int,
    *,
    budget: EnumerationBudget | int | None = None,
    stable: bool = True,
) -> DiscoveryResult:
    """Typed PC; t-edges are oriented one at a time by majority evidence.

    Each v-structure arm between distinct types votes +1 for its direction,
    each two-type fork votes +2 for the fork's direction. The t-edge with the
    most votes is oriented (ties: smallest type pair), together with the
    intra-type arms of v-structures that depend on it. Single-type
    v-structures are oriented afterwards.
    """
    counters = {}
    skel, sepsets = pc_skeleton(tester, d, stable=stable, counters=counters)
    w = _Work.from_pdag(skel)
    tindex = _TypeIndex(w, types)
    T = types
    forks = disconnected_forks(w)
    counters["forks_examined"] = len(forks)
    tdir = {}
    oriented = 0

    def is_oriented(u, v):
        return v in w.pa[u] or v in w.ch[u]

    def orient_edge(u, v):
        if v in w.und[u]:
            w.orient(u, v)
            return True
        return False

    while True:
        evidence = defaultdict(int)
        conditional = defaultdict(set)
        for i, k, j in forks:
            if not _separated_through(sepsets, i, k, j):
                if is_oriented(i, k) and is_oriented(j, k):
                    continue
                for x in (i, j):
                    if T[x] != T[k] and _tedge_key(T, x, k) not in tdir:
                        evidence[(T[x], T[k])] += 1
                if T[i] == T[k] != T[j]:
                    conditional[(T[j], T[k])].add((i, k))
                if T[j] == T[k] != T[i]:
                    conditional[(T[i], T[k])].add((j, k))
            elif T[i] == T[j] != T[k] and _tedge_key(T, k, i) not in tdir:
                evidence[(T[k], T[i])] += 2
        # arms whose t-edge is already settled the matching way
        applied = False
        for pair, edges in conditional.items():
            if tdir.get(frozenset(pair)) == pair:
                for u, v in sorted(edges):
                    applied |= orient_edge(u, v)
        best = max(evidence.values(), default=0)
        if best == 0:
            if applied:
                continue
            break
        pair = min(p for p, e in evidence.items() if e == best)
        tdir[frozenset(pair)] = pair
        tindex.orient_tedge(w, *pair)
        oriented += 1
        for u, v in sorted(conditional.get(pair, ())):
            orient_edge(u, v)

    for i, k, j in forks:
        if T[i] == T[j] == T[k] and not _separated_through(sepsets, i, k, j):
            orient_edge(i, k)
            orient_edge(j, k)
    counters["tedges_oriented"] = oriented
    return _finish_typed(w, types, budget, counters)


def discover(method: str, tester, types: TypeMap | None, d: int, **kw) -> DiscoveryResult:
    if method == "pc":
        return pc(tester, d, stable=kw.get("stable", True))
    if types is None:
        raise ValueError(f"method {method!r} needs a type map")
    fn = {"pc-tprop": pc_with_tpropagation, "tpc-naive": tpc_naive,
          "tpc-majority": tpc_majority}.get(method)
    if fn is None:
        raise ValueError(f"unknown method {method!r}; choose from {METHODS}")
    return fn(tester, types, d, **kw)
