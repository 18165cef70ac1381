"""Random growing t-DAGs and the convergence bound on unoriented t-edges.

Randomness comes from ``make_rng``: numpy's counter-based Philox generator
keyed by ``(seed, stream)``. Experiments use one stream per graph index, so
results do not depend on how work is split across processes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .graphs import Dag, TypedDag, TypeMap


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    """Philox generator for the stream ``(seed, *stream)``."""
    ss = np.random.SeedSequence([int(seed) & (2**64 - 1), *map(int, stream)])
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class InteractionMatrix:
    """``p[i][j]``: probability a type-``i`` vertex causes a later type-``j``
    vertex. Distinct types interact in at most one direction."""

    p: np.ndarray

    def __post_init__(self):
        p = np.array(self.p, dtype=float)
        if p.ndim != 2 or p.shape[0] != p.shape[1]:
            raise ValueError("interaction matrix must be square")
        if np.any(p < 0) or np.any(p > 1):
            raise ValueError("interaction probabilities must lie in [0, 1]")
        both = (p > 0) & (p.T > 0)
        np.fill_diagonal(both, False)
        if both.any():
            i, j = np.argwhere(both)[0]
            raise ValueError(f"types {i} and {j} interact in both directions")
        p.setflags(write=False)
        object.__setattr__(self, "p", p)

    @property
    def k(self) -> int:
        return self.p.shape[0]


@dataclass(frozen=True)
class TypeDistribution:
    probs: tuple

    def __post_init__(self):
        probs = tuple(float(x) for x in self.probs)
        if not probs or any(not (0 < x < 1) and not (len(probs) == 1 and x == 1) for x in probs):
            raise ValueError("type probabilities must lie in (0, 1)")
        if abs(sum(probs) - 1) > 1e-9:
            raise ValueError("type probabilities must sum to 1")
        object.__setattr__(self, "probs", probs)

    @classmethod
    def uniform(cls, k: int) -> "TypeDistribution":
        return cls((1.0 / k,) * k)

    @property
    def k(self) -> int:
        return len(self.probs)


@dataclass(frozen=True)
class GrowthConfig:
    n: int
    type_dist: TypeDistribution
    interactions: InteractionMatrix
    seed: int = 0
    stream: tuple = field(default=())

    def __post_init__(self):
        if self.n < 0:
            raise ValueError("n must be non-negative")
        if self.type_dist.k != self.interactions.k:
            raise ValueError("type distribution and interaction matrix disagree on k")


def sample_interaction_matrix(k: int, p_inter: float, p_intra: float, rng) -> InteractionMatrix:
    """Each unordered type pair gets ``p_inter`` in one direction chosen by a
    fair coin and 0 in the other; the diagonal is ``p_intra``."""
    if k < 1:
        raise ValueError("k must be positive")
    if not (0 <= p_inter <= 1 and 0 <= p_intra <= 1):
        raise ValueError("probabilities must lie in [0, 1]")
    p = np.zeros((k, k))
    np.fill_diagonal(p, p_intra)
    for i in range(k):
        for j in range(i + 1, k):
            if rng.random() < 0.5:
                p[i, j] = p_inter
            else:
                p[j, i] = p_inter
    return InteractionMatrix(p)


def grow_random_tdag(cfg: GrowthConfig, rng: np.random.Generator | None = None) -> TypedDag:
    """Grow a t-DAG one vertex at a time; index order is a topological order.

    Vertex ``m`` draws its type by inverse CDF, then links from each earlier
    vertex ``i`` with probability ``p[T(i), T(m)]``. The draws for a prefix
    are identical for every ``n``, so graphs with the same seed are nested.
    """
    if rng is None:
        rng = make_rng(cfg.seed, *cfg.stream)
    cdf = np.cumsum(cfg.type_dist.probs)
    cdf[-1] = 1.0
    p = cfg.interactions.p
    types = np.empty(cfg.n, dtype=int)
    edges = []
    for m in range(cfg.n):
        t = int(np.searchsorted(cdf, rng.random(), side="right"))
        types[m] = min(t, len(cdf) - 1)
        if m:
            u = rng.random(m)
            hits = np.nonzero(u < p[types[:m], types[m]])[0]
            edges.extend((int(i), m) for i in hits)
    return TypedDag(Dag(cfg.n, frozenset(edges)), TypeMap(tuple(types), cfg.type_dist.k))


def random_instance(n: int, k: int, p_inter: float, p_intra: float, seed: int, *stream: int):
    """Uniform type probabilities, a freshly sampled interaction matrix and a
    t-DAG grown from them. Returns ``(tdag, config)``; ``grow_random_tdag(config)``
    regrows the same t-DAG.

    The matrix is drawn from the sub-stream ``(seed, *stream, 0)``, the graph
    from ``(seed, *stream)``.
    """
    A = sample_interaction_matrix(k, p_inter, p_intra, make_rng(seed, *stream, 0))
    cfg = GrowthConfig(n, TypeDistribution.uniform(k), A, seed, tuple(stream))
    return grow_random_tdag(cfg), cfg


def random_tdag(n: int, k: int, p_inter: float, p_intra: float, seed: int, *stream: int) -> TypedDag:
    return random_instance(n, k, p_inter, p_intra, seed, *stream)[0]


def convergence_rate(p_i: float, p_j: float, p_ij: float, p_jj: float) -> float:
    """``r_ij = -1/3 * max(ln(1 - p_i), ln(1 - p_j p_ij (1 - p_jj)))``."""
    if not (0 < p_i < 1 and 0 < p_j < 1):
        raise ValueError("type probabilities must lie in (0, 1)")
    if not (0 <= p_ij <= 1 and 0 <= p_jj <= 1):
        raise ValueError("interaction probabilities must lie in [0, 1]")
    return -max(math.log1p(-p_i), math.log1p(-p_j * p_ij * (1 - p_jj))) / 3


def theorem1_bound(type_probs, interactions, n: int) -> float:
    """Upper bound on P(U > 0), U the number of unoriented t-edges:
    ``min(1, 4 * sum_{i != j, p_ij > 0} exp(-r_ij n))``.

    With a zero diagonal this is also the bound on P(|t-MEC| > 1).
    """
    if n < 3:
        raise ValueError("the bound needs n >= 3")
    probs = type_probs.probs if isinstance(type_probs, TypeDistribution) else tuple(type_probs)
    p = interactions.p if isinstance(interactions, InteractionMatrix) else np.asarray(interactions)
    total = 0.0
    k = len(probs)
    for i in range(k):
        for j in range(k):
            if i != j and p[i, j] > 0:
                r = convergence_rate(probs[i], probs[j], p[i, j], p[j, j])
                total += math.exp(-r * n)
    return min(1.0, 4 * total)
