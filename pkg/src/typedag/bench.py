"""Structural Hamming distance and the experiment harnesses.

Three harnesses:

* ``run_theory_experiment``: identifiability of random growing t-DAGs
  (unoriented t-edges, MEC and t-MEC sizes, the convergence bound).
* ``run_synthetic_benchmark``: SCM data, the four discovery methods, SHD
  against the true t-essential graph.
* ``run_pseudoreal_benchmark``: the same on BIF networks with types assigned
  by splitting a topological order.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .citests import FisherZTester, GSquareTester, OracleTester
from .discovery import METHODS, discover
from .equivalence import (
    BudgetExceeded,
    count_extensions,
    essential_graph,
    t_essential_graph,
    t_propagation,
    unoriented_tedges,
)
from .graphs import Pdag, TypedDag, TypeMap, graph_from_json, graph_to_json, pdag_is_type_consistent
from .random_tdag import make_rng, random_instance, theorem1_bound
from .simulate import ancestral_sample, assign_types_topological, make_scm, read_bif, sample_scm

log = logging.getLogger(__name__)

MEC_MAX_D = 15


# ---------------------------------------------------------------------------
# SHD
# ---------------------------------------------------------------------------


def _edge_marks(g: Pdag) -> dict:
    marks = {}
    for u, v in g.directed:
        marks[(min(u, v), max(u, v))] = (u, v)
    for u, v in g.undirected:
        marks[(u, v)] = None
    return marks


def shd(estimate: Pdag, truth: Pdag, half: bool = False):
    """Structural Hamming distance between two PDAGs.

    Each vertex pair where the graphs differ counts 1: an edge in only one
    graph, a reversed edge, or a directed edge against an undirected one.
    With ``half=True`` directed-vs-undirected counts 0.5 instead.
    """
    if estimate.n != truth.n:
        raise ValueError(f"vertex counts differ: {estimate.n} vs {truth.n}")
    a, b = _edge_marks(estimate), _edge_marks(truth)
    total = 0.0
    for pair in a.keys() | b.keys():
        if pair not in a or pair not in b:
            total += 1
        elif a[pair] != b[pair]:
            total += 0.5 if half and (a[pair] is None or b[pair] is None) else 1
    return total if half else int(total)


# ---------------------------------------------------------------------------
# ground truth
# ---------------------------------------------------------------------------


def graph_hash(td: TypedDag) -> str:
    obj = graph_to_json(td.dag.to_pdag(), td.types)
    return hashlib.sha256(json.dumps(obj, sort_keys=True).encode()).hexdigest()[:32]


def true_t_essential(td: TypedDag, budget=None, cache_dir=None) -> Pdag:
    """t-essential graph of ``td`` by enumeration, cached on disk under
    ``cache_dir`` when given.

    If enumeration exceeds ``budget`` the result comes from t-Propagation on
    the essential graph, which computes the same graph.
    """
    path = None
    if cache_dir is not None:
        path = Path(cache_dir) / f"{graph_hash(td)}.json"
        if path.exists():
            return graph_from_json(json.loads(path.read_text()))[0]
    try:
        g = t_essential_graph(td, budget)
    except BudgetExceeded:
        g = t_propagation(essential_graph(td.dag), td.types)
    if path is not None:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(graph_to_json(g, td.types)))
    return g


# ---------------------------------------------------------------------------
# theory experiment
# ---------------------------------------------------------------------------

THEORY_COLUMNS = (
    "seed", "n", "k", "p_inter", "p_intra",
    "unoriented_tedges", "mec_size", "tmec_size", "bound",
)


@dataclass
class TheoryConfig:
    n_list: list = field(default_factory=lambda: [10, 20, 40, 70, 100])
    k: int = 10
    p_inter: float = 0.2
    p_intra: list = field(default_factory=lambda: [0.0, 0.1, 0.5])
    seeds: int | list = 100
    budget: int | None = 10**5
    base_seed: int = 0
    mec_max_d: int = MEC_MAX_D

    @classmethod
    def from_json(cls, obj) -> "TheoryConfig":
        if isinstance(obj, str):
            obj = json.loads(obj)
        names = {f.name for f in fields(cls)}
        unknown = set(obj) - names
        if unknown:
            raise ValueError(f"unknown config keys {sorted(unknown)}")
        cfg = cls(**obj)
        if isinstance(cfg.p_intra, (int, float)):
            cfg.p_intra = [cfg.p_intra]
        return cfg

    def seed_list(self) -> list:
        return list(range(self.seeds)) if isinstance(self.seeds, int) else list(self.seeds)


def theory_row(n, k, p_inter, p_intra, seed, base_seed=0, budget=None, mec_max_d=MEC_MAX_D) -> dict:
    """One row of the identifiability sweep.

    The graph for ``seed`` uses the stream ``(base_seed, seed)``, so graphs at
    different ``n`` are prefixes of one growing graph.
    """
    td, cfg = random_instance(n, k, p_inter, p_intra, base_seed, seed)
    eg = essential_graph(td.dag)
    # the witness search is cheap next to counting; keep the default budget
    te = t_propagation(eg, td.types)
    row = {
        "seed": seed, "n": n, "k": k, "p_inter": p_inter, "p_intra": p_intra,
        "unoriented_tedges": unoriented_tedges(te, td.types),
        "mec_size": None, "tmec_size": None,
        "bound": theorem1_bound(cfg.type_dist, cfg.interactions, n) if n >= 3 else None,
    }
    if te.is_fully_directed():
        row["tmec_size"] = 1
    else:
        try:
            row["tmec_size"] = count_extensions(te, td.types, budget)
        except BudgetExceeded:
            pass
    if n <= mec_max_d:
        try:
            row["mec_size"] = count_extensions(eg, TypeMap(tuple(range(n)), max(n, 1)), budget)
        except BudgetExceeded:
            pass
    return row


def _theory_task(args):
    return theory_row(*args)


def run_theory_experiment(config: TheoryConfig | dict, workers: int = 1) -> list:
    """Rows (dicts keyed by ``THEORY_COLUMNS``) for every
    ``(p_intra, n, seed)``; sizes are ``None`` where the budget ran out."""
    if isinstance(config, dict):
        config = TheoryConfig.from_json(config)
    tasks = [
        (n, config.k, config.p_inter, p_intra, seed, config.base_seed, config.budget, config.mec_max_d)
        for p_intra in config.p_intra
        for n in config.n_list
        for seed in config.seed_list()
    ]
    return _run_tasks(_theory_task, tasks, workers)


def summarize_theory(rows) -> list:
    """Per ``(p_intra, n)``: mean unoriented t-edges with its standard error,
    fraction with ``U > 0``, fraction with a t-MEC of size 1, and the bound."""
    groups = {}
    for r in rows:
        groups.setdefault((r["p_intra"], r["n"]), []).append(r)
    out = []
    for (p_intra, n), rs in sorted(groups.items()):
        m = len(rs)
        u = [r["unoriented_tedges"] for r in rs]
        mean = sum(u) / m
        var = sum((x - mean) ** 2 for x in u) / (m - 1) if m > 1 else 0.0
        pos = sum(x > 0 for x in u) / m
        out.append({
            "p_intra": p_intra, "n": n, "seeds": m,
            "mean_unoriented": mean, "se_unoriented": (var / m) ** 0.5,
            "frac_unoriented": pos, "se_frac": (pos * (1 - pos) / m) ** 0.5,
            "frac_tmec_one": sum(r["tmec_size"] == 1 for r in rs) / m,
            "bound": rs[0]["bound"],
        })
    return out


# ---------------------------------------------------------------------------
# discovery benchmarks
# ---------------------------------------------------------------------------


@dataclass
class BenchmarkRow:
    method: str
    seed: int
    instance: str
    d: int
    k: int
    shd: int | None
    shd_improvement_vs_pc: int | None
    runtime_ms: float
    used_fallback: bool
    type_consistent: bool | None
    approximate_test: bool = False
    error: str = ""

    def key(self) -> tuple:
        """Every field but the runtime; identical across reruns."""
        return tuple(v for f, v in asdict(self).items() if f != "runtime_ms")


BENCH_COLUMNS = tuple(f.name for f in fields(BenchmarkRow))


def score_methods(tester, td: TypedDag, truth: Pdag, seed: int, instance: str,
                  methods=METHODS, budget=None) -> list:
    """Run each method once and score it against ``truth``."""
    rows = []
    approx = bool(getattr(tester, "approximate", False))
    for method in methods:
        t0 = time.perf_counter()
        try:
            res = discover(method, tester, td.types, td.n, budget=budget) if method != "pc" \
                else discover("pc", tester, None, td.n)
            ms = (time.perf_counter() - t0) * 1000
            consistent = pdag_is_type_consistent(res.graph, td.types)
            rows.append(BenchmarkRow(method, seed, instance, td.n, td.types.k,
                                     shd(res.graph, truth), None, ms, res.used_fallback, consistent,
                                     approx))
        except Exception as err:  # recorded, the run goes on
            ms = (time.perf_counter() - t0) * 1000
            log.warning("%s failed on %s seed %s: %s", method, instance, seed, err)
            rows.append(BenchmarkRow(method, seed, instance, td.n, td.types.k,
                                     None, None, ms, False, None, approx, f"{type(err).__name__}: {err}"))
    pc_shd = next((r.shd for r in rows if r.method == "pc"), None)
    for r in rows:
        if r.shd is not None and pc_shd is not None:
            r.shd_improvement_vs_pc = r.shd - pc_shd
    return rows


@dataclass
class SyntheticConfig:
    d: int = 20
    k: int = 5
    p_inter: float = 0.2
    p_intra: float = 0.0
    mechanism: str = "linear"
    n_samples: int = 10_000
    seeds: int | list = 20
    alpha: float = 0.01
    oracle: bool = False
    budget: int | None = None
    base_seed: int = 0
    methods: tuple = METHODS
    cache_dir: str | None = None

    @classmethod
    def from_json(cls, obj) -> "SyntheticConfig":
        if isinstance(obj, str):
            obj = json.loads(obj)
        unknown = set(obj) - {f.name for f in fields(cls)}
        if unknown:
            raise ValueError(f"unknown config keys {sorted(unknown)}")
        return cls(**obj)

    def seed_list(self) -> list:
        return list(range(self.seeds)) if isinstance(self.seeds, int) else list(self.seeds)


def _synthetic_task(args):
    cfg, seed = args
    td, _ = random_instance(cfg.d, cfg.k, cfg.p_inter, cfg.p_intra, cfg.base_seed, seed, 0)
    truth = true_t_essential(td, cfg.budget, cfg.cache_dir)
    if cfg.oracle:
        tester = OracleTester(td.dag)
    else:
        scm = make_scm(td.dag, cfg.mechanism, make_rng(cfg.base_seed, seed, 1))
        data = sample_scm(scm, cfg.n_samples, make_rng(cfg.base_seed, seed, 2))
        tester = FisherZTester(data, cfg.alpha, approximate=cfg.mechanism != "linear")
    instance = f"synthetic-{cfg.mechanism}" if not cfg.oracle else "synthetic-oracle"
    return score_methods(tester, td, truth, seed, instance, cfg.methods, cfg.budget)


def run_synthetic_benchmark(config: SyntheticConfig | dict, workers: int = 1) -> list:
    """Rows for every seed and method on random t-DAGs with SCM data (or the
    d-separation oracle when ``config.oracle``)."""
    if isinstance(config, dict):
        config = SyntheticConfig.from_json(config)
    tasks = [(config, s) for s in config.seed_list()]
    return [r for rows in _run_tasks(_synthetic_task, tasks, workers) for r in rows]


@dataclass
class PseudoRealConfig:
    networks: list = field(default_factory=list)
    seeds: int | list = 10
    n_samples: int = 20_000
    expected_size: float = 5.0
    alpha: float = 0.01
    budget: int | None = None
    base_seed: int = 0
    methods: tuple = METHODS
    cache_dir: str | None = None

    @classmethod
    def from_json(cls, obj) -> "PseudoRealConfig":
        if isinstance(obj, str):
            obj = json.loads(obj)
        unknown = set(obj) - {f.name for f in fields(cls)}
        if unknown:
            raise ValueError(f"unknown config keys {sorted(unknown)}")
        return cls(**obj)

    def seed_list(self) -> list:
        return list(range(self.seeds)) if isinstance(self.seeds, int) else list(self.seeds)


def _pseudoreal_task(args):
    cfg, path, net_index, seed = args
    bn = read_bif(path)
    types = assign_types_topological(bn.dag, cfg.expected_size, make_rng(cfg.base_seed, net_index, seed, 0))
    td = TypedDag(bn.dag, types)
    truth = true_t_essential(td, cfg.budget, cfg.cache_dir)
    data = ancestral_sample(bn, cfg.n_samples, make_rng(cfg.base_seed, net_index, seed, 1))
    tester = GSquareTester(data, cfg.alpha)
    return score_methods(tester, td, truth, seed, Path(path).name.split(".")[0], cfg.methods, cfg.budget)


def run_pseudoreal_benchmark(config: PseudoRealConfig | dict, workers: int = 1) -> list:
    """Rows for every network, type-assignment seed and method. A network
    that fails to load is logged and skipped."""
    if isinstance(config, dict):
        config = PseudoRealConfig.from_json(config)
    tasks = []
    for idx, path in enumerate(config.networks):
        try:
            read_bif(path)
        except (OSError, ValueError) as err:
            log.error("skipping network %s: %s", path, err)
            continue
        tasks.extend((config, str(path), idx, s) for s in config.seed_list())
    return [r for rows in _run_tasks(_pseudoreal_task, tasks, workers) for r in rows]


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------


def _run_tasks(fn, tasks, workers):
    # results come back in task order whatever the pool size
    if workers <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks, chunksize=1))


def rows_to_csv(rows, columns=None) -> str:
    """CSV text; ``None`` becomes an empty field."""
    if rows and isinstance(rows[0], BenchmarkRow):
        rows = [asdict(r) for r in rows]
        columns = columns or BENCH_COLUMNS
    columns = columns or THEORY_COLUMNS
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow(["" if r[c] is None else r[c] for c in columns])
    return buf.getvalue()


def mean_shd(rows, method) -> float:
    vals = [r.shd for r in rows if r.method == method and r.shd is not None]
    return sum(vals) / len(vals) if vals else float("nan")
