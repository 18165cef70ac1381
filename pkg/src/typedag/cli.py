"""Command-line interface: ``typedag <command> ...``.

Exit status is 0 on success, 2 on invalid input and 3 when an enumeration
budget runs out.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import bench
from .citests import FisherZTester, GSquareTester, OracleTester, read_dataset, write_dataset
from .discovery import METHODS, discover
from .equivalence import BudgetExceeded, EnumerationBudget, t_essential_graph
from .graphs import TypedDag, TypeMap, graph_from_json, graph_to_json, typed_dag_from_json
from .random_tdag import make_rng, random_instance
from .simulate import (
    MECHANISMS,
    ancestral_sample,
    assign_types_topological,
    make_scm,
    read_bif,
    sample_scm,
)

EXIT_OK, EXIT_INVALID, EXIT_BUDGET = 0, 2, 3


def _load_json(path):
    return json.loads(Path(path).read_text())


def _emit(text: str, out) -> None:
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _budget(args):
    return EnumerationBudget(args.budget) if args.budget else None


def _load_types(path, d) -> TypeMap:
    obj = _load_json(path)
    if isinstance(obj, list):
        types = TypeMap.from_list(obj)
    else:
        types = TypeMap.from_list(obj["types"], obj.get("k"))
    if len(types) != d:
        raise ValueError(f"type map covers {len(types)} variables, data has {d}")
    return types


def cmd_generate(args):
    td, cfg = random_instance(args.n, args.k, args.p_inter, args.p_intra, args.seed)
    obj = graph_to_json(td.dag.to_pdag(), td.types)
    obj["interactions"] = cfg.interactions.p.tolist()
    _emit(json.dumps(obj, indent=2) + "\n", args.output)


def cmd_simulate(args):
    if (args.graph is None) == (args.bif is None):
        raise ValueError("give exactly one of --graph or --bif")
    if args.graph:
        td = typed_dag_from_json(_load_json(args.graph))
        scm = make_scm(td.dag, args.mechanism, make_rng(args.seed, 1))
        data = sample_scm(scm, args.n_samples, make_rng(args.seed, 2))
        if args.scm_out:
            Path(args.scm_out).write_text(json.dumps(scm.to_json()))
    else:
        bn = read_bif(args.bif)
        data = ancestral_sample(bn, args.n_samples, make_rng(args.seed, 1))
        if args.types_out:
            types = assign_types_topological(bn.dag, args.expected_size, make_rng(args.seed, 0))
            obj = graph_to_json(bn.dag.to_pdag(), types)
            obj["names"] = list(bn.names)
            Path(args.types_out).write_text(json.dumps(obj, indent=2) + "\n")
    write_dataset(data, args.output)


def cmd_discover(args):
    if args.oracle:
        if not args.graph:
            raise ValueError("--oracle needs --graph with the true DAG")
        td = typed_dag_from_json(_load_json(args.graph))
        tester, d = OracleTester(td.dag), td.n
        types = td.types
    else:
        if not args.data:
            raise ValueError("give a data file or --oracle")
        data = read_dataset(args.data)
        tester = GSquareTester(data, args.alpha) if data.is_discrete else FisherZTester(data, args.alpha)
        d = data.d
        types = _load_types(args.types, d) if args.types else None
    res = discover(args.method, tester, types, d, **({"budget": _budget(args)} if args.method != "pc" else {}))
    obj = graph_to_json(res.graph, types)
    obj["method"] = args.method
    obj["used_fallback"] = res.used_fallback
    obj["diagnostics"] = {k: (list(v) if isinstance(v, tuple) else v) for k, v in res.diagnostics.items()}
    _emit(json.dumps(obj, indent=2) + "\n", args.output)


def cmd_eval(args):
    est, _ = graph_from_json(_load_json(args.estimate))
    truth_obj = _load_json(args.truth)
    truth, types = graph_from_json(truth_obj)
    if args.essential:
        if truth.undirected:
            raise ValueError("--essential needs a fully directed truth graph")
        truth = t_essential_graph(TypedDag(truth.to_dag(), types), _budget(args))
    print(bench.shd(est, truth, half=args.half))


def cmd_theory(args):
    cfg = bench.TheoryConfig.from_json(_load_json(args.config)) if args.config else bench.TheoryConfig()
    if args.seed is not None:
        cfg.base_seed = args.seed
    if args.budget:
        cfg.budget = args.budget
    rows = bench.run_theory_experiment(cfg, workers=args.workers)
    _emit(bench.rows_to_csv(rows), args.output)


def cmd_bench(args):
    obj = _load_json(args.config) if args.config else {}
    if args.kind == "pseudoreal":
        if args.networks:
            obj["networks"] = args.networks
        cfg = bench.PseudoRealConfig.from_json(obj)
        if not cfg.networks:
            raise ValueError("pseudo-real benchmark needs BIF paths (--networks or config)")
    else:
        cfg = bench.SyntheticConfig.from_json(obj)
        if args.mechanism:
            cfg.mechanism = args.mechanism
        cfg.oracle = cfg.oracle or args.oracle
    if args.seed is not None:
        cfg.base_seed = args.seed
    if args.alpha is not None:
        cfg.alpha = args.alpha
    if args.budget:
        cfg.budget = args.budget
    if args.kind == "pseudoreal":
        rows = bench.run_pseudoreal_benchmark(cfg, workers=args.workers)
    else:
        rows = bench.run_synthetic_benchmark(cfg, workers=args.workers)
    _emit(bench.rows_to_csv(rows), args.output)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="typedag", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, seed=0, alpha=None):
        p.add_argument("--seed", type=int, default=seed)
        p.add_argument("--budget", type=int, default=None, help="enumeration node budget")
        p.add_argument("-o", "--output", default=None, help="output file (default stdout)")
        p.add_argument("--alpha", type=float, default=alpha, help="CI test level")

    p = sub.add_parser("generate", help="random growing t-DAG as JSON")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--p-inter", type=float, default=0.2)
    p.add_argument("--p-intra", type=float, default=0.0)
    common(p)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("simulate", help="sample a dataset (CSV) from an SCM or a BIF network")
    p.add_argument("--graph", help="typed DAG JSON (from generate)")
    p.add_argument("--bif", help="BIF file (.bif or .bif.gz)")
    p.add_argument("--mechanism", choices=MECHANISMS, default="linear")
    p.add_argument("--n-samples", type=int, default=10_000)
    p.add_argument("--scm-out", help="write the drawn SCM parameters here")
    p.add_argument("--types-out", help="BIF only: write a topological type assignment here")
    p.add_argument("--expected-size", type=float, default=5.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", required=True, help="CSV path; a .json sidecar is written next to it")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("discover", help="run a discovery method, output graph JSON")
    p.add_argument("data", nargs="?", help="dataset CSV (with sidecar JSON)")
    p.add_argument("--types", help="JSON with a 'types' list (e.g. a graph JSON)")
    p.add_argument("--method", choices=METHODS, default="tpc-majority")
    p.add_argument("--oracle", action="store_true", help="use d-separation in --graph")
    p.add_argument("--graph", help="true typed DAG JSON (for --oracle)")
    common(p, alpha=0.01)
    p.set_defaults(func=cmd_discover)

    p = sub.add_parser("eval", help="SHD between two graph JSONs")
    p.add_argument("estimate")
    p.add_argument("truth")
    p.add_argument("--essential", action="store_true",
                   help="compare against the t-essential graph of a directed truth")
    p.add_argument("--half", action="store_true", help="directed vs undirected counts 0.5")
    p.add_argument("--budget", type=int, default=None)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("theory", help="identifiability sweep on random t-DAGs, CSV out")
    p.add_argument("--config", help="JSON {n_list, k, p_inter, p_intra, seeds, budget}")
    p.add_argument("--workers", type=int, default=1)
    common(p, seed=None)
    p.set_defaults(func=cmd_theory)

    p = sub.add_parser("bench", help="discovery benchmark, CSV out")
    p.add_argument("--kind", choices=("synthetic", "pseudoreal"), default="synthetic")
    p.add_argument("--config", help="JSON config")
    p.add_argument("--networks", nargs="*", help="BIF paths (pseudoreal)")
    p.add_argument("--mechanism", choices=MECHANISMS)
    p.add_argument("--oracle", action="store_true")
    p.add_argument("--workers", type=int, default=1)
    common(p, seed=None)
    p.set_defaults(func=cmd_bench)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except BudgetExceeded as err:
        print(f"error: enumeration budget exceeded ({err})", file=sys.stderr)
        return EXIT_BUDGET
    except (ValueError, KeyError, OSError, json.JSONDecodeError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_INVALID
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
