"""Synthetic data: continuous SCMs, discrete Bayesian networks from BIF files,
and type assignment by splitting a topological order into blocks.
"""

from __future__ import annotations

import gzip
import itertools
import json
import math
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import ndtri

from .citests import Dataset
from .graphs import Dag, TypeMap

MECHANISMS = ("linear", "anm", "nn")
ANM_HIDDEN = 10
NN_HIDDEN = 20
LEAKY_SLOPE = 0.25


def standard_normal(rng: np.random.Generator, size) -> np.ndarray:
    """Standard normals by inversion of the normal CDF (``ndtri``) applied to
    uniform draws."""
    u = rng.random(size)
    np.clip(u, 1e-300, None, out=u)
    return ndtri(u)


# ---------------------------------------------------------------------------
# SCMs
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Scm:
    """Additive-noise or neural SCM over ``dag``.

    ``params[j]`` holds the mechanism of node ``j``: ``{"weights": w}`` for
    linear nodes, ``{"W1": (h, m), "w2": (h,)}`` for anm/nn nodes (``m`` is the
    parent count, plus one for nn where the noise is the last input). Source
    nodes carry empty params and are pure noise.
    """

    dag: Dag
    mechanism: str
    variances: tuple
    params: tuple

    def __post_init__(self):
        if self.mechanism not in MECHANISMS:
            raise ValueError(f"unknown mechanism {self.mechanism!r}")
        n = self.dag.n
        if len(self.variances) != n or len(self.params) != n:
            raise ValueError("one variance and one parameter set per node")
        if any(not v > 0 for v in self.variances):
            raise ValueError("noise variances must be positive")
        for j in range(n):
            m = len(self.dag.parents(j))
            p = self.params[j]
            if m == 0:
                continue
            if self.mechanism == "linear":
                if len(p["weights"]) != m:
                    raise ValueError(f"node {j}: weight vector length != parent count")
            else:
                extra = 1 if self.mechanism == "nn" else 0
                if np.shape(p["W1"])[1] != m + extra:
                    raise ValueError(f"node {j}: hidden layer has the wrong input width")

    def to_json(self) -> dict:
        params = []
        for p in self.params:
            params.append({k: np.asarray(v).tolist() for k, v in p.items()})
        return {
            "d": self.dag.n,
            "edges": sorted(map(list, self.dag.edges)),
            "mechanism": self.mechanism,
            "variances": list(self.variances),
            "params": params,
        }

    @classmethod
    def from_json(cls, obj) -> "Scm":
        if isinstance(obj, str):
            obj = json.loads(obj)
        dag = Dag(obj["d"], frozenset(map(tuple, obj["edges"])))
        params = tuple({k: np.asarray(v, dtype=float) for k, v in p.items()} for p in obj["params"])
        return cls(dag, obj["mechanism"], tuple(obj["variances"]), params)


def _linear_weights(rng, m):
    mag = rng.uniform(0.25, 1.0, m)
    sign = np.where(rng.random(m) < 0.5, -1.0, 1.0)
    return mag * sign


def make_scm(dag: Dag, mechanism: str = "linear", rng: np.random.Generator | None = None) -> Scm:
    """Draw mechanism parameters and noise variances for every node.

    Noise variance is Uniform[1, 2] for sources and Uniform[0.01, 0.02]
    otherwise. Linear weights are uniform on ``[-1, -0.25] u [0.25, 1]``;
    hidden-layer weights are standard normal with zero biases.
    """
    if mechanism not in MECHANISMS:
        raise ValueError(f"unknown mechanism {mechanism!r}")
    if rng is None:
        rng = np.random.default_rng()
    variances = []
    params = []
    for j in range(dag.n):
        m = len(dag.parents(j))
        if m == 0:
            variances.append(float(rng.uniform(1.0, 2.0)))
            params.append({})
            continue
        variances.append(float(rng.uniform(0.01, 0.02)))
        if mechanism == "linear":
            params.append({"weights": _linear_weights(rng, m)})
        elif mechanism == "anm":
            params.append({"W1": rng.standard_normal((ANM_HIDDEN, m)),
                           "w2": rng.standard_normal(ANM_HIDDEN)})
        else:
            params.append({"W1": rng.standard_normal((NN_HIDDEN, m + 1)),
                           "w2": rng.standard_normal(NN_HIDDEN)})
    return Scm(dag, mechanism, tuple(variances), tuple(params))


def _leaky_relu(x):
    return np.where(x > 0, x, LEAKY_SLOPE * x)


def sample_scm(scm: Scm, n: int, rng: np.random.Generator) -> Dataset:
    """Ancestral sampling of ``n`` rows; columns follow vertex order."""
    if n < 1:
        raise ValueError("n must be at least 1")
    d = scm.dag.n
    X = np.zeros((n, d))
    for j in scm.dag.topological_order():
        noise = standard_normal(rng, n) * math.sqrt(scm.variances[j])
        pa = sorted(scm.dag.parents(j))
        if not pa:
            X[:, j] = noise
            continue
        p = scm.params[j]
        Xpa = X[:, pa]
        if scm.mechanism == "linear":
            X[:, j] = Xpa @ p["weights"] + noise
        elif scm.mechanism == "anm":
            X[:, j] = _leaky_relu(Xpa @ p["W1"].T) @ p["w2"] + noise
        else:
            inp = np.column_stack([Xpa, noise])
            X[:, j] = np.tanh(inp @ p["W1"].T) @ p["w2"]
    return Dataset(X)


def linear_covariance(scm: Scm) -> np.ndarray:
    """Population covariance of a linear SCM: ``(I - B)^-T diag(s) (I - B)^-1``
    with ``B[i, j]`` the weight of ``i -> j``."""
    if scm.mechanism != "linear":
        raise ValueError("closed form covariance only for linear SCMs")
    d = scm.dag.n
    B = np.zeros((d, d))
    for j in range(d):
        pa = sorted(scm.dag.parents(j))
        if pa:
            B[pa, j] = scm.params[j]["weights"]
    A = np.linalg.inv(np.eye(d) - B)
    return A.T @ np.diag(scm.variances) @ A


# ---------------------------------------------------------------------------
# BIF
# ---------------------------------------------------------------------------


class BifParseError(ValueError):
    def __init__(self, msg, line, col):
        super().__init__(f"line {line}, column {col}: {msg}")
        self.line = line
        self.col = col


@dataclass(frozen=True, eq=False)
class BayesNet:
    """Discrete Bayesian network.

    ``cpts[j]`` has shape ``(prod of parent cardinalities, card_j)``; rows
    enumerate parent configurations with the first parent varying slowest.
    """

    names: tuple
    states: tuple
    parents: tuple
    cpts: tuple
    name: str = "unknown"

    def __post_init__(self):
        d = len(self.names)
        if not (len(self.states) == len(self.parents) == len(self.cpts) == d):
            raise ValueError("inconsistent network sizes")
        cpts = []
        for j in range(d):
            rows = math.prod(len(self.states[p]) for p in self.parents[j])
            cpt = np.asarray(self.cpts[j], dtype=float).reshape(rows, len(self.states[j]))
            if np.any(cpt < 0) or np.any(np.abs(cpt.sum(axis=1) - 1) > 1e-6):
                raise ValueError(f"CPT rows of {self.names[j]} must be distributions")
            cpt.setflags(write=False)
            cpts.append(cpt)
        object.__setattr__(self, "cpts", tuple(cpts))
        object.__setattr__(self, "dag", Dag(d, frozenset((p, j) for j in range(d) for p in self.parents[j])))

    @property
    def d(self) -> int:
        return len(self.names)

    @property
    def cardinalities(self) -> tuple:
        return tuple(len(s) for s in self.states)

    def __eq__(self, other):
        return (
            isinstance(other, BayesNet)
            and self.names == other.names
            and self.states == other.states
            and self.parents == other.parents
            and all(np.array_equal(a, b) for a, b in zip(self.cpts, other.cpts))
        )


_TOKEN = re.compile(
    r"""(?P<ws>\s+)|(?P<comment>//[^\n]*|/\*.*?\*/)|(?P<str>"[^"]*")
    |(?P<punct>[{}()\[\];,|])|(?P<word>[^\s{}()\[\];,|"]+)""",
    re.S | re.X,
)


def _tokenize(text):
    pos, line, col = 0, 1, 1
    out = []
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise BifParseError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        tok = m.group()
        if kind not in ("ws", "comment"):
            out.append((tok, line, col))
        nl = tok.count("\n")
        if nl:
            line += nl
            col = len(tok) - tok.rfind("\n")
        else:
            col += len(tok)
        pos = m.end()
    return out


class _Parser:
    def __init__(self, text):
        self.toks = _tokenize(text)
        self.i = 0

    def error(self, msg):
        if self.i < len(self.toks):
            _, line, col = self.toks[self.i]
        elif self.toks:
            _, line, col = self.toks[-1]
        else:
            line, col = 1, 1
        raise BifParseError(msg, line, col)

    def peek(self):
        return self.toks[self.i][0] if self.i < len(self.toks) else None

    def next(self):
        if self.i >= len(self.toks):
            self.error("unexpected end of input")
        tok = self.toks[self.i][0]
        self.i += 1
        return tok

    def expect(self, tok):
        if self.peek() != tok:
            self.error(f"expected {tok!r}, got {self.peek()!r}")
        self.i += 1

    def skip_to_semicolon(self):
        while self.next() != ";":
            pass

    def skip_block(self):
        self.expect("{")
        depth = 1
        while depth:
            t = self.next()
            depth += t == "{"
            depth -= t == "}"

    def word(self):
        t = self.peek()
        if t is None or t in "{}()[];,|":
            self.error(f"expected a name, got {t!r}")
        self.i += 1
        return t.strip('"')

    def number(self):
        t = self.peek()
        try:
            x = float(t)
        except (TypeError, ValueError):
            self.error(f"expected a number, got {t!r}")
        self.i += 1
        return x

    def names_until(self, close):
        out = [self.word()]
        while self.peek() == ",":
            self.i += 1
            out.append(self.word())
        self.expect(close)
        return out

    def numbers_until_semicolon(self):
        out = [self.number()]
        while self.peek() == ",":
            self.i += 1
            out.append(self.number())
        self.expect(";")
        return out


def parse_bif(text: str) -> BayesNet:
    """Parse BIF 0.15 text.

    Supports ``variable`` blocks with discrete types, ``probability`` blocks
    with per-configuration rows, ``table`` (any node, parent configurations
    in first-parent-slowest order) and ``default`` rows. ``property`` entries
    are ignored.
    """
    p = _Parser(text)
    net_name = "unknown"
    variables = {}
    order = []
    probs = {}
    while p.peek() is not None:
        kw = p.next()
        if kw == "network":
            net_name = p.word()
            p.skip_block()
        elif kw == "variable":
            name = p.word()
            if name in variables:
                p.error(f"variable {name!r} declared twice")
            p.expect("{")
            states = None
            while p.peek() != "}":
                t = p.next()
                if t == "type":
                    if p.word() != "discrete":
                        p.error("only discrete variables are supported")
                    p.expect("[")
                    card = int(p.number())
                    p.expect("]")
                    p.expect("{")
                    states = p.names_until("}")
                    if len(states) != card:
                        p.error(f"{name}: {card} states declared, {len(states)} listed")
                    p.expect(";")
                elif t == "property":
                    p.skip_to_semicolon()
                else:
                    p.i -= 1
                    p.error(f"unexpected {t!r} in variable block")
            p.expect("}")
            if states is None:
                p.error(f"variable {name!r} has no type")
            variables[name] = states
            order.append(name)
        elif kw == "probability":
            p.expect("(")
            child = p.word()
            parents = []
            if p.peek() == "|":
                p.i += 1
                parents = p.names_until(")")
            else:
                p.expect(")")
            start = p.i
            p.expect("{")
            entries = []
            while p.peek() != "}":
                t = p.peek()
                if t == "(":
                    p.i += 1
                    entries.append(("row", tuple(p.names_until(")")), p.numbers_until_semicolon()))
                elif t == "table":
                    p.i += 1
                    entries.append(("table", None, p.numbers_until_semicolon()))
                elif t == "default":
                    p.i += 1
                    entries.append(("default", None, p.numbers_until_semicolon()))
                elif t == "property":
                    p.i += 1
                    p.skip_to_semicolon()
                else:
                    p.error(f"unexpected {t!r} in probability block")
            p.expect("}")
            if child in probs:
                p.i = start
                p.error(f"second probability block for {child!r}")
            probs[child] = (parents, entries, start)
        else:
            p.i -= 1
            p.error(f"unexpected {kw!r} at top level")

    index = {nm: j for j, nm in enumerate(order)}
    parents_idx, cpts = [], []
    for name in order:
        if name not in probs:
            raise ValueError(f"no probability block for {name!r}")
        pnames, entries, start = probs[name]
        for q in pnames:
            if q not in index:
                p.i = start
                p.error(f"unknown parent {q!r} of {name!r}")
        card = len(variables[name])
        pcards = [len(variables[q]) for q in pnames]
        nrows = math.prod(pcards)
        cpt = np.full((nrows, card), np.nan)
        for kind, key, vals in entries:
            if kind == "table":
                if len(vals) != nrows * card:
                    raise ValueError(f"{name}: table has {len(vals)} entries, expected {nrows * card}")
                cpt[:] = np.asarray(vals).reshape(nrows, card)
            elif kind == "default":
                if len(vals) != card:
                    raise ValueError(f"{name}: default row has the wrong length")
                rows = np.isnan(cpt).any(axis=1)
                cpt[rows] = vals
            else:
                if len(key) != len(pnames) or len(vals) != card:
                    raise ValueError(f"{name}: malformed row {key}")
                r = 0
                for q, s, c in zip(pnames, key, pcards):
                    try:
                        r = r * c + variables[q].index(s)
                    except ValueError:
                        raise ValueError(f"{name}: unknown state {s!r} of {q!r}") from None
                cpt[r] = vals
        if np.isnan(cpt).any():
            raise ValueError(f"{name}: CPT is incomplete")
        parents_idx.append(tuple(index[q] for q in pnames))
        cpts.append(cpt)
    return BayesNet(
        tuple(order),
        tuple(tuple(variables[nm]) for nm in order),
        tuple(parents_idx),
        tuple(cpts),
        net_name,
    )


def read_bif(path) -> BayesNet:
    path = Path(path)
    if path.suffix == ".gz":
        with gzip.open(path, "rt") as fh:
            return parse_bif(fh.read())
    return parse_bif(path.read_text())


def write_bif(bn: BayesNet) -> str:
    """Serialize to BIF 0.15; probabilities are written with ``repr`` so a
    parse of the output reproduces ``bn`` exactly."""
    out = [f"network {bn.name} {{", "}"]
    for nm, st in zip(bn.names, bn.states):
        out.append(f"variable {nm} {{")
        out.append(f"  type discrete [ {len(st)} ] {{ {', '.join(st)} }};")
        out.append("}")
    for j, nm in enumerate(bn.names):
        pa = bn.parents[j]
        cpt = bn.cpts[j]
        if not pa:
            out.append(f"probability ( {nm} ) {{")
            out.append("  table " + ", ".join(repr(float(x)) for x in cpt[0]) + ";")
        else:
            out.append(f"probability ( {nm} | {', '.join(bn.names[q] for q in pa)} ) {{")
            configs = itertools.product(*(bn.states[q] for q in pa))
            for row, cfg in zip(cpt, configs):
                vals = ", ".join(repr(float(x)) for x in row)
                out.append(f"  ({', '.join(cfg)}) {vals};")
        out.append("}")
    return "\n".join(out) + "\n"


def ancestral_sample(bn: BayesNet, n: int, rng: np.random.Generator) -> Dataset:
    """Draw ``n`` independent rows, nodes in topological order, each by
    inverse CDF on its CPT row."""
    if n < 1:
        raise ValueError("n must be at least 1")
    X = np.zeros((n, bn.d), dtype=np.int64)
    cards = bn.cardinalities
    for j in bn.dag.topological_order():
        row = np.zeros(n, dtype=np.int64)
        for q in bn.parents[j]:
            row = row * cards[q] + X[:, q]
        cdf = np.cumsum(bn.cpts[j], axis=1)[row]
        u = rng.random(n)
        X[:, j] = np.minimum((u[:, None] >= cdf).sum(axis=1), cards[j] - 1)
    return Dataset(X, bn.names, cards)


# ---------------------------------------------------------------------------
# types
# ---------------------------------------------------------------------------


def assign_types_topological(dag: Dag, expected_size: float, rng: np.random.Generator) -> TypeMap:
    """Cut one topological order into contiguous blocks, one type per block.

    A new block starts at each position after the first with probability
    ``1 / expected_size``. Blocks respect the order, so every inter-type edge
    runs from an earlier to a later type and the result is type-consistent.
    """
    if not expected_size >= 1:
        raise ValueError("expected_size must be at least 1")
    order = dag.topological_order()
    cut = rng.random(len(order)) < 1.0 / expected_size
    types = [0] * dag.n
    t = 0
    for pos, v in enumerate(order):
        if pos and cut[pos]:
            t += 1
        types[v] = t
    return TypeMap(tuple(types), t + 1 if order else 1)
