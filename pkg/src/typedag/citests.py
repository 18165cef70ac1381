"""Conditional independence testers.

A tester is any callable ``tester(i, j, z) -> CiDecision``. Three backends:
Fisher-z partial correlation for continuous data, G-squared for discrete
data, and a d-separation oracle for the population limit.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy.special import chdtrc

from .graphs import Dag, d_separated

DEFAULT_ALPHA = 0.01


class DegenerateDataError(ValueError):
    """Singular correlation submatrix in a partial-correlation test."""


@dataclass(frozen=True)
class CiDecision:
    independent: bool
    p_value: float | None = None
    statistic: float | None = None
    reliable: bool = True


@dataclass(frozen=True, eq=False)
class Dataset:
    """``n x d`` sample table.

    ``cardinalities[c]`` is ``None`` for a continuous column and the number
    of categories for a discrete one (values coded ``0..card-1``).
    """

    values: np.ndarray
    names: tuple = ()
    cardinalities: tuple = ()

    def __post_init__(self):
        values = np.asarray(self.values)
        if values.ndim != 2 or values.shape[0] < 1:
            raise ValueError("dataset needs a 2-d table with at least one row")
        d = values.shape[1]
        names = tuple(self.names) or tuple(f"X{c}" for c in range(d))
        cards = tuple(self.cardinalities) or (None,) * d
        if len(names) != d or len(cards) != d:
            raise ValueError("names/cardinalities must have one entry per column")
        if np.isnan(values.astype(float)).any():
            raise ValueError("missing values are not supported")
        for c, card in enumerate(cards):
            if card is not None:
                col = values[:, c]
                if col.min() < 0 or col.max() >= card or np.any(col != np.round(col)):
                    raise ValueError(f"column {names[c]} has values outside [0, {card})")
        if all(c is not None for c in cards):
            values = values.astype(np.int64)
        else:
            values = values.astype(float)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "names", names)
        object.__setattr__(self, "cardinalities", cards)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]

    @property
    def is_discrete(self) -> bool:
        return all(c is not None for c in self.cardinalities)

    @property
    def is_continuous(self) -> bool:
        return all(c is None for c in self.cardinalities)


class SepsetTable(dict):
    """Unordered vertex pair -> separating set (a frozenset)."""

    def __setitem__(self, key, value):
        i, j = key
        value = frozenset(value)
        if i in value or j in value:
            raise ValueError("a separating set must exclude its endpoints")
        super().__setitem__((min(i, j), max(i, j)), value)

    def __getitem__(self, key):
        i, j = key
        return super().__getitem__((min(i, j), max(i, j)))

    def get(self, key, default=None):
        i, j = key
        return super().get((min(i, j), max(i, j)), default)

    def __contains__(self, key):
        i, j = key
        return super().__contains__((min(i, j), max(i, j)))


# ---------------------------------------------------------------------------
# Fisher z
# ---------------------------------------------------------------------------


def _partial_correlation(corr: np.ndarray, i: int, j: int, z: Sequence[int]) -> float:
    if not z:
        return float(np.clip(corr[i, j], -1.0, 1.0))
    idx = [i, j, *z]
    sub = corr[np.ix_(idx, idx)]
    if np.linalg.cond(sub) > 1e12:
        raise DegenerateDataError(f"singular correlation submatrix for {idx}")
    prec = np.linalg.inv(sub)
    r = -prec[0, 1] / math.sqrt(prec[0, 0] * prec[1, 1])
    return float(np.clip(r, -1.0, 1.0))


def _fisher_z(corr, n, i, j, z, alpha) -> CiDecision:
    z = sorted(z)
    if len(z) > n - 3:
        raise ValueError("conditioning set too large for the sample size")
    r = _partial_correlation(corr, i, j, z)
    if abs(r) >= 1.0:
        return CiDecision(False, 0.0, math.inf)
    stat = math.sqrt(n - len(z) - 3) * abs(math.atanh(r))
    p = math.erfc(stat / math.sqrt(2))
    return CiDecision(p >= alpha, p, stat)


def fisher_z_test(data: Dataset, i: int, j: int, z: Iterable[int] = (), alpha: float = DEFAULT_ALPHA) -> CiDecision:
    """Two-sided Fisher-z test of zero partial correlation of ``i``, ``j``
    given ``z``."""
    if not data.is_continuous:
        raise ValueError("Fisher-z needs continuous columns")
    corr = np.corrcoef(data.values, rowvar=False)
    return _fisher_z(np.atleast_2d(corr), data.n, i, j, list(z), alpha)


class FisherZTester:
    """Fisher-z tester with the correlation matrix computed once and decisions
    memoized."""

    approximate = False

    def __init__(self, data: Dataset, alpha: float = DEFAULT_ALPHA, approximate: bool = False):
        if not data.is_continuous:
            raise ValueError("Fisher-z needs continuous columns")
        self.data = data
        self.alpha = alpha
        # set for data that is not linear-Gaussian (the test is then a proxy)
        self.approximate = approximate
        corr = np.atleast_2d(np.corrcoef(data.values, rowvar=False))
        corr.setflags(write=False)
        self.corr = corr
        self._memo = {}

    @property
    def d(self) -> int:
        return self.data.d

    def __call__(self, i, j, z=()) -> CiDecision:
        key = (min(i, j), max(i, j), frozenset(z))
        hit = self._memo.get(key)
        if hit is None:
            hit = self._memo[key] = _fisher_z(self.corr, self.data.n, i, j, list(z), self.alpha)
        return hit


# ---------------------------------------------------------------------------
# G squared
# ---------------------------------------------------------------------------

MIN_SAMPLES_PER_DF = 10


def _g_square(values, cards, i, j, z, alpha) -> CiDecision:
    z = sorted(z)
    ci, cj = cards[i], cards[j]
    zc = [cards[k] for k in z]
    df = (ci - 1) * (cj - 1) * math.prod(zc)
    n = values.shape[0]
    if df <= 0:
        return CiDecision(True, 1.0, 0.0)
    if n < MIN_SAMPLES_PER_DF * df:
        return CiDecision(True, None, None, reliable=False)
    zkey = np.zeros(n, dtype=np.int64)
    for k, c in zip(z, zc):
        zkey = zkey * c + values[:, k]
    cell = (zkey * ci + values[:, i]) * cj + values[:, j]
    nz = math.prod(zc)
    if nz * ci * cj <= 4_000_000:
        counts = np.bincount(cell, minlength=nz * ci * cj).reshape(nz, ci, cj)
    else:
        keys, inv = np.unique(zkey, return_inverse=True)
        cell = (inv * ci + values[:, i]) * cj + values[:, j]
        counts = np.bincount(cell, minlength=len(keys) * ci * cj).reshape(len(keys), ci, cj)
    counts = counts.astype(float)
    tot = counts.sum(axis=(1, 2), keepdims=True)
    expected = counts.sum(axis=2, keepdims=True) * counts.sum(axis=1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        expected = np.where(tot > 0, expected / tot, 0.0)
        terms = np.where(counts > 0, counts * np.log(counts / expected), 0.0)
    g2 = float(2.0 * terms.sum())
    p = float(chdtrc(df, g2))
    return CiDecision(p >= alpha, p, g2)


def g_square_test(data: Dataset, i: int, j: int, z: Iterable[int] = (), alpha: float = DEFAULT_ALPHA) -> CiDecision:
    """G-squared test against chi-square with ``(|Xi|-1)(|Xj|-1) prod |Zk|``
    degrees of freedom.

    With fewer than ``10 * df`` samples the test is unreliable and reports
    independence (``reliable=False``), as usual in PC implementations.
    """
    if not data.is_discrete:
        raise ValueError("G-squared needs discrete columns")
    return _g_square(data.values, data.cardinalities, i, j, list(z), alpha)


class GSquareTester:
    """G-squared tester. Decisions are memoized, so methods sharing a skeleton
    phase do not repeat tests."""

    approximate = False

    def __init__(self, data: Dataset, alpha: float = DEFAULT_ALPHA):
        if not data.is_discrete:
            raise ValueError("G-squared needs discrete columns")
        self.data = data
        self.alpha = alpha
        self._memo = {}

    @property
    def d(self) -> int:
        return self.data.d

    def __call__(self, i, j, z=()) -> CiDecision:
        key = (min(i, j), max(i, j), frozenset(z))
        hit = self._memo.get(key)
        if hit is None:
            hit = _g_square(self.data.values, self.data.cardinalities, i, j, list(z), self.alpha)
            self._memo[key] = hit
        return hit


# ---------------------------------------------------------------------------
# oracle
# ---------------------------------------------------------------------------


class OracleTester:
    """d-separation in a known DAG."""

    approximate = False

    def __init__(self, truth: Dag):
        self.truth = truth

    @property
    def d(self) -> int:
        return self.truth.n

    def __call__(self, i, j, z=()) -> CiDecision:
        return CiDecision(d_separated(self.truth, i, j, z))


def oracle_tester(truth: Dag) -> OracleTester:
    return OracleTester(truth)


# ---------------------------------------------------------------------------
# CSV + sidecar JSON
# ---------------------------------------------------------------------------


def _sidecar(path: Path) -> Path:
    return path.with_suffix(".json")


def write_dataset(data: Dataset, path) -> None:
    """Write ``path`` (CSV with header) and its sidecar ``.json`` with
    column kinds and cardinalities."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(data.names)
        if data.is_discrete:
            w.writerows(data.values.tolist())
        else:
            for row in data.values:
                w.writerow(
                    [str(int(x)) if card is not None else repr(float(x))
                     for x, card in zip(row, data.cardinalities)]
                )
    meta = {
        "kinds": ["continuous" if c is None else "discrete" for c in data.cardinalities],
        "cardinalities": list(data.cardinalities),
    }
    _sidecar(path).write_text(json.dumps(meta, indent=2))


def read_dataset(path) -> Dataset:
    path = Path(path)
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    names = tuple(rows[0])
    values = np.array(rows[1:], dtype=float)
    side = _sidecar(path)
    if side.exists():
        meta = json.loads(side.read_text())
        cards = tuple(meta["cardinalities"])
    else:
        cards = (None,) * len(names)
    return Dataset(values, names, cards)
