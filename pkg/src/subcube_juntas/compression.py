"""Query trees with arbitrary conditioning sets and the SampleWalk protocol.

Points of {-1,1}^n are identified with pmf indices.  A query tree assigns a
nonempty conditioning set to every prefix of earlier answers; an execution on
``p`` draws each answer from ``p`` conditioned on the current set.
SampleWalk walks the tree with uniform draws and accepts the leaf with
probability ``min(1, delta E_p(path) / E_U(path))``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .distributions import ExplicitDist, ZeroMassError

__all__ = [
    "QueryTree",
    "random_tree",
    "random_almost_uniform",
    "execute_tree",
    "path_probabilities",
    "enumerate_leaves",
    "almost_uniform_check",
    "sample_walk",
    "CompressionAudit",
    "compression_audit",
]


class QueryTree:
    """Depth-``q`` tree; ``sets(prefix)`` is the conditioning set after ``prefix``.

    Children are materialized lazily and cached.
    """

    def __init__(self, n: int, depth: int, fn: Callable[[tuple[int, ...]], object]):
        if n < 0 or n > 12:
            raise ValueError("query trees support 0 <= n <= 12")
        if depth < 1:
            raise ValueError("depth must be >= 1")
        self.n = n
        self.depth = depth
        self._fn = fn
        self._cache: dict[tuple[int, ...], np.ndarray] = {}

    def sets(self, prefix=()) -> np.ndarray:
        prefix = tuple(int(x) for x in prefix)
        if len(prefix) >= self.depth:
            raise ValueError("prefix is already a leaf")
        A = self._cache.get(prefix)
        if A is None:
            A = np.unique(np.asarray(self._fn(prefix), dtype=np.int64))
            if A.size == 0:
                raise ValueError("conditioning sets must be nonempty")
            if A[0] < 0 or A[-1] >= 1 << self.n:
                raise ValueError("conditioning set contains an invalid point")
            A.setflags(write=False)
            self._cache[prefix] = A
        return A


def random_tree(n: int, depth: int, seed: int, max_size: int | None = None) -> QueryTree:
    """Tree whose sets are random nonempty subsets, reproducible from ``seed``."""
    N = 1 << n
    cap = N if max_size is None else min(N, max_size)

    def fn(prefix):
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(len(prefix),) + prefix))
        size = int(rng.integers(1, cap + 1))
        return rng.choice(N, size=size, replace=False)

    return QueryTree(n, depth, fn)


def random_almost_uniform(n: int, eps: float, rng: np.random.Generator) -> ExplicitDist:
    """Random pmf with every ``|p(x) 2^n - 1| <= eps``."""
    u = rng.uniform(-1.0, 1.0, size=1 << n)
    u -= u.mean()
    peak = np.abs(u).max()
    if peak > 0:
        u /= peak
    return ExplicitDist(n, (1.0 + eps * u) / float(1 << n))


def execute_tree(p: ExplicitDist, tree: QueryTree, rng: np.random.Generator) -> tuple[int, ...]:
    """One execution of ``tree`` on ``p``; returns the answer indices."""
    path: tuple[int, ...] = ()
    for _ in range(tree.depth):
        A = tree.sets(path)
        w = p.pmf[A]
        tot = w.sum()
        if not tot > 0:
            raise ZeroMassError("conditioning set has zero mass")
        x = int(A[min(np.searchsorted(np.cumsum(w), rng.random() * tot, side="right"), A.size - 1)])
        path += (x,)
    return path


def path_probabilities(p: ExplicitDist, tree: QueryTree, path) -> tuple[float, float]:
    """``(E_{p,T}(path), E_{U,T}(path))``."""
    ep, eu = 1.0, 1.0
    for i in range(len(path)):
        A = tree.sets(path[:i])
        x = path[i]
        if x not in set(A.tolist()):
            return 0.0, 0.0
        mass = p.pmf[A].sum()
        ep *= p.pmf[x] / mass if mass > 0 else 0.0
        eu /= A.size
    return ep, eu


def enumerate_leaves(tree: QueryTree, limit: int = 1 << 20) -> list[tuple[int, ...]]:
    leaves: list[tuple[int, ...]] = [()]
    for _ in range(tree.depth):
        leaves = [pre + (int(x),) for pre in leaves for x in tree.sets(pre)]
        if len(leaves) > limit:
            raise ValueError("too many leaves to enumerate")
    return leaves


def almost_uniform_check(p: ExplicitDist, eps: float) -> bool:
    """Whether ``|p(x) - 2^-n| <= eps 2^-n`` for every ``x``."""
    dev = np.abs(p.pmf * float(1 << p.n) - 1.0)
    return bool(dev.max() <= eps + 1e-12)


def sample_walk(p: ExplicitDist, tree: QueryTree, delta: float, rng: np.random.Generator):
    """Uniform walk plus one accept/reject bit; returns the path or ``None``."""
    if not 0 < delta <= 1:
        raise ValueError("delta must lie in (0, 1]")
    if not almost_uniform_check(p, 0.5 - 1e-12):
        raise ValueError("p must be eps-almost uniform for some eps < 1/2")
    path: tuple[int, ...] = ()
    for _ in range(tree.depth):
        A = tree.sets(path)
        path += (int(A[rng.integers(A.size)]),)
    ep, eu = path_probabilities(p, tree, path)
    return path if rng.random() < min(1.0, delta * ep / eu) else None


@dataclass
class CompressionAudit:
    tv_exact: float
    reject_prob_exact: float
    reject_rate_empirical: float
    trials: int
    alpha: float
    beta: float
    closed_form_error: float
    hypothesis_ok: bool

    def reject_sigma(self) -> float:
        """Binomial standard error of the empirical reject rate."""
        p = self.reject_prob_exact
        return math.sqrt(max(p * (1 - p), 0.0) / max(self.trials, 1))


def compression_audit(p: ExplicitDist, tree: QueryTree, delta: float, trials: int,
                      rng: np.random.Generator, eps: float | None = None,
                      zeta: float = 0.01) -> CompressionAudit:
    """Exact leaf laws of the protocol and an empirical reject rate."""
    leaves = enumerate_leaves(tree)
    probs = np.array([path_probabilities(p, tree, x) for x in leaves])
    Ep, Eu = probs[:, 0], probs[:, 1]
    acc = Eu * np.minimum(1.0, delta * Ep / Eu)
    reject = 1.0 - acc.sum()
    D = acc / acc.sum()
    R = Ep < Eu / delta
    alpha, beta = Eu[R].sum(), Ep[R].sum()
    norm = 1.0 - alpha + delta * beta
    closed = np.where(R, delta * Ep / norm, Eu / norm)
    err = max(float(np.abs(closed - D).max()), abs(reject - (alpha - delta * beta)))
    tv = 0.5 * float(np.abs(D - Ep).sum())
    rejected = sum(sample_walk(p, tree, delta, rng) is None for _ in range(trials))
    if eps is None:
        eps = float(np.abs(p.pmf * (1 << p.n) - 1.0).max())
    hyp = eps < 0.5 and (eps == 0 or tree.depth <= math.floor(zeta * math.log2(1 / delta) / eps ** 2))
    return CompressionAudit(tv, float(reject), rejected / trials if trials else float("nan"),
                            trials, float(alpha), float(beta), err, bool(hyp))
