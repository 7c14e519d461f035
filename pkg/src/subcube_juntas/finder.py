"""Relevant-variable finder with doubling budgets, and the junta learner."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .config import AlgoConfig, clamped_log2
from .distributions import JuntaDist
from .restrictions import draw_restriction_pairs

__all__ = [
    "BudgetCall",
    "FinderReport",
    "budget_t",
    "budget_s",
    "finder_eps0",
    "variables_budget",
    "find_relevant_variables",
    "learn_junta",
]

# first chunk of restriction pairs; chunks double up to _MAX_CHUNK
_FIRST_CHUNK = 1
_MAX_CHUNK = 1 << 15


@dataclass
class BudgetCall:
    """Log entry for one budget call (``j``/``a`` are None when nothing was found)."""

    b: int
    j: int | None
    a: int | None
    alpha: float | None
    t_a: int | None
    s_a: int | None
    found: int
    queries: int


@dataclass
class FinderReport:
    J: tuple[int, ...]
    queries: int
    B: int
    eps0: float
    log: list[BudgetCall] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"J": list(self.J), "queries": self.queries, "B": self.B, "eps0": self.eps0,
                "calls": [vars(c) for c in self.log]}


def budget_t(k: int, eps: float, a: int, cfg: AlgoConfig) -> int:
    """Number of restriction pairs at level ``a``."""
    return math.ceil(cfg.budget_constant_scale * 100 * 2 ** a * clamped_log2(k / eps))


def budget_s(n: int, eps: float, b: int, a: int, cfg: AlgoConfig) -> int:
    """Samples per restriction pair at level ``a`` (``alpha = 2^-a``)."""
    alpha2 = 4.0 ** (-a)
    return math.ceil(cfg.sample_scale * 100 * alpha2 * b / eps ** 2 * clamped_log2(n / eps))


def finder_eps0(k: int, eps: float, cfg: AlgoConfig) -> float:
    return eps / (cfg.budget_constant_scale * 100 * clamped_log2(k / eps) ** cfg.eps0_log_power)


def _levels(k: int) -> int:
    return max(1, math.ceil(math.log2(2 * k)))


def variables_budget(oracle, k: int, eps: float, b: int, J: Sequence[int],
                     cfg: AlgoConfig | None = None, rng=None,
                     _log: list | None = None) -> tuple[int, ...]:
    """Search for at least ``b`` coordinates outside ``J`` with large restricted mean.

    Returns the coordinates (sorted by decreasing ``|mu_hat|``, ties by
    index) of the first restriction pair whose empirical mean has at least
    ``b`` entries above ``eps / (2 alpha sqrt(b))``; otherwise ``()``.
    """
    cfg = cfg or AlgoConfig()
    if b < 1 or b & (b - 1):
        raise ValueError("b must be a power of two")
    rng = oracle.rng if rng is None else rng
    n = oracle.n
    start = oracle.queries
    a_max = max(0, math.floor(math.log2(math.sqrt(b) / eps)))
    for j in range(1, _levels(k) + 1):
        sigma = 0.5 ** j
        for a in range(a_max + 1):
            alpha = 2.0 ** (-a)
            t_a = budget_t(k, eps, a, cfg)
            s_a = budget_s(n, eps, b, a, cfg)
            thresh = eps / (2 * alpha * math.sqrt(b))
            done, chunk = 0, _FIRST_CHUNK
            while done < t_a:
                size = min(chunk, t_a - done)
                nu = draw_restriction_pairs(oracle, J, sigma, size, rng)
                sums = oracle.sample_sums(nu, s_a)
                big = (np.abs(sums) >= thresh * s_a) & (nu == 0)
                hits = np.flatnonzero(big.sum(axis=1) >= b)
                if hits.size:
                    row = hits[0]
                    idx = np.flatnonzero(big[row])
                    mags = np.abs(sums[row, idx])
                    order = np.lexsort((idx, -mags))
                    out = tuple(int(i) for i in idx[order])
                    if _log is not None:
                        _log.append(BudgetCall(b, j, a, alpha, t_a, s_a, len(out), oracle.queries - start))
                    return out
                done += size
                chunk = min(2 * chunk, _MAX_CHUNK)
    if _log is not None:
        _log.append(BudgetCall(b, None, None, None, None, None, 0, oracle.queries - start))
    return ()


def find_relevant_variables(oracle, k: int, eps: float, cfg: AlgoConfig | None = None,
                            rng=None) -> FinderReport:
    """Doubling-budget search for the relevant coordinates."""
    cfg = cfg or AlgoConfig()
    if not 0 < eps <= 0.25:
        raise ValueError("eps must lie in (0, 1/4]")
    if k < 1:
        raise ValueError("k must be >= 1")
    start = oracle.queries
    eps0 = finder_eps0(k, eps, cfg)
    J: list[int] = []
    B = 0
    log: list[BudgetCall] = []
    while len(J) <= k:
        b = 1
        added = False
        while b <= 2 * k:
            B += b
            found = variables_budget(oracle, k, eps0, b, J, cfg, rng, log)
            if len(found) >= b:
                J.extend(found[:b])
                added = True
                break
            b *= 2
        if not added:
            break
    return FinderReport(tuple(sorted(J)), oracle.queries - start, B, eps0, log)


def learn_junta(oracle, J: Sequence[int], eps: float, cfg: AlgoConfig | None = None) -> JuntaDist:
    """Empirical junta over ``J`` from ``ceil(C 2^|J| / eps^2)`` unconditioned draws."""
    cfg = cfg or AlgoConfig()
    J = tuple(sorted(set(int(i) for i in J)))
    if len(J) > cfg.exact_cap:
        raise ValueError("|J| exceeds the exact cap")
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    m = math.ceil(cfg.learn_constant * 2 ** len(J) / eps ** 2)
    counts = oracle.sample_counts(np.zeros(oracle.n, np.int8), m, J)
    return JuntaDist(oracle.n, J, counts / counts.sum())
