"""Junta tester: relevant-variable search followed by restricted mean tests."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .config import AlgoConfig, clamped_log2
from .finder import FinderReport, find_relevant_variables
from .mean_tester import gram_matrix, make_plan, verdicts_from_z, z_from_counts, z_statistics
from .restrictions import draw_restriction_pairs

__all__ = ["TestPlan", "TestReport", "make_test_plan", "test_junta", "expected_queries"]

# star patterns up to this size use histogram statistics
_HIST_MAX_STARS = 8
# restriction pairs processed per batch
_ROUND_BATCH = 2048


def _odd_ceil(x: float) -> int:
    v = max(1, math.ceil(x))
    return v if v % 2 else v + 1


@dataclass(frozen=True)
class TestPlan:
    n: int
    k: int
    eps: float
    eps_prime: float
    r_levels: int
    eps_star: float
    c: float
    j_levels: int
    L: tuple[int, ...]   # L[l - 1] for l = 1..r_levels
    R: int
    scale: float


def make_test_plan(n: int, k: int, eps: float, cfg: AlgoConfig | None = None) -> TestPlan:
    cfg = cfg or AlgoConfig()
    if not 0 < eps <= 0.25:
        raise ValueError("eps must lie in (0, 1/4]")
    s = cfg.tester_scale
    c = cfg.c_exponent
    j_levels = max(1, math.ceil(math.log2(2 * n)))
    eps_prime = eps / (j_levels * clamped_log2(n / eps) ** c)
    r = max(1, math.ceil(math.log2(2 * math.sqrt(n) / eps_prime)))
    eps_star = eps_prime / (1600 * s * r)
    L = tuple(math.ceil(s * 4 * r * math.sqrt(n) / (2 ** l * eps_prime)) for l in range(1, r + 1))
    R = _odd_ceil(s * cfg.r_constant * clamped_log2(n / eps_prime))
    return TestPlan(n, k, float(eps), eps_prime, r, min(eps_star, 0.25), c, j_levels, L, R, s)


@dataclass
class TestReport:
    verdict: str
    J: tuple[int, ...]
    finder_queries: int
    queries: int
    mean_tests: int = 0
    tallies: dict = field(default_factory=dict)   # (j, l) -> (rounds, rejecting rounds)

    def to_dict(self) -> dict:
        return {"verdict": self.verdict, "J": list(self.J), "finder_queries": self.finder_queries,
                "queries": self.queries, "mean_tests": self.mean_tests,
                "tallies": {f"{j},{l}": list(v) for (j, l), v in self.tallies.items()}}


def _round_rejects(oracle, nu: np.ndarray, plan, R: int, rng) -> np.ndarray:
    """Per-round majority of ``R`` mean tests on ``(p_|rho)_|nu``."""
    q = plan.q
    reps = np.repeat(nu, 2 * R, axis=0)
    rejects = np.zeros(nu.shape[0] * R, dtype=bool)
    small = (nu == 0).sum(axis=1) <= _HIST_MAX_STARS
    if small.all():
        groups = oracle.star_counts_batch(reps, q)
    else:
        groups = []
        big_rows = np.flatnonzero(np.repeat(~small, 2 * R))
        ok_rows = np.flatnonzero(np.repeat(small, 2 * R))
        for rows, stars, counts in oracle.star_counts_batch(reps[ok_rows], q):
            groups.append((ok_rows[rows], stars, counts))
        for row in big_rows[::2]:
            X = oracle.draw(reps[row], q)
            Y = oracle.draw(reps[row + 1], q)
            M = gram_matrix(X, Y)
            rejects[row // 2] = bool(verdicts_from_z(np.array(z_statistics(M, plan.r0)), plan.tau)[0])
    for rows, stars, counts in groups:
        # each round contributes 2R consecutive rows: (X, Y) per test
        Z = z_from_counts(counts[0::2], counts[1::2], len(stars), plan.r0)
        rejects[rows[0::2] // 2] = verdicts_from_z(Z, plan.tau)
    votes = rejects.reshape(nu.shape[0], R).sum(axis=1)
    return 2 * votes >= R   # ties count as NotJunta


def test_junta(oracle, k: int, eps: float, cfg: AlgoConfig | None = None, rng=None) -> TestReport:
    """Accept if the hidden distribution looks like a ``k``-junta, else Reject."""
    cfg = cfg or AlgoConfig()
    rng = oracle.rng if rng is None else rng
    n = oracle.n
    tp = make_test_plan(n, k, eps, cfg)
    start = oracle.queries
    found: FinderReport = find_relevant_variables(oracle, k, tp.eps_star, cfg, rng)
    J = found.J
    report = TestReport("Accept", J, found.queries, 0)
    if len(J) > k:
        report.verdict = "Reject"
        report.queries = oracle.queries - start
        return report
    for j in range(1, tp.j_levels + 1):
        for l in range(1, tp.r_levels + 1):
            plan = make_plan(n, k, 2.0 ** (-l), cfg)
            rounds = tp.L[l - 1] * tp.R
            bad = 0
            for lo in range(0, rounds, _ROUND_BATCH):
                size = min(_ROUND_BATCH, rounds - lo)
                nu = draw_restriction_pairs(oracle, J, 0.5 ** j, size, rng)
                bad += int(_round_rejects(oracle, nu, plan, tp.R, rng).sum())
                report.mean_tests += size * tp.R
            report.tallies[(j, l)] = (rounds, bad)
            if 2 * bad >= tp.R:
                report.verdict = "Reject"
                report.queries = oracle.queries - start
                return report
    report.queries = oracle.queries - start
    return report


def expected_queries(report: TestReport, n: int, k: int, eps: float, cfg: AlgoConfig | None = None) -> int:
    """Finder queries plus ``rounds * (2 + 2 R q_l)`` per executed ``(j, l)`` loop."""
    cfg = cfg or AlgoConfig()
    tp = make_test_plan(n, k, eps, cfg)
    total = report.finder_queries
    for (j, l), (rounds, _) in report.tallies.items():
        q = make_plan(n, k, 2.0 ** (-l), cfg).q
        total += rounds * (2 + 2 * tp.R * q)
    return total
