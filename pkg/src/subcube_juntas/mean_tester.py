"""Robust junta mean tester built on the tensor statistics ``Z^(r)``.

``Z^(r) = q^-2 sum_{i,j} <X_i, Y_j>^(2^r)`` is computed from a single Gram
matrix and compared against the threshold schedule
``tau_0 = eps^2 n / 2``, ``tau_r = a q^2 tau_{r-1}^2``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Union

import numpy as np

from .config import AlgoConfig

__all__ = [
    "Verdict",
    "MeanTestPlan",
    "make_plan",
    "r0_for",
    "gram_matrix",
    "z_statistic",
    "z_statistic_exact",
    "z_statistics",
    "z_from_counts",
    "robust_mean_test",
    "verdicts_from_z",
]


class Verdict(str, enum.Enum):
    IS_JUNTA = "IsJunta"
    NOT_JUNTA = "NotJunta"


def r0_for(n: int) -> int:
    """``ceil(log2 log2 n)``, with 0 for ``n < 4``."""
    if n < 4:
        return 0
    r = 0
    while 2 ** (2 ** r) < n:
        r += 1
    return r


@dataclass(frozen=True)
class MeanTestPlan:
    n: int
    k: int
    eps: float
    q: int
    r0: int
    a: float
    C: float
    tau: tuple[float, ...]

    def tau_closed_form(self, r: int) -> float:
        aq2 = self.a * self.q ** 2
        return (aq2 * self.eps ** 2 * self.n / 2.0) ** (2 ** r) / aq2


def make_plan(n: int, k: int, eps: float, cfg: AlgoConfig | None = None,
              q: int | None = None) -> MeanTestPlan:
    """Sample size and thresholds for dimension ``n``, junta size ``k``."""
    cfg = cfg or AlgoConfig()
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    if n < 1 or k < 0:
        raise ValueError("need n >= 1 and k >= 0")
    C = cfg.mean_tester_c
    if q is None:
        q = cfg.mean_tester_q
    if q is None:
        rn = math.sqrt(n)
        q = math.ceil(C * max((k + rn) / (eps ** 2 * n), (1 + k / rn) / eps))
    q = max(int(q), 1)
    a = cfg.mean_tester_a
    r0 = r0_for(n)
    tau = [eps ** 2 * n / 2.0]
    for _ in range(r0):
        tau.append(a * q * q * tau[-1] ** 2)
    return MeanTestPlan(n, k, float(eps), q, r0, a, C, tuple(tau))


def gram_matrix(X, Y) -> np.ndarray:
    """``M_ij = <X_i, Y_j>`` as exact int64."""
    X = np.asarray(X, dtype=np.int64)
    Y = np.asarray(Y, dtype=np.int64)
    if X.ndim != 2 or Y.ndim != 2 or X.shape[1] != Y.shape[1]:
        raise ValueError("X and Y must be (q, n) arrays of equal width")
    if X.shape[0] == 0 or Y.shape[0] == 0:
        raise ValueError("need at least one sample per side")
    return X @ Y.T


def z_statistic_exact(M, r: int) -> Fraction:
    """Exact rational ``Z^(r)`` from an integer Gram matrix."""
    M = np.asarray(M)
    if r < 0:
        raise ValueError("r must be nonnegative")
    vals, counts = np.unique(M, return_counts=True)
    e = 2 ** r
    total = sum(int(c) * int(v) ** e for v, c in zip(vals, counts))
    return Fraction(total, M.shape[0] * M.shape[1])


def z_statistic(M, r: int) -> float:
    return float(z_statistic_exact(M, r))


def z_statistics(M, r0: int) -> list[float]:
    return [z_statistic(M, r) for r in range(r0 + 1)]


@lru_cache(maxsize=16)
def _inner_product_masks(m: int):
    idx = np.arange(1 << m)
    pc = np.array([bin(i).count("1") for i in range(1 << (m))])
    G = m - 2 * pc[idx[:, None] ^ idx[None, :]]
    vals = np.arange(-m, m + 1, 2)
    return vals, [(G == v).astype(np.int64) for v in vals]


def z_from_counts(HX, HY, m: int, r0: int) -> np.ndarray:
    """``Z^(0..r0)`` from star-pattern histograms.

    ``HX``, ``HY`` are ``(T, 2^m)`` count arrays of ``q`` samples each (bit
    ``j`` of the pattern index is the ``j``-th coordinate).  Returns a
    ``(T, r0 + 1)`` float array equal to the Gram-matrix statistics of the
    expanded samples.
    """
    HX = np.atleast_2d(np.asarray(HX, dtype=np.int64))
    HY = np.atleast_2d(np.asarray(HY, dtype=np.int64))
    qx, qy = HX[0].sum(), HY[0].sum()
    vals, masks = _inner_product_masks(m)
    W = np.stack([((HX @ mk) * HY).sum(axis=1) for mk in masks], axis=1).astype(np.float64)
    powers = np.stack([vals.astype(np.float64) ** (2 ** r) for r in range(r0 + 1)], axis=1)
    return (W @ powers) / float(qx * qy)


def verdicts_from_z(Z: np.ndarray, tau) -> np.ndarray:
    """Boolean array: True where some ``Z^(r) > tau_r`` (NotJunta)."""
    Z = np.atleast_2d(Z)
    return (Z > np.asarray(tau)[None, : Z.shape[1]]).any(axis=1)


SampleSource = Union[np.ndarray, Callable[[int], np.ndarray]]


def robust_mean_test(source: SampleSource, plan: MeanTestPlan) -> Verdict:
    """Run the tester on ``2q`` samples.

    ``source`` is either a ``(>= 2q, n)`` array (the first ``2q`` rows are
    used) or a callable returning ``count`` fresh samples.
    """
    q = plan.q
    if callable(source):
        S = np.asarray(source(2 * q))
    else:
        S = np.asarray(source)
    if S.ndim != 2 or S.shape[0] < 2 * q:
        raise ValueError(f"sample source exhausted: need {2 * q} samples")
    M = gram_matrix(S[:q], S[q:2 * q])
    for r in range(plan.r0 + 1):
        if z_statistic_exact(M, r) > Fraction(plan.tau[r]):
            return Verdict.NOT_JUNTA
    return Verdict.IS_JUNTA
