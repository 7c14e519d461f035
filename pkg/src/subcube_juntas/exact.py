"""Brute-force ground truth for small dimensions.

Closest-junta distances, the restriction-mean audit of the structural
inequality, the product-distribution TV bound and sigma-monotonicity.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .distributions import (
    Distribution,
    ExplicitDist,
    ProductDist,
    _tensor,
    points,
    to_explicit,
    tv_distance,
    uniform,
)

__all__ = [
    "C2_STAR",
    "closest_junta",
    "closest_junta_distance",
    "distance_to_k_junta",
    "canonical_junta_distance",
    "canonical_junta_routes",
    "restriction_mean_terms",
    "restriction_mean_norm",
    "AuditReport",
    "structural_audit",
    "implied_exponent",
    "product_tv_bound",
    "product_tv_lower_bound",
    "sigma_monotonicity_check",
]

C2_STAR = 1.0 - math.exp(-1.0)


def _explicit(p: Distribution, cap: int) -> ExplicitDist:
    if p.n > cap:
        raise ValueError(f"dimension {p.n} exceeds the cap {cap}")
    return to_explicit(p)


def _blocks(p: ExplicitDist, J: Sequence[int]) -> np.ndarray:
    """pmf values as a ``(2^|J|, 2^(n-|J|))`` array, one row per ``x_J``."""
    n = p.n
    J = sorted(set(int(i) for i in J))
    rest = [i for i in range(n) if i not in J]
    t = _tensor(p.pmf, n)
    # last axis is the least significant bit of the flattened index
    t = t.transpose(tuple(J[::-1]) + tuple(rest[::-1]))
    return np.ascontiguousarray(t).reshape(1 << len(J), 1 << len(rest))


def closest_junta(p: Distribution, J: Iterable[int], cap: int = 12):
    """Nearest junta over ``J`` in total variation.

    Minimizes ``sum_x |p(x) - w(x_J)|`` subject to ``2^(n-|J|) sum_y w(y) = 1``.
    Each block objective is convex piecewise linear in ``w(y)`` with slope
    ``2i - N`` between its ``i``-th and ``(i+1)``-th smallest values, so
    filling the cheapest slopes first is optimal.

    Returns ``(distance, w)``.
    """
    e = _explicit(p, cap)
    V = np.sort(_blocks(e, list(J)), axis=1)
    rows, N = V.shape
    total = 1.0 / N
    lengths = np.diff(np.concatenate([np.zeros((rows, 1)), V], axis=1), axis=1)
    slopes = np.broadcast_to(2 * np.arange(N) - N, (rows, N))
    order = np.argsort(slopes.ravel(), kind="stable")
    L = lengths.ravel()[order]
    Sl = slopes.ravel()[order].astype(np.float64)
    owner = np.repeat(np.arange(rows), N)[order]
    before = np.concatenate([[0.0], np.cumsum(L)[:-1]])
    take = np.clip(total - before, 0.0, L)
    value = V.sum() + float(np.dot(Sl, take))
    w = np.bincount(owner, weights=take, minlength=rows)
    left = total - take.sum()
    if left > 0:  # every block is above its largest value: slope N everywhere
        value += N * left
        w[0] += left
    return max(0.0, 0.5 * float(value)), w


def closest_junta_distance(p: Distribution, J: Iterable[int], cap: int = 12) -> float:
    return closest_junta(p, J, cap)[0]


def distance_to_k_junta(p: Distribution, k: int, cap: int = 10) -> float:
    """Distance to the nearest junta on at most ``k`` variables."""
    e = _explicit(p, cap)
    if k >= e.n:
        return 0.0
    return min(closest_junta_distance(e, J, cap) for J in itertools.combinations(range(e.n), k))


def canonical_junta_routes(p: Distribution, J: Iterable[int], cap: int = 12) -> tuple[float, float]:
    """The canonical junta distance by two routes.

    ``(dtv(p, p_J x U), sum_y p_J(y) dtv(p_|x_J=y, U))``.
    """
    e = _explicit(p, cap)
    J = sorted(set(int(i) for i in J))
    blocks = _blocks(e, J)
    N = blocks.shape[1]
    mass = blocks.sum(axis=1)
    direct = 0.5 * float(np.abs(blocks - mass[:, None] / N).sum())
    routed = 0.0
    for y in range(blocks.shape[0]):
        if mass[y] > 0:
            routed += mass[y] * 0.5 * float(np.abs(blocks[y] / mass[y] - 1.0 / N).sum())
    return direct, routed


def canonical_junta_distance(p: Distribution, J: Iterable[int], cap: int = 12) -> float:
    direct, routed = canonical_junta_routes(p, J, cap)
    if abs(direct - routed) > 1e-10:
        raise AssertionError("canonical distance routes disagree")
    return direct


def restriction_mean_terms(p: Distribution, ground: Sequence[int], cap: int = 6) -> dict:
    """``S -> E_{a ~ p_{[n] minus S}} ||mu(p | x_{[n] minus S} = a)||_2`` for ``S`` within ``ground``.

    Uses ``p_{S-bar}(a) ||mu(p_|a)|| = ||sum_{x_S} p(a, x_S) x_S||``.
    """
    e = _explicit(p, cap)
    ground = sorted(set(int(i) for i in ground))
    out = {}
    for size in range(len(ground) + 1):
        for S in itertools.combinations(ground, size):
            if not S:
                out[S] = 0.0
                continue
            P = _blocks(e, [i for i in range(e.n) if i not in S])
            m = P @ points(len(S)).astype(np.float64)
            out[S] = float(np.sqrt((m * m).sum(axis=1)).sum())
    return out


def restriction_mean_norm(p: Distribution, sigma: float, J: Iterable[int] = (),
                          terms: dict | None = None, cap: int = 6) -> float:
    """Exact ``E_{rho ~ D_{J-bar}(p)} E_{nu ~ D_sigma(p_|rho)} ||mu((p_|rho)_|nu)||_2``."""
    J = set(int(i) for i in J)
    ground = [i for i in range(p.n) if i not in J]
    terms = restriction_mean_terms(p, ground, cap) if terms is None else terms
    m = len(ground)
    return float(math.fsum(sigma ** len(S) * (1 - sigma) ** (m - len(S)) * v
                           for S, v in terms.items()))


def implied_exponent(lhs: float, rhs: float, n: int) -> float:
    """``c`` with ``rhs = lhs / log2(n / lhs)^c`` (nan when ``lhs = 0``)."""
    if not lhs > 0:
        return float("nan")
    if not rhs > 0:
        return float("inf")
    L = math.log2(max(n / lhs, 2.0))
    if L <= 1.0:
        return 0.0 if rhs >= lhs else float("inf")
    return math.log(lhs / rhs) / math.log(L)


@dataclass
class AuditReport:
    n: int
    J: tuple[int, ...]
    lhs: float
    rhs_terms: list[float]
    rhs_sum: float
    implied_c: float
    c_exponent: float
    bound_holds: bool

    def to_dict(self) -> dict:
        return dict(vars(self))


def structural_audit(p: Distribution, J: Iterable[int] = (), c_exponent: float = 3.0,
                     cap: int = 6) -> AuditReport:
    """Exact audit of ``sum_j E E ||mu|| >= dist / log2(n/dist)^c`` with ``sigma_j = 2^-j``."""
    e = _explicit(p, cap)
    J = tuple(sorted(set(int(i) for i in J)))
    n = e.n
    lhs = closest_junta_distance(e, J, cap=max(cap, 12))
    ground = [i for i in range(n) if i not in J]
    terms = restriction_mean_terms(e, ground, cap)
    levels = max(1, math.ceil(math.log2(2 * n)))
    rhs = [restriction_mean_norm(e, 0.5 ** j, J, terms) for j in range(1, levels + 1)]
    total = math.fsum(rhs)
    target = lhs / math.log2(max(n / lhs, 2.0)) ** c_exponent if lhs > 0 else 0.0
    return AuditReport(n, J, float(lhs), rhs, total, implied_exponent(lhs, total, n), c_exponent,
                       bool(total >= target - 1e-12))


def product_tv_bound(mu, c1star: float = 0.56) -> float:
    """``(1/8 - c1* ||mu||_inf / ||mu||_2) min(c2*, ||mu||_2 / 4)``; 0 when ``mu = 0``."""
    mu = np.asarray(mu, dtype=np.float64)
    l2 = float(np.sqrt((mu * mu).sum()))
    if l2 == 0.0:
        return 0.0
    linf = float(np.abs(mu).max())
    return (0.125 - c1star * linf / l2) * min(C2_STAR, l2 / 4.0)


def product_tv_lower_bound(p: ProductDist, c1star: float = 0.56, cap: int = 20):
    """``(bound, exact_tv, holds)`` for a product distribution against uniform."""
    if p.n > cap:
        raise ValueError(f"dimension {p.n} exceeds the cap {cap}")
    bound = product_tv_bound(2 * p.bias - 1, c1star)
    exact = tv_distance(p, uniform(p.n), cap=cap)
    return bound, exact, bool(exact >= bound - 1e-15)


def sigma_monotonicity_check(h: Distribution, sigma1: float, sigma2: float, cap: int = 6) -> bool:
    """Whether ``E_{nu ~ D_sigma2(h)} ||mu(h_|nu)|| <= `` the same at ``sigma1``."""
    m = h.n
    if not 0 <= sigma2 <= sigma1 <= 1.0 / max(m, 1):
        raise ValueError("need 0 <= sigma2 <= sigma1 <= 1/m")
    terms = restriction_mean_terms(h, range(m), cap)
    lo = restriction_mean_norm(h, sigma2, (), terms)
    hi = restriction_mean_norm(h, sigma1, (), terms)
    return lo <= hi + 1e-12
