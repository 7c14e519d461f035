"""Lower-bound instance generators.

* The moment-matching gadget: nodes ``alpha_j = j^3``, weights ``z`` solving
  the Vandermonde system ``A(alpha) z = e_1``, and the two bias laws built from
  the positive and negative parts of ``z`` (first ``ell - 1`` moments agree).
* Product ensembles ``D_yes`` / ``D_no`` drawn from those laws.
* Learning lower-bound pmfs: parity-tilted ``p_S`` and truth-table ``p_y``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .distributions import ExplicitDist, JuntaDist, ProductDist, mean_vector, points, to_explicit

__all__ = [
    "C2_STAR",
    "EPS0_LOWER",
    "MomentGadget",
    "gadget_ell",
    "lagrange_weights",
    "build_gadget",
    "gamma_law",
    "delta_law",
    "moments",
    "moment_check",
    "sample_dno",
    "sample_dyes",
    "farness_certificate",
    "parity_instance",
    "is_good_truth_table",
    "random_good_truth_table",
    "pmf_instance_from_boolean",
]

C2_STAR = 1.0 - math.exp(-1.0)
EPS0_LOWER = C2_STAR / 9.0
_EXACT_ELL = 12


def gadget_ell(n: int) -> int:
    """``ceil(log2 n / log2 log2 n)``, at least 1."""
    if n < 4:
        raise ValueError("n must be >= 4")
    return max(1, math.ceil(math.log2(n) / math.log2(math.log2(n))))


def lagrange_weights(ell: int, exact: bool | None = None):
    """``z_i = prod_{j != i} alpha_j / (alpha_j - alpha_i)`` with ``alpha_j = j^3``.

    Exact ``Fraction`` values when ``exact`` (default: ``ell <= 12``),
    floats otherwise.
    """
    if ell < 1:
        raise ValueError("ell must be >= 1")
    exact = ell <= _EXACT_ELL if exact is None else exact
    alpha = [j ** 3 for j in range(1, ell + 1)]
    out = []
    for i, ai in enumerate(alpha):
        if exact:
            z = Fraction(1)
            for j, aj in enumerate(alpha):
                if j != i:
                    z *= Fraction(aj, aj - ai)
        else:
            # sum logs of magnitudes to keep the long products accurate
            logs = [math.log(aj) - math.log(abs(aj - ai)) for j, aj in enumerate(alpha) if j != i]
            neg = sum(1 for j, aj in enumerate(alpha) if j != i and aj < ai)
            z = (-1.0) ** neg * math.exp(math.fsum(logs))
        out.append(z)
    return out


@dataclass(frozen=True)
class MomentGadget:
    n: int
    eps: float
    ell: int
    alpha: tuple[int, ...]
    z: tuple[float, ...]
    z_exact: tuple[Fraction, ...] | None
    W: tuple[int, ...]   # 1-based j with z_j >= 0
    V: tuple[int, ...]   # 1-based j with z_j < 0
    zL1: float
    tau: float


def build_gadget(n: int, eps: float, ell: int | None = None) -> MomentGadget:
    """Gadget for dimension ``n`` and distance ``eps``.

    ``tau = min(36 sqrt(||z||_1) eps, sqrt(n) / (2 ell^3))`` uses the computed
    ``||z||_1`` in place of an abstract upper-bound constant.
    """
    if not 0 < eps <= EPS0_LOWER:
        raise ValueError(f"eps must lie in (0, {EPS0_LOWER:.6f}]")
    ell = gadget_ell(n) if ell is None else int(ell)
    zs = lagrange_weights(ell)
    z_exact = tuple(zs) if isinstance(zs[0], Fraction) else None
    z = tuple(float(v) for v in zs)
    W = tuple(j + 1 for j, v in enumerate(zs) if v >= 0)
    V = tuple(j + 1 for j, v in enumerate(zs) if v < 0)
    zL1 = float(sum(abs(v) for v in zs))
    tau = min(36.0 * math.sqrt(zL1) * eps, math.sqrt(n) / (2.0 * ell ** 3))
    return MomentGadget(n, float(eps), ell, tuple(j ** 3 for j in range(1, ell + 1)),
                        z, z_exact, W, V, zL1, tau)


def _law(g: MomentGadget, part: tuple[int, ...], sign: int, exact: bool):
    zs = g.z_exact if exact and g.z_exact is not None else g.z
    norm = sum(abs(v) for v in zs)
    values = [0] + [j ** 3 for j in part]
    probs = [sign * zs[j - 1] / norm for j in part]
    return values, [1 - sum(probs)] + probs


def gamma_law(g: MomentGadget, exact: bool = False):
    """Support and probabilities of ``gamma`` (the no-instance law)."""
    return _law(g, g.W, 1, exact)


def delta_law(g: MomentGadget, exact: bool = False):
    """Support and probabilities of ``delta`` (the yes-instance law)."""
    return _law(g, g.V, -1, exact)


def moments(g: MomentGadget, k: int):
    """``(E[gamma^k], E[delta^k])``, exact when the gadget is."""
    exact = g.z_exact is not None
    out = []
    for vals, probs in (gamma_law(g, exact), delta_law(g, exact)):
        out.append(sum(p * v ** k for v, p in zip(vals, probs)))
    return tuple(out)


def moment_check(g: MomentGadget, k_max: int, k_min: int = 1) -> float:
    """``max_k |E[delta^k] - E[gamma^k]| / max(1, E[gamma^k])`` over ``k_min..k_max``."""
    worst = 0.0
    for k in range(k_min, k_max + 1):
        eg, ed = moments(g, k)
        worst = max(worst, float(abs(ed - eg) / max(1, eg)))
    return worst


def _sample_product(g: MomentGadget, law, n: int, rng) -> ProductDist:
    vals, probs = law
    draws = rng.choice(np.asarray(vals, dtype=np.float64), size=n,
                       p=np.asarray([float(p) for p in probs]))
    bias = 0.5 + draws * g.tau / math.sqrt(n)
    if bias.max() > 1.0 + 1e-12:
        raise AssertionError("bias cap violated")
    return ProductDist(np.minimum(bias, 1.0))


def sample_dno(g: MomentGadget, n: int, rng: np.random.Generator) -> ProductDist:
    """Product distribution with ``bias_i = 1/2 + gamma_i tau / sqrt(n)``."""
    return _sample_product(g, gamma_law(g), n, rng)


def sample_dyes(g: MomentGadget, n: int, rng: np.random.Generator) -> ProductDist:
    """Product distribution with ``bias_i = 1/2 + delta_i tau / sqrt(n)``."""
    return _sample_product(g, delta_law(g), n, rng)


def farness_certificate(p: ProductDist, c1star: float = 0.56, keep_out: int | None = None) -> float:
    """Lower bound on the distance from ``p`` to juntas on ``keep_out`` variables.

    Zeroes the ``keep_out`` (default ``n // 2``) largest-magnitude means and
    evaluates the product-distribution TV bound on the rest.
    """
    from .exact import product_tv_bound

    mu = np.abs(mean_vector(p))
    keep_out = p.n // 2 if keep_out is None else keep_out
    rest = np.sort(mu)[: p.n - keep_out]
    return product_tv_bound(rest, c1star)


def parity_instance(n: int, S: Sequence[int], eps: float) -> ExplicitDist:
    """``p_S(x) = 2^-n (1 + 4 eps prod_{i in S} x_i)`` (0-based ``S``)."""
    S = sorted(set(int(i) for i in S))
    if not S:
        raise ValueError("S must be nonempty")
    if not 0 < eps <= 0.125:
        raise ValueError("eps must lie in (0, 1/8]")
    chi = np.prod(points(n)[:, S].astype(np.int64), axis=1)
    return ExplicitDist(n, (1.0 + 4.0 * eps * chi) / float(1 << n))


def is_good_truth_table(f) -> bool:
    f = np.asarray(f)
    size = f.shape[0]
    ones = int(f.sum())
    return 3 * ones >= size and 3 * ones <= 2 * size and 0 < ones < size


def random_good_truth_table(k: int, rng: np.random.Generator) -> np.ndarray:
    while True:
        f = rng.integers(0, 2, size=1 << k)
        if is_good_truth_table(f):
            return f


def pmf_instance_from_boolean(f, eps: float, n: int | None = None,
                              vars: Sequence[int] | None = None) -> ExplicitDist:
    """Truth-table tilted junta over ``vars`` (default the first ``k`` coordinates).

    Points with ``f = 1`` get mass ``2^-n (1 + 40 eps 2^k / I)`` and the rest
    ``2^-n (1 - 40 eps 2^k / (2^k - I))`` where ``I = |f^-1(1)|``.
    """
    f = np.asarray(f, dtype=np.int64)
    size = f.shape[0]
    k = size.bit_length() - 1
    if size != 1 << k or not np.isin(f, (0, 1)).all():
        raise ValueError("truth table must be a 0/1 array of length 2^k")
    if not is_good_truth_table(f):
        raise ValueError("truth table is not good: need 2^k/3 <= I <= 2^(k+1)/3")
    if not 0 < eps <= 1.0 / 120:
        raise ValueError("eps must lie in (0, 1/120]")
    n = k if n is None else n
    vars = tuple(range(k)) if vars is None else tuple(sorted(vars))
    if len(vars) != k or n < k:
        raise ValueError("need exactly k junta variables and n >= k")
    I = int(f.sum())
    up = 1 + 40 * eps * size / I
    down = 1 - 40 * eps * size / (size - I)
    inner = np.where(f == 1, up, down) / size
    return to_explicit(JuntaDist(n, vars, inner / inner.sum()))
