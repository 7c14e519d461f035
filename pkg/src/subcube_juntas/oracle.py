"""Query-counting subcube conditional sampling oracle.

Besides the single-query primitive, the oracle offers batched kernels that
are exact in distribution: ``sample_sums`` returns coordinate sums of ``s``
i.i.d. conditional draws per restriction (via multinomial/binomial counts),
and ``star_counts_batch`` returns histograms over star patterns.  Every
simulated draw is charged as one query.
"""

from __future__ import annotations

from typing import Iterator, Sequence

import numpy as np

from .config import ErrorPolicy, UniformFallback
from .distributions import (
    DEFAULT_CAP,
    Distribution,
    ExplicitDist,
    JuntaDist,
    ProductDist,
    ZeroMassError,
    marginal_pmf,
)
from .restrictions import as_cells

__all__ = ["CondOracle", "pattern_matrix"]

# rows x 2^m entries materialized per multinomial chunk
_CHUNK_CELLS = 1 << 22


def pattern_matrix(m: int) -> np.ndarray:
    """``(2^m, m)`` matrix of ±1 star patterns; bit j of the row is star j."""
    idx = np.arange(1 << m, dtype=np.int64)
    return (2 * ((idx[:, None] >> np.arange(m)[None, :]) & 1) - 1).astype(np.int64)


def _deposit(stars: Sequence[int]) -> np.ndarray:
    """Offsets placing each star pattern into the full index space."""
    m = len(stars)
    idx = np.arange(1 << m, dtype=np.int64)
    out = np.zeros_like(idx)
    for j, c in enumerate(stars):
        out |= ((idx >> j) & 1) << c
    return out


def _group_by_stars(cells: np.ndarray) -> Iterator[tuple[np.ndarray, tuple[int, ...]]]:
    star = cells == 0
    t, n = star.shape
    if t == 0:
        return
    if n <= 62:
        keys = (star.astype(np.int64) << np.arange(n, dtype=np.int64)).sum(axis=1)
        uniq, inv = np.unique(keys, return_inverse=True)
        masks = [tuple(c for c in range(n) if (int(u) >> c) & 1) for u in uniq]
    else:
        uniq, inv = np.unique(star, axis=0, return_inverse=True)
        masks = [tuple(int(i) for i in np.flatnonzero(u)) for u in uniq]
    inv = inv.ravel()
    if len(masks) == 1:
        yield np.arange(t), masks[0]
        return
    order = np.argsort(inv, kind="stable")
    bounds = np.searchsorted(inv[order], np.arange(len(masks) + 1))
    for g, stars in enumerate(masks):
        yield order[bounds[g]:bounds[g + 1]], stars


class CondOracle:
    """Subcube conditioning access to a hidden distribution.

    Parameters
    ----------
    dist : Distribution
        The hidden spec.
    rng : numpy Generator or int, optional
        Randomness source (an int is used as a seed).
    policy : {"uniform", "error"}
        Behavior on zero-mass subcubes.
    cap : int
        Exact-dimension cap for explicit specs.
    """

    def __init__(self, dist: Distribution, rng=None, policy: str = UniformFallback,
                 cap: int = DEFAULT_CAP):
        if policy not in (UniformFallback, ErrorPolicy):
            raise ValueError(f"unknown policy {policy!r}")
        if isinstance(dist, ExplicitDist) and dist.n > cap:
            raise ValueError("explicit dimension exceeds the exact cap")
        self._dist = dist
        self.rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
        self.policy = policy
        self.cap = cap
        self.queries = 0

    @property
    def n(self) -> int:
        return self._dist.n

    # -- conditional pmf rows ------------------------------------------------

    def _fix_zero_rows(self, pv: np.ndarray) -> np.ndarray:
        tot = pv.sum(axis=1)
        bad = ~(tot > 0)
        if bad.any():
            if self.policy == ErrorPolicy:
                raise ZeroMassError("query on a zero-mass subcube")
            pv[bad] = 1.0
            tot = pv.sum(axis=1)
        return pv / tot[:, None]

    def _explicit_rows(self, pmf: np.ndarray, cells: np.ndarray, stars) -> np.ndarray:
        base = ((cells > 0).astype(np.int64) << np.arange(cells.shape[1], dtype=np.int64)).sum(axis=1)
        return pmf[base[:, None] + _deposit(stars)[None, :]]

    def _cond_rows(self, cells: np.ndarray, stars: tuple[int, ...]) -> np.ndarray:
        """Conditional pmf over star patterns for rows sharing ``stars``."""
        p = self._dist
        m = len(stars)
        if isinstance(p, ExplicitDist):
            pv = self._explicit_rows(p.pmf, cells, stars)
        elif isinstance(p, ProductDist):
            fixed = cells != 0
            lik = np.where(cells > 0, p.bias[None, :], 1.0 - p.bias[None, :])
            mass = np.where(fixed, lik, 1.0).prod(axis=1)
            star_pmf = marginal_pmf(ProductDist(p.bias[list(stars)]), np.zeros(m, np.int8), range(m))
            pv = mass[:, None] * star_pmf[None, :]
        else:
            K = list(p.vars)
            kstars = [c for c in stars if c in p.vars]
            kpos = [K.index(c) for c in kstars]
            inner = self._explicit_rows(p.inner, cells[:, K], kpos)
            pos = [stars.index(c) for c in kstars]
            idx = np.arange(1 << m, dtype=np.int64)
            sub = np.zeros_like(idx)
            for j, q in enumerate(pos):
                sub |= ((idx >> q) & 1) << j
            pv = inner[:, sub]
        return self._fix_zero_rows(np.array(pv, dtype=np.float64))

    # -- single-query primitive ---------------------------------------------

    def conditional_sample(self, rho) -> np.ndarray:
        """One draw from ``p_|rho`` (full-length ±1 vector); costs 1 query."""
        cells = as_cells(rho, self.n)
        return self.sample_batch(cells[None, :])[0]

    # -- batched kernels ----------------------------------------------------

    def sample_batch(self, rhos) -> np.ndarray:
        """One conditional draw per row of ``rhos``; costs ``len(rhos)`` queries."""
        cells = as_cells(rhos, self.n)
        if cells.ndim != 2:
            raise ValueError("expected a (t, n) array of restrictions")
        out = np.where(cells == 0, 1, cells).astype(np.int8)
        p = self._dist
        if isinstance(p, (ProductDist, JuntaDist)):
            # free coordinates are independent coins
            bias = p.bias if isinstance(p, ProductDist) else np.full(self.n, 0.5)
            indep = np.ones(self.n, bool)
            if isinstance(p, JuntaDist):
                indep[list(p.vars)] = False
            else:
                self._check_product_mass(cells)
            coins = np.where(self.rng.random(cells.shape) < bias[None, :], 1, -1).astype(np.int8)
            free = (cells == 0) & indep[None, :]
            out[free] = coins[free]
            if isinstance(p, JuntaDist) and p.vars:
                K = list(p.vars)
                sub = CondOracle(ExplicitDist(len(K), p.inner), self.rng, self.policy, self.cap)
                out[:, K] = sub.sample_batch(cells[:, K])
        else:
            for rows, stars in _group_by_stars(cells):
                if not stars:
                    self._fix_zero_rows(self._cond_rows(cells[rows], stars))
                    continue
                pv = self._cond_rows(cells[rows], stars)
                cum = np.cumsum(pv, axis=1)
                u = self.rng.random(rows.shape[0]) * cum[:, -1]
                k = np.minimum((cum < u[:, None]).sum(axis=1), pv.shape[1] - 1)
                pat = pattern_matrix(len(stars))[k]
                out[np.ix_(rows, stars)] = pat
        self.queries += cells.shape[0]
        return out

    def _check_product_mass(self, cells: np.ndarray) -> None:
        b = self._dist.bias
        impossible = ((cells > 0) & (b[None, :] == 0)) | ((cells < 0) & (b[None, :] == 1))
        if impossible.any() and self.policy == ErrorPolicy:
            raise ZeroMassError("query on a zero-mass subcube")

    def sample_sums(self, rhos, s: int) -> np.ndarray:
        """Per-row coordinate sums of ``s`` i.i.d. draws from ``p_|rho``.

        Returns an int64 ``(t, n)`` array; costs ``t * s`` queries.
        """
        cells = as_cells(rhos, self.n)
        s = int(s)
        if s < 1:
            raise ValueError("s must be >= 1")
        p = self._dist
        sums = cells.astype(np.int64) * s
        if isinstance(p, ExplicitDist):
            self._explicit_sums(cells, s, sums)
        else:
            bias = p.bias if isinstance(p, ProductDist) else np.full(self.n, 0.5)
            indep = np.ones(self.n, bool)
            if isinstance(p, JuntaDist):
                indep[list(p.vars)] = False
            else:
                self._check_product_mass(cells)
            free = (cells == 0) & indep[None, :]
            rows, cols = np.nonzero(free)
            if rows.size:
                sums[rows, cols] = 2 * self.rng.binomial(s, bias[cols]) - s
            if isinstance(p, JuntaDist) and p.vars:
                K = list(p.vars)
                sub = CondOracle(ExplicitDist(len(K), p.inner), self.rng, self.policy, self.cap)
                sums[:, K] = sub.sample_sums(cells[:, K], s)
        self.queries += cells.shape[0] * s
        return sums

    def _explicit_sums(self, cells, s, sums):
        for rows, stars in _group_by_stars(cells):
            if not stars:
                self._cond_rows(cells[rows], stars)
                continue
            P = pattern_matrix(len(stars))
            step = max(1, _CHUNK_CELLS >> len(stars))
            for lo in range(0, rows.shape[0], step):
                r = rows[lo:lo + step]
                pv = self._cond_rows(cells[r], stars)
                counts = self.rng.multinomial(s, pv)
                sums[np.ix_(r, stars)] = counts @ P

    def star_counts_batch(self, rhos, s: int):
        """Histograms of ``s`` draws per row over the row's star patterns.

        Yields ``(rows, stars, counts)`` groups where ``counts`` has shape
        ``(len(rows), 2^len(stars))``; costs ``t * s`` queries in total.
        """
        cells = as_cells(rhos, self.n)
        s = int(s)
        out = []
        for rows, stars in _group_by_stars(cells):
            pv = self._cond_rows(cells[rows], stars)
            out.append((rows, stars, self.rng.multinomial(s, pv)))
        self.queries += cells.shape[0] * s
        return out

    def sample_counts(self, rho, s: int, coords: Sequence[int] | None = None) -> np.ndarray:
        """Histogram of ``s`` draws from ``p_|rho`` over patterns of ``coords``.

        ``coords`` defaults to the stars of ``rho``; costs ``s`` queries.
        """
        cells = as_cells(rho, self.n)
        if coords is None:
            coords = [int(i) for i in np.flatnonzero(cells == 0)]
        try:
            pv = marginal_pmf(self._dist, cells, coords, self.cap)
        except ZeroMassError:
            if self.policy == ErrorPolicy:
                raise
            pv = np.full(1 << len(coords), 1.0 / (1 << len(coords)))
        self.queries += int(s)
        return self.rng.multinomial(int(s), pv / pv.sum())

    def draw(self, rho, count: int) -> np.ndarray:
        """``count`` i.i.d. draws from ``p_|rho`` as a ``(count, n)`` array."""
        cells = as_cells(rho, self.n)
        return self.sample_batch(np.broadcast_to(cells, (int(count), self.n)).copy())
