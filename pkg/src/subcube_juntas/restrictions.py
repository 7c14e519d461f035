"""Restrictions over {-1,1,*}^n and the random-restriction laws.

A restriction is stored full-length as an ``int8`` vector with ``0`` marking
a star.  The samplers take a conditional-sampling oracle; each restriction
draw costs exactly one query.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "Restriction",
    "StarSubsetLaw",
    "sample_subset",
    "sample_restriction_DS",
    "sample_restriction_Dsigma",
    "draw_restriction_pairs",
    "subset_mask",
]

STAR = 0


class Restriction:
    """A restriction ``rho`` in {-1, +1, *}^n.

    Parameters
    ----------
    cells : array-like of int
        Entries in {-1, 0, +1}; 0 denotes a star.
    """

    __slots__ = ("cells", "_stars")

    def __init__(self, cells):
        arr = np.asarray(cells, dtype=np.int8).copy()
        if arr.ndim != 1:
            raise ValueError("restriction must be one-dimensional")
        if not np.isin(arr, (-1, 0, 1)).all():
            raise ValueError("restriction entries must be -1, +1 or 0 (star)")
        arr.setflags(write=False)
        self.cells = arr
        self._stars = tuple(int(i) for i in np.flatnonzero(arr == STAR))

    @classmethod
    def all_stars(cls, n: int) -> "Restriction":
        return cls(np.zeros(n, dtype=np.int8))

    @classmethod
    def parse(cls, text: str) -> "Restriction":
        """Parse strings such as ``"+*-"`` or ``"1*-1"``."""
        out, i = [], 0
        while i < len(text):
            ch = text[i]
            if ch == "*":
                out.append(0)
            elif ch == "+":
                out.append(1)
            elif ch == "1":
                out.append(1)
            elif ch == "-":
                if text[i + 1:i + 2] == "1":
                    i += 1
                out.append(-1)
            elif not ch.isspace() and ch != ",":
                raise ValueError(f"bad restriction character {ch!r}")
            i += 1
        return cls(out)

    @property
    def n(self) -> int:
        return self.cells.shape[0]

    @property
    def stars(self) -> tuple[int, ...]:
        return self._stars

    def compose(self, sub) -> "Restriction":
        """Fill the stars of ``self`` with the sub-restriction ``sub``.

        ``sub`` has one cell per star of ``self`` (in increasing coordinate
        order); the result's stars are the stars of ``sub`` mapped into [n].
        """
        sub = sub.cells if isinstance(sub, Restriction) else np.asarray(sub, dtype=np.int8)
        if sub.shape != (len(self._stars),):
            raise ValueError("sub-restriction must cover exactly the stars")
        out = self.cells.copy()
        out[list(self._stars)] = sub
        return Restriction(out)

    def consistent(self, x) -> bool:
        x = np.asarray(x)
        fixed = self.cells != STAR
        return bool(np.array_equal(x[fixed], self.cells[fixed]))

    def __eq__(self, other):
        return isinstance(other, Restriction) and np.array_equal(self.cells, other.cells)

    def __hash__(self):
        return hash(self.cells.tobytes())

    def __len__(self):
        return self.n

    def __str__(self):
        return "".join({1: "+", -1: "-", 0: "*"}[int(c)] for c in self.cells)

    def __repr__(self):
        return f"Restriction('{self}')"


def as_cells(rho, n: int | None = None) -> np.ndarray:
    cells = rho.cells if isinstance(rho, Restriction) else np.asarray(rho, dtype=np.int8)
    if n is not None and cells.shape[-1] != n:
        raise ValueError(f"restriction length {cells.shape[-1]} != dimension {n}")
    return cells


@dataclass(frozen=True)
class StarSubsetLaw:
    """``S_sigma(T)``: include each element of ``T`` independently w.p. ``sigma``."""

    ground: tuple[int, ...]
    sigma: float

    def __post_init__(self):
        object.__setattr__(self, "ground", tuple(sorted(int(i) for i in self.ground)))
        if not 0.0 < self.sigma < 1.0:
            raise ValueError("sigma must lie in (0, 1)")
        if any(i < 0 for i in self.ground):
            raise ValueError("indices must be nonnegative")


def sample_subset(law: StarSubsetLaw, rng: np.random.Generator) -> tuple[int, ...]:
    ground = np.asarray(law.ground, dtype=np.int64)
    keep = rng.random(ground.shape[0]) < law.sigma
    return tuple(int(i) for i in ground[keep])


def subset_mask(n: int, S: Iterable[int]) -> np.ndarray:
    mask = np.zeros(n, dtype=bool)
    mask[list(S)] = True
    return mask


def sample_restriction_DS(oracle, S: Iterable[int]) -> Restriction:
    """``rho ~ D_S(p)``: one unconditioned draw, stars exactly on ``S``."""
    n = oracle.n
    x = oracle.conditional_sample(Restriction.all_stars(n))
    cells = x.astype(np.int8)
    cells[subset_mask(n, S)] = STAR
    return Restriction(cells)


def sample_restriction_Dsigma(oracle, sigma: float, base: Restriction | None = None,
                              rng: np.random.Generator | None = None) -> Restriction:
    """``nu ~ D_sigma(p_|base)`` composed with ``base``.

    Draws ``x ~ p_|base`` (one query) and ``S ~ S_sigma(stars(base))``; the
    result fixes everything except ``S``.
    """
    n = oracle.n
    base = Restriction.all_stars(n) if base is None else base
    rng = oracle.rng if rng is None else rng
    x = oracle.conditional_sample(base)
    S = sample_subset(StarSubsetLaw(base.stars, sigma), rng) if base.stars else ()
    cells = x.astype(np.int8)
    cells[list(S)] = STAR
    return Restriction(cells)


def draw_restriction_pairs(oracle, J: Sequence[int], sigma: float, t: int,
                           rng: np.random.Generator | None = None) -> np.ndarray:
    """Batched ``rho ~ D_{J-bar}(p)`` then ``nu ~ D_sigma(p_|rho)``.

    Returns the composed restrictions ``nu`` as a ``(t, n)`` int8 array; the
    stars of each row are a ``sigma``-subset of the complement of ``J``.  Costs
    ``2 t`` queries (one per restriction draw).
    """
    n = oracle.n
    rng = oracle.rng if rng is None else rng
    jbar = ~subset_mask(n, J)
    x = oracle.sample_batch(np.zeros((t, n), dtype=np.int8))
    rho = x.astype(np.int8)
    rho[:, jbar] = STAR
    y = oracle.sample_batch(rho)
    nu = y.astype(np.int8)
    stars = (rng.random((t, n)) < sigma) & jbar[None, :]
    nu[stars] = STAR
    return nu
