"""Distribution specs over {-1,1}^n and exact operations on them.

Dense pmfs are indexed by the integer whose bit ``i`` is 1 iff ``x_{i+1} = +1``
(coordinate 1 is the least significant bit).  Coordinates are 0-based in the
Python API and 1-based only in the JSON/CLI layer.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Sequence, Union

import numpy as np

from .restrictions import as_cells

__all__ = [
    "ExplicitDist",
    "ProductDist",
    "JuntaDist",
    "Distribution",
    "ZeroMassError",
    "points",
    "index_of",
    "to_explicit",
    "restrict_exact",
    "project_exact",
    "marginal_pmf",
    "mean_vector",
    "empirical_mean",
    "tv_distance",
    "relevant_coordinates",
    "uniform",
    "point_mass",
    "load_instance",
    "dump_instance",
    "NORM_TOL",
    "RENORM_TOL",
    "DEFAULT_CAP",
]

NORM_TOL = 1e-12
RENORM_TOL = 1e-9
DEFAULT_CAP = 24


class ZeroMassError(ValueError):
    """Raised when conditioning on a subcube of zero probability."""


def _validated_pmf(pmf, size: int | None = None) -> np.ndarray:
    arr = np.array(pmf, dtype=np.float64).ravel()
    if size is not None and arr.shape[0] != size:
        raise ValueError(f"pmf has length {arr.shape[0]}, expected {size}")
    m = arr.shape[0]
    if m == 0 or m & (m - 1):
        raise ValueError("pmf length must be a power of two")
    if not np.isfinite(arr).all() or (arr < 0).any():
        raise ValueError("pmf entries must be finite and nonnegative")
    dev = abs(arr.sum() - 1.0)
    if dev > RENORM_TOL:
        raise ValueError(f"pmf sums to {arr.sum()!r}; deviation exceeds {RENORM_TOL}")
    if dev > NORM_TOL:
        arr = arr / arr.sum()
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class ExplicitDist:
    """Dense pmf over {-1,1}^n."""

    n: int
    pmf: np.ndarray

    def __post_init__(self):
        if self.n < 0:
            raise ValueError("n must be nonnegative")
        object.__setattr__(self, "pmf", _validated_pmf(self.pmf, 1 << self.n))


@dataclass(frozen=True, eq=False)
class ProductDist:
    """Independent coordinates with ``bias[i] = Pr[x_i = +1]``."""

    bias: np.ndarray

    def __post_init__(self):
        b = np.array(self.bias, dtype=np.float64).ravel()
        if not np.isfinite(b).all() or (b < 0).any() or (b > 1).any():
            raise ValueError("biases must lie in [0, 1]")
        b.setflags(write=False)
        object.__setattr__(self, "bias", b)

    @property
    def n(self) -> int:
        return self.bias.shape[0]


@dataclass(frozen=True, eq=False)
class JuntaDist:
    """Junta over ``vars`` (strictly increasing, 0-based); others uniform.

    ``inner`` is a pmf over {-1,1}^{|vars|} with bit ``j`` encoding
    coordinate ``vars[j]``.
    """

    n: int
    vars: tuple[int, ...]
    inner: np.ndarray

    def __post_init__(self):
        v = tuple(int(i) for i in self.vars)
        if any(b <= a for a, b in zip(v, v[1:])):
            raise ValueError("junta variables must be strictly increasing")
        if v and (v[0] < 0 or v[-1] >= self.n):
            raise ValueError("junta variables out of range")
        object.__setattr__(self, "vars", v)
        object.__setattr__(self, "inner", _validated_pmf(self.inner, 1 << len(v)))


Distribution = Union[ExplicitDist, ProductDist, JuntaDist]


def uniform(n: int) -> JuntaDist:
    return JuntaDist(n, (), [1.0])


def point_mass(x: Sequence[int]) -> ExplicitDist:
    n = len(x)
    pmf = np.zeros(1 << n)
    pmf[index_of(x)] = 1.0
    return ExplicitDist(n, pmf)


@lru_cache(maxsize=32)
def _points_cached(n: int) -> np.ndarray:
    idx = np.arange(1 << n, dtype=np.int64)
    bits = (idx[:, None] >> np.arange(n, dtype=np.int64)[None, :]) & 1
    pts = (2 * bits - 1).astype(np.int8)
    pts.setflags(write=False)
    return pts


def points(n: int) -> np.ndarray:
    """All of {-1,1}^n as a ``(2^n, n)`` int8 array in pmf index order."""
    if n > 20:
        raise ValueError("refusing to enumerate more than 2^20 points")
    return _points_cached(n)


def index_of(x) -> int | np.ndarray:
    """pmf index of a sample (or of each row of a 2-D array)."""
    x = np.asarray(x)
    w = np.left_shift(np.int64(1), np.arange(x.shape[-1], dtype=np.int64))
    out = ((x > 0).astype(np.int64) * w).sum(axis=-1)
    return int(out) if out.ndim == 0 else out


def _tensor(pmf: np.ndarray, n: int) -> np.ndarray:
    """View with axis ``c`` indexing coordinate ``c`` (0 = -1, 1 = +1)."""
    return pmf.reshape((2,) * n).transpose(tuple(range(n - 1, -1, -1)))


def _flat(t: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(t.transpose(tuple(range(t.ndim - 1, -1, -1)))).ravel()


def _embed(sub_pmf: np.ndarray, positions: Sequence[int], m: int) -> np.ndarray:
    """pmf over m coordinates: ``sub_pmf`` on ``positions``, uniform elsewhere."""
    idx = np.arange(1 << m, dtype=np.int64)
    sub = np.zeros_like(idx)
    for j, pos in enumerate(positions):
        sub |= ((idx >> pos) & 1) << j
    return sub_pmf[sub] / float(1 << (m - len(positions)))


def to_explicit(p: Distribution, cap: int = DEFAULT_CAP) -> ExplicitDist:
    if p.n > cap:
        raise ValueError(f"dimension {p.n} exceeds the exact cap {cap}")
    if isinstance(p, ExplicitDist):
        return p
    if isinstance(p, JuntaDist):
        return ExplicitDist(p.n, _embed(p.inner, p.vars, p.n))
    if isinstance(p, ProductDist):
        pmf = np.ones(1)
        for b in p.bias:  # coordinate i becomes bit i
            pmf = np.concatenate([pmf * (1.0 - b), pmf * b])
        return ExplicitDist(p.n, pmf / pmf.sum())
    raise TypeError(f"unsupported distribution {type(p).__name__}")


def restrict_exact(p: Distribution, rho, cap: int = DEFAULT_CAP) -> ExplicitDist:
    """``p_|rho`` as an explicit pmf over the stars of ``rho``."""
    cells = as_cells(rho, p.n)
    e = to_explicit(p, cap)
    t = _tensor(e.pmf, e.n)
    sub = t[tuple(slice(None) if c == 0 else int(c > 0) for c in cells)]
    sub = np.asarray(sub, dtype=np.float64)
    mass = float(sub.sum())
    if not mass > 0:
        raise ZeroMassError("subcube has zero probability mass")
    return ExplicitDist(int(sub.ndim), _flat(sub) / mass)


def project_exact(p: Distribution, S: Iterable[int], cap: int = DEFAULT_CAP) -> ExplicitDist:
    """Marginal of ``p`` on the coordinates outside ``S``."""
    S = sorted(set(int(i) for i in S))
    if any(i < 0 or i >= p.n for i in S):
        raise ValueError("projection indices out of range")
    e = to_explicit(p, cap)
    t = _tensor(e.pmf, e.n)
    if S:
        t = t.sum(axis=tuple(S))
    return ExplicitDist(e.n - len(S), _flat(np.asarray(t)))


def marginal_pmf(p: Distribution, rho, coords: Sequence[int], cap: int = DEFAULT_CAP) -> np.ndarray:
    """Law of ``x_coords`` under ``p_|rho`` (``coords`` must be stars of ``rho``).

    Junta and product specs are handled structurally, so the ambient
    dimension may exceed ``cap``.  Bit ``j`` of the result's index is
    ``coords[j]``.
    """
    cells = as_cells(rho, p.n)
    coords = [int(c) for c in coords]
    if any(cells[c] != 0 for c in coords):
        raise ValueError("marginal coordinates must be stars of the restriction")
    m = len(coords)
    if isinstance(p, ProductDist):
        fixed = cells != 0
        b = p.bias
        lik = np.where(cells[fixed] > 0, b[fixed], 1.0 - b[fixed])
        if fixed.any() and not np.prod(lik) > 0:
            raise ZeroMassError("subcube has zero probability mass")
        return to_explicit(ProductDist(b[coords]), cap).pmf.copy()
    if isinstance(p, JuntaDist):
        K = list(p.vars)
        inner = restrict_exact(ExplicitDist(len(K), p.inner), cells[K], cap)
        kstars = [v for v in K if cells[v] == 0]
        drop = [j for j, v in enumerate(kstars) if v not in coords]
        sub = project_exact(inner, drop, cap).pmf
        kept = [v for v in kstars if v in coords]
        return _embed(sub, [coords.index(v) for v in kept], m)
    r = restrict_exact(p, cells, cap)
    stars = [i for i in range(p.n) if cells[i] == 0]
    pos = {c: j for j, c in enumerate(stars)}
    drop = [pos[s] for s in stars if s not in coords]
    sub = project_exact(r, drop, cap)
    kept = [s for s in stars if s in coords]  # increasing coordinate order
    return _embed(sub.pmf, [coords.index(s) for s in kept], m) if kept != coords else sub.pmf.copy()


def mean_vector(p: Distribution, cap: int = DEFAULT_CAP) -> np.ndarray:
    """Exact ``mu(p) = E[x]``."""
    if isinstance(p, ProductDist):
        return 2.0 * p.bias - 1.0
    if isinstance(p, JuntaDist):
        mu = np.zeros(p.n)
        if p.vars:
            mu[list(p.vars)] = mean_vector(ExplicitDist(len(p.vars), p.inner))
        return mu
    e = to_explicit(p, cap)
    t = _tensor(e.pmf, e.n)
    mu = np.empty(e.n)
    for c in range(e.n):
        others = tuple(a for a in range(e.n) if a != c)
        marg = t.sum(axis=others) if others else t
        mu[c] = marg[1] - marg[0]
    return mu


def empirical_mean(samples) -> np.ndarray:
    arr = np.asarray(samples, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] == 0:
        raise ValueError("need a non-empty (count, n) array of samples")
    return arr.mean(axis=0)


def tv_distance(p: Distribution, q: Distribution, cap: int = DEFAULT_CAP) -> float:
    if p.n != q.n:
        raise ValueError("dimension mismatch")
    a, b = to_explicit(p, cap).pmf, to_explicit(q, cap).pmf
    return float(0.5 * np.abs(a - b).sum())


def relevant_coordinates(p: Distribution, tol: float = 1e-12, cap: int = DEFAULT_CAP) -> tuple[int, ...]:
    """Smallest ``J`` such that ``p`` is a junta over ``J``.

    Coordinate ``i`` is relevant iff flipping ``x_i`` changes some ``p(x)``.
    """
    if isinstance(p, JuntaDist):
        e = ExplicitDist(len(p.vars), p.inner)
        return tuple(p.vars[i] for i in relevant_coordinates(e, tol))
    if isinstance(p, ProductDist):
        return tuple(int(i) for i in np.flatnonzero(np.abs(p.bias - 0.5) > tol))
    e = to_explicit(p, cap)
    t = _tensor(e.pmf, e.n)
    return tuple(i for i in range(e.n) if np.abs(t - np.flip(t, axis=i)).max() > tol)


# --- JSON instance format -------------------------------------------------

def dump_instance(p: Distribution) -> dict:
    if isinstance(p, ExplicitDist):
        return {"kind": "explicit", "n": p.n, "pmf": [float(v) for v in p.pmf]}
    if isinstance(p, ProductDist):
        return {"kind": "product", "bias": [float(v) for v in p.bias]}
    if isinstance(p, JuntaDist):
        return {"kind": "junta", "n": p.n, "vars": [v + 1 for v in p.vars],
                "innerPmf": [float(v) for v in p.inner]}
    raise TypeError(f"unsupported distribution {type(p).__name__}")


def load_instance(src) -> Distribution:
    """Build a spec from a JSON dict, JSON string or file path."""
    if isinstance(src, (str, Path)) and not str(src).lstrip().startswith("{"):
        src = json.loads(Path(src).read_text())
    elif isinstance(src, str):
        src = json.loads(src)
    if not isinstance(src, dict) or "kind" not in src:
        raise ValueError("instance must be an object with a 'kind' field")
    kind = src["kind"]
    if kind == "explicit":
        return ExplicitDist(int(src["n"]), src["pmf"])
    if kind == "product":
        return ProductDist(src["bias"])
    if kind == "junta":
        n = int(src["n"])
        vars1 = [int(v) for v in src["vars"]]
        if any(v < 1 or v > n for v in vars1) or len(set(vars1)) != len(vars1):
            raise ValueError("junta vars must be distinct and within 1..n")
        inner = np.asarray(src["innerPmf"], dtype=np.float64)
        order = np.argsort(vars1, kind="stable")
        if len(vars1) > 1 and not (order == np.arange(len(vars1))).all():
            # re-encode the inner pmf so bit j matches the j-th sorted variable
            m = len(vars1)
            idx = np.arange(1 << m)
            old = np.zeros_like(idx)
            for new_bit, old_bit in enumerate(order):
                old |= ((idx >> new_bit) & 1) << int(old_bit)
            inner = inner[old]
        return JuntaDist(n, tuple(sorted(v - 1 for v in vars1)), inner)
    raise ValueError(f"unknown instance kind {kind!r}")
