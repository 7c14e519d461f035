"""Algorithm constants left symbolic by the analysis, plus desk-scale knobs."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np

__all__ = ["AlgoConfig", "UniformFallback", "ErrorPolicy", "split_rng", "clamped_log2"]

UniformFallback = "uniform"
ErrorPolicy = "error"


@dataclass(frozen=True)
class AlgoConfig:
    """Universal constants and scaling multipliers.

    Attributes
    ----------
    budget_constant_scale
        Multiplies the constant 100 appearing in ``t_a``, ``s_a`` and ``eps0``.
    sample_constant_scale
        If set, overrides ``budget_constant_scale`` for the constant in ``s_a``
        only (the per-pair sample count, which controls the false-positive rate).
    eps0_log_power
        Exponent of ``log2(k/eps)`` in ``eps0 = eps / (100 log2^p(k/eps))``.
        The analysis uses 3.
    tester_scale
        Multiplies ``L`` and ``R`` and the constant 1600 in ``eps*``.
    r_constant
        Hidden constant in ``R = O(log(n/eps'))``.
    mean_tester_c
        Sample constant ``C`` of the robust mean tester.
    mean_tester_a
        Recursion constant ``a`` of the threshold schedule.
    mean_tester_q
        Forces the per-side sample count ``q`` when set.
    c_exponent
        Structural exponent ``c`` used to derive ``eps'``.
    c1_star
        Berry--Esseen constant for the product-distribution TV bound.
    learn_constant
        Multiplier in the learner's sample count ``m = C 2^|J| / eps^2``.
    zeta
        Constant in the compression hypothesis ``q <= zeta log2(1/delta) / eps^2``.
    exact_cap
        Largest dimension converted to a dense pmf.
    unsupported_policy
        ``"uniform"`` or ``"error"`` for zero-mass subcube queries.
    """

    budget_constant_scale: float = 1.0
    sample_constant_scale: float | None = None
    eps0_log_power: float = 3.0
    tester_scale: float = 1.0
    r_constant: float = 1.0
    mean_tester_c: float = 150.0
    mean_tester_a: float = 1.0 / 5000.0
    mean_tester_q: int | None = None
    c_exponent: float = 3.0
    c1_star: float = 0.56
    learn_constant: float = 1.0
    zeta: float = 0.01
    exact_cap: int = 24
    unsupported_policy: str = UniformFallback

    def __post_init__(self):
        positive = ("budget_constant_scale", "tester_scale", "r_constant",
                    "mean_tester_c", "mean_tester_a", "learn_constant", "zeta")
        for name in positive:
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.sample_constant_scale is not None and not self.sample_constant_scale > 0:
            raise ValueError("sample_constant_scale must be positive")
        if self.eps0_log_power < 0 or self.c_exponent < 0:
            raise ValueError("exponents must be nonnegative")
        if self.mean_tester_q is not None and self.mean_tester_q < 1:
            raise ValueError("mean_tester_q must be >= 1")
        if self.unsupported_policy not in (UniformFallback, ErrorPolicy):
            raise ValueError(f"unknown policy {self.unsupported_policy!r}")

    @property
    def sample_scale(self) -> float:
        s = self.sample_constant_scale
        return self.budget_constant_scale if s is None else s

    def replace(self, **changes) -> "AlgoConfig":
        return dataclasses.replace(self, **changes)

    @classmethod
    def from_dict(cls, d: dict) -> "AlgoConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def split_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """Independent generator for ``(seed, stream)``.

    Streams with different ids are statistically independent, and the same
    pair always reproduces the same sequence.
    """
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(int(stream),)))


def clamped_log2(x: float) -> float:
    """``log2(max(x, 2))``, so parameter logs are always >= 1."""
    return math.log2(max(float(x), 2.0))
