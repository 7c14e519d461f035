import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from subcube_juntas.distributions import (
    JuntaDist, ProductDist, tv_distance, uniform,
)
from subcube_juntas.exact import (
    canonical_junta_distance, canonical_junta_routes, closest_junta, closest_junta_distance,
    distance_to_k_junta, implied_exponent, product_tv_bound, product_tv_lower_bound,
    restriction_mean_norm, sigma_monotonicity_check, structural_audit,
)
from subcube_juntas.hard_instances import parity_instance

from conftest import random_explicit


def _lp_reference(p, J):
    """Closest-junta distance via scipy's LP solver."""
    from scipy.optimize import linprog
    n = p.n
    J = sorted(J)
    X = ((np.arange(1 << n)[:, None] >> np.arange(n)) & 1)
    blocks = (X[:, J] << np.arange(len(J))).sum(axis=1) if J else np.zeros(1 << n, int)
    nb = 1 << len(J)
    N = 1 << (n - len(J))
    # variables: w (nb), t (2^n) with t >= |p - w(block)|
    c = np.concatenate([np.zeros(nb), np.ones(1 << n)])
    A, b = [], []
    for x in range(1 << n):
        row = np.zeros(nb + (1 << n))
        row[blocks[x]] = 1
        row[nb + x] = -1
        A.append(row.copy()); b.append(p.pmf[x])
        row[blocks[x]] = -1
        A.append(row); b.append(-p.pmf[x])
    Aeq = np.concatenate([np.full(nb, N), np.zeros(1 << n)])[None, :]
    res = linprog(c, A_ub=np.array(A), b_ub=b, A_eq=Aeq, b_eq=[1.0],
                  bounds=[(0, None)] * (nb + (1 << n)), method="highs")
    return 0.5 * res.fun


class TestClosestJunta:
    def test_junta_zero(self, rng):
        p = JuntaDist(4, (0, 2), rng.dirichlet(np.ones(4)))
        assert closest_junta_distance(p, [0, 2]) == pytest.approx(0.0, abs=1e-15)

    def test_parity_examples(self, parity2):
        assert closest_junta_distance(parity2, [0]) == pytest.approx(0.25, abs=1e-15)
        assert closest_junta_distance(parity2, [0, 1]) == pytest.approx(0.0, abs=1e-15)

    def test_weights_feasible(self, rng):
        p = random_explicit(rng, 4)
        d, w = closest_junta(p, [1])
        assert w.min() >= 0 and w.sum() * 8 == pytest.approx(1.0)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2 ** 32 - 1), st.integers(1, 4), st.floats(0.05, 3.0))
    def test_matches_lp(self, seed, n, alpha):
        rng = np.random.default_rng(seed)
        p = random_explicit(rng, n, alpha)
        J = [i for i in range(n) if rng.random() < 0.5]
        assert closest_junta_distance(p, J) == pytest.approx(_lp_reference(p, J), abs=1e-6)

    def test_le_canonical(self, rng):
        for _ in range(30):
            p = random_explicit(rng, 4, 0.3)
            J = [0, 3]
            assert closest_junta_distance(p, J) <= canonical_junta_distance(p, J) + 1e-12


class TestKJunta:
    def test_k_equals_n(self, rng):
        assert distance_to_k_junta(random_explicit(rng, 3), 3) == 0.0

    def test_uniform(self):
        assert distance_to_k_junta(uniform(4), 0) == pytest.approx(0.0, abs=1e-15)

    def test_parity(self):
        d = distance_to_k_junta(parity_instance(4, [0, 1, 2], 1 / 8), 2)
        assert d >= 0.25 - 1e-12
        assert d == pytest.approx(0.25, abs=1e-12)


class TestCanonical:
    def test_full_J(self, rng):
        p = random_explicit(rng, 3)
        assert canonical_junta_distance(p, range(3)) == pytest.approx(0.0, abs=1e-15)

    def test_parity(self, parity2):
        assert canonical_junta_routes(parity2, [0]) == pytest.approx((0.25, 0.25), abs=1e-15)

    def test_empty_J_is_tv(self, rng):
        p = random_explicit(rng, 4)
        assert canonical_junta_distance(p, []) == pytest.approx(tv_distance(p, uniform(4)), abs=1e-14)

    def test_routes_agree(self, rng):
        for _ in range(50):
            p = random_explicit(rng, 5, 0.2)
            a, b = canonical_junta_routes(p, [1, 4])
            assert abs(a - b) <= 1e-10


class TestStructuralAudit:
    def test_uniform(self):
        rep = structural_audit(uniform(3))
        assert rep.lhs == pytest.approx(0.0, abs=1e-15) and rep.rhs_sum == pytest.approx(0.0, abs=1e-15)

    def test_frozen_bit(self):
        rep = structural_audit(JuntaDist(2, (0,), [0.0, 1.0]))
        assert rep.lhs == pytest.approx(0.5)
        assert rep.rhs_sum > 0

    def test_parity(self, parity2):
        rep = structural_audit(parity2)
        assert rep.rhs_sum > 0

    def test_restriction_norm_endpoints(self, rng):
        # sigma -> 0 stars nothing; the full-star term is ||mu(p)||
        p = random_explicit(rng, 3)
        assert restriction_mean_norm(p, 0.0) == 0.0
        from subcube_juntas.distributions import mean_vector
        assert restriction_mean_norm(p, 1.0) == pytest.approx(np.linalg.norm(mean_vector(p)))

    def test_restriction_norm_monte_carlo(self, rng):
        from subcube_juntas.distributions import mean_vector, restrict_exact
        p = random_explicit(rng, 3)
        sigma = 0.4
        est = []
        pts = ((np.arange(8)[:, None] >> np.arange(3)) & 1) * 2 - 1
        for _ in range(20000):
            x = pts[rng.choice(8, p=p.pmf)]
            stars = rng.random(3) < sigma
            rho = np.where(stars, 0, x).astype(np.int8)
            est.append(np.linalg.norm(mean_vector(restrict_exact(p, rho))) if stars.any() else 0.0)
        assert np.mean(est) == pytest.approx(restriction_mean_norm(p, sigma), abs=0.01)

    def test_implied_exponent(self):
        assert np.isnan(implied_exponent(0.0, 0.0, 4))
        assert implied_exponent(0.1, 0.0, 4) == float("inf")
        lhs, n = 0.1, 8
        rhs = lhs / np.log2(n / lhs) ** 2
        assert implied_exponent(lhs, rhs, n) == pytest.approx(2.0)


class TestProductBound:
    def test_fair(self):
        assert product_tv_lower_bound(ProductDist(np.full(5, 0.5))) == (0.0, 0.0, True)

    def test_single_coordinate(self):
        beta = 0.3
        b, tv, ok = product_tv_lower_bound(ProductDist([(1 + beta) / 2, 0.5, 0.5]))
        assert b <= 0 and ok
        assert tv == pytest.approx(beta / 2)

    def test_sixteen(self):
        p = ProductDist(np.full(16, 0.55))
        b, tv, ok = product_tv_lower_bound(p)
        assert b < 0 and ok
        b2, tv2, ok2 = product_tv_lower_bound(p, c1star=0.1)
        assert b2 == pytest.approx(0.01)
        assert tv2 == pytest.approx(0.16108964736627632, rel=1e-12)
        assert ok2

    def test_bound_formula(self):
        assert product_tv_bound([0.1] * 16, 0.56) == pytest.approx((0.125 - 0.56 / 4) * 0.1)


class TestSigmaMonotonicity:
    def test_uniform(self):
        assert sigma_monotonicity_check(uniform(3), 1 / 3, 1 / 6)

    def test_frozen_bit_strict(self):
        h = JuntaDist(2, (0,), [0.0, 1.0])
        assert sigma_monotonicity_check(h, 0.5, 0.25)
        assert restriction_mean_norm(h, 0.25) < restriction_mean_norm(h, 0.5)

    def test_equal_sigmas(self, rng):
        h = random_explicit(rng, 3)
        assert sigma_monotonicity_check(h, 0.2, 0.2)

    def test_invalid_pair(self, rng):
        with pytest.raises(ValueError):
            sigma_monotonicity_check(random_explicit(rng, 3), 0.2, 0.3)
