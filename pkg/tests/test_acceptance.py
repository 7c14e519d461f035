"""Acceptance checks, one test per criterion.

Each test prints a ``PASS``/``FAIL criterion N: ...`` line (also collected in
the terminal summary) and then asserts the criterion at its stated tolerance.
Scaled constants used by the Monte Carlo checks are spelled out next to each
check.
"""

import itertools
import math
import time
from fractions import Fraction

import numpy as np
import pytest

from subcube_juntas import junta_tester as jt
from subcube_juntas.cli import main as cli_main
from subcube_juntas.compression import compression_audit, random_almost_uniform, random_tree
from subcube_juntas.config import AlgoConfig, split_rng
from subcube_juntas.distributions import (
    ExplicitDist, JuntaDist, ProductDist, mean_vector, to_explicit, tv_distance, uniform,
)
from subcube_juntas.exact import (
    canonical_junta_routes, closest_junta_distance, distance_to_k_junta, product_tv_lower_bound,
    sigma_monotonicity_check, structural_audit,
)
from subcube_juntas.finder import find_relevant_variables, learn_junta
from subcube_juntas.hard_instances import (
    build_gadget, farness_certificate, lagrange_weights, moment_check, moments, parity_instance,
    sample_dno, sample_dyes,
)
from subcube_juntas.mean_tester import Verdict, gram_matrix, make_plan, robust_mean_test, z_statistic_exact
from subcube_juntas.oracle import CondOracle

from conftest import ACCEPTANCE_LINES

pytestmark = pytest.mark.acceptance


def verdict(capsys, number, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}"
    ACCEPTANCE_LINES.append(line)
    with capsys.disabled():
        print("\n" + line, flush=True)
    assert ok, line


def test_c01_gram_tensor_identity(capsys):
    rng = np.random.default_rng(101)
    t0 = time.perf_counter()
    mismatches = 0
    checks = 0
    for _ in range(1000):
        n, q = int(rng.integers(1, 5)), int(rng.integers(1, 4))
        X = rng.choice([-1, 1], size=(q, n)).astype(np.int64)
        Y = rng.choice([-1, 1], size=(q, n)).astype(np.int64)
        M = gram_matrix(X, Y)
        for r in range(3):
            TX = sum(_tensor_power(x, 2 ** r) for x in X)
            TY = sum(_tensor_power(y, 2 ** r) for y in Y)
            naive = Fraction(int(np.dot(TX, TY)), q * q)
            mismatches += naive != z_statistic_exact(M, r)
            checks += 1
    dt = time.perf_counter() - t0
    verdict(capsys, 1, mismatches == 0 and dt < 10,
            f"{checks} exact comparisons over 1000 sample sets, {mismatches} mismatches, {dt:.1f}s")


def _tensor_power(x, d):
    out = np.ones(1, dtype=np.int64)
    for _ in range(d):
        out = np.kron(out, x)
    return out


def test_c02_unbiasedness(capsys):
    rng = np.random.default_rng(202)
    draws, q = 100_000, 2
    worst = 0.0
    t0 = time.perf_counter()
    for _ in range(20):
        n = int(rng.integers(1, 9))
        p = ExplicitDist(n, rng.dirichlet(np.full(1 << n, 0.3)))
        exact = float(np.dot(mean_vector(p), mean_vector(p)))
        o = CondOracle(p, rng)
        S = o.draw(np.zeros(n, np.int8), draws * 2 * q).reshape(draws, 2 * q, n).astype(np.int64)
        z = (S[:, :q].sum(axis=1) * S[:, q:].sum(axis=1)).sum(axis=1) / q ** 2
        se = z.std(ddof=1) / math.sqrt(draws)
        worst = max(worst, abs(z.mean() - exact) / se)
    dt = time.perf_counter() - t0
    verdict(capsys, 2, worst <= 4 and dt < 60,
            f"20 explicit p (n<=8), 1e5 draws of Z^(0) (q={q}), worst deviation {worst:.2f} SE, {dt:.1f}s")


def test_c03_mean_tester_rates(capsys):
    cfg = AlgoConfig(mean_tester_c=50)
    plan = make_plan(64, 4, 0.5, cfg)
    rng = np.random.default_rng(303)
    t0 = time.perf_counter()
    uni = CondOracle(uniform(64), rng)
    far = CondOracle(ProductDist(np.full(64, 0.75)), rng)
    root = np.zeros(64, np.int8)
    ok_uni = sum(robust_mean_test(uni.draw(root, 2 * plan.q), plan) is Verdict.IS_JUNTA for _ in range(200))
    ok_far = sum(robust_mean_test(far.draw(root, 2 * plan.q), plan) is Verdict.NOT_JUNTA for _ in range(200))
    dt = time.perf_counter() - t0
    verdict(capsys, 3, 3 * ok_uni >= 400 and 3 * ok_far >= 400 and dt < 120,
            f"meanTesterC=50 (q={plan.q}, r0={plan.r0}): uniform IsJunta {ok_uni}/200, "
            f"biased NotJunta {ok_far}/200, {dt:.1f}s")


# -- criteria 4 and 5 share the finder runs ------------------------------------

PARITY_CFG = AlgoConfig(budget_constant_scale=0.05)
PARITY_DIAG_CFG = AlgoConfig(budget_constant_scale=0.05, sample_constant_scale=1, eps0_log_power=0)
EXACT_THRESH_CFG = AlgoConfig(budget_constant_scale=0.05, sample_constant_scale=1)
FULL_SCALE_CFG = AlgoConfig(eps0_log_power=0)


@pytest.fixture(scope="module")
def finder_runs():
    """All finder runs of criterion 4 as ``(label, k, report, truth)``."""
    runs = []
    t0 = time.perf_counter()
    par = parity_instance(8, [0, 1, 2], 1 / 8)
    # parity at the literal scale 0.05; stop once the 2/3 outcome is decided
    hits = 0
    for t in range(100):
        r = find_relevant_variables(CondOracle(par, split_rng(4, t), "error"), 3, 1 / 8, PARITY_CFG)
        runs.append(("parity", 3, r, (0, 1, 2)))
        hits += r.J == (0, 1, 2)
        misses = len([x for x in runs if x[0] == "parity"]) - hits
        if hits >= 67 or misses > 33:
            break
    for t in range(20):
        r = find_relevant_variables(CondOracle(par, split_rng(41, t), "error"), 3, 1 / 8, PARITY_DIAG_CFG)
        runs.append(("parity-diag", 3, r, (0, 1, 2)))
    specs = [("frozen", JuntaDist(8, (4,), [0.0, 1.0]), 1, 500, EXACT_THRESH_CFG),
             ("pair", JuntaDist(8, (1, 5), [0.1, 0.2, 0.3, 0.4]), 2, 100, EXACT_THRESH_CFG),
             ("frozen-full", JuntaDist(8, (4,), [0.0, 1.0]), 1, 20, FULL_SCALE_CFG)]
    for s, (label, p, k, trials, cfg) in enumerate(specs):
        for t in range(trials):
            r = find_relevant_variables(CondOracle(p, split_rng(400 + s, t), "error"), k, 0.25, cfg)
            runs.append((label, k, r, p.vars))
    return runs, time.perf_counter() - t0


def test_c04_finder(finder_runs, capsys):
    runs, dt = finder_runs
    parity = [r for lab, _, r, _ in runs if lab == "parity"]
    par_hits = sum(r.J == (0, 1, 2) for r in parity)
    par_ok = 3 * par_hits >= 2 * 100
    diag = [r for lab, _, r, _ in runs if lab == "parity-diag"]
    diag_hits = sum(r.J == (0, 1, 2) for r in diag)
    junta = [(lab, r, K) for lab, _, r, K in runs if lab in ("frozen", "pair", "frozen-full")]
    outside = sum(bool(set(r.J) - set(K)) for _, r, K in junta)
    exact_trials = sum(lab != "frozen-full" for lab, _, _ in junta)
    found = sum(r.J == K for _, r, K in junta)
    detail = (f"parity at scale 0.05: J=S in {par_hits}/{len(parity)} runs "
              f"(stopped once the 100-trial outcome was decided; need 67/100); "
              f"[info: s_a scale 1, eps0 log power 0 gives {diag_hits}/{len(diag)}]; "
              f"junta specs with exact thresholds: {outside} runs with variables outside K over "
              f"{exact_trials} trials (+{len(junta) - exact_trials} at scale 1), J=K in {found}/{len(junta)}; "
              f"{dt:.0f}s")
    verdict(capsys, 4, par_ok and outside == 0 and exact_trials >= 500 and dt < 300, detail)


def test_c05_budget_accounting(finder_runs, capsys):
    runs, _ = finder_runs
    bad = [(lab, r.B, k) for lab, k, r, _ in runs if r.B > 8 * k]
    worst = max(r.B / k for _, k, r, _ in runs)
    verdict(capsys, 5, not bad, f"B <= 8k on {len(runs) - len(bad)}/{len(runs)} finder runs, max B/k = {worst:.2f}")


def test_c06_query_scaling(capsys):
    cfg = AlgoConfig(budget_constant_scale=0.05, sample_constant_scale=1, eps0_log_power=0)
    ns = [8, 16, 32, 64]
    means = []
    t0 = time.perf_counter()
    for n in ns:
        p = JuntaDist(n, (0, 1), [3 / 8, 1 / 8, 1 / 8, 3 / 8])
        qs = [find_relevant_variables(CondOracle(p, split_rng(600 + n, t)), 2, 1 / 8, cfg).queries
              for t in range(20)]
        means.append(float(np.mean(qs)))
    x = np.log2(ns)
    a, c = np.polyfit(x, means, 1)
    rel = np.abs(np.polyval([a, c], x) - means) / np.asarray(means)
    dt = time.perf_counter() - t0
    verdict(capsys, 6, rel.max() <= 0.2 and a > 0 and dt < 600,
            f"mean queries {[f'{m:.4g}' for m in means]} at n={ns}; fit a={a:.4g}, c={c:.4g}, "
            f"max relative residual {rel.max():.3%} (20 trials per n, scale 0.05, s_a scale 1), {dt:.0f}s")


def test_c07_tester(capsys):
    cfg = AlgoConfig(budget_constant_scale=0.01, sample_constant_scale=1, eps0_log_power=0,
                     c_exponent=0, tester_scale=0.05)
    eps = 0.25
    t0 = time.perf_counter()
    par = parity_instance(8, [0, 1, 2], 1 / 8)
    dist = distance_to_k_junta(par, 2)
    juntas = [JuntaDist(8, (0, 1), [3 / 8, 1 / 8, 1 / 8, 3 / 8]), JuntaDist(8, (2, 5), [0.1, 0.2, 0.3, 0.4])]
    accepts, identity_ok = [], True
    for s, p in enumerate(juntas):
        acc = 0
        for t in range(50):
            o = CondOracle(p, split_rng(700 + s, t), "error")
            rep = jt.test_junta(o, 2, eps, cfg)
            acc += rep.verdict == "Accept"
            identity_ok &= rep.queries == o.queries == jt.expected_queries(rep, 8, 2, eps, cfg)
        accepts.append(acc)
    rej = 0
    for t in range(50):
        o = CondOracle(par, split_rng(710, t), "error")
        rep = jt.test_junta(o, 2, eps, cfg)
        rej += rep.verdict == "Reject"
        identity_ok &= rep.queries == o.queries == jt.expected_queries(rep, 8, 2, eps, cfg)
    dt = time.perf_counter() - t0
    plan = jt.make_test_plan(8, 2, eps, cfg)
    ok = all(3 * a >= 100 for a in accepts) and 3 * rej >= 100 and dist >= 0.25 - 1e-12 and identity_ok
    verdict(capsys, 7, ok and dt < 900,
            f"testerScale=0.05, finder scale 0.01, eps=1/4 (L={plan.L}, R={plan.R}): "
            f"junta Accept {accepts[0]}/50 and {accepts[1]}/50; 3-parity Reject {rej}/50 "
            f"(exact 2-junta distance {dist:.4f}); query identity {'exact' if identity_ok else 'broken'}; {dt:.0f}s")


def test_c08_learner(capsys):
    rng = np.random.default_rng(808)
    cfg = AlgoConfig(learn_constant=8)
    good = 0
    t0 = time.perf_counter()
    for _ in range(200):
        n = int(rng.integers(4, 9))
        size = int(rng.integers(1, 5))
        K = tuple(sorted(rng.choice(n, size=size, replace=False).tolist()))
        p = to_explicit(JuntaDist(n, K, rng.dirichlet(np.ones(1 << size))))
        out = learn_junta(CondOracle(p, rng), K, 0.1, cfg)
        good += tv_distance(out, p) <= 0.1
    dt = time.perf_counter() - t0
    verdict(capsys, 8, good >= 180 and dt < 60,
            f"learnConstant=8, eps=0.1: within eps in {good}/200 explicit junta trials (|J|<=4), {dt:.1f}s")


def _cramer(ell):
    """Vandermonde solution by Cramer's rule with exact determinants."""
    alpha = [Fraction(j ** 3) for j in range(1, ell + 1)]
    V = [[a ** k for a in alpha] for k in range(ell)]
    rhs = [Fraction(1)] + [Fraction(0)] * (ell - 1)
    D = _det(V)
    out = []
    for i in range(ell):
        Vi = [row[:i] + [rhs[k]] + row[i + 1:] for k, row in enumerate(V)]
        out.append(_det(Vi) / D)
    return out


def _det(A):
    A = [row[:] for row in A]
    m = len(A)
    det = Fraction(1)
    for c in range(m):
        piv = next(r for r in range(c, m) if A[r][c] != 0)
        if piv != c:
            A[c], A[piv] = A[piv], A[c]
            det = -det
        det *= A[c][c]
        for r in range(c + 1, m):
            f = A[r][c] / A[c][c]
            A[r] = [x - f * y for x, y in zip(A[r], A[c])]
    return det


def test_c09_gadget(capsys):
    t0 = time.perf_counter()
    rel = 0.0
    sums_ok = True
    for ell in range(1, 13):
        z = lagrange_weights(ell)
        ref = _cramer(ell)
        rel = max(rel, max(float(abs(a - b) / abs(b)) for a, b in zip(z, ref)))
        sums_ok &= sum(z) == 1
    l1 = max(sum(abs(float(v)) for v in lagrange_weights(ell)) for ell in range(1, 21))
    disc = max(moment_check(build_gadget(1 << 12, 0.01, ell=ell), ell - 1) for ell in range(2, 9))
    eg, ed = moments(build_gadget(64, 0.01, ell=2), 2)
    gap = ed - eg
    dt = time.perf_counter() - t0
    ok = rel <= 1e-9 and sums_ok and l1 <= 10 and disc <= 1e-9 and gap == Fraction(56, 9) and dt < 5
    verdict(capsys, 9, ok,
            f"max rel. error vs Cramer {rel:.1e} (ell<=12), sum z = 1 {sums_ok}, max ||z||_1 {l1:.4f} (ell<=20), "
            f"moment discrepancy {disc:.1e} (k<=ell-1, ell<=8), ell=2 gap at k=2 {gap}, {dt:.2f}s")


def test_c10_yes_no_instances(capsys):
    n, eps = 256, 0.05
    g = build_gadget(n, eps)
    rng = np.random.default_rng(1010)
    t0 = time.perf_counter()
    sparse = sum(int((sample_dyes(g, n, rng).bias != 0.5).sum()) <= n // 2 for _ in range(200))
    cap_ok = True
    certs = []
    for _ in range(200):
        try:
            p = sample_dno(g, n, rng)
        except AssertionError:
            cap_ok = False
            continue
        if len(certs) < 50:
            certs.append(farness_certificate(p))
    dt = time.perf_counter() - t0
    ok = sparse >= 198 and cap_ok and len(certs) == 50 and min(certs) > 0 and dt < 60
    verdict(capsys, 10, ok,
            f"ell={g.ell}, tau={g.tau:.4f}: D_yes sparse in {sparse}/200, D_no bias cap "
            f"{'held' if cap_ok else 'violated'} on 200 draws, certificates min {min(certs):.3e} "
            f"max {max(certs):.3e} over 50, {dt:.1f}s")


def test_c11_structural_audit(capsys):
    rng = np.random.default_rng(1111)
    t0 = time.perf_counter()
    done = rejected = 0
    rhs_ok = True
    worst_c = -math.inf
    route_gap = 0.0
    while done < 200:
        n = int(rng.integers(2, 6))
        p = ExplicitDist(n, rng.dirichlet(np.full(1 << n, 0.5)))
        J = tuple(i for i in range(n) if rng.random() < 0.3)
        if closest_junta_distance(p, J) < 0.05:
            rejected += 1
            continue
        rep = structural_audit(p, J)
        rhs_ok &= rep.rhs_sum > 0
        worst_c = max(worst_c, rep.implied_c)
        a, b = canonical_junta_routes(p, J)
        route_gap = max(route_gap, abs(a - b))
        done += 1
    dt = time.perf_counter() - t0
    verdict(capsys, 11, rhs_ok and worst_c <= 6 and route_gap <= 1e-10 and dt < 300,
            f"200 explicit p (n<=5, dist>=0.05; {rejected} redrawn): RHS>0 {rhs_ok}, max implied c "
            f"{worst_c:.3f}, canonical route gap {route_gap:.1e}, {dt:.1f}s")


def test_c12_product_bound(capsys):
    rng = np.random.default_rng(1212)
    t0 = time.perf_counter()
    holds = 0
    slack = math.inf
    for _ in range(200):
        n = int(rng.integers(1, 17))
        p = ProductDist(rng.uniform(0.4, 0.6, size=n))
        bound, exact, ok = product_tv_lower_bound(p, 0.56)
        holds += ok
        slack = min(slack, exact - bound)
    dt = time.perf_counter() - t0
    verdict(capsys, 12, holds == 200 and dt < 120,
            f"c1*=0.56, c2*=1-1/e: bound holds on {holds}/200 products (n<=16), min slack {slack:.3e}, {dt:.1f}s")


def test_c13_compression(capsys):
    rng = np.random.default_rng(1313)
    eps, delta = 0.05, 0.25
    t0 = time.perf_counter()
    tv_ok = rej_ok = emp_ok = 0
    worst_z = 0.0
    for i in range(100):
        p = random_almost_uniform(2, eps, rng)
        tree = random_tree(2, 2, int(rng.integers(2 ** 63)))
        a = compression_audit(p, tree, delta, 10_000, rng, eps=eps)
        tv_ok += a.tv_exact <= delta
        rej_ok += a.reject_prob_exact <= 1 - delta / 2
        z = abs(a.reject_rate_empirical - a.reject_prob_exact) / a.reject_sigma()
        worst_z = max(worst_z, z)
        emp_ok += z <= 3
    dt = time.perf_counter() - t0
    verdict(capsys, 13, tv_ok == rej_ok == emp_ok == 100 and dt < 120,
            f"100 (p, tree) with n=2, q=2, eps=0.05, delta=0.25: tv<=delta {tv_ok}/100, "
            f"Pr[reject]<=1-delta/2 {rej_ok}/100, empirical within 3 sigma {emp_ok}/100 "
            f"(worst {worst_z:.2f} sigma at 1e4 runs), {dt:.1f}s")


def test_c14_sigma_monotonicity(capsys):
    rng = np.random.default_rng(1414)
    t0 = time.perf_counter()
    holds = pairs = 0
    for _ in range(500):
        m = int(rng.integers(1, 6))
        h = ExplicitDist(m, rng.dirichlet(np.full(1 << m, 0.5)))
        grid = np.linspace(0.0, 1.0 / m, 5)
        for s1, s2 in itertools.product(grid, grid):
            if s2 <= s1:
                pairs += 1
                holds += sigma_monotonicity_check(h, s1, s2)
    dt = time.perf_counter() - t0
    verdict(capsys, 14, holds == pairs and dt < 60,
            f"500 explicit h (m<=5), {holds}/{pairs} (sigma1, sigma2) grid pairs monotone, {dt:.1f}s")


def test_c15_cli_determinism(tmp_path, capsys):
    inst = tmp_path / "parity.json"
    junta = tmp_path / "junta.json"
    desk = ["--scale", "0.05", "--sample-scale", "1", "--eps0-log-power", "0"]
    commands = {
        "gen-parity": ["gen", "--kind", "parity", "--n", "8", "--vars", "1,2,3", "--eps", "0.125"],
        "gen-boolean": ["gen", "--kind", "boolean-pmf", "--k", "3", "--n", "6"],
        "gen-dyes": ["gen", "--kind", "dyes", "--n", "256"],
        "gen-dno": ["gen", "--kind", "dno", "--n", "256"],
        "gen-junta": ["gen", "--kind", "junta", "--n", "8", "--vars", "2,6"],
        "gen-product": ["gen", "--kind", "product", "--n", "6"],
        "gen-explicit": ["gen", "--kind", "explicit", "--n", "4"],
        "gen-uniform": ["gen", "--kind", "uniform", "--n", "4"],
        "find": ["find", "--instance", str(inst), "--k", "3", "--eps", "0.125", "--trials", "3"] + desk,
        "learn": ["learn", "--instance", str(junta), "--eps", "0.1", "--trials", "5", "--learn-constant", "8"],
        "test": ["test", "--instance", str(inst), "--k", "2", "--eps", "0.25", "--trials", "2", "--scale", "0.01",
                 "--sample-scale", "1", "--eps0-log-power", "0", "--c-exponent", "0", "--tester-scale", "0.05"],
        "meantest": ["meantest", "--instance", str(junta), "--k", "2", "--eps", "0.5", "--trials", "5",
                     "--mean-tester-c", "50"],
        "audit-structural": ["audit", "structural", "--n", "4", "--random", "10"],
        "audit-product": ["audit", "product", "--n", "10", "--random", "10"],
        "audit-monotonicity": ["audit", "monotonicity", "--n", "3", "--random", "10"],
        "compress-audit": ["compress-audit", "--random", "3", "--trials", "500"],
    }
    assert cli_main(commands["gen-parity"] + ["--seed", "7", "--output", str(inst)]) == 0
    assert cli_main(commands["gen-junta"] + ["--seed", "7", "--output", str(junta)]) == 0
    t0 = time.perf_counter()
    same = []
    for name, argv in commands.items():
        outs = []
        for rep in range(2):
            path = tmp_path / f"{name}-{rep}.out"
            code = cli_main(argv + ["--seed", "7", "--output", str(path)])
            outs.append((code, path.read_bytes()))
        same.append(outs[0] == outs[1] and outs[0][0] == 0 and len(outs[0][1]) > 0)
    dt = time.perf_counter() - t0
    bad = [n for n, s in zip(commands, same) if not s]
    verdict(capsys, 15, not bad,
            f"{sum(same)}/{len(same)} subcommand invocations byte-identical across reruns"
            + (f" (differ: {', '.join(bad)})" if bad else "") + f", {dt:.1f}s")
