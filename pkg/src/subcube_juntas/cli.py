"""Command-line harness: instance generation, algorithm trials and audits.

Every subcommand is deterministic given ``--seed``; trial ``t`` uses the
random stream ``split_rng(seed, t)`` so ``--jobs`` never changes the output.
Exit codes: 0 success, 2 invalid configuration, 3 oracle error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from functools import partial

import numpy as np

from .compression import compression_audit, random_almost_uniform, random_tree
from .config import AlgoConfig, split_rng
from .distributions import (
    ExplicitDist,
    JuntaDist,
    ProductDist,
    ZeroMassError,
    dump_instance,
    load_instance,
    relevant_coordinates,
    tv_distance,
)
from .exact import product_tv_lower_bound, sigma_monotonicity_check, structural_audit
from .finder import find_relevant_variables, learn_junta
from .hard_instances import (
    build_gadget,
    parity_instance,
    pmf_instance_from_boolean,
    random_good_truth_table,
    sample_dno,
    sample_dyes,
)
from .junta_tester import test_junta
from .mean_tester import make_plan, robust_mean_test
from .oracle import CondOracle

__all__ = ["main", "build_parser"]

SCHEMA_VERSION = 1

# flag dest -> AlgoConfig field
_CFG_FLAGS = {
    "scale": "budget_constant_scale",
    "sample_scale": "sample_constant_scale",
    "eps0_log_power": "eps0_log_power",
    "tester_scale": "tester_scale",
    "r_constant": "r_constant",
    "mean_tester_c": "mean_tester_c",
    "mean_tester_q": "mean_tester_q",
    "c_exponent": "c_exponent",
    "c1star": "c1_star",
    "learn_constant": "learn_constant",
    "zeta": "zeta",
    "policy": "unsupported_policy",
}

_DEFAULTS = {"seed": 0, "trials": 1, "jobs": 1, "random": 1,
             "delta": 0.25, "depth": 2, "bias_lo": 0.4, "bias_hi": 0.6}


class ConfigError(ValueError):
    pass


def _int_list(text):
    if text is None or text == "":
        return []
    if isinstance(text, (list, tuple)):
        return [int(v) for v in text]
    return [int(v) for v in str(text).split(",") if v.strip()]


def _float_list(text):
    if text is None:
        return None
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    return [float(v) for v in str(text).split(",") if v.strip()]


def _one_based(J):
    return tuple(int(v) + 1 for v in J)


def _fmt(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (tuple, list)):
        return " ".join(str(int(x)) for x in v)
    return str(v)


def _add_common(p: argparse.ArgumentParser, cfg_flags: bool = True):
    p.add_argument("--config", help="JSON file supplying any flag; explicit flags override it")
    p.add_argument("--seed", type=int)
    p.add_argument("--output", help="output path (default: stdout)")
    if cfg_flags:
        p.add_argument("--trials", type=int)
        p.add_argument("--jobs", type=int)
        p.add_argument("--scale", type=float, help="constant scale for the finder's t_a, s_a, eps0")
        p.add_argument("--sample-scale", type=float, help="separate scale for s_a only")
        p.add_argument("--eps0-log-power", type=float)
        p.add_argument("--tester-scale", type=float)
        p.add_argument("--r-constant", type=float)
        p.add_argument("--mean-tester-c", type=float)
        p.add_argument("--mean-tester-q", type=int)
        p.add_argument("--c-exponent", type=float)
        p.add_argument("--c1star", type=float)
        p.add_argument("--learn-constant", type=float)
        p.add_argument("--zeta", type=float)
        p.add_argument("--policy", choices=["uniform", "error"])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="subcube-juntas", allow_abbrev=False,
                                     description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", allow_abbrev=False, help="emit an instance as JSON")
    _add_common(g, cfg_flags=False)
    g.add_argument("--kind", required=True,
                   choices=["parity", "boolean-pmf", "dyes", "dno", "junta", "product", "explicit", "uniform"])
    g.add_argument("--n", type=int)
    g.add_argument("--k", type=int)
    g.add_argument("--vars", help="1-based comma-separated variables")
    g.add_argument("--eps", type=float)
    g.add_argument("--table", help="comma-separated 0/1 truth table (boolean-pmf)")
    g.add_argument("--inner", help="comma-separated inner pmf (junta)")
    g.add_argument("--bias", help="comma-separated biases (product)")

    for name, helptext in [("find", "relevant-variable finder trials"),
                           ("learn", "junta learner trials"),
                           ("test", "junta tester trials"),
                           ("meantest", "robust mean tester trials")]:
        s = sub.add_parser(name, allow_abbrev=False, help=helptext)
        _add_common(s)
        s.add_argument("--instance", help="instance JSON path")
        s.add_argument("--k", type=int)
        s.add_argument("--eps", type=float)
        if name == "learn":
            s.add_argument("--vars", help="1-based variables to learn over (default: true relevant set)")

    a = sub.add_parser("audit", allow_abbrev=False, help="exact audits")
    a.add_argument("kind", choices=["structural", "product", "monotonicity"])
    _add_common(a)
    a.add_argument("--n", type=int)
    a.add_argument("--random", type=int, help="number of random instances")
    a.add_argument("--vars", help="1-based set J for the structural audit (default: empty)")
    a.add_argument("--bias-lo", type=float)
    a.add_argument("--bias-hi", type=float)

    c = sub.add_parser("compress-audit", allow_abbrev=False, help="SampleWalk audits on random trees")
    _add_common(c)
    c.add_argument("--n", type=int)
    c.add_argument("--depth", type=int)
    c.add_argument("--eps", type=float)
    c.add_argument("--delta", type=float)
    c.add_argument("--random", type=int, help="number of random (p, tree) instances")
    return parser


def _resolve(args: argparse.Namespace) -> dict:
    """Merge flags over the config file over defaults."""
    opts = dict(vars(args))
    if args.config:
        try:
            with open(args.config) as fh:
                file_cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        if not isinstance(file_cfg, dict):
            raise ConfigError("config file must hold a JSON object")
        for key, value in file_cfg.items():
            dest = key.replace("-", "_")
            if dest not in opts:
                raise ConfigError(f"unknown config key {key!r}")
            if opts[dest] is None:
                opts[dest] = value
    for key, value in _DEFAULTS.items():
        if opts.get(key) is None and key in opts:
            opts[key] = value
    if opts.get("trials") is not None and opts["trials"] < 1:
        raise ConfigError("trials must be >= 1")
    return opts


def _algo_config(opts: dict) -> AlgoConfig:
    fields = {f: opts[d] for d, f in _CFG_FLAGS.items() if opts.get(d) is not None}
    try:
        return AlgoConfig(**fields)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def _instance(opts: dict):
    if not opts.get("instance"):
        raise ConfigError("--instance is required")
    try:
        return load_instance(opts["instance"])
    except (OSError, KeyError, TypeError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot load instance: {exc}") from exc


def _write_csv(opts: dict, name: str, header: list[str], rows: list[list]) -> None:
    buf = io.StringIO()
    buf.write(f"#schema={name}/v{SCHEMA_VERSION}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    _emit(opts, buf.getvalue())


def _emit(opts: dict, text: str) -> None:
    if opts.get("output"):
        with open(opts["output"], "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _map(opts: dict, fn, items):
    jobs = int(opts.get("jobs") or 1)
    if jobs <= 1:
        return [fn(i) for i in items]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(fn, items))


# --- gen ---------------------------------------------------------------------

def _gen(opts: dict) -> int:
    rng = split_rng(opts["seed"], 0)
    kind, n = opts["kind"], opts.get("n")
    vars0 = [v - 1 for v in _int_list(opts.get("vars"))]
    eps = opts.get("eps")
    if kind not in ("product",) and n is None and kind != "boolean-pmf":
        raise ConfigError("--n is required")
    if kind == "parity":
        p = parity_instance(n, vars0, 0.125 if eps is None else eps)
    elif kind == "boolean-pmf":
        table = _int_list(opts.get("table"))
        if table:
            f = np.array(table)
        else:
            if opts.get("k") is None:
                raise ConfigError("--k or --table is required")
            f = random_good_truth_table(opts["k"], rng)
        k = int(f.shape[0]).bit_length() - 1
        p = pmf_instance_from_boolean(f, 1.0 / 120 if eps is None else eps,
                                      n if n is not None else k, vars0 or None)
    elif kind in ("dyes", "dno"):
        g = build_gadget(n, 0.05 if eps is None else eps)
        p = (sample_dyes if kind == "dyes" else sample_dno)(g, n, rng)
    elif kind == "junta":
        inner = _float_list(opts.get("inner"))
        if inner is None:
            inner = rng.dirichlet(np.ones(1 << len(vars0)))
        p = JuntaDist(n, tuple(sorted(vars0)), inner)
    elif kind == "product":
        bias = _float_list(opts.get("bias"))
        if bias is None:
            if n is None:
                raise ConfigError("--n or --bias is required")
            bias = rng.uniform(0.0, 1.0, size=n)
        p = ProductDist(bias)
    elif kind == "explicit":
        p = ExplicitDist(n, rng.dirichlet(np.ones(1 << n)))
    else:
        p = JuntaDist(n, (), [1.0])
    _emit(opts, json.dumps(dump_instance(p), sort_keys=True) + "\n")
    return 0


# --- trial workers (top level so they pickle) --------------------------------

def _find_trial(ctx, t):
    p, cfg, k, eps, seed, truth = ctx
    o = CondOracle(p, split_rng(seed, t), cfg.unsupported_policy, cfg.exact_cap)
    r = find_relevant_variables(o, k, eps, cfg)
    return [t, seed, _one_based(r.J), r.queries, r.B, r.J == truth]


def _learn_trial(ctx, t):
    p, cfg, J, eps, seed = ctx
    o = CondOracle(p, split_rng(seed, t), cfg.unsupported_policy, cfg.exact_cap)
    out = learn_junta(o, J, eps, cfg)
    tv = tv_distance(out, p) if p.n <= cfg.exact_cap else float("nan")
    return [t, seed, _one_based(J), o.queries, tv, tv <= eps]


def _test_trial(ctx, t):
    p, cfg, k, eps, seed = ctx
    o = CondOracle(p, split_rng(seed, t), cfg.unsupported_policy, cfg.exact_cap)
    r = test_junta(o, k, eps, cfg)
    return [t, seed, r.verdict, _one_based(r.J), r.finder_queries, r.queries, r.mean_tests]


def _meantest_trial(ctx, t):
    p, cfg, k, eps, seed = ctx
    o = CondOracle(p, split_rng(seed, t), cfg.unsupported_policy, cfg.exact_cap)
    plan = make_plan(p.n, k, eps, cfg)
    v = robust_mean_test(lambda count: o.draw(np.zeros(p.n, np.int8), count), plan)
    return [t, seed, v.value, plan.q, o.queries]


def _structural_item(ctx, i):
    n, J, c, seed = ctx
    rng = split_rng(seed, i)
    p = ExplicitDist(n, rng.dirichlet(np.ones(1 << n)))
    r = structural_audit(p, J, c)
    return [i, n, _one_based(J), r.lhs, r.rhs_sum, r.implied_c, r.bound_holds]


def _product_item(ctx, i):
    n, lo, hi, c1, seed = ctx
    rng = split_rng(seed, i)
    p = ProductDist(rng.uniform(lo, hi, size=n))
    bound, exact, holds = product_tv_lower_bound(p, c1)
    return [i, n, bound, exact, holds]


def _monotonicity_item(ctx, i):
    n, seed = ctx
    rng = split_rng(seed, i)
    h = ExplicitDist(n, rng.dirichlet(np.ones(1 << n)))
    grid = np.linspace(0.0, 1.0 / n, 5)
    ok = all(sigma_monotonicity_check(h, s1, s2) for s1 in grid for s2 in grid if s2 <= s1)
    return [i, n, len(grid), ok]


def _compress_item(ctx, i):
    n, depth, eps, delta, trials, zeta, seed = ctx
    rng = split_rng(seed, i)
    p = random_almost_uniform(n, eps, rng)
    tree = random_tree(n, depth, int(rng.integers(2 ** 63)))
    a = compression_audit(p, tree, delta, trials, rng, eps=eps, zeta=zeta)
    within = abs(a.reject_rate_empirical - a.reject_prob_exact) <= 3 * a.reject_sigma() + 1e-12
    return [i, a.tv_exact, a.reject_prob_exact, a.reject_rate_empirical, within, a.hypothesis_ok,
            a.tv_exact <= delta + 1e-12, a.reject_prob_exact <= 1 - delta / 2 + 1e-12]


def _run(opts: dict) -> int:
    cmd = opts["command"]
    if cmd == "gen":
        return _gen(opts)
    cfg = _algo_config(opts)
    seed = int(opts["seed"])
    if cmd in ("find", "learn", "test", "meantest"):
        if opts.get("eps") is None:
            raise ConfigError("--eps is required")
        if cmd != "learn" and opts.get("k") is None:
            raise ConfigError("--k is required")
    trials = range(int(opts["trials"]))
    if cmd == "find":
        p = _instance(opts)
        ctx = (p, cfg, opts["k"], opts["eps"], seed, relevant_coordinates(p))
        rows = _map(opts, partial(_find_trial, ctx), trials)
        _write_csv(opts, "find", ["trial", "seed", "J", "queries", "B", "correct"], rows)
    elif cmd == "learn":
        p = _instance(opts)
        J = tuple(v - 1 for v in _int_list(opts.get("vars"))) or relevant_coordinates(p)
        rows = _map(opts, partial(_learn_trial, (p, cfg, J, opts["eps"], seed)), trials)
        _write_csv(opts, "learn", ["trial", "seed", "J", "samples", "tv", "within_eps"], rows)
    elif cmd == "test":
        p = _instance(opts)
        rows = _map(opts, partial(_test_trial, (p, cfg, opts["k"], opts["eps"], seed)), trials)
        _write_csv(opts, "test", ["trial", "seed", "verdict", "J", "finder_queries", "queries",
                                  "mean_tests"], rows)
    elif cmd == "meantest":
        p = _instance(opts)
        rows = _map(opts, partial(_meantest_trial, (p, cfg, opts["k"], opts["eps"], seed)), trials)
        _write_csv(opts, "meantest", ["trial", "seed", "verdict", "q", "queries"], rows)
    elif cmd == "audit":
        count = range(int(opts["random"]))
        n = opts.get("n")
        if n is None:
            raise ConfigError("--n is required")
        if opts["kind"] == "structural":
            J = tuple(v - 1 for v in _int_list(opts.get("vars")))
            rows = _map(opts, partial(_structural_item, (n, J, cfg.c_exponent, seed)), count)
            _write_csv(opts, "audit-structural",
                       ["index", "n", "J", "lhs", "rhs_sum", "implied_c", "bound_holds"], rows)
        elif opts["kind"] == "product":
            ctx = (n, opts["bias_lo"], opts["bias_hi"], cfg.c1_star, seed)
            rows = _map(opts, partial(_product_item, ctx), count)
            _write_csv(opts, "audit-product", ["index", "n", "bound", "exact_tv", "holds"], rows)
        else:
            rows = _map(opts, partial(_monotonicity_item, (n, seed)), count)
            _write_csv(opts, "audit-monotonicity", ["index", "m", "grid_points", "holds"], rows)
    elif cmd == "compress-audit":
        n = opts.get("n") or 2
        ctx = (n, opts["depth"], 0.05 if opts.get("eps") is None else opts["eps"], opts["delta"],
               int(opts["trials"]), cfg.zeta, seed)
        rows = _map(opts, partial(_compress_item, ctx), range(int(opts["random"])))
        _write_csv(opts, "compress-audit",
                   ["index", "tv_exact", "reject_exact", "reject_empirical", "within_3sigma",
                    "hypothesis_ok", "tv_ok", "reject_ok"], rows)
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    try:
        opts = _resolve(args)
        if opts.get("k") is not None and opts["k"] < 0:
            raise ConfigError("k must be nonnegative")
        return _run(opts)
    except ZeroMassError as exc:
        print(f"oracle error: {exc}", file=sys.stderr)
        return 3
    except (ConfigError, ValueError) as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
