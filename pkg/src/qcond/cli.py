"""Command-line entry point ``qcond``.

Exit codes: 0 when every check passes, 1 when a check fails, 2 on usage or
input errors.
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import appendix, config, spectrum
from .compare import REGIMES, CompareParams, qcompare, regime_instance, regime_of, violates_contract
from .distributions import Distribution, bilevel, load_distribution
from .errors import DegenerateRatio, QCondError
from .harness import ExperimentConfig, fit_loglog_slope, mean_queries_by_epsilon, run_sweep
from .oracle import QueryLedger, get_backend
from .testers import EQUAL, FAR, balance_test, deutsch_jozsa_demo, load_table, uniformity_test

QUANTUM_BRACKET = (0.55, 1.45)
CLASSICAL_BRACKET = (1.55, 2.5)


class UsageError(Exception):
    pass


def _writer(path: Path | None):
    if path is None:
        return sys.stdout, False
    path.parent.mkdir(parents=True, exist_ok=True)
    return open(path, "w", newline=""), True


def _emit(rows: list[list], header: list[str], path: Path | None) -> None:
    fh, close = _writer(path)
    try:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)
    finally:
        if close:
            fh.close()


def _out_dir(args) -> Path:
    out = Path(args.out) if args.out else Path(".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _verdict_rate(verdicts: list[str], expect: str | None) -> bool:
    if expect is None:
        return True
    return verdicts.count(expect) / len(verdicts) >= 2 / 3


def _summarize(verdicts: list[str], queries: list[int], expect: str | None) -> bool:
    ok = _verdict_rate(verdicts, expect)
    print(
        f"Equal: {verdicts.count(EQUAL)}  Far: {verdicts.count(FAR)}  "
        f"mean queries: {np.mean(queries):.1f}"
        + ("" if expect is None else f"  expected {expect}: {'PASS' if ok else 'FAIL'}"),
        file=sys.stderr,
    )
    return ok


def cmd_verify_appendix(args) -> bool:
    rng = np.random.default_rng(args.seed)
    rows = []

    def add(name, key, value, ref, passed):
        rows.append([name, key, value, ref, bool(passed)])

    add("en_closed_form_exact", 2, appendix.en_closed_form(2), 0.5, appendix.en_closed_form(2) == 0.5)
    for n in range(2, args.n_max + 1, 2):
        closed = appendix.en_closed_form(n)
        mean, se = appendix.en_monte_carlo(n, args.mc_samples, rng)
        add("en_monte_carlo", n, mean, closed, abs(mean - closed) <= 3 * se)
    ratios = [appendix.en_closed_form(n) * 2 * math.sqrt(n) for n in range(2, 10001, 2)]
    add("en_lower_bound_min_ratio", 10000, min(ratios), 1.0, min(ratios) > 1)
    e1000, asym = appendix.en_closed_form(1000), math.sqrt(2 / math.pi) / math.sqrt(1000)
    add("en_asymptotic", 1000, e1000, asym, abs(e1000 / asym - 1) <= 0.02)

    for n in range(2, 11, 2):
        worst_low, worst_high = math.inf, 0.0
        for _ in range(200):
            d = rng.standard_normal(n)
            d -= d.mean()
            value = appendix.md_greedy(d)[1]
            worst_low = min(worst_low, value / (np.abs(d).sum() / 2))
            if n <= 8:
                worst_high = max(worst_high, value / appendix.brute_force_md(d))
        add("md_greedy_over_half_eta", n, worst_low, 1.0, worst_low >= 1 - 1e-12)
        if n <= 8:
            add("md_greedy_over_brute_force", n, worst_high, 1.0, worst_high <= 1 + 1e-12)

    for m in range(21):
        r = appendix.beta_block_check(m)
        add("beta_block", m, r["lhs"], r["rhs"], r["passed"])
    for pts in ((0.0, 0.5, 1.0), (0.0, 0.3, 0.7, 1.2)):
        dd = appendix.divided_difference(pts, math.exp)
        hg, se = appendix.hermite_genocchi_mc(pts, np.exp, args.mc_samples * 10, rng)
        add("divided_difference_exp", len(pts), dd, hg, abs(dd - hg) <= 3 * se)

    _emit(rows, ["check_name", "n_or_m", "value", "bound_or_oracle", "pass"], _out_dir(args) / "appendix_report.csv")
    failed = [r for r in rows if not r[4]]
    print(f"{len(rows) - len(failed)}/{len(rows)} appendix checks passed", file=sys.stderr)
    return not failed


def _load_dist(args) -> Distribution:
    if args.dist:
        return load_distribution(args.dist)
    if args.N is None:
        raise UsageError("give --dist FILE or --N with --instance")
    return Distribution.uniform(args.N) if args.instance == "uniform" else bilevel(args.N, args.epsilon)


def cmd_test_uniformity(args) -> bool:
    dist = _load_dist(args)
    backend = get_backend(args.backend)
    rows, verdicts, queries = [], [], []
    for t in range(args.trials):
        ledger = QueryLedger()
        rng = np.random.default_rng([args.seed, t])
        v = uniformity_test(dist, args.epsilon, backend=backend, rng=rng, ledger=ledger, classical=args.classical)
        rows.append([t, v, ledger.total])
        verdicts.append(v)
        queries.append(ledger.total)
    _emit(rows, ["trial", "verdict", "queries"], Path(args.out) if args.out else None)
    return _summarize(verdicts, queries, args.expect)


def cmd_test_balance(args) -> bool:
    ok = True
    if args.fn:
        table = load_table(args.fn)
        backend = get_backend(args.backend)
        rows, verdicts, queries = [], [], []
        for t in range(args.trials):
            ledger = QueryLedger()
            v = balance_test(table, args.epsilon, backend=backend, rng=np.random.default_rng([args.seed, t]), ledger=ledger)
            rows.append([t, v, ledger.total])
            verdicts.append(v)
            queries.append(ledger.total)
        _emit(rows, ["trial", "verdict", "queries"], Path(args.out) if args.out else None)
        ok = _summarize(verdicts, queries, args.expect)
    if args.deutsch_jozsa:
        correct, total = deutsch_jozsa_demo(args.deutsch_jozsa)
        print(f"Deutsch-Jozsa: {correct}/{total} correct", file=sys.stderr)
        ok = ok and correct == total
    if not args.fn and not args.deutsch_jozsa:
        raise UsageError("give --fn FILE and/or --deutsch-jozsa N")
    return ok


def cmd_test_spectrum(args) -> bool:
    backend = get_backend(args.backend)
    if args.report:
        rows = spectrum.ledger_report(epsilon=args.epsilon, k_factor=args.k_factor, l_factor=args.l_factor,
                                      backend=backend, seed=args.seed)
        print("ledger-count report only: the n range is too small for an exponent fit", file=sys.stderr)
        _emit([[r[k] for k in r] for r in rows], list(rows[0]), Path(args.out) if args.out else None)
        return True
    if not args.state:
        raise UsageError("give --state FILE or --report")
    rho = spectrum.load_state(args.state)
    rows, verdicts, queries = [], [], []
    for t in range(args.trials):
        ledger = QueryLedger()
        v = spectrum.maximally_mixed_test(
            rho, args.epsilon, k_factor=args.k_factor, l_factor=args.l_factor,
            backend=backend, rng=np.random.default_rng([args.seed, t]), ledger=ledger,
        )
        rows.append([t, v, ledger.total])
        verdicts.append(v)
        queries.append(ledger.total)
    _emit(rows, ["trial", "verdict", "queries"], Path(args.out) if args.out else None)
    return _summarize(verdicts, queries, args.expect)


def cmd_compare_demo(args) -> bool:
    backend = get_backend(args.backend)
    params = CompareParams(args.K, args.eta, args.delta)
    if args.ratio is not None:
        r = Fraction(args.ratio).limit_denominator(10**6)
        cases = [(regime_of(float(r), args.K), Distribution((r.denominator, r.numerator)), float(r))]
    else:
        cases = [(reg, *regime_instance(reg, args.K)) for reg in REGIMES]
    limit = args.delta + 3 * math.sqrt(args.delta / args.trials)
    rows, ok = [], True
    for i, (regime, dist, r) in enumerate(cases):
        rng = np.random.default_rng([args.seed, i])
        tally = dict(low=0, high=0, ratio_ok=0, ratio_bad=0)
        bad = queries = 0
        for _ in range(args.trials):
            ledger = QueryLedger()
            try:
                out = qcompare(dist, [0], [1], params, backend=backend, rng=rng, ledger=ledger)
            except DegenerateRatio:
                tally["ratio_bad"] += 1
                bad += 1
                queries += ledger.total
                continue
            queries += ledger.total
            if out.tag == "Low":
                tally["low"] += 1
            elif out.tag == "High":
                tally["high"] += 1
            elif (1 - args.eta) * r <= out.ratio <= (1 + args.eta) * r:
                tally["ratio_ok"] += 1
            else:
                tally["ratio_bad"] += 1
            bad += violates_contract(out, r, args.K, args.eta)
        ok = ok and bad / args.trials <= limit
        rows.append([regime, *tally.values(), queries / args.trials])
    _emit(rows, ["regime", "low", "high", "ratio_ok", "ratio_bad", "queries_mean"], Path(args.out) if args.out else None)
    return ok


def cmd_bench_scaling(args) -> bool:
    out = _out_dir(args)
    ok = True
    for task, bracket in (("uniformity-quantum", QUANTUM_BRACKET), ("uniformity-classical", CLASSICAL_BRACKET)):
        cfg = ExperimentConfig(task, tuple(args.epsilons), (args.N,), args.trials, args.backend, args.seed)
        rows = run_sweep(cfg, threads=args.threads, out=out / f"{task}.csv")
        fit = fit_loglog_slope(rows)
        passed = bracket[0] <= fit["slope"] <= bracket[1]
        ok = ok and passed
        means = ", ".join(f"{e:g}: {q:.0f}" for e, q in mean_queries_by_epsilon(rows).items())
        print(f"{task}: slope {fit['slope']:.3f} (r2 {fit['r2']:.4f}) bracket {bracket} "
              f"{'PASS' if passed else 'FAIL'}; mean queries {{{means}}}", file=sys.stderr)
    return ok


def cmd_calibrate(args) -> bool:
    from .harness import calibrate_all

    consts = calibrate_all(seed=args.seed, backend=get_backend(args.backend), trials=args.trials)
    path = Path(args.out) if args.out else Path("calibration.json")
    config.save_constants(consts, path)
    print(f"additive_c={consts.additive_c} multiplicative_c={consts.multiplicative_c} "
          f"compare_c={consts.compare_c} c_p={consts.c_p} -> {path}", file=sys.stderr)
    return True


def _global_flags(p: argparse.ArgumentParser, suppress: bool) -> None:
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    p.add_argument("--seed", type=int, default=d(0), help="root random seed")
    p.add_argument("--backend", choices=("emulator", "exact"), default=d("emulator"))
    p.add_argument("--out", default=d(None), help="output file or directory")
    p.add_argument("--threads", type=int, default=d(1))
    p.add_argument("--config", default=d(None), help="calibration constants JSON")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qcond", description=__doc__.splitlines()[0])
    _global_flags(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, help_):
        p = sub.add_parser(name, help=help_)
        _global_flags(p, suppress=True)
        p.set_defaults(func=fn)
        return p

    p = add("verify-appendix", cmd_verify_appendix, "numerical checks of E_n, M^(d), divided differences")
    p.add_argument("--n-max", type=int, default=64)
    p.add_argument("--mc-samples", type=int, default=100000)

    p = add("test-uniformity", cmd_test_uniformity, "run the uniformity tester")
    p.add_argument("--dist", help="distribution JSON")
    p.add_argument("--N", type=int, help="domain size for a built-in instance")
    p.add_argument("--instance", choices=("uniform", "bilevel"), default="uniform")
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--trials", type=int, default=1)
    p.add_argument("--classical", action="store_true", help="use the sampling-based comparison")
    p.add_argument("--expect", choices=(EQUAL, FAR))

    p = add("test-balance", cmd_test_balance, "run the balance tester or the Deutsch-Jozsa demo")
    p.add_argument("--fn", help="truth-table JSON")
    p.add_argument("--epsilon", type=float, default=1.0)
    p.add_argument("--trials", type=int, default=1)
    p.add_argument("--expect", choices=(EQUAL, FAR))
    p.add_argument("--deutsch-jozsa", type=int, metavar="N", help="check DJ on every N-bit balanced/constant function")

    p = add("test-spectrum", cmd_test_spectrum, "maximally-mixed-state test")
    p.add_argument("--state", help="density matrix JSON")
    p.add_argument("--epsilon", type=float, default=1.0)
    p.add_argument("--k-factor", type=float, default=32)
    p.add_argument("--l-factor", type=float, default=128)
    p.add_argument("--trials", type=int, default=1)
    p.add_argument("--expect", choices=(EQUAL, FAR))
    p.add_argument("--report", action="store_true", help="ledger-count report on 1/n for n in {2, 4}")

    p = add("compare-demo", cmd_compare_demo, "QCompare outcome histogram per regime")
    p.add_argument("--K", type=int, default=2)
    p.add_argument("--eta", type=float, default=0.1)
    p.add_argument("--delta", type=float, default=0.1)
    p.add_argument("--ratio", type=float, help="single true ratio instead of the five regimes")
    p.add_argument("--trials", type=int, default=200)

    p = add("bench-scaling", cmd_bench_scaling, "query scaling of quantum vs classical uniformity testing")
    p.add_argument("--N", type=int, default=64)
    p.add_argument("--epsilons", type=float, nargs="+", default=[0.4, 0.2, 0.1, 0.05])
    p.add_argument("--trials", type=int, default=100)

    p = add("calibrate", cmd_calibrate, "recompute the calibrated constants")
    p.add_argument("--trials", type=int, default=2000)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.config:
            config.set_active(config.load_constants(args.config))
        ok = args.func(args)
    except (UsageError, QCondError, OSError) as exc:
        print(f"qcond: error: {exc}", file=sys.stderr)
        return 2
    finally:
        config.set_active(None)
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
