"""Command line entry point: ``cbt-bandit run | constants | verify``.

Exit codes: 0 success, 1 verification failure, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import sys
from pathlib import Path

from .core import BanditError
from .engine import ExperimentConfig, monte_carlo, result_row, rows_to_csv
from .policies import parse_policy
from .priors import PRIORS, asymptotic_constant, i_beta, lower_bound, optimal_target, parse_prior
from .rewards import load_dataset, parse_reward
from .tables import TABLES
from .verify import SUITES

log = logging.getLogger("cbt_bandit")

DATASET_HINT = "the URL latency dataset can be downloaded from sourceforge.net/projects/bandit"

RUN_DEFAULTS = {
    "prior": "uniform",
    "reward": "bernoulli",
    "reps": 10_000,
    "seed": 0,
    "jobs": 1,
    "orientation": "auto",
    "format": "console",
}
_LIST_KEYS = {"n", "policy", "rows"}
_INT_KEYS = {"reps", "seed", "jobs", "table"}


class UsageError(BanditError):
    pass


def read_config(path: str) -> dict:
    """Parse a ``key = value`` file; list values are whitespace separated."""
    conf = {}
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config file: {exc}") from None
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise UsageError(f"{path}:{lineno}: expected key = value")
        key = key.strip().replace("-", "_")
        value = value.strip()
        if key in _LIST_KEYS:
            items = value.split()
            conf[key] = [int(v) for v in items] if key == "n" else items
        elif key in _INT_KEYS:
            conf[key] = int(value)
        elif key == "timing":
            conf[key] = value.lower() in ("1", "true", "yes")
        else:
            conf[key] = value
    return conf


def _merge(args: argparse.Namespace) -> argparse.Namespace:
    conf = read_config(args.config) if args.config else {}
    for key, default in RUN_DEFAULTS.items():
        if getattr(args, key) is None:
            setattr(args, key, conf.get(key, default))
    for key in ("table", "n", "policy", "rows", "dataset", "out"):
        if getattr(args, key) is None and key in conf:
            setattr(args, key, conf[key])
    if not args.timing:
        args.timing = bool(conf.get("timing", False))
    return args


def _load_pool(args):
    if not args.dataset:
        return None
    if not Path(args.dataset).exists():
        raise UsageError(f"dataset file {args.dataset} not found; {DATASET_HINT}")
    return load_dataset(args.dataset, args.orientation)


def _cells(args):
    """Yield ``(table_label, row_label, config)`` for every requested cell."""
    if args.table is not None:
        table = TABLES[args.table]
        pool = _load_pool(args)
        if table.prior is None and pool is None:
            raise UsageError(f"table {table.table_id} replays recorded rewards: pass --dataset PATH; {DATASET_HINT}")
        prior = table.prior_model
        try:
            rows = table.select(args.rows)
        except KeyError as exc:
            raise UsageError(exc.args[0]) from None
        horizons = args.n or table.horizons
        for row in rows:
            for n in horizons:
                yield str(table.table_id), row.label, ExperimentConfig(
                    row.spec,
                    n,
                    prior=None if pool is not None else prior,
                    dataset=pool if table.prior is None else None,
                    reps=args.reps,
                    seed=args.seed,
                    jobs=args.jobs,
                )
        return
    if not args.policy or not args.n:
        raise UsageError("give --table, or --policy and --n for an ad-hoc experiment")
    pool = _load_pool(args)
    prior = None if pool is not None else parse_prior(args.prior)
    reward = parse_reward(args.reward)
    for text in args.policy:
        spec = parse_policy(text)
        for n in args.n:
            yield "", str(spec), ExperimentConfig(
                spec, n, prior=prior, reward=reward, dataset=pool, reps=args.reps, seed=args.seed, jobs=args.jobs
            )


def _console(results, per_trial: bool, table_id: int | None) -> str:
    horizons = sorted({cfg.n for _, cfg, _ in results})
    labels = list(dict.fromkeys(label for label, _, _ in results))
    cells = {(label, cfg.n): summ for label, cfg, summ in results}
    width = max(len(s) for s in labels + ["Lower bound"]) + 2
    out = io.StringIO()
    head = "".join(f"{'n=' + str(n):>18}" for n in horizons)
    out.write(f"{'Algorithm':<{width}}{head}\n")
    out.write("-" * (width + 18 * len(horizons)) + "\n")
    for label in labels:
        parts = []
        for n in horizons:
            summ = cells.get((label, n))
            if summ is None:
                parts.append(f"{'':>18}")
                continue
            mean, se = summ.mean_regret, summ.se
            if per_trial:
                mean, se = mean / n, se / n
            parts.append(f"{mean:>11.1f} ±{se:>5.1f}")
        out.write(f"{label:<{width}}" + "".join(parts) + "\n")
    if table_id in (1, 2, 3):
        prior = TABLES[table_id].prior_model
        lb = "".join(f"{lower_bound(prior.alpha, prior.beta, 1.0, n):>11.1f}       " for n in horizons)
        out.write(f"{'Lower bound':<{width}}{lb}\n")
    return out.getvalue()


def cmd_run(args) -> int:
    args = _merge(args)
    results = []
    rows = []
    for table_label, label, config in _cells(args):
        log.info("running %s n=%d reps=%d", config.policy, config.n, config.reps)
        summary = monte_carlo(config)
        results.append((label, config, summary))
        rows.append(result_row(config, summary, table_label, timing=args.timing))
        log.info("  mean regret %.3f ± %.3f (%.1f s)", summary.mean_regret, summary.se, summary.wall_time_ms / 1000)
    text = rows_to_csv(rows)
    if args.out:
        Path(args.out).write_text(text)
    if args.format == "csv":
        sys.stdout.write(text)
    else:
        per_trial = args.table is not None and TABLES[args.table].per_trial
        if args.table is not None:
            print(f"Table {args.table}: {TABLES[args.table].title}")
        sys.stdout.write(_console(results, per_trial, args.table))
    return 0


def _sig(x: float, digits: int = 4) -> str:
    return format(float(f"{x:.{digits}g}"), "f").rstrip("0").rstrip(".")


CONSTANT_COLUMNS = ["label", "alpha", "beta", "lam", "C", "C0", "I_beta", "n", "zeta_n", "lower_bound"]


def constants_rows(priors, betas, alphas, lam, horizons) -> list[dict]:
    cases = [(str(p), p.alpha, p.beta, p) for p in priors]
    if alphas and len(alphas) not in (1, len(betas)):
        raise UsageError("give one --alpha, or one per --beta")
    for i, beta in enumerate(betas):
        alpha = alphas[i] if len(alphas) > 1 else (alphas[0] if alphas else 1.0)
        cases.append((f"beta={beta:g}", alpha, beta, None))
    rows = []
    for label, alpha, beta, prior in cases:
        C = asymptotic_constant(alpha, beta, lam)
        for n in horizons:
            if prior is not None:
                zeta = optimal_target(prior, lam, n)
            else:
                zeta = C * n ** (-1 / (beta + 1))
            rows.append(
                {
                    "label": label,
                    "alpha": f"{alpha:.6g}",
                    "beta": f"{beta:g}",
                    "lam": f"{lam:g}",
                    "C": f"{C:.6f}",
                    "C0": f"{asymptotic_constant(alpha, beta, 1.0):.6f}",
                    "I_beta": f"{i_beta(beta):.6f}",
                    "n": n,
                    "zeta_n": f"{zeta:.6g}",
                    "lower_bound": _sig(lower_bound(alpha, beta, lam, n)),
                }
            )
    return rows


def cmd_constants(args) -> int:
    priors = [parse_prior(p) for p in args.prior] if args.prior is not None else []
    if args.prior is None and not args.beta:
        priors = [parse_prior(p) for p in ("uniform", "sin", "1-cos")]
    rows = constants_rows(priors, args.beta or [], args.alpha or [], args.lam, args.n)
    if args.format == "csv":
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=CONSTANT_COLUMNS, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
        sys.stdout.write(buf.getvalue())
        return 0
    print(f"{'label':<14}{'alpha':>9}{'beta':>6}{'C':>10}{'C0':>10}{'I_beta':>9}{'n':>9}{'zeta_n':>12}{'C n^(b/(b+1))':>15}")
    for r in rows:
        print(
            f"{r['label']:<14}{float(r['alpha']):>9.4f}{r['beta']:>6}{float(r['C']):>10.4f}{float(r['C0']):>10.4f}"
            f"{float(r['I_beta']):>9.2f}{r['n']:>9}{r['zeta_n']:>12}{r['lower_bound']:>15}"
        )
    return 0


def cmd_verify(args) -> int:
    checks = SUITES[args.suite]()
    for check in checks:
        print(check.line())
    if args.out:
        with open(args.out, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["suite", "check", "passed", "detail"])
            for c in checks:
                writer.writerow([args.suite, c.name, int(c.passed), c.detail])
    return 0 if all(c.passed for c in checks) else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cbt-bandit", description="Infinite-arms bandit simulator.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="simulate a regret table or an ad-hoc experiment")
    run.add_argument("--table", type=int, choices=sorted(TABLES))
    run.add_argument("--rows", nargs="+", help="subset of table row keys")
    run.add_argument("--policy", nargs="+", help="policy strings, e.g. cbt:zeta=auto two-target:f=3")
    run.add_argument("--prior", help=f"one of {sorted(PRIORS)} or powerlaw:beta=B,cap=M")
    run.add_argument("--reward", help="bernoulli, poisson, discrete:I=4 or scaled:exponential")
    run.add_argument("--n", type=int, nargs="+", help="horizons")
    run.add_argument("--reps", type=int, help="replications per cell (default 10000)")
    run.add_argument("--seed", type=int, help="base seed; replication r uses seed + r")
    run.add_argument("--jobs", type=int, help="worker processes")
    run.add_argument("--dataset", help="text file of recorded rewards (table 4)")
    run.add_argument("--orientation", choices=["auto", "columns", "rows"])
    run.add_argument("--out", help="write CSV rows to this path")
    run.add_argument("--format", choices=["csv", "console"])
    run.add_argument("--timing", action="store_true", help="fill the wall_time_ms column")
    run.add_argument("--config", help="key = value file; command line flags take precedence")
    run.set_defaults(func=cmd_run)

    const = sub.add_parser("constants", help="print C, C0, I_beta, optimal targets and lower bounds")
    const.add_argument("--prior", nargs="*", help="named priors (default: uniform sin 1-cos)")
    const.add_argument("--beta", type=float, nargs="+", help="extra beta values")
    const.add_argument("--alpha", type=float, nargs="+", help="alpha for each extra beta")
    const.add_argument("--lam", type=float, default=1.0)
    const.add_argument("--n", type=int, nargs="+", default=[100, 1000, 10_000, 100_000])
    const.add_argument("--format", choices=["csv", "console"], default="console")
    const.set_defaults(func=cmd_constants)

    ver = sub.add_parser("verify", help="run an oracle self-check suite")
    ver.add_argument("suite", choices=sorted(SUITES))
    ver.add_argument("--out", help="write check results as CSV")
    ver.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except (BanditError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
