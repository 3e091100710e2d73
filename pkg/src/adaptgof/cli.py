"""Command-line entry point.

Subcommands:
  test        run the adaptive multi-split test on a CSV file
  diagnose    run the test and print the covariate ranking for underfit diagnosis
  hl          run the quantile-binned baseline test on a CSV file
  experiment  reproduce the built-in size/power experiments

Statistical rejection is not a process failure: completed runs exit 0
regardless of the verdict; nonzero exits signal operational problems only.
Every emitted file embeds (seed, config hash, package version) and contains no
timing, so reruns with identical seed and configuration are byte-identical.
The ADAPTGOF_SEED environment variable supplies the default seed.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
from dataclasses import dataclass

import numpy as np

from . import __version__
from .data import CONTINUOUS, DISCRETE, Dataset
from .formula import FormulaError, parse_formula
from .glm import fit_logistic, predict_prob
from .gof import TestConfig, hl_test, multi_split_test, report_to_dict
from .numkit import RandomSource
from .sim import SETTINGS, default_variants, make_setting, run_experiment

__all__ = ["main", "parse_csv", "run_test_command", "run_experiment_command", "CliError", "RunConfig"]

_SEED_ENV = "ADAPTGOF_SEED"


class CliError(Exception):
    """Operational failure with a user-facing message."""


# ---------------------------------------------------------------------------
# CSV input
# ---------------------------------------------------------------------------


def _is_number(text: str) -> bool:
    try:
        float(text)
        return True
    except ValueError:
        return False


def parse_csv(path: str, response: str, overrides: dict | None = None) -> Dataset:
    """Load a CSV file with a header row into a typed dataset.

    The response column is coerced to {0, 1}; every other column is typed
    automatically (all-numeric -> continuous, otherwise discrete) unless
    ``overrides`` maps the name to an explicit kind. Rows with missing values
    and non-binary responses are rejected with their row numbers (the header
    is row 1).
    """
    overrides = overrides or {}
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            rows = list(reader)
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc}") from exc
    except UnicodeDecodeError as exc:
        raise CliError(f"{path} is not valid UTF-8: {exc}") from exc

    if not rows:
        raise CliError(f"{path} is empty")
    header = [h.strip() for h in rows[0]]
    if len(set(header)) != len(header):
        raise CliError(f"{path} has duplicate column names")
    if response not in header:
        raise CliError(f"response column {response!r} not found; columns are {', '.join(header)}")
    body = rows[1:]
    if not body:
        raise CliError(f"{path} has a header but no data rows")

    missing = []
    for i, row in enumerate(body, start=2):
        if len(row) != len(header):
            raise CliError(f"{path} row {i}: expected {len(header)} fields, found {len(row)}")
        if any(cell.strip() == "" for cell in row):
            missing.append(i)
    if missing:
        shown = ", ".join(str(r) for r in missing[:10])
        more = "" if len(missing) <= 10 else f" (and {len(missing) - 10} more)"
        raise CliError(f"{path} has missing values in rows: {shown}{more}")

    cells = {name: [row[j].strip() for row in body] for j, name in enumerate(header)}

    y = np.empty(len(body), dtype=np.int64)
    for i, cell in enumerate(cells[response]):
        if cell in ("0", "1"):
            y[i] = int(cell)
        elif _is_number(cell) and float(cell) in (0.0, 1.0):
            y[i] = int(float(cell))
        else:
            raise CliError(
                f"{path} row {i + 2}: response value {cell!r} is not 0 or 1"
            )

    columns = {}
    kinds = {}
    for name in header:
        if name == response:
            continue
        values = cells[name]
        numeric = all(_is_number(v) for v in values)
        kind = overrides.get(name, CONTINUOUS if numeric else DISCRETE)
        if kind == CONTINUOUS:
            if not numeric:
                bad = next(i for i, v in enumerate(values, start=2) if not _is_number(v))
                raise CliError(
                    f"column {name!r} was declared continuous but row {bad} "
                    f"holds a non-numeric value"
                )
            columns[name] = np.array([float(v) for v in values])
        else:
            columns[name] = np.array(values, dtype=object)
        kinds[name] = kind
    return Dataset(y=y, columns=columns, kinds=kinds)


# ---------------------------------------------------------------------------
# Run configuration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RunConfig:
    """Echo of the flags that shape one test run (hashed into the report)."""

    input: str
    response: str
    formula: str
    k: int
    n_min: int | None
    splits: int
    alpha: float
    train_size: int | None
    train_fraction: float | None
    partition: str
    seed: int
    output: str | None

    def to_dict(self) -> dict:
        return {
            "input": self.input,
            "response": self.response,
            "formula": self.formula,
            "k": self.k,
            "n_min": self.n_min,
            "splits": self.splits,
            "alpha": self.alpha,
            "train_size": self.train_size,
            "train_fraction": self.train_fraction,
            "partition": self.partition,
            "seed": self.seed,
        }


def _config_hash(payload: dict) -> str:
    return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()[:16]


def _default_seed(value) -> int:
    if value is not None:
        return int(value)
    env = os.environ.get(_SEED_ENV)
    if env is not None:
        try:
            return int(env)
        except ValueError as exc:
            raise CliError(f"{_SEED_ENV} must be an integer, got {env!r}") from exc
    return 0


def _partition_settings(mode: str) -> tuple:
    """Split a --partition flag into (partition_by, score_column)."""
    if mode == "covariates":
        return "covariates", None
    if mode == "mta-prob":
        return "mta-prob", None
    if mode.startswith("score:") and len(mode) > len("score:"):
        return "score", mode.split(":", 1)[1]
    raise CliError(
        f"invalid partition mode {mode!r}; use covariates, score:<column> or mta-prob"
    )


def _write_json(path: str, payload: dict) -> None:
    try:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2)
            fh.write("\n")
    except OSError as exc:
        raise CliError(f"cannot write {path}: {exc}") from exc


# ---------------------------------------------------------------------------
# test / diagnose
# ---------------------------------------------------------------------------


def run_test_command(config: RunConfig, top: int = 5, show_ranking: bool = False) -> int:
    dataset = parse_csv(config.input, config.response)
    try:
        formula = parse_formula(config.formula)
    except FormulaError as exc:
        raise CliError(str(exc)) from exc

    partition_by, score_column = _partition_settings(config.partition)
    train = config.train_size
    if train is None and config.train_fraction is not None:
        train = int(config.train_fraction * dataset.n)
    try:
        test_config = TestConfig(
            k=config.k,
            n_min=config.n_min,
            train_size=train,
            alpha=config.alpha,
            splits=config.splits,
            partition_by=partition_by,
            score_column=score_column,
        )
        report = multi_split_test(
            dataset, formula, test_config, RandomSource(config.seed), seed=config.seed
        )
    except (ValueError, KeyError) as exc:
        raise CliError(str(exc)) from exc

    payload = report_to_dict(report)
    payload["artifact"] = {"name": "adaptgof", "version": __version__}
    payload["run_config"] = config.to_dict()
    payload["config_hash"] = _config_hash(config.to_dict())
    if config.output:
        _write_json(config.output, payload)

    if report.inconclusive:
        verdict = "INCONCLUSIVE"
    else:
        verdict = "REJECT (lack of fit)" if report.reject else "NO REJECTION"
    print(f"decision:   {verdict}")
    print(f"median p:   {report.median_p:.6g}")
    print(f"threshold:  {report.threshold:.6g}  (alpha={report.alpha}, splits={report.splits})")
    print(f"failed:     {report.n_failed} of {report.splits} splits")
    if show_ranking or report.reject:
        print(f"top covariates on partition boundaries (of {len(report.ranking)}):")
        for name, total, max_grp in report.ranking[:top]:
            print(f"  {name:<16} total={total:<6} max-contribution-group={max_grp}")
    if config.output:
        print(f"report written to {config.output}")
    return 0


# ---------------------------------------------------------------------------
# hl
# ---------------------------------------------------------------------------


def run_hl_command(config: RunConfig, groups: int) -> int:
    dataset = parse_csv(config.input, config.response)
    try:
        formula = parse_formula(config.formula)
        from .formula import design_matrix

        x = design_matrix(dataset, formula)
        model = fit_logistic(x, dataset.y)
    except (FormulaError, ValueError) as exc:
        raise CliError(str(exc)) from exc
    result = hl_test(dataset.y, predict_prob(model, x), k=groups)
    payload = {
        "test": "quantile-binned chi-squared",
        "statistic": result.statistic,
        "groups": result.k,
        "df": result.df,
        "p_value": result.p_value,
        "failed": result.failed,
        "converged": model.converged,
        "run_config": {**config.to_dict(), "groups": groups},
        "config_hash": _config_hash({**config.to_dict(), "groups": groups}),
        "artifact": {"name": "adaptgof", "version": __version__},
    }
    if config.output:
        _write_json(config.output, payload)
    if result.failed:
        print(f"test failed: {result.reason}")
    else:
        print(f"statistic: {result.statistic:.6g}  df: {result.df}  p: {result.p_value:.6g}")
    return 0


# ---------------------------------------------------------------------------
# experiment
# ---------------------------------------------------------------------------


def run_experiment_command(args) -> int:
    if args.setting not in SETTINGS:
        raise CliError(f"unknown setting {args.setting!r}; choose from {', '.join(SETTINGS)}")
    if args.reps < 1:
        raise CliError("--reps must be at least 1")
    seed = _default_seed(args.seed)

    if args.beta3 is not None:
        variants = [{"beta3": args.beta3}]
    elif args.chi2_df is not None:
        variants = [{"chi2_df": args.chi2_df}]
    else:
        variants = default_variants(args.setting)
    specs = [make_setting(args.setting, args.n, **kw) for kw in variants]

    methods = []
    for label in args.methods.split(","):
        label = label.strip().lower()
        base = dict(splits=args.splits)
        if label == "hl-a":
            methods.append(_method("hl", "A", **base))
        elif label == "hl-b":
            methods.append(_method("hl", "B", **base))
        elif label == "bag-a":
            methods.append(_method("bag", "A", **base))
        elif label == "bag-b":
            methods.append(_method("bag", "B", **base))
        else:
            raise CliError(f"unknown method {label!r}; use hl-a, hl-b, bag-a, bag-b")

    rng = RandomSource(seed)
    results = run_experiment(specs, methods, reps=args.reps, rng=rng, alpha=args.alpha)

    os.makedirs(args.outdir, exist_ok=True)
    csv_path = os.path.join(args.outdir, "rates.csv")
    manifest_path = os.path.join(args.outdir, "manifest.json")
    try:
        with open(csv_path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["setting", "n", "variant", "method", "rate", "reps", "seed"])
            for r in results:
                writer.writerow([r.setting, r.n, r.variant, r.method,
                                 f"{r.rate:.6g}", r.reps, r.seed])
    except OSError as exc:
        raise CliError(f"cannot write {csv_path}: {exc}") from exc

    run_payload = {
        "setting": args.setting,
        "n": args.n,
        "reps": args.reps,
        "alpha": args.alpha,
        "splits": args.splits,
        "methods": [m.label for m in methods],
        "variants": [s.variant for s in specs],
        "seed": seed,
    }
    _write_json(manifest_path, {
        "artifact": {"name": "adaptgof", "version": __version__},
        "run_config": run_payload,
        "config_hash": _config_hash(run_payload),
        "failures": {f"{r.variant or 'default'}/{r.method}": r.failures for r in results},
    })

    labels = [m.label for m in methods]
    print(f"setting {args.setting}, n={args.n}, reps={args.reps}, alpha={args.alpha}")
    print(f"{'variant':<16}" + "".join(f"{lab:>10}" for lab in labels))
    by_variant = {}
    for r in results:
        by_variant.setdefault(r.variant, {})[r.method] = r.rate
    for variant in [s.variant for s in specs]:
        row = by_variant.get(variant, {})
        cells = "".join(f"{row.get(lab, float('nan')):>10.3f}" for lab in labels)
        print(f"{variant or '(none)':<16}{cells}")
    print(f"results written to {csv_path}")
    return 0


def _method(kind, model, splits):
    from .sim import MethodSpec

    return MethodSpec(kind, model, splits=splits)


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def _add_test_flags(sub):
    sub.add_argument("--input", required=True, help="CSV file with a header row")
    sub.add_argument("--response", required=True, help="name of the binary response column")
    sub.add_argument("--formula", required=True,
                     help="model terms, e.g. 'x1 + x2 + x1*x2 + x3^2'")
    sub.add_argument("--k", type=int, default=5, help="target group count (default 5)")
    sub.add_argument("--n-min", type=int, default=None,
                     help="minimum training rows per group (default n/10)")
    sub.add_argument("--splits", type=int, default=100, help="number of random splits")
    sub.add_argument("--alpha", type=float, default=0.05, help="test level")
    sub.add_argument("--train-size", type=int, default=None, help="training rows per split")
    sub.add_argument("--train-fraction", type=float, default=None,
                     help="training fraction per split (alternative to --train-size)")
    sub.add_argument("--partition", default="covariates",
                     help="covariates | score:<column> | mta-prob")
    sub.add_argument("--seed", type=int, default=None,
                     help=f"random seed (default ${_SEED_ENV} or 0)")
    sub.add_argument("--output", default=None, help="path for the JSON report")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="adaptgof",
        description="Adaptive-grouping goodness-of-fit tests for binary regression.",
    )
    parser.add_argument("--version", action="version", version=f"adaptgof {__version__}")
    subs = parser.add_subparsers(dest="command", required=True)

    test = subs.add_parser("test", help="run the adaptive multi-split test on CSV data")
    _add_test_flags(test)

    diag = subs.add_parser("diagnose", help="run the test and rank covariates by "
                                            "partition-boundary counts")
    _add_test_flags(diag)
    diag.add_argument("--top", type=int, default=5, help="ranking rows to print")

    hl = subs.add_parser("hl", help="run the quantile-binned baseline test on CSV data")
    hl.add_argument("--input", required=True)
    hl.add_argument("--response", required=True)
    hl.add_argument("--formula", required=True)
    hl.add_argument("--groups", type=int, default=10, help="number of bins (default 10)")
    hl.add_argument("--seed", type=int, default=None)
    hl.add_argument("--output", default=None)

    exp = subs.add_parser("experiment", help="reproduce the built-in size/power experiments")
    exp.add_argument("--setting", required=True, help="1|2|3|4|5|nn-example")
    exp.add_argument("--n", type=int, default=500, help="sample size per replication")
    exp.add_argument("--reps", type=int, default=500, help="number of replications")
    exp.add_argument("--beta3", type=float, default=None, help="run a single coefficient variant")
    exp.add_argument("--chi2-df", type=int, default=None, help="run a single chi-squared variant")
    exp.add_argument("--methods", default="hl-a,hl-b,bag-a,bag-b",
                     help="comma list of hl-a,hl-b,bag-a,bag-b")
    exp.add_argument("--splits", type=int, default=100, help="splits per adaptive test")
    exp.add_argument("--alpha", type=float, default=0.05)
    exp.add_argument("--seed", type=int, default=None)
    exp.add_argument("--outdir", default="adaptgof-results", help="output directory")

    return parser


def _run_config_from_args(args) -> RunConfig:
    return RunConfig(
        input=args.input,
        response=args.response,
        formula=args.formula,
        k=getattr(args, "k", 5),
        n_min=getattr(args, "n_min", None),
        splits=getattr(args, "splits", 100),
        alpha=getattr(args, "alpha", 0.05),
        train_size=getattr(args, "train_size", None),
        train_fraction=getattr(args, "train_fraction", None),
        partition=getattr(args, "partition", "covariates"),
        seed=_default_seed(getattr(args, "seed", None)),
        output=args.output,
    )


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "test":
            return run_test_command(_run_config_from_args(args))
        if args.command == "diagnose":
            return run_test_command(_run_config_from_args(args), top=args.top,
                                    show_ranking=True)
        if args.command == "hl":
            return run_hl_command(_run_config_from_args(args), groups=args.groups)
        if args.command == "experiment":
            return run_experiment_command(args)
        raise CliError(f"unknown command {args.command!r}")
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
