"""Data generators and a replication harness for the size/power experiments.

Six built-in designs generate logistic data with known truth:

=========  =====================================================  =====================
design     true logit                                             model under assessment
=========  =====================================================  =====================
1          b1*x1 + b2*x2 + b3*x3                                  drops x3
2          b1*x1 + b2*x2 + b3*x1*x2                               drops the interaction
3          -2 + .3*x1 + .3*x2 + .3*x3 + .3*x1^2                   drops the quadratic
4          .267*x1 + .267*x2                                      drops x2
5          -2 + .3*x1 + .3*x2 + .3*x1^2                           drops the quadratic
nn-example 7 covariates incl. a strong quartic in x7              drops the quartic
=========  =====================================================  =====================

Model "A" always denotes the correctly specified fit, model "B" the underfit
variant. Covariate draws are U(-3,3), N(0, variance), chi-squared, Bernoulli;
designs 2 and 3 carry derived columns (x3 = x1*x2, x4 = x1^2) that are part of
the dataset and therefore available to the partition search.

Training of auxiliary models (neural nets, random forests) is out of scope;
their fitted probabilities enter through ``score_injection``.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .data import CONTINUOUS, DISCRETE, Dataset
from .formula import Formula, design_matrix, parse_formula
from .gof import TestConfig, hl_test, multi_split_test, single_split_test
from .glm import fit_logistic, predict_prob
from .numkit import RandomSource
from .partition import assign_groups

__all__ = [
    "SettingSpec",
    "MethodSpec",
    "ExperimentResult",
    "make_setting",
    "default_variants",
    "generate",
    "true_probabilities",
    "run_experiment",
    "score_injection",
    "surface_table",
]

SETTINGS = ("1", "2", "3", "4", "5", "nn-example")


@dataclass(frozen=True)
class SettingSpec:
    """One simulation design: covariate draws, true terms, and both model formulas."""

    setting: str
    n: int
    variant: str
    covariates: tuple          # (name, kind, dist spec) in draw order
    derived: tuple             # (name, op, operands) computed after the draws
    beta0: float
    true_terms: tuple          # (formula term string, coefficient)
    model_a: Formula
    model_b: Formula


def default_variants(setting: str) -> list:
    """The variant keyword sets studied for a design (one empty set when none)."""
    if setting == "1":
        return [{"beta3": 0.217}, {"beta3": 0.651}]
    if setting == "2":
        return [{"beta3": 0.5}, {"beta3": 0.8}]
    if setting == "3":
        return [{"chi2_df": 4}, {"chi2_df": 8}]
    return [{}]


def make_setting(setting: str, n: int, *, beta3: float | None = None,
                 chi2_df: int | None = None, beta0: float | None = None) -> SettingSpec:
    """Resolve a design id plus variant parameters into a full specification."""
    setting = str(setting)
    if n < 50:
        raise ValueError("n must be at least 50")
    if setting == "1":
        b3 = 0.651 if beta3 is None else float(beta3)
        return SettingSpec(
            setting, n, f"beta3={b3}",
            covariates=(("x1", CONTINUOUS, ("uniform", -3.0, 3.0)),
                        ("x2", CONTINUOUS, ("normal", 0.0, 2.25)),
                        ("x3", CONTINUOUS, ("chisq", 4))),
            derived=(),
            beta0=0.0 if beta0 is None else float(beta0),
            true_terms=(("x1", 0.267), ("x2", 0.267), ("x3", b3)),
            model_a=parse_formula("x1 + x2 + x3"),
            model_b=parse_formula("x1 + x2"),
        )
    if setting == "2":
        b3 = 0.8 if beta3 is None else float(beta3)
        return SettingSpec(
            setting, n, f"beta3={b3}",
            covariates=(("x1", CONTINUOUS, ("uniform", -3.0, 3.0)),
                        ("x2", CONTINUOUS, ("uniform", -3.0, 3.0))),
            derived=(("x3", "product", ("x1", "x2")),),
            beta0=0.0 if beta0 is None else float(beta0),
            true_terms=(("x1", 0.3), ("x2", 0.3), ("x1*x2", b3)),
            model_a=parse_formula("x1 + x2 + x1*x2"),
            model_b=parse_formula("x1 + x2"),
        )
    if setting == "3":
        df = 4 if chi2_df is None else int(chi2_df)
        return SettingSpec(
            setting, n, f"chi2_df={df}",
            covariates=(("x1", CONTINUOUS, ("uniform", -3.0, 3.0)),
                        ("x2", CONTINUOUS, ("normal", 0.0, 2.25)),
                        ("x3", CONTINUOUS, ("chisq", df))),
            derived=(("x4", "square", ("x1",)),),
            beta0=-2.0 if beta0 is None else float(beta0),
            true_terms=(("x1", 0.3), ("x2", 0.3), ("x3", 0.3), ("x1^2", 0.3)),
            model_a=parse_formula("x1 + x2 + x3 + x1^2"),
            model_b=parse_formula("x1 + x2 + x3"),
        )
    if setting == "4":
        return SettingSpec(
            setting, n, "",
            covariates=(("x1", CONTINUOUS, ("normal", 0.0, 2.25)),
                        ("x2", CONTINUOUS, ("chisq", 4))),
            derived=(),
            beta0=0.0 if beta0 is None else float(beta0),
            true_terms=(("x1", 0.267), ("x2", 0.267)),
            model_a=parse_formula("x1 + x2"),
            model_b=parse_formula("x1"),
        )
    if setting == "5":
        return SettingSpec(
            setting, n, "",
            covariates=(("x1", CONTINUOUS, ("uniform", -3.0, 3.0)),
                        ("x2", CONTINUOUS, ("chisq", 2))),
            derived=(),
            beta0=-2.0 if beta0 is None else float(beta0),
            true_terms=(("x1", 0.3), ("x2", 0.3), ("x1^2", 0.3)),
            model_a=parse_formula("x1 + x2 + x1^2"),
            model_b=parse_formula("x1 + x2"),
        )
    if setting == "nn-example":
        return SettingSpec(
            setting, n, "",
            covariates=(("x1", CONTINUOUS, ("uniform", -3.0, 3.0)),
                        ("x2", CONTINUOUS, ("uniform", -3.0, 3.0)),
                        ("x3", CONTINUOUS, ("normal", 0.0, 2.25)),
                        ("x4", CONTINUOUS, ("normal", 0.0, 2.25)),
                        ("x5", CONTINUOUS, ("chisq", 4)),
                        ("x6", DISCRETE, ("bernoulli", 0.5)),
                        ("x7", CONTINUOUS, ("normal", 0.0, 4.0))),
            derived=(),
            beta0=-0.15 if beta0 is None else float(beta0),
            true_terms=(("x1", 0.3), ("x2", 0.3), ("x3", 0.1), ("x4", 0.2),
                        ("x5", 0.2), ("x6", 0.3), ("x7", 0.3), ("x7^4", 3.0)),
            model_a=parse_formula("x1 + x2 + x3 + x4 + x5 + x6 + x7 + x7^4"),
            model_b=parse_formula("x1 + x2 + x3 + x4 + x5 + x6 + x7"),
        )
    raise ValueError(f"unknown setting {setting!r}")


def _draw(dist, rng: RandomSource, n: int) -> np.ndarray:
    kind = dist[0]
    if kind == "uniform":
        return rng.uniform(dist[1], dist[2], size=n)
    if kind == "normal":
        return rng.normal(dist[1], np.sqrt(dist[2]), size=n)  # second entry is a variance
    if kind == "chisq":
        return rng.chisquare(dist[1], size=n)
    if kind == "bernoulli":
        return rng.bernoulli(dist[1], size=n)
    raise ValueError(f"unknown distribution {kind!r}")


def _true_logit(spec: SettingSpec, columns: dict, n: int) -> np.ndarray:
    ds = Dataset(y=np.zeros(n, dtype=int), columns=columns,
                 kinds={name: CONTINUOUS for name in columns})
    logit = np.full(n, spec.beta0)
    for term_text, coef in spec.true_terms:
        term = parse_formula(term_text).terms[0]
        logit += coef * term.evaluate(ds)
    return logit


def true_probabilities(spec: SettingSpec, dataset: Dataset) -> np.ndarray:
    """True success probabilities of a generated dataset, recomputed from columns."""
    logit = _true_logit(spec, dataset.columns, dataset.n)
    return 1.0 / (1.0 + np.exp(-logit))


def generate(spec: SettingSpec, rng: RandomSource) -> Dataset:
    """Draw one dataset from a design; identical rng state gives identical bytes."""
    columns = {}
    kinds = {}
    for name, kind, dist in spec.covariates:
        columns[name] = _draw(dist, rng, spec.n)
        kinds[name] = kind
    for name, op, operands in spec.derived:
        if op == "product":
            columns[name] = columns[operands[0]] * columns[operands[1]]
        elif op == "square":
            columns[name] = columns[operands[0]] ** 2
        else:
            raise ValueError(f"unknown derived op {op!r}")
        kinds[name] = CONTINUOUS
    logit = _true_logit(spec, columns, spec.n)
    prob = 1.0 / (1.0 + np.exp(-logit))
    y = rng.bernoulli(prob, size=spec.n)
    return Dataset(y=y, columns=columns, kinds=kinds)


def score_injection(dataset: Dataset, scores, name: str = "score") -> Dataset:
    """Attach an auxiliary probability column usable as a partitioning source."""
    s = np.asarray(scores, dtype=float)
    if s.shape != (dataset.n,):
        raise ValueError(f"score length {s.shape} does not match n = {dataset.n}")
    if np.any(s < 0.0) or np.any(s > 1.0) or not np.all(np.isfinite(s)):
        raise ValueError("scores must lie in [0, 1]")
    return dataset.with_column(name, s, CONTINUOUS)


# ---------------------------------------------------------------------------
# Replication harness
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MethodSpec:
    """One method column of the rejection-rate tables.

    ``kind`` is "hl" (quantile-binned baseline on the full-data fit) or "bag"
    (the multi-split adaptive test); ``model`` selects the fitted formula.
    """

    kind: str
    model: str = "B"
    k: int | None = None        # defaults: 10 for hl, 5 for bag
    splits: int = 100

    def __post_init__(self):
        if self.kind not in ("hl", "bag"):
            raise ValueError(f"unknown method kind {self.kind!r}")
        if self.model not in ("A", "B"):
            raise ValueError(f"model must be 'A' or 'B', got {self.model!r}")

    @property
    def label(self) -> str:
        return f"{self.kind}-{self.model.lower()}"


DEFAULT_METHODS = (
    MethodSpec("hl", "A"),
    MethodSpec("hl", "B"),
    MethodSpec("bag", "A"),
    MethodSpec("bag", "B"),
)


@dataclass(frozen=True)
class ExperimentResult:
    setting: str
    n: int
    variant: str
    method: str
    rate: float
    reps: int
    failures: int
    seed: int
    wall_time: float


def _run_method(method: MethodSpec, dataset: Dataset, spec: SettingSpec,
                alpha: float, rng: RandomSource):
    formula = spec.model_a if method.model == "A" else spec.model_b
    if method.kind == "hl":
        x = design_matrix(dataset, formula)
        model = fit_logistic(x, dataset.y)
        result = hl_test(dataset.y, predict_prob(model, x), k=method.k or 10)
        if result.failed:
            return None
        return bool(result.p_value < alpha)
    config = TestConfig(k=method.k or 5, splits=method.splits, alpha=alpha)
    report = multi_split_test(dataset, formula, config, rng)
    if report.inconclusive:
        return None
    return report.reject


def run_experiment(settings, methods, reps: int, rng: RandomSource,
                   alpha: float = 0.05) -> list:
    """Replicated rejection rates: generate, fit, test, aggregate.

    Every replication draws a fresh dataset on a child stream derived from
    (setting, variant, replication); all methods see the same data within a
    replication. Failed replications (non-convergent fits, degenerate tests)
    are excluded from the rate and reported in ``failures``.
    """
    if reps < 1:
        raise ValueError("reps must be at least 1")
    results = []
    for spec in settings:
        start = time.perf_counter()
        rejects = {m.label: 0 for m in methods}
        failures = {m.label: 0 for m in methods}
        for rep in range(reps):
            key = (spec.setting, spec.variant, spec.n, rep)
            dataset = generate(spec, rng.child(("data",) + key))
            for method in methods:
                verdict = _run_method(
                    method, dataset, spec, alpha, rng.child(("test", method.label) + key)
                )
                if verdict is None:
                    failures[method.label] += 1
                elif verdict:
                    rejects[method.label] += 1
        elapsed = time.perf_counter() - start
        for method in methods:
            ok = reps - failures[method.label]
            rate = rejects[method.label] / ok if ok else float("nan")
            results.append(ExperimentResult(
                setting=spec.setting, n=spec.n, variant=spec.variant,
                method=method.label, rate=rate, reps=reps,
                failures=failures[method.label], seed=rng.seed,
                wall_time=elapsed,
            ))
    return results


# ---------------------------------------------------------------------------
# Plot-ready surface data
# ---------------------------------------------------------------------------


def surface_table(spec: SettingSpec, rng: RandomSource, grid: int = 25) -> dict:
    """Long-format surface data for a two-covariate design.

    Fits the underfit model on one generated dataset, selects a partition via
    a single adaptive split, and evaluates true probability, fitted
    probability and group membership on a grid over (x1, x2). Returns a dict
    of equal-length column arrays keyed x1, x2, true_p, fitted_p, group.
    """
    names = [c[0] for c in spec.covariates]
    if len(names) != 2 or spec.derived:
        raise ValueError("surface tables need a plain two-covariate design")

    dataset = generate(spec, rng.child("data"))
    config = TestConfig()
    outcome = single_split_test(dataset, spec.model_b, config, rng.child("split"))

    x_full = design_matrix(dataset, spec.model_b)
    model = fit_logistic(x_full, dataset.y)

    axes = [np.linspace(float(dataset.columns[n].min()), float(dataset.columns[n].max()), grid)
            for n in names]
    g1, g2 = np.meshgrid(axes[0], axes[1], indexing="ij")
    cols = {names[0]: g1.ravel(), names[1]: g2.ravel()}
    grid_ds = Dataset(y=np.zeros(grid * grid, dtype=int),
                      columns=cols, kinds={n: CONTINUOUS for n in names})
    fitted = predict_prob(model, design_matrix(grid_ds, spec.model_b))
    truth = true_probabilities(spec, grid_ds)
    groups = assign_groups(outcome.partition, cols)
    return {
        names[0]: cols[names[0]],
        names[1]: cols[names[1]],
        "true_p": truth,
        "fitted_p": fitted,
        "group": groups,
    }
