"""Logistic regression fitting for the model under assessment.

Maximum likelihood via iteratively reweighted least squares (Newton steps with
step-halving), plus predictions and the observed Fisher information. The fit is
deliberately plain: no penalty, logit link only. Separation is not detected
specially -- the iteration cap together with probability clamping yields a
usable (if extreme) fit, and ``converged=False`` is surfaced to callers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import lapack, solve_triangular

__all__ = [
    "DesignMatrix",
    "FittedGlm",
    "SingleClassError",
    "RankDeficiencyError",
    "fit_logistic",
    "predict_prob",
    "observed_information",
    "PROB_CLAMP",
]

# Lower clamp for fitted probabilities; guarantees every variance term
# p(1-p) stays strictly positive downstream.
PROB_CLAMP = 1e-10

_MAX_ITER = 100
_PIVOT_RTOL = 1e-12


class SingleClassError(ValueError):
    """The response contains only one class; the likelihood has no interior optimum."""


class RankDeficiencyError(ValueError):
    """The weighted normal equations are numerically singular."""


@dataclass(frozen=True)
class DesignMatrix:
    """An n x (p+1) design with a leading intercept column of ones."""

    values: np.ndarray
    names: tuple

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2 or v.shape[1] < 1:
            raise ValueError("design matrix must be 2-D with at least one column")
        if not np.all(np.isfinite(v)):
            raise ValueError("design matrix contains non-finite entries")
        if len(self.names) != v.shape[1]:
            raise ValueError("column name count does not match column count")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "names", tuple(self.names))

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def ncol(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class FittedGlm:
    """A fitted logistic regression.

    ``fisher_info`` is the observed information X' W X with
    W_ii = p_i (1 - p_i) evaluated at the final coefficients.
    ``ll_path`` records the log-likelihood after each accepted step.
    """

    coef: np.ndarray
    converged: bool
    iterations: int
    fisher_info: np.ndarray
    log_likelihood: float
    names: tuple
    ll_path: tuple


def _logistic(eta: np.ndarray) -> np.ndarray:
    out = np.empty_like(eta, dtype=float)
    pos = eta >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-eta[pos]))
    ex = np.exp(eta[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _clamp(p: np.ndarray) -> np.ndarray:
    return np.clip(p, PROB_CLAMP, 1.0 - PROB_CLAMP)


def _log_likelihood(x: np.ndarray, y: np.ndarray, beta: np.ndarray) -> float:
    eta = x @ beta
    return float(np.sum(y * eta - np.logaddexp(0.0, eta)))


def _solve_spd(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve a symmetric positive-definite system.

    Plain Cholesky first; on failure, pivoted Cholesky (LAPACK dpstrf) with a
    relative pivot tolerance. Raises RankDeficiencyError when the matrix is
    numerically singular at that tolerance.
    """
    try:
        chol = np.linalg.cholesky(a)
        d = np.diagonal(chol)
        if d.min() ** 2 >= _PIVOT_RTOL * d.max() ** 2:
            z = solve_triangular(chol, b, lower=True)
            return solve_triangular(chol.T, z, lower=False)
    except np.linalg.LinAlgError:
        pass

    tol = _PIVOT_RTOL * max(float(np.max(np.diagonal(a))), np.finfo(float).tiny)
    c, piv, rank, _info = lapack.dpstrf(a, lower=1, tol=tol)
    if rank < a.shape[0]:
        raise RankDeficiencyError(
            f"weighted normal equations are numerically singular (rank {rank} of {a.shape[0]})"
        )
    perm = piv - 1
    lower = np.tril(c)
    z = solve_triangular(lower, b[perm], lower=True)
    z = solve_triangular(lower.T, z, lower=False)
    out = np.empty_like(z)
    out[perm] = z
    return out


def fit_logistic(x: DesignMatrix, y) -> FittedGlm:
    """Fit a logistic regression by IRLS.

    Iterates Newton steps with step-halving until the gradient max-norm drops
    to 1e-8 * n or 100 iterations are spent; hitting the cap returns
    ``converged=False`` rather than raising.

    Raises:
        SingleClassError: if the response has only zeros or only ones.
        RankDeficiencyError: if the weighted normal equations are singular.
    """
    yv = np.asarray(y, dtype=float).ravel()
    xv = x.values
    n, p = xv.shape
    if yv.shape[0] != n:
        raise ValueError(f"response length {yv.shape[0]} does not match {n} design rows")
    if not np.all(np.isin(yv, (0.0, 1.0))):
        raise ValueError("response entries must be 0 or 1")
    if yv.min() == yv.max():
        raise SingleClassError("both response classes must be present")
    if n < p:
        raise ValueError(f"need at least as many rows ({n}) as columns ({p})")

    grad_tol = 1e-8 * n
    beta = np.zeros(p)
    ll = _log_likelihood(xv, yv, beta)
    ll_path = [ll]
    converged = False
    iterations = 0

    for _ in range(_MAX_ITER):
        prob = _clamp(_logistic(xv @ beta))
        grad = xv.T @ (yv - prob)
        if np.max(np.abs(grad)) <= grad_tol:
            converged = True
            break
        iterations += 1
        w = prob * (1.0 - prob)
        info = xv.T @ (xv * w[:, None])
        delta = _solve_spd(info, grad)

        step = 1.0
        accepted = False
        for _ in range(40):
            cand = beta + step * delta
            ll_new = _log_likelihood(xv, yv, cand)
            if ll_new >= ll:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break
        beta = cand
        ll = ll_new
        ll_path.append(ll)

    prob = _clamp(_logistic(xv @ beta))
    w = prob * (1.0 - prob)
    info = xv.T @ (xv * w[:, None])
    info = 0.5 * (info + info.T)
    return FittedGlm(
        coef=beta,
        converged=converged,
        iterations=iterations,
        fisher_info=info,
        log_likelihood=_log_likelihood(xv, yv, beta),
        names=x.names,
        ll_path=tuple(ll_path),
    )


def predict_prob(model: FittedGlm, x: DesignMatrix) -> np.ndarray:
    """Fitted probabilities logistic(x @ coef), clamped to [1e-10, 1 - 1e-10]."""
    if x.ncol != model.coef.shape[0]:
        raise ValueError(
            f"design has {x.ncol} columns but the model has {model.coef.shape[0]} coefficients"
        )
    return _clamp(_logistic(x.values @ model.coef))


def observed_information(model: FittedGlm, x: DesignMatrix) -> np.ndarray:
    """Observed Fisher information X' W X at the fitted coefficients."""
    prob = predict_prob(model, x)
    w = prob * (1.0 - prob)
    info = x.values.T @ (x.values * w[:, None])
    return 0.5 * (info + info.T)
