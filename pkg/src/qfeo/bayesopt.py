"""Gaussian-process Bayesian optimization over the unit hypercube.

A Matern-5/2 surrogate with a single shared length-scale is refit every
iteration on the standardized observations; the next point maximizes
expected improvement over a fixed budget of uniform candidates plus a
perturbed copy of the incumbent. The landscape downstream of sorting and
selection manipulations is piecewise constant, so candidate sampling is
used instead of acquisition gradients.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NumericError

_SQRT5 = math.sqrt(5.0)
_JITTER0 = 1e-6
_JITTER_MAX = 1e-4


def _matern52(dists, ell):
    z = _SQRT5 * dists / ell
    return (1.0 + z + z * z / 3.0) * np.exp(-z)


def _pairwise_dists(a, b):
    sq = (
        np.sum(a * a, axis=1)[:, None]
        + np.sum(b * b, axis=1)[None, :]
        - 2.0 * (a @ b.T)
    )
    np.maximum(sq, 0.0, out=sq)
    return np.sqrt(sq)


@dataclass
class GpSurrogate:
    X: np.ndarray
    y_mean: float
    y_std: float
    y_standardized: np.ndarray
    ell: float
    sigma2: float
    jitter: float
    chol: np.ndarray = field(repr=False)
    alpha: np.ndarray = field(repr=False)

    @property
    def best_standardized(self) -> float:
        return float(self.y_standardized.max())


def _hyperparameter_grid(m: int):
    """Fixed 16-point log grid: 4 length-scales (scaled by sqrt(m) so
    distances in higher-dimensional cubes stay comparable) x 4 signal
    variances on standardized targets."""
    ells = np.array([0.05, 0.15, 0.5, 1.5]) * math.sqrt(m)
    sigma2s = np.array([0.25, 0.5, 1.0, 2.0])
    return [(float(e), float(s)) for e in ells for s in sigma2s]


def _chol_with_jitter(K):
    jitter = _JITTER0
    while jitter <= _JITTER_MAX:
        try:
            return np.linalg.cholesky(K + jitter * np.eye(len(K))), jitter
        except np.linalg.LinAlgError:
            jitter *= 10.0
    raise NumericError(
        f"kernel matrix not positive definite even with jitter {_JITTER_MAX}"
    )


def gp_fit(X, y) -> GpSurrogate:
    """Fit the surrogate; (ell, sigma2) maximize the log marginal likelihood
    over the fixed grid; y is standardized internally."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float)
    k, m = X.shape
    y_mean = float(y.mean())
    y_std = float(y.std())
    if y_std == 0.0:
        y_std = 1.0
    ys = (y - y_mean) / y_std
    dists = _pairwise_dists(X, X)
    best = None
    for ell, sigma2 in _hyperparameter_grid(m):
        K = sigma2 * _matern52(dists, ell)
        try:
            chol, jitter = _chol_with_jitter(K)
        except NumericError:
            continue
        alpha = np.linalg.solve(chol.T, np.linalg.solve(chol, ys))
        lml = (
            -0.5 * float(ys @ alpha)
            - float(np.sum(np.log(np.diag(chol))))
            - 0.5 * k * math.log(2.0 * math.pi)
        )
        if best is None or lml > best[0]:
            best = (lml, ell, sigma2, jitter, chol, alpha)
    if best is None:
        raise NumericError("no GP hyperparameter candidate factorized")
    _, ell, sigma2, jitter, chol, alpha = best
    return GpSurrogate(X, y_mean, y_std, ys, ell, sigma2, jitter, chol, alpha)


def gp_posterior(gp: GpSurrogate, Xq):
    """Posterior mean and variance (standardized space) at query points."""
    Xq = np.atleast_2d(np.asarray(Xq, dtype=float))
    ks = gp.sigma2 * _matern52(_pairwise_dists(Xq, gp.X), gp.ell)
    mu = ks @ gp.alpha
    v = np.linalg.solve(gp.chol, ks.T)
    var = gp.sigma2 - np.sum(v * v, axis=0)
    return mu, np.maximum(var, 0.0)


def gp_posterior_raw(gp: GpSurrogate, Xq):
    """Posterior mean destandardized back to the objective's scale."""
    mu, var = gp_posterior(gp, Xq)
    return mu * gp.y_std + gp.y_mean, var * gp.y_std**2


def _norm_cdf(z):
    return 0.5 * (1.0 + np.vectorize(math.erf)(z / math.sqrt(2.0)))


def _norm_pdf(z):
    return np.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)


def expected_improvement(gp: GpSurrogate, Xq) -> np.ndarray:
    """EI against the best standardized observation; zero where the
    posterior collapses below the incumbent."""
    mu, var = gp_posterior(gp, Xq)
    sigma = np.sqrt(var)
    best = gp.best_standardized
    improve = mu - best
    ei = np.where(improve > 0, improve, 0.0)
    ok = sigma > 1e-12
    z = np.zeros_like(mu)
    z[ok] = improve[ok] / sigma[ok]
    ei = np.where(ok, improve * _norm_cdf(z) + sigma * _norm_pdf(z), ei)
    return np.maximum(ei, 0.0)


def suggest(gp: GpSurrogate, m: int, rng: np.random.Generator,
            n_candidates: int = 1000) -> np.ndarray:
    """Argmax of EI over uniform candidates plus the perturbed incumbent;
    exact duplicates of observed inputs are excluded."""
    candidates = rng.uniform(size=(n_candidates, m))
    incumbent = gp.X[int(np.argmax(gp.y_standardized))]
    perturbed = np.clip(incumbent + rng.normal(scale=0.05, size=m), 0.0, 1.0)
    candidates = np.vstack([candidates, perturbed[None, :]])
    observed = {tuple(row) for row in gp.X}
    fresh = np.array([tuple(row) not in observed for row in candidates])
    if not fresh.any():  # pragma: no cover - measure-zero event
        return rng.uniform(size=m)
    ei = expected_improvement(gp, candidates)
    ei[~fresh] = -1.0
    return candidates[int(np.argmax(ei))]


@dataclass
class OptTrace:
    """Per-iteration record: proposed weights, objective value, running max."""

    weights: list
    values: list
    best_so_far: list

    @property
    def best_value(self) -> float:
        return max(self.values)

    @property
    def best_weights(self) -> np.ndarray:
        return self.weights[int(np.argmax(self.values))]


def optimize(objective, m: int, iterations: int, n_init: int = 10,
             seed: int = 0, n_candidates: int = 1000) -> OptTrace:
    """n_init uniform evaluations, then fit-suggest-evaluate to the budget.

    Objective errors are recorded as -inf and excluded from the surrogate;
    with iterations == n_init this degenerates to pure random search.
    """
    if m < 1:
        raise ValueError("optimize needs at least one decision variable")
    if iterations < n_init:
        raise ValueError(f"iterations={iterations} must be >= n_init={n_init}")
    rng = np.random.default_rng(seed)
    weights: list[np.ndarray] = []
    values: list[float] = []
    best_so_far: list[float] = []

    def record(w):
        try:
            value = float(objective(w))
        except Exception:
            value = float("-inf")
        weights.append(w)
        values.append(value)
        best_so_far.append(max(value, best_so_far[-1]) if best_so_far else value)

    for _ in range(n_init):
        record(rng.uniform(size=m))
    for _ in range(iterations - n_init):
        valid = [i for i, v in enumerate(values) if v != float("-inf")]
        if not valid:
            record(rng.uniform(size=m))
            continue
        gp = gp_fit(np.array([weights[i] for i in valid]),
                    np.array([values[i] for i in valid]))
        record(suggest(gp, m, rng, n_candidates))
    return OptTrace(weights, values, best_so_far)


def trace_to_csv(trace: OptTrace, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iteration", "value", "best_so_far"])
        for i, (v, b) in enumerate(zip(trace.values, trace.best_so_far)):
            writer.writerow([i, format(v, ".17g"), format(b, ".17g")])


def trace_to_json(trace: OptTrace, path):
    payload = {
        "iterations": [
            {"iteration": i, "weights": list(map(float, w)), "value": v, "best_so_far": b}
            for i, (w, v, b) in enumerate(zip(trace.weights, trace.values, trace.best_so_far))
        ],
        "best_value": trace.best_value,
        "best_weights": list(map(float, trace.best_weights)),
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=1)
