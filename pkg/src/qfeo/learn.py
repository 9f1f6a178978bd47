"""Classifiers, the AUC metric, and the nested cross-validation scoring.

The SVM is a from-scratch RBF soft-margin machine trained by sequential
minimal optimization; the boosted-tree model uses exact greedy splits on
the logistic loss with XGBoost-style gain. Both expose continuous decision
values for AUC. Grid search (5-fold) picks hyperparameters; a K-fold pass
with a different seed produces the optimizer's objective.
"""
from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass
from functools import partial

import numpy as np

from .errors import ConfigError, MetricError, TrainingError
from .parallel import pmap

log = logging.getLogger(__name__)

CLASSIFIERS = ("svc", "xgb")

GRID_PRESETS = {
    # Frame-accurate reference grids: 195 SVC points, 144 XGBoost points.
    "svc-paper": {
        "gamma_kernel": [2.0**e for e in range(-8, 5)],
        "C": [2.0**e for e in range(-7, 8)],
    },
    "xgb-paper": {
        "max_depth": [2, 3, 5],
        "n_estimators": [100, 200],
        "learning_rate": [0.1, 0.01, 0.05],
        "subsample": [0.8, 1],
        "colsample_bytree": [0.8, 1],
        "gamma_split": [0, 0.1],
    },
    # desk-scale grids for smoke tests and the acceptance suite
    "svc-small": {
        "gamma_kernel": [0.25, 1.0],
        "C": [1.0, 4.0],
    },
    "xgb-small": {
        "max_depth": [2, 3],
        "n_estimators": [50],
        "learning_rate": [0.1],
        "subsample": [1],
        "colsample_bytree": [1],
        "gamma_split": [0],
    },
}


def resolve_grid(grid) -> dict:
    """Accept a preset name or an explicit {param: [values]} mapping."""
    if isinstance(grid, str):
        if grid not in GRID_PRESETS:
            raise ConfigError(f"classifier.grid: unknown preset {grid!r}")
        return GRID_PRESETS[grid]
    if not isinstance(grid, dict) or not grid:
        raise ConfigError("classifier.grid: need a preset name or a non-empty mapping")
    return {k: list(v) for k, v in grid.items()}


# ---------------------------------------------------------------------------
# AUC
# ---------------------------------------------------------------------------

def auc(scores, labels) -> float:
    """Mann-Whitney AUC with midrank tie correction:
    P(score+ > score-) + 0.5 * P(score+ = score-)."""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels)
    pos = labels == 1
    n_pos = int(pos.sum())
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise MetricError("AUC needs both classes present")
    order = np.argsort(scores, kind="mergesort")
    s = scores[order]
    ranks_sorted = np.empty(len(s))
    bounds = np.flatnonzero(np.r_[True, s[1:] != s[:-1], True])
    for k in range(len(bounds) - 1):
        i, j = bounds[k], bounds[k + 1]
        ranks_sorted[i:j] = (i + j - 1) / 2.0 + 1.0
    ranks = np.empty(len(s))
    ranks[order] = ranks_sorted
    r_pos = ranks[pos].sum()
    return (r_pos - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


# ---------------------------------------------------------------------------
# RBF SVM via sequential minimal optimization
# ---------------------------------------------------------------------------

def _rbf(a, b, gamma):
    sq = (
        np.sum(a * a, axis=1)[:, None]
        + np.sum(b * b, axis=1)[None, :]
        - 2.0 * (a @ b.T)
    )
    np.maximum(sq, 0.0, out=sq)
    return np.exp(-gamma * sq)


class SvmModel:
    """Trained soft-margin RBF SVM; decision values are sum_j alpha_j y_j
    K(x_j, x) - b."""

    def __init__(self, X, y_signed, alphas, b, gamma_kernel, c, tol):
        keep = alphas > 1e-12
        self._sv = X[keep]
        self._coef = alphas[keep] * y_signed[keep]
        self.b = b
        self.gamma_kernel = gamma_kernel
        # full training copies kept for the KKT diagnostic
        self._train = (X, y_signed, alphas, c, tol)

    def decision_function(self, X):
        X = np.asarray(X, dtype=float)
        if len(self._sv) == 0:
            return np.full(len(X), -self.b)
        return _rbf(X, self._sv, self.gamma_kernel) @ self._coef - self.b

    def kkt_violations(self):
        """Per-training-point violation of the box KKT conditions."""
        X, ys, alphas, c, tol = self._train
        margins = ys * self.decision_function(X)
        viol = np.empty(len(ys))
        at_zero = alphas <= 1e-12
        at_c = alphas >= c - 1e-12
        interior = ~(at_zero | at_c)
        viol[at_zero] = np.maximum(0.0, 1.0 - margins[at_zero])
        viol[at_c] = np.maximum(0.0, margins[at_c] - 1.0)
        viol[interior] = np.abs(margins[interior] - 1.0)
        return viol


def train_svm(X, y, c: float, gamma_kernel: float, tol: float = 1e-3,
              seed: int = 0) -> SvmModel:
    """Platt-style SMO on the full kernel matrix.

    Raises TrainingError when the pass budget (10 * d full sweeps) is spent
    without reaching the converged state.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    classes, counts = np.unique(y, return_counts=True)
    if len(classes) < 2:
        raise TrainingError("SVM needs both classes in the training split")
    if counts.min() < 2:
        raise TrainingError("SVM needs at least 2 samples per class")
    ys = np.where(y == 1, 1.0, -1.0)
    d = len(ys)
    K = _rbf(X, X, gamma_kernel)
    alphas = np.zeros(d)
    rng = np.random.default_rng(seed)
    state = {"b": 0.0, "u": np.full(d, 0.0)}  # u = decision values on train
    eps = 1e-8

    def take_step(i1, i2):
        if i1 == i2:
            return False
        a1o, a2o = alphas[i1], alphas[i2]
        y1, y2 = ys[i1], ys[i2]
        e1 = state["u"][i1] - y1
        e2 = state["u"][i2] - y2
        s = y1 * y2
        if s < 0:
            low, high = max(0.0, a2o - a1o), min(c, c + a2o - a1o)
        else:
            low, high = max(0.0, a1o + a2o - c), min(c, a1o + a2o)
        if low >= high:
            return False
        k11, k12, k22 = K[i1, i1], K[i1, i2], K[i2, i2]
        eta = k11 + k22 - 2.0 * k12
        if eta > 0:
            a2 = a2o + y2 * (e1 - e2) / eta
            a2 = min(max(a2, low), high)
        else:
            # objective at the interval ends (duplicate points give eta = 0)
            f1 = y1 * (e1 + state["b"]) - a1o * k11 - s * a2o * k12
            f2 = y2 * (e2 + state["b"]) - s * a1o * k12 - a2o * k22
            l1 = a1o + s * (a2o - low)
            h1 = a1o + s * (a2o - high)
            lobj = (l1 * f1 + low * f2 + 0.5 * l1 * l1 * k11
                    + 0.5 * low * low * k22 + s * low * l1 * k12)
            hobj = (h1 * f1 + high * f2 + 0.5 * h1 * h1 * k11
                    + 0.5 * high * high * k22 + s * high * h1 * k12)
            if lobj < hobj - eps:
                a2 = low
            elif lobj > hobj + eps:
                a2 = high
            else:
                a2 = a2o
        if abs(a2 - a2o) < eps * (a2 + a2o + eps):
            return False
        a1 = a1o + s * (a2o - a2)
        b_old = state["b"]
        b1 = e1 + y1 * (a1 - a1o) * k11 + y2 * (a2 - a2o) * k12 + b_old
        b2 = e2 + y1 * (a1 - a1o) * k12 + y2 * (a2 - a2o) * k22 + b_old
        if 0 < a1 < c:
            b_new = b1
        elif 0 < a2 < c:
            b_new = b2
        else:
            b_new = 0.5 * (b1 + b2)
        alphas[i1], alphas[i2] = a1, a2
        state["u"] += y1 * (a1 - a1o) * K[i1] + y2 * (a2 - a2o) * K[i2]
        state["u"] -= b_new - b_old
        state["b"] = b_new
        return True

    def examine(i2):
        y2, a2 = ys[i2], alphas[i2]
        e2 = state["u"][i2] - y2
        r2 = e2 * y2
        if not ((r2 < -tol and a2 < c) or (r2 > tol and a2 > 0)):
            return 0
        nonbound = np.flatnonzero((alphas > 0) & (alphas < c))
        if len(nonbound) > 1:
            errors = state["u"][nonbound] - ys[nonbound]
            i1 = nonbound[int(np.argmax(np.abs(errors - e2)))]
            if take_step(i1, i2):
                return 1
        if len(nonbound):
            start = int(rng.integers(len(nonbound)))
            for i1 in np.roll(nonbound, -start):
                if take_step(int(i1), i2):
                    return 1
        start = int(rng.integers(d))
        for i1 in np.roll(np.arange(d), -start):
            if take_step(int(i1), i2):
                return 1
        return 0

    max_passes = 10 * d
    passes = 0
    num_changed = 0
    examine_all = True
    while num_changed > 0 or examine_all:
        if passes >= max_passes:
            raise TrainingError(
                f"SMO did not converge within {max_passes} passes "
                f"(d={d}, C={c}, gamma={gamma_kernel}); "
                f"{int(np.sum((alphas > 0) & (alphas < c)))} free multipliers"
            )
        num_changed = 0
        if examine_all:
            for i in range(d):
                num_changed += examine(i)
        else:
            for i in np.flatnonzero((alphas > 0) & (alphas < c)):
                num_changed += examine(int(i))
        if examine_all:
            examine_all = False
        elif num_changed == 0:
            examine_all = True
        passes += 1
    return SvmModel(X, ys, alphas, state["b"], gamma_kernel, c, tol)


# ---------------------------------------------------------------------------
# Gradient-boosted trees on the logistic loss
# ---------------------------------------------------------------------------

_LAMBDA = 1.0  # leaf L2 regularization, fixed


@dataclass
class _Node:
    feature: int = -1
    threshold: float = 0.0
    left: "_Node | None" = None
    right: "_Node | None" = None
    value: float = 0.0

    def predict(self, X):
        if self.feature < 0:
            return np.full(len(X), self.value)
        out = np.empty(len(X))
        mask = X[:, self.feature] < self.threshold
        out[mask] = self.left.predict(X[mask])
        out[~mask] = self.right.predict(X[~mask])
        return out


def _build_tree(X, g, h, depth, max_depth, gamma_split, features):
    node = _Node()
    gsum, hsum = g.sum(), h.sum()
    node.value = -gsum / (hsum + _LAMBDA)
    if depth >= max_depth or len(g) < 2:
        return node
    parent = gsum * gsum / (hsum + _LAMBDA)
    best_gain, best_feature, best_thr = 0.0, -1, 0.0
    for f in features:
        order = np.argsort(X[:, f], kind="mergesort")
        xs = X[order, f]
        gc = np.cumsum(g[order])
        hc = np.cumsum(h[order])
        # split after position i (left = first i+1 rows); only between
        # distinct feature values
        valid = np.flatnonzero(xs[:-1] < xs[1:])
        if len(valid) == 0:
            continue
        gl, hl = gc[valid], hc[valid]
        gr, hr = gsum - gl, hsum - hl
        gains = 0.5 * (gl * gl / (hl + _LAMBDA) + gr * gr / (hr + _LAMBDA) - parent) - gamma_split
        k = int(np.argmax(gains))
        if gains[k] > best_gain:
            best_gain = float(gains[k])
            best_feature = f
            best_thr = 0.5 * (xs[valid[k]] + xs[valid[k] + 1])
    if best_feature < 0:
        return node
    mask = X[:, best_feature] < best_thr
    node.feature = best_feature
    node.threshold = best_thr
    node.left = _build_tree(X[mask], g[mask], h[mask], depth + 1, max_depth,
                            gamma_split, features)
    node.right = _build_tree(X[~mask], g[~mask], h[~mask], depth + 1, max_depth,
                             gamma_split, features)
    return node


class GbtModel:
    def __init__(self, base_margin, trees, learning_rate):
        self.base_margin = base_margin
        self.trees = trees
        self.learning_rate = learning_rate

    def decision_function(self, X):
        X = np.asarray(X, dtype=float)
        margin = np.full(len(X), self.base_margin)
        for tree in self.trees:
            margin += self.learning_rate * tree.predict(X)
        return margin


def train_gbt(X, y, max_depth: int = 3, n_estimators: int = 100,
              learning_rate: float = 0.1, subsample: float = 1.0,
              colsample_bytree: float = 1.0, gamma_split: float = 0.0,
              seed: int = 0) -> GbtModel:
    """Second-order boosting with exact greedy splits and gain threshold."""
    if n_estimators < 1:
        raise ConfigError(f"classifier.n_estimators: must be >= 1, got {n_estimators}")
    if max_depth < 1:
        raise ConfigError("classifier.max_depth: must be >= 1")
    if not 0 < subsample <= 1 or not 0 < colsample_bytree <= 1:
        raise ConfigError("classifier.subsample/colsample_bytree: must be in (0, 1]")
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(np.unique(y)) < 2:
        raise TrainingError("boosting needs both classes in the training split")
    d, p = X.shape
    rng = np.random.default_rng(seed)
    base_rate = y.mean()
    base_margin = math.log(base_rate / (1.0 - base_rate))
    margin = np.full(d, base_margin)
    trees = []
    n_rows = max(1, int(round(subsample * d)))
    n_cols = max(1, int(round(colsample_bytree * p)))
    for _ in range(n_estimators):
        prob = 1.0 / (1.0 + np.exp(-margin))
        g = prob - y
        h = prob * (1.0 - prob)
        rows = (np.sort(rng.choice(d, size=n_rows, replace=False))
                if n_rows < d else np.arange(d))
        cols = (np.sort(rng.choice(p, size=n_cols, replace=False))
                if n_cols < p else np.arange(p))
        tree = _build_tree(X[rows], g[rows], h[rows], 0, max_depth, gamma_split, cols)
        trees.append(tree)
        margin += learning_rate * tree.predict(X)
    return GbtModel(base_margin, trees, learning_rate)


# ---------------------------------------------------------------------------
# Cross-validation
# ---------------------------------------------------------------------------

def fit_model(kind: str, params: dict, X, y, seed: int = 0):
    if kind == "svc":
        return train_svm(X, y, c=params["C"], gamma_kernel=params["gamma_kernel"], seed=seed)
    if kind == "xgb":
        return train_gbt(X, y, seed=seed, **params)
    raise ConfigError(f"classifier.kind: unknown classifier {kind!r}")


@dataclass
class CvScore:
    mean_auc: float
    fold_aucs: list[float]
    chosen_params: dict


def stratified_folds(y, k: int, seed: int):
    """Shuffle each class and deal round-robin; fold class counts differ by
    at most one."""
    y = np.asarray(y)
    if k < 2:
        raise MetricError("need at least 2 folds")
    counts = [int(np.sum(y == c)) for c in (0, 1)]
    if min(counts) < 1:
        raise MetricError("stratified folds need both classes present")
    if k > min(counts):
        raise MetricError(
            f"k={k} folds exceed the minority class count {min(counts)}; "
            "per-fold AUC would be undefined"
        )
    rng = np.random.default_rng(seed)
    folds = [[] for _ in range(k)]
    for cls in (0, 1):
        idx = np.flatnonzero(y == cls)
        rng.shuffle(idx)
        for i, ix in enumerate(idx):
            folds[i % k].append(int(ix))
    return [np.sort(np.array(f, dtype=int)) for f in folds]


def _cv_mean_auc(X, y, kind, params, fold_indices, seed):
    aucs = []
    all_idx = np.arange(len(y))
    for test_idx in fold_indices:
        train_mask = np.ones(len(y), dtype=bool)
        train_mask[test_idx] = False
        model = fit_model(kind, params, X[train_mask], y[train_mask], seed=seed)
        scores = model.decision_function(X[test_idx])
        aucs.append(auc(scores, y[test_idx]))
    return aucs


def _grid_point_score(params, X, y, kind, fold_indices, seed):
    try:
        return float(np.mean(_cv_mean_auc(X, y, kind, params, fold_indices, seed)))
    except Exception as exc:
        log.warning("grid point %s failed: %s", params, exc)
        return float("-inf")


def grid_search_cv(X, y, kind: str, grid, folds: int = 5, seed: int = 0,
                   workers: int = 1):
    """Exhaustive stratified-CV search; returns (best params, best score).
    Ties and duplicates resolve to the first grid-enumeration point; failed
    points score -inf."""
    grid = resolve_grid(grid)
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    points = [dict(zip(grid.keys(), combo))
              for combo in itertools.product(*grid.values())]
    fold_indices = stratified_folds(y, folds, seed)
    fn = partial(_grid_point_score, X=X, y=y, kind=kind,
                 fold_indices=fold_indices, seed=seed)
    scores = pmap(fn, points, workers)
    best = int(np.argmax(scores))
    if scores[best] == float("-inf"):
        raise TrainingError("every grid point failed")
    return points[best], float(scores[best])


def kfold_cv_score(X, y, kind: str, params: dict, k: int = 10, seed: int = 1) -> CvScore:
    """Stratified K-fold score of one hyperparameter point; the fold seed
    must differ from the grid-search seed upstream."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    fold_indices = stratified_folds(y, k, seed)
    fold_aucs = _cv_mean_auc(X, y, kind, params, fold_indices, seed)
    return CvScore(float(np.mean(fold_aucs)), [float(a) for a in fold_aucs], dict(params))
