"""End-to-end orchestration: the optimization loop over encoding weights.

Per batch the training split drives the whole search: features are
rescaled with train-fitted parameters, manipulated by the candidate
weights, projected, and scored with grid-searched classifiers under
K-fold cross-validation. The best weights found are then applied once to
the held-out test split. The NFO baseline runs through the identical
pipeline (same seeds) with the identity manipulation.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .bayesopt import OptTrace, optimize
from .data import Batch
from .errors import ConfigError
from .featuremaps import FeatureMapConfig
from .learn import CLASSIFIERS, fit_model, grid_search_cv, kfold_cv_score, resolve_grid, auc
from .manipulate import ManipulationSpec, minmax_rescale, rank_by_weights
from .pqfm import project


@dataclass(frozen=True)
class BoSettings:
    iterations: int = 100
    n_init: int = 10
    seed: int = 0
    n_candidates: int = 1000

    def __post_init__(self):
        if self.iterations < 1:
            raise ConfigError("bo.iterations: must be >= 1")
        if not 1 <= self.n_init <= self.iterations:
            raise ConfigError("bo.n_init: must be in [1, bo.iterations]")


@dataclass(frozen=True)
class CvSettings:
    grid_folds: int = 5
    score_folds: int = 10
    grid_seed: int = 101
    score_seed: int = 202

    def __post_init__(self):
        if self.grid_folds < 2 or self.score_folds < 2:
            raise ConfigError("cv.grid_folds/score_folds: must be >= 2")
        if self.grid_seed == self.score_seed:
            raise ConfigError("cv.score_seed: must differ from cv.grid_seed")


@dataclass(frozen=True)
class DataSettings:
    batches: int = 10
    test_fraction: float = 0.33
    balance: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.batches < 1:
            raise ConfigError("data.batches: must be >= 1")
        if not 0 < self.test_fraction < 1:
            raise ConfigError("data.test_fraction: must be in (0, 1)")


_SECTIONS = {
    "feature_map": FeatureMapConfig,
    "manipulation": ManipulationSpec,
    "bo": BoSettings,
    "cv": CvSettings,
    "data": DataSettings,
}


@dataclass(frozen=True)
class ExperimentConfig:
    feature_map: FeatureMapConfig
    manipulation: ManipulationSpec
    classifier: str = "svc"
    grid: str | dict = "svc-small"
    bo: BoSettings = field(default_factory=BoSettings)
    cv: CvSettings = field(default_factory=CvSettings)
    data: DataSettings = field(default_factory=DataSettings)
    rescale_lo: float = 0.3
    rescale_hi: float = 2.8

    def __post_init__(self):
        if self.classifier not in CLASSIFIERS:
            raise ConfigError(f"classifier: unknown kind {self.classifier!r}")
        resolve_grid(self.grid)  # raises ConfigError with the field path
        if self.rescale_hi <= self.rescale_lo:
            raise ConfigError("rescale_hi: must exceed rescale_lo")

    def to_dict(self) -> dict:
        return {
            "feature_map": self.feature_map.to_dict(),
            "manipulation": self.manipulation.to_dict(),
            "classifier": self.classifier,
            "grid": self.grid if isinstance(self.grid, str) else dict(self.grid),
            "bo": vars(self.bo).copy(),
            "cv": vars(self.cv).copy(),
            "data": vars(self.data).copy(),
            "rescale_lo": self.rescale_lo,
            "rescale_hi": self.rescale_hi,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = set(cls.__dataclass_fields__)
        extra = set(d) - known
        if extra:
            raise ConfigError(f"config: unknown fields {sorted(extra)}")
        kwargs = {}
        for name, section_cls in _SECTIONS.items():
            if name not in d:
                if name in ("feature_map", "manipulation"):
                    raise ConfigError(f"{name}: required section missing")
                continue
            section = d[name]
            if not isinstance(section, dict):
                raise ConfigError(f"{name}: must be an object")
            if hasattr(section_cls, "from_dict"):
                kwargs[name] = section_cls.from_dict(section)
            else:
                valid = set(section_cls.__dataclass_fields__)
                bad = set(section) - valid
                if bad:
                    raise ConfigError(f"{name}: unknown fields {sorted(bad)}")
                kwargs[name] = section_cls(**section)
        for name in ("classifier", "grid", "rescale_lo", "rescale_hi"):
            if name in d:
                kwargs[name] = d[name]
        return cls(**kwargs)


@dataclass
class BatchResult:
    trace: OptTrace | None
    best_weights: np.ndarray
    qfeo_cv: float
    qfeo_test_auc: float
    qfeo_params: dict
    nfo_cv: float
    nfo_test_auc: float
    nfo_params: dict


@dataclass
class QfeoResult:
    config: ExperimentConfig
    batches: list[BatchResult]

    @property
    def qfeo_test_aucs(self) -> np.ndarray:
        return np.array([b.qfeo_test_auc for b in self.batches])

    @property
    def nfo_test_aucs(self) -> np.ndarray:
        return np.array([b.nfo_test_auc for b in self.batches])

    def aggregate(self) -> dict:
        q, n = self.qfeo_test_aucs, self.nfo_test_aucs
        per_batch_pct = (q - n) / n * 100.0
        qfeo_mean = float(q.mean())
        nfo_mean = float(n.mean())
        return {
            "qfeo_mean_auc": qfeo_mean,
            "qfeo_std_auc": float(q.std()),
            "nfo_mean_auc": nfo_mean,
            "nfo_std_auc": float(n.std()),
            "percent_change": (qfeo_mean - nfo_mean) / nfo_mean * 100.0,
            "percent_change_std": float(per_batch_pct.std()),
        }

    def to_dict(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "aggregate": self.aggregate(),
            "batches": [
                {
                    "best_weights": [float(v) for v in b.best_weights],
                    "qfeo_cv": b.qfeo_cv,
                    "qfeo_test_auc": b.qfeo_test_auc,
                    "qfeo_params": b.qfeo_params,
                    "nfo_cv": b.nfo_cv,
                    "nfo_test_auc": b.nfo_test_auc,
                    "nfo_params": b.nfo_params,
                    "trace": None if b.trace is None else {
                        "values": b.trace.values,
                        "best_so_far": b.trace.best_so_far,
                        "weights": [[float(v) for v in w] for w in b.trace.weights],
                    },
                }
                for b in self.batches
            ],
        }


def effective_p(cfg: ExperimentConfig, p: int) -> int:
    """Feature count seen by the manipulation (doubled under reloading)."""
    return 2 * p if cfg.feature_map.reload else p


def weight_dim(cfg: ExperimentConfig, p: int) -> int:
    return cfg.manipulation.weight_len(effective_p(cfg, p))


def evaluate_pipeline(weights, train_x, train_y, cfg: ExperimentConfig,
                      workers: int = 1) -> float:
    """The optimizer's objective: rescale (train-fit) -> manipulate ->
    project -> 5-fold grid search -> K-fold score of the chosen point."""
    rescaled = minmax_rescale(train_x, train_x, cfg.rescale_lo, cfg.rescale_hi)
    projected = project(rescaled, train_y, cfg.feature_map, cfg.manipulation,
                        weights, workers=workers)
    params, _ = grid_search_cv(projected.features, train_y, cfg.classifier,
                               cfg.grid, folds=cfg.cv.grid_folds,
                               seed=cfg.cv.grid_seed, workers=workers)
    score = kfold_cv_score(projected.features, train_y, cfg.classifier, params,
                           k=cfg.cv.score_folds, seed=cfg.cv.score_seed)
    return score.mean_auc


def final_test_auc(weights, batch: Batch, cfg: ExperimentConfig,
                   workers: int = 1):
    """Refit the grid-chosen classifier on the full projected training split
    and score the projected test split. Rescaling and weights come from the
    training side only."""
    train_scaled = minmax_rescale(batch.train_x, batch.train_x,
                                  cfg.rescale_lo, cfg.rescale_hi)
    test_scaled = minmax_rescale(batch.train_x, batch.test_x,
                                 cfg.rescale_lo, cfg.rescale_hi)
    proj_train = project(train_scaled, batch.train_y, cfg.feature_map,
                         cfg.manipulation, weights, workers=workers)
    proj_test = project(test_scaled, batch.test_y, cfg.feature_map,
                        cfg.manipulation, weights, workers=workers)
    params, _ = grid_search_cv(proj_train.features, batch.train_y, cfg.classifier,
                               cfg.grid, folds=cfg.cv.grid_folds,
                               seed=cfg.cv.grid_seed, workers=workers)
    model = fit_model(cfg.classifier, params, proj_train.features, batch.train_y,
                      seed=cfg.cv.grid_seed)
    scores = model.decision_function(proj_test.features)
    return auc(scores, batch.test_y), params


def _with_manipulation(cfg: ExperimentConfig, spec: ManipulationSpec) -> ExperimentConfig:
    d = cfg.to_dict()
    d["manipulation"] = spec.to_dict()
    return ExperimentConfig.from_dict(d)


def run_batch(batch: Batch, cfg: ExperimentConfig, batch_index: int,
              workers: int = 1) -> BatchResult:
    nfo_cfg = _with_manipulation(cfg, ManipulationSpec("NFO"))
    nfo_cv = evaluate_pipeline(None, batch.train_x, batch.train_y, nfo_cfg, workers)
    nfo_test, nfo_params = final_test_auc(None, batch, nfo_cfg, workers)

    if cfg.manipulation.kind == "NFO":
        return BatchResult(None, np.empty(0), nfo_cv, nfo_test, nfo_params,
                           nfo_cv, nfo_test, nfo_params)

    m = weight_dim(cfg, batch.train_x.shape[1])
    cfg.manipulation.validate_for(effective_p(cfg, batch.train_x.shape[1]))

    def objective(w):
        return evaluate_pipeline(w, batch.train_x, batch.train_y, cfg, workers)

    trace = optimize(objective, m, cfg.bo.iterations, n_init=cfg.bo.n_init,
                     seed=np.random.SeedSequence([cfg.bo.seed, batch_index]),
                     n_candidates=cfg.bo.n_candidates)
    best = trace.best_weights
    test_auc, params = final_test_auc(best, batch, cfg, workers)
    return BatchResult(trace, np.asarray(best), trace.best_value, test_auc,
                       params, nfo_cv, nfo_test, nfo_params)


def run_qfeo(batches: list[Batch], cfg: ExperimentConfig, workers: int = 1) -> QfeoResult:
    """Algorithm wiring over all dataset batches; any batch failure aborts
    with the batch index attached."""
    if not batches:
        raise ConfigError("data.batches: need at least one batch")
    results = []
    for i, batch in enumerate(batches):
        try:
            results.append(run_batch(batch, cfg, i, workers))
        except Exception as exc:
            raise type(exc)(f"batch {i}: {exc}") from exc
    return QfeoResult(cfg, results)


def feature_importance(result: QfeoResult) -> dict:
    """Aggregate the per-batch optimal weights into importance tables.

    Selection kinds report how often each feature was selected; weighting
    kinds report the mean final weight; ordering kinds additionally report
    the mean encoding position (lower = encoded earlier; NaN when a feature
    was never encoded)."""
    spec = result.config.manipulation
    kind = spec.kind
    if kind == "NFO":
        return {"note": "NFO encodes features untouched; no importance is defined"}
    weight_sets = [b.best_weights for b in result.batches if b.trace is not None]
    if not weight_sets:
        return {"note": "no optimized batches"}
    W = np.vstack(weight_sets)
    n_batches = W.shape[0]
    p_eff = W.shape[1] // 2 if kind == "FWOW" else W.shape[1]
    tables: dict = {}

    def mean_positions(order_rows, selected_len):
        pos_sum = np.zeros(p_eff)
        pos_cnt = np.zeros(p_eff)
        for order in order_rows:
            for position, feat in enumerate(order[:selected_len]):
                pos_sum[feat] += position
                pos_cnt[feat] += 1
        with np.errstate(invalid="ignore"):
            return np.where(pos_cnt > 0, pos_sum / np.maximum(pos_cnt, 1), np.nan)

    orders = [rank_by_weights(w[p_eff:] if kind == "FWOW" else w) for w in W]
    if kind in ("FS", "FSO"):
        freq = np.zeros(p_eff)
        for order in orders:
            freq[order[: spec.r]] += 1
        tables["selection_frequency"] = freq / n_batches
        if kind == "FSO":
            tables["mean_rank"] = mean_positions(orders, spec.r)
    if kind in ("FW", "FWO", "FWOW"):
        tables["mean_weight"] = W[:, :p_eff].mean(axis=0)
    if kind == "FWOW":
        tables["ordering_weight"] = W[:, p_eff:].mean(axis=0)
    if kind in ("FO", "FWO", "FWOW"):
        tables["mean_rank"] = mean_positions(orders, p_eff)
    return tables


def result_to_json(result: QfeoResult, path):
    with open(path, "w") as fh:
        json.dump(result.to_dict(), fh, indent=1)
