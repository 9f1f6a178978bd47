"""Weight-driven data manipulations and the fixed-interval rescaling.

A weight vector in [0,1]^m is decoded into a concrete selection, ordering
or scaling of the feature vector. All decodings are deterministic: ranking
sorts by weight descending with ties broken by ascending original index,
so the weight -> manipulation map is reproducible across runs.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DataError

KINDS = ("NFO", "FS", "FO", "FW", "FSO", "FWO", "FWOW")
_SELECTING = ("FS", "FSO")


@dataclass(frozen=True)
class ManipulationSpec:
    kind: str
    r: int | None = None  # selection count, FS/FSO only

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"manipulation.kind: unknown kind {self.kind!r}")
        if self.kind in _SELECTING:
            if self.r is None or self.r < 1:
                raise ConfigError("manipulation.r: selection needs r >= 1")

    def validate_for(self, p: int):
        if self.kind in _SELECTING and self.r >= p:
            raise ConfigError(f"manipulation.r: r={self.r} must be < p={p}")

    def weight_len(self, p: int) -> int:
        """Dimension of the optimizer's decision variable."""
        if self.kind == "NFO":
            return 0
        if self.kind == "FWOW":
            return 2 * p
        return p

    def to_dict(self) -> dict:
        return {"kind": self.kind, "r": self.r}

    @classmethod
    def from_dict(cls, d: dict) -> "ManipulationSpec":
        extra = set(d) - {"kind", "r"}
        if extra:
            raise ConfigError(f"manipulation: unknown fields {sorted(extra)}")
        if "kind" not in d:
            raise ConfigError("manipulation.kind: required")
        return cls(kind=d["kind"], r=d.get("r"))


@dataclass(frozen=True)
class ManipulatedSample:
    """Post-manipulation feature vector plus the original index of every
    position, so multipliers and importance tables can follow features
    through selections and reorderings."""

    values: np.ndarray
    source_indices: np.ndarray


def minmax_rescale(train, apply_to, lo: float = 0.3, hi: float = 2.8) -> np.ndarray:
    """Affinely map each column so the train column min/max land on [lo, hi].

    ``apply_to`` is transformed with the train-fitted parameters, so its
    values may fall outside the interval. Constant train columns map
    everything to the midpoint.
    """
    train = np.asarray(train, dtype=float)
    apply_to = np.asarray(apply_to, dtype=float)
    if train.ndim != 2 or train.shape[0] == 0:
        raise DataError("rescale: training matrix is empty")
    if hi <= lo:
        raise DataError(f"rescale: need hi > lo, got [{lo}, {hi}]")
    if apply_to.ndim != 2 or apply_to.shape[1] != train.shape[1]:
        raise DataError("rescale: column count mismatch between train and apply_to")
    cmin = train.min(axis=0)
    cmax = train.max(axis=0)
    span = cmax - cmin
    constant = span == 0
    safe_span = np.where(constant, 1.0, span)
    scale = (hi - lo) / safe_span
    out = (apply_to - cmin) * scale + lo
    if np.any(constant):
        out[:, constant] = (lo + hi) / 2.0
    return out


def rank_by_weights(w) -> np.ndarray:
    """Indices sorted by weight descending; ties by ascending index."""
    w = np.asarray(w, dtype=float)
    return np.argsort(-w, kind="stable")


def apply_manipulation(spec: ManipulationSpec, w, x) -> ManipulatedSample:
    """Decode the weight vector and apply the manipulation to one sample."""
    x = np.asarray(x, dtype=float)
    p = len(x)
    if spec.kind == "NFO":
        return ManipulatedSample(x.copy(), np.arange(p))
    w = np.asarray(w, dtype=float)
    expected = spec.weight_len(p)
    if len(w) != expected:
        raise DataError(
            f"{spec.kind} over p={p} features needs {expected} weights, got {len(w)}"
        )
    spec.validate_for(p)
    if spec.kind == "FS":
        picked = np.sort(rank_by_weights(w)[: spec.r])
        return ManipulatedSample(x[picked], picked)
    if spec.kind == "FSO":
        picked = rank_by_weights(w)[: spec.r]
        return ManipulatedSample(x[picked], picked)
    if spec.kind == "FO":
        order = rank_by_weights(w)
        return ManipulatedSample(x[order], order)
    if spec.kind == "FW":
        return ManipulatedSample(x * w, np.arange(p))
    if spec.kind == "FWO":
        order = rank_by_weights(w)
        return ManipulatedSample((x * w)[order], order)
    # FWOW: first half scales, second half orders
    w_scale, w_order = w[:p], w[p:]
    order = rank_by_weights(w_order)
    return ManipulatedSample((x * w_scale)[order], order)
