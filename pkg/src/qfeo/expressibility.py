"""SVD-based expressibility analysis of manipulated encodings.

For one base feature draw, T random manipulations (permutations, weights
or subsets) are encoded and their statevectors stacked into a T x 2^n
matrix. The singular spectrum of that matrix measures how much of the
state space the manipulation explores: the truncation error at rank r and
the component count needed to retain a variance fraction.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DataError
from .featuremaps import FeatureMapConfig, U3AngleBank, build_circuit
from .manipulate import minmax_rescale
from .parallel import pmap
from .statevec import run_circuit

STUDY_KINDS = ("FO", "FS", "FW")


@dataclass
class StateMatrix:
    """Rows are statevectors of T manipulated encodings of one feature draw."""

    matrix: np.ndarray  # complex, T x 2^n
    kind: str


def build_state_matrix(cfg: FeatureMapConfig, kind: str, base_features, T: int,
                       rng: np.random.Generator, r: int | None = None) -> StateMatrix:
    """Row t encodes the t-th random manipulation of the base features:
    a uniform permutation (FO), i.i.d. uniform [0,1] weights (FW), or a
    uniform r-subset kept in original order (FS)."""
    if kind not in STUDY_KINDS:
        raise ConfigError(f"expressibility kind must be one of {STUDY_KINDS}, got {kind!r}")
    base = np.asarray(base_features, dtype=float)
    p = len(base)
    if kind == "FS":
        r = r if r is not None else max(1, p // 2)
        if not 1 <= r <= p:
            raise ConfigError(f"FS subset size r={r} out of range for p={p}")
    bank = U3AngleBank(cfg.n_qubits, cfg.u3_seed) if cfg.family == "heisenberg" else None
    rows = np.empty((T, 2**cfg.n_qubits), dtype=np.complex128)
    for t in range(T):
        if kind == "FO":
            x = base[rng.permutation(p)]
        elif kind == "FW":
            x = base * rng.uniform(size=p)
        else:
            x = base[np.sort(rng.choice(p, size=r, replace=False))]
        rows[t] = run_circuit(build_circuit(cfg, x, bank=bank)).amplitudes
    return StateMatrix(rows, kind)


def reconstruction_error(S: StateMatrix | np.ndarray, r: int) -> float:
    """Spectral norm of S - S_r for the rank-r truncated SVD, which equals
    the (r+1)-th singular value (zero at or beyond the rank)."""
    matrix = S.matrix if isinstance(S, StateMatrix) else np.asarray(S)
    max_rank = min(matrix.shape)
    if not 1 <= r <= max_rank:
        raise DataError(f"rank r={r} out of range [1, {max_rank}]")
    sigma = np.linalg.svd(matrix, compute_uv=False)
    if r >= len(sigma):
        return 0.0
    return float(sigma[r])


def components_for_variance(S: StateMatrix | np.ndarray, fraction: float) -> int:
    """Smallest component count whose variance share reaches ``fraction``,
    after centering the rows on their mean."""
    if not 0 < fraction <= 1:
        raise DataError(f"variance fraction must be in (0, 1], got {fraction}")
    matrix = S.matrix if isinstance(S, StateMatrix) else np.asarray(S)
    centered = matrix - matrix.mean(axis=0, keepdims=True)
    sigma = np.linalg.svd(centered, compute_uv=False)
    power = sigma**2
    total = power.sum()
    if total <= 0:
        return 0
    cum = np.cumsum(power) / total
    tol = np.finfo(float).eps * len(power)
    return int(np.searchsorted(cum, fraction - tol) + 1)


@dataclass
class StudyCurves:
    """Mean/std curves over repetitions, per manipulation kind."""

    kind: str
    ranks: np.ndarray
    error_mean: np.ndarray
    error_std: np.ndarray
    fractions: np.ndarray
    components_mean: np.ndarray
    components_std: np.ndarray


DEFAULT_FRACTIONS = np.array([0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 0.99])


def _one_repetition(rep, cfg, kind, n_features, T, seed, fractions, fs_r, lo, hi):
    rng = np.random.default_rng(np.random.SeedSequence([seed, rep]))
    base = rng.normal(size=n_features)
    # rescale the draw to the encoding interval, one value per row
    base = minmax_rescale(base[:, None], base[:, None], lo, hi).ravel()
    S = build_state_matrix(cfg, kind, base, T, rng, r=fs_r)
    sigma = np.linalg.svd(S.matrix, compute_uv=False)
    max_rank = min(S.matrix.shape)
    errors = np.array([sigma[r] if r < len(sigma) else 0.0 for r in range(1, max_rank + 1)])
    comps = np.array([components_for_variance(S, f) for f in fractions])
    return errors, comps


def expressibility_study(cfg: FeatureMapConfig, kinds=STUDY_KINDS, n_features: int = 8,
                         T: int = 1000, repetitions: int = 30, seed: int = 0,
                         fractions=DEFAULT_FRACTIONS, fs_r: int | None = None,
                         workers: int = 1) -> list[StudyCurves]:
    """Repeat the matrix construction with fresh base features and average
    the reconstruction-error and components-retained curves."""
    fractions = np.asarray(fractions, dtype=float)
    curves = []
    for kind in kinds:
        if kind not in STUDY_KINDS:
            raise ConfigError(f"expressibility supports {STUDY_KINDS}, got {kind!r}")
        from functools import partial

        fn = partial(_one_repetition, cfg=cfg, kind=kind, n_features=n_features,
                     T=T, seed=seed, fractions=fractions, fs_r=fs_r,
                     lo=0.3, hi=2.8)
        outcomes = pmap(fn, range(repetitions), workers)
        errors = np.array([e for e, _ in outcomes])
        comps = np.array([c for _, c in outcomes])
        ranks = np.arange(1, errors.shape[1] + 1)
        curves.append(StudyCurves(
            kind, ranks, errors.mean(axis=0), errors.std(axis=0),
            fractions, comps.mean(axis=0), comps.std(axis=0),
        ))
    return curves


def curves_to_csv(curves: list[StudyCurves], error_path, components_path):
    """Two plot-ready tables with columns (kind, x, mean, std)."""
    with open(error_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["kind", "rank", "mean", "std"])
        for c in curves:
            for r, m, s in zip(c.ranks, c.error_mean, c.error_std):
                writer.writerow([c.kind, int(r), format(m, ".17g"), format(s, ".17g")])
    with open(components_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["kind", "variance_fraction", "mean", "std"])
        for c in curves:
            for f, m, s in zip(c.fractions, c.components_mean, c.components_std):
                writer.writerow([c.kind, format(f, ".17g"), format(m, ".17g"),
                                 format(s, ".17g")])
