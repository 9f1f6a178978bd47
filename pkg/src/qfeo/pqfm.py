"""Projection of a dataset into per-qubit Pauli expectation features.

Every sample row is manipulated, encoded by the configured feature map,
simulated, and read out as the 3n vector [<X>_q0, <Y>_q0, <Z>_q0, <X>_q1,
...]. Rows are independent, so projection can fan out over a process pool
without changing the result.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import partial

import numpy as np

from .featuremaps import FeatureMapConfig, U3AngleBank, apply_data_reloading, build_circuit
from .manipulate import ManipulationSpec, apply_manipulation
from .parallel import pmap
from .statevec import all_pauli_expectations, run_circuit

AXES = ("X", "Y", "Z")


@dataclass
class ProjectedDataset:
    """d x 3n expectation matrix plus the untouched labels."""

    features: np.ndarray
    labels: np.ndarray
    n_qubits: int

    def column_names(self):
        return [f"q{q}_{ax}" for q in range(self.n_qubits) for ax in AXES]


def project_row(x, cfg: FeatureMapConfig, spec: ManipulationSpec, w, bank: U3AngleBank | None):
    """Single-sample manipulation, encoding and readout."""
    multipliers = None
    if cfg.reload:
        x, multipliers = apply_data_reloading(x, cfg)
    sample = apply_manipulation(spec, w, x)
    if multipliers is not None:
        multipliers = multipliers[sample.source_indices]
    circuit = build_circuit(cfg, sample.values, bank=bank, multipliers=multipliers)
    return all_pauli_expectations(run_circuit(circuit))


def _project_chunk(chunk, cfg, spec, w, bank):
    return np.array([project_row(row, cfg, spec, w, bank) for row in chunk])


def project(samples, labels, cfg: FeatureMapConfig, spec: ManipulationSpec, w,
            workers: int = 1) -> ProjectedDataset:
    """Project every row; samples must already be rescaled to the encoding
    interval. Row order is preserved and the output is independent of
    ``workers``."""
    samples = np.asarray(samples, dtype=float)
    labels = np.asarray(labels)
    bank = U3AngleBank(cfg.n_qubits, cfg.u3_seed) if cfg.family == "heisenberg" else None
    if len(samples) == 0:
        return ProjectedDataset(np.empty((0, 3 * cfg.n_qubits)), labels, cfg.n_qubits)
    n_chunks = min(len(samples), max(1, workers or 1) * 4)
    chunks = np.array_split(samples, n_chunks)
    fn = partial(_project_chunk, cfg=cfg, spec=spec, w=w, bank=bank)
    parts = pmap(fn, chunks, workers)
    return ProjectedDataset(np.vstack(parts), labels, cfg.n_qubits)


def to_csv(ds: ProjectedDataset, path):
    """One header row; label as the last column; full-precision floats."""
    with open(path, "w") as fh:
        fh.write(",".join(ds.column_names() + ["label"]) + "\n")
        for row, label in zip(ds.features, ds.labels):
            cells = [format(v, ".17g") for v in row]
            fh.write(",".join(cells + [str(int(label))]) + "\n")
