"""Acceptance suite: one test per exit criterion, each printing a
pass/fail line (visible with ``pytest -s`` or in the failure report).

The full-protocol results (Tables of AUC changes on the four external
benchmark datasets, 9-15 qubit sweeps, 100-iteration optimization, the
144/195-point grids) are NOT reproduced here; see
test_paper_scale_config_is_shipped_not_reproduced.
"""
import json
import math
import time

import numpy as np
import pytest

from qfeo.data import stratified_batches, synthetic_planted
from qfeo.featuremaps import FeatureMapConfig
from qfeo.learn import auc
from qfeo.manipulate import ManipulationSpec
from qfeo.pqfm import project
from qfeo.qfeo import ExperimentConfig, run_qfeo
from qfeo.statevec import Circuit, pauli_expectation, run_circuit

from oracles import auc_pairwise_oracle, random_gate, statevector_oracle


def report(name, detail=""):
    print(f"\nACCEPTANCE {name}: PASS {detail}")


def test_simulator_oracle_equivalence():
    """200 random circuits (n <= 3, <= 20 gates, full gate set) match the
    Kronecker-product dense-matrix oracle within 1e-10 in under 5 s."""
    rng = np.random.default_rng(20240601)
    start = time.perf_counter()
    worst = 0.0
    for _ in range(200):
        n = int(rng.integers(1, 4))
        gates = [random_gate(rng, n) for _ in range(int(rng.integers(1, 21)))]
        circ = Circuit(n)
        for kind, qubits, angles in gates:
            circ.add(kind, qubits, angles)
        got = run_circuit(circ).amplitudes
        want = statevector_oracle(n, gates)
        worst = max(worst, float(np.max(np.abs(got - want))))
    elapsed = time.perf_counter() - start
    assert worst < 1e-10, f"max amplitude deviation {worst}"
    assert elapsed < 5.0, f"took {elapsed:.2f}s"
    report("simulator-oracle-equivalence", f"(max dev {worst:.2e}, {elapsed:.2f}s)")


def test_analytic_expectations():
    """RY(theta)|0> reads out (sin t, 0, cos t) within 1e-12, 50 angles."""
    rng = np.random.default_rng(7)
    for theta in rng.uniform(0, 2 * math.pi, size=50):
        state = run_circuit(Circuit(1).ry(0, float(theta)))
        assert abs(pauli_expectation(state, 0, "X") - math.sin(theta)) < 1e-12
        assert abs(pauli_expectation(state, 0, "Y")) < 1e-12
        assert abs(pauli_expectation(state, 0, "Z") - math.cos(theta)) < 1e-12
    report("analytic-expectations")


def test_pqfm_contract_all_presets():
    """Projected shape d x 3n with every value in [-1, 1] for each family
    preset reduced to n = 4 qubits, d = 50."""
    from qfeo.cli import FEATURE_MAP_PRESETS

    rng = np.random.default_rng(11)
    d = 50
    for name, preset in FEATURE_MAP_PRESETS.items():
        fm = dict(preset)
        fm["n_qubits"] = 4
        cfg = FeatureMapConfig.from_dict(fm)
        X = rng.uniform(0.3, 2.8, size=(d, 8))
        ds = project(X, np.zeros(d, dtype=int), cfg, ManipulationSpec("NFO"), None)
        assert ds.features.shape == (d, 12), name
        assert np.all(ds.features >= -1 - 1e-12), name
        assert np.all(ds.features <= 1 + 1e-12), name
    report("pqfm-contract", f"({len(FEATURE_MAP_PRESETS)} presets)")


def test_auc_oracle_exact():
    """Exact agreement with the O(d^2) pairwise rank oracle, 500 instances
    including ties."""
    rng = np.random.default_rng(2718)
    for _ in range(500):
        d = int(rng.integers(4, 51))
        labels = np.zeros(d, dtype=int)
        labels[rng.choice(d, size=int(rng.integers(1, d)), replace=False)] = 1
        if labels.sum() in (0, d):
            labels[0] = 1 - labels[0]
        scores = rng.integers(0, 8, size=d) / 7.0
        assert auc(scores, labels) == auc_pairwise_oracle(scores, labels)
    report("auc-oracle-exact")


def test_bo_benchmark():
    """maximize -(w - 0.7)^2 over [0,1], 30 iterations: best within 0.05 of
    the optimum in >= 9/10 seeds; best-so-far monotone in every trace."""
    from qfeo.bayesopt import optimize

    hits = 0
    for seed in range(10):
        trace = optimize(lambda w: -((w[0] - 0.7) ** 2), 1, 30, n_init=10, seed=seed)
        assert all(b2 >= b1 for b1, b2 in zip(trace.best_so_far, trace.best_so_far[1:]))
        if abs(trace.best_weights[0] - 0.7) < 0.05:
            hits += 1
    assert hits >= 9, f"only {hits}/10 seeds converged"
    report("bo-benchmark", f"({hits}/10 seeds)")


def _desk_config(n_init, seed):
    return ExperimentConfig.from_dict({
        "feature_map": {"family": "separate_entangled", "n_qubits": 4, "blocks": 9,
                        "density": 3, "entanglement": "pairwise", "alpha": 0.1,
                        "paulis": ["Y", "X", "Z"]},
        "manipulation": {"kind": "FS", "r": 4},
        "classifier": "svc",
        "grid": "svc-small",
        "bo": {"iterations": 40, "n_init": n_init, "seed": seed},
        "cv": {"grid_folds": 5, "score_folds": 10, "grid_seed": 101, "score_seed": 202},
        "data": {"batches": 5, "test_fraction": 0.33, "seed": seed},
    })


def test_qfeo_end_to_end_desk_scale():
    """Planted dataset (d=400, p=12, k=4), se-1 reduced to 4 qubits, FS r=4,
    40 iterations, 5 batches: the optimized encoding does at least as well
    as a 40-draw random-weight baseline (same budget, same seeds) in >= 4/5
    batches and strictly better on the batch mean, in under 10 minutes.

    Exact per-batch ties happen by construction: both searches share their
    first draws and FS scoring depends only on the selected subset.
    """
    start = time.perf_counter()
    ds = synthetic_planted(d=400, p=12, k_informative=4, noise_sd=0.5, seed=0)
    batches = stratified_batches(ds, n_batches=5, seed=0)
    qfeo_result = run_qfeo(batches, _desk_config(n_init=10, seed=0))
    random_result = run_qfeo(batches, _desk_config(n_init=40, seed=0))
    q = qfeo_result.qfeo_test_aucs
    r = random_result.qfeo_test_aucs
    elapsed = time.perf_counter() - start
    at_least = int((q >= r).sum())
    assert at_least >= 4, f"QFEO >= random in only {at_least}/5 batches ({q} vs {r})"
    assert q.mean() > r.mean(), f"means {q.mean():.4f} vs {r.mean():.4f}"
    assert elapsed < 600, f"took {elapsed:.0f}s"
    report("qfeo-end-to-end", f"(>= in {at_least}/5, means "
                              f"{q.mean():.4f} vs {r.mean():.4f}, {elapsed:.0f}s)")


def test_expressibility_qualitative_reproduction():
    """4-qubit Heisenberg, T=200, 5 repetitions: ordering strictly exceeds
    weighting on rank-2 reconstruction error, and needs at least as many
    components at 95% variance; under 2 minutes."""
    from qfeo.expressibility import expressibility_study

    start = time.perf_counter()
    cfg = FeatureMapConfig(family="heisenberg", n_qubits=4, alpha=0.3)
    fo, fw = expressibility_study(cfg, kinds=("FO", "FW"), n_features=8, T=200,
                                  repetitions=5, seed=0)
    elapsed = time.perf_counter() - start
    assert fo.error_mean[1] > fw.error_mean[1], \
        f"E_2: FO {fo.error_mean[1]:.3f} vs FW {fw.error_mean[1]:.3f}"
    idx95 = list(fo.fractions).index(0.95)
    assert fo.components_mean[idx95] >= fw.components_mean[idx95]
    assert elapsed < 120, f"took {elapsed:.0f}s"
    report("expressibility-ordering", f"(E_2 {fo.error_mean[1]:.3f} > "
                                      f"{fw.error_mean[1]:.3f}, {elapsed:.1f}s)")


def test_paper_scale_config_is_shipped_not_reproduced():
    """The reference-protocol AUC tables depend on four external datasets,
    9-15 qubit sweeps, 100-iteration optimization and 144/195-point grids;
    they are NOT reproduced at desk scale. A documented full-scale config
    ships for users with the datasets and compute; CI acceptance rests on
    the oracle and property suites in this module."""
    from qfeo.cli import preset_config_path, resolve_run_config
    from qfeo.learn import GRID_PRESETS
    import itertools

    doc = json.loads(preset_config_path("paper-scale").read_text())
    assert doc["qubits"] == [9, 10, 11, 12, 13, 14, 15]
    assert doc["bo"]["iterations"] == 100
    assert doc["data"]["batches"] == 10
    assert doc["grid"] == "xgb-paper"
    assert len(list(itertools.product(*GRID_PRESETS["xgb-paper"].values()))) == 144
    assert len(list(itertools.product(*GRID_PRESETS["svc-paper"].values()))) == 195
    assert len(doc["datasets"]) == 4
    plan = resolve_run_config(doc, {"churn": 97, "virtual_screening": 47,
                                    "german_numeric": 24, "plasticc": 67})
    assert len(plan.combinations) == 672
    report("paper-scale-statement",
           "(full protocol shipped as config, not run in CI)")


def test_determinism_across_worker_counts(tmp_path):
    """A run repeated from the same config at worker counts 1 and 8 yields
    bitwise-identical CSV outputs."""
    from qfeo.cli import main

    doc = {
        "datasets": [{"name": "planted",
                      "synthetic": {"d": 80, "p": 6, "k_informative": 2,
                                    "noise_sd": 0.5, "seed": 0}}],
        "feature_maps": [{"preset": "se-1", "density": 3}],
        "qubits": [3],
        "manipulations": [{"kind": "FWO"}],
        "classifier": "svc",
        "grid": "svc-small",
        "bo": {"iterations": 3, "n_init": 2, "seed": 0},
        "cv": {"grid_folds": 3, "score_folds": 5, "grid_seed": 101, "score_seed": 202},
        "data": {"batches": 2, "test_fraction": 0.33, "seed": 0},
    }
    cfg = tmp_path / "config.json"
    cfg.write_text(json.dumps(doc))
    out1, out8 = tmp_path / "w1", tmp_path / "w8"
    assert main(["run", "--config", str(cfg), "--out", str(out1), "--workers", "1"]) == 0
    assert main(["run", "--config", str(cfg), "--out", str(out8), "--workers", "8"]) == 0
    rels = sorted(p.relative_to(out1) for p in out1.rglob("*.csv"))
    assert rels == sorted(p.relative_to(out8) for p in out8.rglob("*.csv"))
    for rel in rels:
        assert (out1 / rel).read_bytes() == (out8 / rel).read_bytes(), rel
    report("determinism-worker-counts", f"({len(rels)} CSVs byte-identical)")
