"""Compare the compiled statevector kernels against the numpy fallback.

Runs the projection hot path (build circuit, simulate, read 3n Pauli
expectations) on representative workloads and reports per-row time for
both backends. Usage: python benchmarks/bench_backends.py
"""
import time

import numpy as np

import qfeo.statevec as sv
from qfeo import _statevec_np

try:
    from qfeo import _statevec_cy
except ImportError:
    _statevec_cy = None

from qfeo.featuremaps import FeatureMapConfig, U3AngleBank, build_circuit
from qfeo.statevec import all_pauli_expectations, run_circuit

WORKLOADS = [
    # (label, config, feature count, rows)
    ("SE 4 qubits, 12 features (desk scale)",
     FeatureMapConfig(family="separate_entangled", n_qubits=4, blocks=9, density=3,
                      entanglement="pairwise", alpha=0.1), 12, 400),
    ("Heisenberg 12 qubits, 60 features (study scale)",
     FeatureMapConfig(family="heisenberg", n_qubits=12, alpha=0.3), 60, 40),
    ("Repeated Pauli 10 qubits, 40 features",
     FeatureMapConfig(family="repeated_pauli", n_qubits=10, entanglement="pairwise",
                      alpha=0.1, paulis=("Y", "XZ")), 40, 40),
]


def run_workload(cfg, p, rows, rng):
    bank = U3AngleBank(cfg.n_qubits, cfg.u3_seed) if cfg.family == "heisenberg" else None
    samples = rng.uniform(0.3, 2.8, size=(rows, p))
    start = time.perf_counter()
    sink = 0.0
    for row in samples:
        state = run_circuit(build_circuit(cfg, row, bank=bank))
        sink += all_pauli_expectations(state).sum()
    elapsed = time.perf_counter() - start
    return elapsed / rows, sink


def main():
    backends = [("numpy", _statevec_np)]
    if _statevec_cy is not None:
        backends.insert(0, ("cython", _statevec_cy))
    else:
        print("compiled extension not available; benchmarking the fallback only\n")

    original = sv._kernels
    print(f"{'workload':<48} " + " ".join(f"{name:>12}" for name, _ in backends)
          + ("      speedup" if len(backends) == 2 else ""))
    try:
        for label, cfg, p, rows in WORKLOADS:
            times = []
            for _, kernels in backends:
                sv._kernels = kernels
                per_row, _ = run_workload(cfg, p, rows, np.random.default_rng(0))
                times.append(per_row)
            cells = " ".join(f"{t * 1e3:>9.3f} ms" for t in times)
            speedup = f"{times[1] / times[0]:>11.1f}x" if len(times) == 2 else ""
            print(f"{label:<48} {cells} {speedup}")
    finally:
        sv._kernels = original


if __name__ == "__main__":
    main()
